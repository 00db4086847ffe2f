"""Monte Carlo Funk, cosine and sine transforms on Stiefel manifolds."""

__version__ = "0.1.0"
