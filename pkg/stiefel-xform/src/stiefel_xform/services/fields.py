"""Scalar test fields on V_{n,m} and the name registry used by the CLI.

Registry syntax: ``name[:key=value,...]``, for example
``minor-power:p=0.5,w=canonical`` or ``trace-quad:seed=3``.
"""
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from stiefel_xform.core.exceptions import DimensionError, FieldError
from stiefel_xform.services.manifold import RandomSource, haar_frames
from stiefel_xform.utils.linalg import canonical_frame, leading_frame, transpose

Evaluator = Callable[[np.ndarray], np.ndarray]

INVARIANCE_CHECKS = 100
INVARIANCE_TOL = 1e-9


class ScalarField:
    """A function on frames of shape (n, cols), evaluated on stacks (..., n, cols)."""

    def __init__(self, name: str, n: int, cols: int, fn: Evaluator,
                 right_invariant: bool = False, check_seed: int = 0):
        if not 1 <= cols <= n:
            raise DimensionError(f"field needs 1 <= cols <= n, got n={n}, cols={cols}")
        self.name = name
        self.n = n
        self.cols = cols
        self.right_invariant = right_invariant
        self._fn = fn
        if right_invariant:
            self._check_right_invariance(check_seed)

    @property
    def m(self) -> int:
        return self.cols

    def __call__(self, frames) -> np.ndarray:
        frames = np.asarray(frames, dtype=float)
        if frames.shape[-2:] != (self.n, self.cols):
            raise DimensionError(
                f"field {self.name} expects frames {self.n}x{self.cols}, got {frames.shape[-2:]}"
            )
        return np.asarray(self._fn(frames), dtype=float)

    eval = __call__

    def _check_right_invariance(self, seed: int) -> None:
        rng = RandomSource(seed).spawn("right-invariance").generator()
        v = haar_frames(self.n, self.cols, rng, (INVARIANCE_CHECKS,))
        gamma = haar_frames(self.cols, self.cols, rng, (INVARIANCE_CHECKS,))
        before, after = self(v), self(v @ gamma)
        gap = np.abs(after - before) / np.maximum(1.0, np.abs(before))
        if np.max(gap) > INVARIANCE_TOL:
            raise FieldError(f"field {self.name} is flagged right-invariant but f(vγ) != f(v)")

    def __repr__(self) -> str:
        return f"ScalarField({self.name!r}, n={self.n}, cols={self.cols})"


def constant(n: int, cols: int, c: float = 1.0) -> ScalarField:
    return ScalarField(
        f"constant:c={c:g}", n, cols,
        lambda v: np.full(v.shape[:-2], float(c)),
        right_invariant=True,
    )


def monomial(n: int, cols: int, i: int = 1, j: int = 1, d: int = 2) -> ScalarField:
    """v_{ij}^d with 1-based indices."""
    if not (1 <= i <= n and 1 <= j <= cols):
        raise FieldError(f"monomial index ({i},{j}) outside {n}x{cols}")
    return ScalarField(f"monomial:i={i},j={j},d={d}", n, cols, lambda v: v[..., i - 1, j - 1] ** d)


def _reference_frame(n: int, q: int, w: str, seed: int) -> np.ndarray:
    if w == "canonical":
        return canonical_frame(n, q)
    if w == "leading":
        return leading_frame(n, q)
    if w == "random":
        return haar_frames(n, q, RandomSource(seed).spawn("reference-frame").generator())
    raise FieldError(f"unknown reference frame {w!r}; use canonical, leading or random")


def minor_power(n: int, cols: int, p: float = 1.0, w: str = "canonical",
                q: Optional[int] = None, seed: int = 0) -> ScalarField:
    """det(w'vv'w)^p for a fixed reference frame w ∈ V_{n,q}, q <= cols."""
    q = cols if q is None else q
    if not 1 <= q <= cols:
        raise FieldError(f"reference frame width q={q} must lie in 1..{cols}")
    ref = _reference_frame(n, q, w, seed)

    def fn(v: np.ndarray) -> np.ndarray:
        proj = transpose(ref) @ v
        _, logdet = np.linalg.slogdet(proj @ transpose(proj))
        if p == 0:
            return np.ones(v.shape[:-2])
        return np.exp(p * logdet)

    return ScalarField(f"minor-power:p={p:g},w={w}", n, cols, fn, right_invariant=True,
                       check_seed=seed)


def trace_quad(n: int, cols: int, seed: int = 0) -> ScalarField:
    """tr(v'Av) for a seeded symmetric A."""
    rng = RandomSource(seed).spawn("trace-quad").generator()
    a = rng.standard_normal((n, n))
    a = 0.5 * (a + a.T)

    def fn(v: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,ik,...kj->...", v, a, v)

    return ScalarField(f"trace-quad:seed={seed}", n, cols, fn, right_invariant=True,
                       check_seed=seed)


def poly(n: int, cols: int, seed: int = 0, terms: int = 4) -> ScalarField:
    """1 plus seeded linear and quadratic coordinate monomials; not right-invariant."""
    rng = RandomSource(seed).spawn("poly").generator()
    lin_rows = rng.integers(0, n, size=terms)
    lin_cols = rng.integers(0, cols, size=terms)
    lin_coef = rng.uniform(-1.0, 1.0, size=terms)
    quad = rng.integers(0, [n, cols, n, cols], size=(terms, 4))
    quad_coef = rng.uniform(-1.0, 1.0, size=terms)

    def fn(v: np.ndarray) -> np.ndarray:
        out = np.ones(v.shape[:-2])
        for t in range(terms):
            out = out + lin_coef[t] * v[..., lin_rows[t], lin_cols[t]]
            a, b, c, d = quad[t]
            out = out + quad_coef[t] * v[..., a, b] * v[..., c, d]
        return out

    return ScalarField(f"poly:seed={seed}", n, cols, fn)


def right_average(field: ScalarField, draws: int = 32, seed: int = 0) -> ScalarField:
    """f̃(v) = mean over fixed Haar γ of f(vγ)."""
    gammas = haar_frames(field.cols, field.cols,
                         RandomSource(seed).spawn("right-average").generator(), (draws,))

    def fn(v: np.ndarray) -> np.ndarray:
        return np.mean(field(v[..., None, :, :] @ gammas), axis=-1)

    return ScalarField(f"{field.name}~avg{draws}", field.n, field.cols, fn)


def left_composed(field: ScalarField, g: np.ndarray) -> ScalarField:
    """(f ∘ g)(v) = f(g v) for a fixed orthogonal g."""
    g = np.asarray(g, dtype=float)
    return ScalarField(f"{field.name}∘g", field.n, field.cols, lambda v: field(g @ v),
                       right_invariant=field.right_invariant)


FIELDS: Dict[str, Callable[..., ScalarField]] = {
    "constant": constant,
    "monomial": monomial,
    "minor-power": minor_power,
    "trace-quad": trace_quad,
    "poly": poly,
}

_INT_KEYS = {"i", "j", "d", "q", "seed", "terms"}
_FLOAT_KEYS = {"c", "p"}


def parse_field_spec(text: str) -> Tuple[str, Dict[str, object]]:
    name, _, rest = text.strip().partition(":")
    if name not in FIELDS:
        raise FieldError(f"unknown field {name!r}; known: {', '.join(FIELDS)}")
    params: Dict[str, object] = {}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise FieldError(f"field parameter {item!r} is not key=value")
        try:
            if key in _INT_KEYS:
                params[key] = int(value)
            elif key in _FLOAT_KEYS:
                params[key] = float(value)
            else:
                params[key] = value
        except ValueError as exc:
            raise FieldError(f"bad value for {key}: {value!r}") from exc
    return name, params


def make_field(text: str, n: int, cols: int) -> ScalarField:
    name, params = parse_field_spec(text)
    try:
        return FIELDS[name](n, cols, **params)
    except TypeError as exc:
        raise FieldError(f"bad parameters for field {name}: {exc}") from exc


def list_fields() -> List[str]:
    return list(FIELDS)
