"""Haar sampling on O(n) and V_{n,m}, fiber sampling, and the coordinate
weights of the polar, triangular and bi-Stiefel decompositions."""
import math
import zlib
from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

import numpy as np
from scipy import stats

from stiefel_xform.core.exceptions import DimensionError, NotPositiveDefinite, OutOfRegion
from stiefel_xform.services.special import log_siegel_gamma
from stiefel_xform.utils.linalg import (
    Frame,
    as_array,
    frame_completion,
    gram,
    spd_inverse,
    sym_sqrt,
    transpose,
)

UINT64 = 1 << 64


def _key(value: Union[int, str]) -> int:
    if isinstance(value, str):
        return zlib.crc32(value.encode("utf-8"))
    return int(value) % UINT64


@dataclass(frozen=True)
class RandomSource:
    """Splittable seed: identical (seed, stream, path) gives an identical stream."""

    seed: int
    stream: int = 0
    path: Tuple[int, ...] = ()

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(
            entropy=self.seed % UINT64,
            spawn_key=(self.stream % UINT64,) + self.path,
        )
        return np.random.Generator(np.random.PCG64(sequence))

    def spawn(self, *keys: Union[int, str]) -> "RandomSource":
        return replace(self, path=self.path + tuple(_key(key) for key in keys))

    def shard(self, index: int) -> "RandomSource":
        return replace(self, stream=index)


Rand = Union[RandomSource, np.random.Generator]


def as_generator(rand: Rand) -> np.random.Generator:
    if isinstance(rand, RandomSource):
        return rand.generator()
    return rand


def _leading(size: Optional[Union[int, Tuple[int, ...]]]) -> Tuple[int, ...]:
    if size is None:
        return ()
    if isinstance(size, tuple):
        return size
    return (int(size),)


def haar_frames(n: int, m: int, rng: np.random.Generator,
                shape: Tuple[int, ...] = ()) -> np.ndarray:
    """Haar-uniform frames of shape `shape + (n, m)`.

    QR of a standard Gaussian with the R diagonal forced positive.
    """
    if not 1 <= m <= n:
        raise DimensionError(f"V_{{{n},{m}}} needs 1 <= m <= n")
    z = rng.standard_normal(shape + (n, m))
    q, r = np.linalg.qr(z)
    signs = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    signs = np.where(signs == 0, 1.0, signs)
    return q * signs[..., None, :]


def sample_orthogonal(n: int, rand: Rand, size=None) -> np.ndarray:
    return haar_frames(n, n, as_generator(rand), _leading(size))


def sample_stiefel(n: int, m: int, rand: Rand, size=None):
    """One Frame when `size` is None, otherwise an array of shape (size, n, m)."""
    frames = haar_frames(n, m, as_generator(rand), _leading(size))
    return Frame(frames) if size is None else frames


def sample_fiber(u, m: int, rand: Rand, size=None, policy: str = "canonical") -> np.ndarray:
    """Uniform m-frames orthogonal to u: v = g_u [ω; 0], ω uniform on V_{n−k,m}.

    `u` may be a stack (..., n, k); with `size` the result has shape
    (..., size, n, m), otherwise (..., n, m).
    """
    u = as_array(u)
    n, k = u.shape[-2:]
    if k + m > n:
        raise DimensionError(f"fiber needs k + m <= n, got k={k}, m={m}, n={n}")
    rng = as_generator(rand)
    complement = frame_completion(u, policy=policy, rng=rng)[..., : n - k]
    if size is None:
        omega = haar_frames(n - k, m, rng, u.shape[:-2])
        return complement @ omega
    omega = haar_frames(n - k, m, rng, u.shape[:-2] + _leading(size))
    return complement[..., None, :, :] @ omega


def _interval_gap(a: np.ndarray) -> np.ndarray:
    m = a.shape[-1]
    return np.eye(m) - gram(a)


def _in_unit_interval(gap: np.ndarray) -> np.ndarray:
    eigen = np.linalg.eigvalsh(gap)
    return eigen[..., 0] > 0


def bistiefel_compose(a, u) -> np.ndarray:
    """v = [a; u (I_m − a'a)^{1/2}]."""
    a, u = as_array(a), as_array(u)
    gap = _interval_gap(a)
    if not np.all(_in_unit_interval(gap)):
        raise OutOfRegion("I - a'a is not positive definite")
    return np.concatenate([a, u @ sym_sqrt(gap)], axis=-2)


def bistiefel_exponent(n: int, k: int, m: int) -> float:
    return (n - k) / 2.0 - (m + 1) / 2.0


def bistiefel_weight(a, n: int, k: int, m: int):
    """det(I_m − a'a)^δ with δ = (n−k)/2 − (m+1)/2."""
    gap = _interval_gap(as_array(a))
    sign, logdet = np.linalg.slogdet(gap)
    if np.any(sign <= 0):
        raise OutOfRegion("I - a'a is not positive definite")
    value = np.exp(bistiefel_exponent(n, k, m) * logdet)
    return float(value) if np.ndim(value) == 0 else value


def sample_bistiefel(n: int, k: int, m: int, rand: Rand, size: int):
    """Box-rejection draws for the bi-Stiefel coordinates.

    Returns (v, weight) over all `size` box draws of a ∈ [−1, 1]^{k×m}; draws
    outside {a'a < I} get weight 0 and a placeholder frame. With u uniform on
    V_{n−k,m}, E[weight · f(v)] is proportional to ∫ f d*v.
    """
    if not (1 <= k < n and 1 <= m <= n - k):
        raise DimensionError(
            f"bi-Stiefel coordinates need 1 <= k < n and m <= n-k, got n={n}, k={k}, m={m}"
        )
    rng = as_generator(rand)
    a = rng.uniform(-1.0, 1.0, size=(size, k, m))
    u = haar_frames(n - k, m, rng, (size,))
    gap = _interval_gap(a)
    accepted = _in_unit_interval(gap)
    a = np.where(accepted[:, None, None], a, 0.0)
    gap = np.where(accepted[:, None, None], gap, np.eye(m))
    v = np.concatenate([a, u @ sym_sqrt(gap)], axis=-2)
    _, logdet = np.linalg.slogdet(gap)
    weight = np.where(accepted, np.exp(bistiefel_exponent(n, k, m) * logdet), 0.0)
    return v, weight


def polar_weight(r, n: int, m: int):
    """2^{−m} det(r)^{(n−m−1)/2}."""
    sign, logdet = np.linalg.slogdet(as_array(r))
    if np.any(sign <= 0):
        raise NotPositiveDefinite("polar weight needs a positive definite matrix")
    value = np.exp(-m * math.log(2.0) + (n - m - 1) / 2.0 * logdet)
    return float(value) if np.ndim(value) == 0 else value


def sample_matrix_interval(m: int, rand: Rand, size: int):
    """Symmetric r with diagonal in (0, 1) and off-diagonal in (−1, 1).

    Returns (r, accepted) where accepted marks 0 < r < I; the box has volume
    2^{m(m−1)/2}.
    """
    rng = as_generator(rand)
    r = np.zeros((size, m, m))
    rows, cols = np.triu_indices(m, 1)
    r[:, rows, cols] = rng.uniform(-1.0, 1.0, size=(size, rows.size))
    r = r + transpose(r)
    r[:, np.arange(m), np.arange(m)] = rng.uniform(0.0, 1.0, size=(size, m))
    low = np.linalg.eigvalsh(r)
    high = np.linalg.eigvalsh(np.eye(m) - r)
    return r, (low[:, 0] > 0) & (high[:, 0] > 0)


def interval_box_volume(m: int) -> float:
    return 2.0 ** (m * (m - 1) / 2)


def sample_wishart(m: int, df: float, scale, rand: Rand, size: int) -> np.ndarray:
    law = stats.wishart(df=df, scale=as_array(scale))
    draws = law.rvs(size=size, random_state=as_generator(rand))
    return np.asarray(draws, dtype=float).reshape(size, m, m)


def wishart_logpdf(r, df: float, scale) -> np.ndarray:
    """Closed-form Wishart log density, batched over r."""
    r, scale = as_array(r), as_array(scale)
    m = scale.shape[-1]
    _, logdet_r = np.linalg.slogdet(r)
    _, logdet_scale = np.linalg.slogdet(scale)
    trace = np.einsum("ij,...ji->...", spd_inverse(scale), r)
    return (
        (df - m - 1) / 2.0 * logdet_r
        - trace / 2.0
        - df * m / 2.0 * math.log(2.0)
        - df / 2.0 * logdet_scale
        - log_siegel_gamma(m, df / 2.0)
    )


def sample_matrix_t(rows: int, cols: int, df: float, rand: Rand, size: int, scale: float = 1.0):
    """Heavy-tailed proposal on M_{rows,cols}; returns (y, log density)."""
    dim = rows * cols
    law = stats.multivariate_t(loc=np.zeros(dim), shape=scale ** 2 * np.eye(dim), df=df)
    flat = np.asarray(law.rvs(size=size, random_state=as_generator(rand)), dtype=float)
    flat = flat.reshape(size, dim)
    return flat.reshape(size, rows, cols), np.asarray(law.logpdf(flat), dtype=float).reshape(size)
