"""Dense small-matrix helpers shared by every module.

All functions accept a single matrix or a stack of matrices with the matrix
dimensions in the last two axes, unless stated otherwise.
"""
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg as sla

from stiefel_xform.core.config import get_settings
from stiefel_xform.core.exceptions import (
    DimensionError,
    NotAFrame,
    NotPositiveDefinite,
    RankDeficient,
)


ArrayLike = Union[np.ndarray, "Frame", "SpdMatrix"]


def as_array(x) -> np.ndarray:
    if isinstance(x, (Frame, SpdMatrix)):
        return x.mat
    return np.asarray(x, dtype=float)


def _frozen(x: np.ndarray) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Frame:
    """An n×m matrix with orthonormal columns, i.e. a point of V_{n,m}."""

    mat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mat, dtype=float)
        if arr.ndim != 2:
            raise DimensionError(f"frame must be a 2-d matrix, got shape {arr.shape}")
        n, m = arr.shape
        if m < 1 or n < m:
            raise DimensionError(f"frame needs n >= m >= 1, got {n}x{m}")
        residual = frame_residual(arr)
        if residual > get_settings().frame_tol:
            raise NotAFrame(f"columns are not orthonormal (residual {residual:.3e})")
        object.__setattr__(self, "mat", _frozen(arr))

    @classmethod
    def orthonormalized(cls, x) -> "Frame":
        """Re-orthonormalize a nearly orthonormal matrix via its polar factor."""
        return cls(polar_factor(as_array(x)))

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def m(self) -> int:
        return self.mat.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


@dataclass(frozen=True)
class SpdMatrix:
    """A symmetric positive definite m×m matrix, a point of the cone Ω."""

    mat: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mat, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
        if np.max(np.abs(arr - arr.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(arr))):
            raise NotPositiveDefinite("matrix is not symmetric")
        cholesky_upper(arr)
        object.__setattr__(self, "mat", _frozen(arr))

    @property
    def m(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)


def canonical_frame(n: int, k: int) -> np.ndarray:
    """u₀ = [0; I_k], identity in the bottom block."""
    u0 = np.zeros((n, k))
    u0[n - k:, :] = np.eye(k)
    return u0


def leading_frame(n: int, k: int) -> np.ndarray:
    """[I_k; 0], identity in the top block."""
    return np.eye(n, k)


def transpose(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


def gram(v) -> np.ndarray:
    v = as_array(v)
    g = transpose(v) @ v
    return 0.5 * (g + transpose(g))


def frame_residual(v) -> float:
    v = as_array(v)
    return float(np.max(np.abs(gram(v) - np.eye(v.shape[-1]))))


def is_frame(x, tol: Optional[float] = None) -> bool:
    x = as_array(x)
    if x.ndim < 2 or x.shape[-2] < x.shape[-1]:
        return False
    tol = get_settings().frame_tol if tol is None else tol
    return frame_residual(x) <= tol


def make_frame(x, reorthonormalize: bool = False) -> Frame:
    if reorthonormalize:
        return Frame.orthonormalized(x)
    return Frame(as_array(x))


def make_spd(x) -> SpdMatrix:
    x = as_array(x)
    return SpdMatrix(0.5 * (x + x.T))


def _first_failure(r: np.ndarray) -> Optional[int]:
    if r.ndim == 2:
        return None
    flat = r.reshape(-1, *r.shape[-2:])
    for index, block in enumerate(flat):
        try:
            np.linalg.cholesky(block)
        except np.linalg.LinAlgError:
            return index
    return None


def cholesky_upper(r) -> np.ndarray:
    """Upper triangular t with positive diagonal and t't = r."""
    r = as_array(r)
    try:
        lower = np.linalg.cholesky(r)
    except np.linalg.LinAlgError as exc:
        index = _first_failure(r)
        raise NotPositiveDefinite(f"Cholesky pivot <= 0: {exc}", index=index) from exc
    return transpose(lower)


def log_principal_minors(r) -> np.ndarray:
    """log Δ_1(r), …, log Δ_m(r); NaN where a leading minor is not positive."""
    r = as_array(r)
    m = r.shape[-1]
    out = np.empty(r.shape[:-2] + (m,))
    for i in range(1, m + 1):
        sign, logdet = np.linalg.slogdet(r[..., :i, :i])
        out[..., i - 1] = np.where(sign > 0, logdet, np.nan)
    return out


def principal_minors(r) -> np.ndarray:
    r = as_array(r)
    logs = log_principal_minors(r)
    if np.isnan(logs).any():
        bad = np.argwhere(np.isnan(logs))
        raise NotPositiveDefinite(f"principal minor Δ_{int(bad[0][-1]) + 1} <= 0")
    minors = np.empty_like(logs)
    m = r.shape[-1]
    for i in range(1, m + 1):
        minors[..., i - 1] = np.linalg.det(r[..., :i, :i])
    return minors


def sym_sqrt(r) -> np.ndarray:
    """Symmetric square root through the eigendecomposition."""
    w, q = np.linalg.eigh(as_array(r))
    if np.any(w < 0):
        raise NotPositiveDefinite("negative eigenvalue in square root")
    return (q * np.sqrt(w)[..., None, :]) @ transpose(q)


def sym_inv_sqrt(r) -> np.ndarray:
    w, q = np.linalg.eigh(as_array(r))
    if np.any(w <= 0):
        raise NotPositiveDefinite("non-positive eigenvalue in inverse square root")
    return (q / np.sqrt(w)[..., None, :]) @ transpose(q)


def spd_inverse(r) -> np.ndarray:
    r = as_array(r)
    try:
        factor = sla.cho_factor(r, lower=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    inverse = sla.cho_solve(factor, np.eye(r.shape[0]))
    return 0.5 * (inverse + inverse.T)


def polar_factor(x) -> np.ndarray:
    """The frame v of x = v (x'x)^{1/2}, batched; no rank check."""
    left, _, right = np.linalg.svd(as_array(x), full_matrices=False)
    return left @ right


def polar_decompose(x) -> Tuple[Frame, SpdMatrix]:
    x = as_array(x)
    if x.ndim != 2 or x.shape[0] < x.shape[1]:
        raise DimensionError(f"polar decomposition needs n >= m, got shape {x.shape}")
    left, s, right = np.linalg.svd(x, full_matrices=False)
    if s[-1] <= get_settings().rank_tol * s[0]:
        raise RankDeficient(f"smallest singular value {s[-1]:.3e} below rank tolerance")
    v = left @ right
    r = gram(x)
    return Frame(v), SpdMatrix(r)


def triangular_decompose(x) -> Tuple[np.ndarray, np.ndarray]:
    """x = v t with v a frame and t upper triangular with positive diagonal."""
    q, t = np.linalg.qr(as_array(x))
    signs = np.sign(np.diagonal(t, axis1=-2, axis2=-1))
    signs = np.where(signs == 0, 1.0, signs)
    return q * signs[..., None, :], t * signs[..., :, None]


def triangular_weight(t, n: int) -> np.ndarray:
    """Jacobian ∏_j t_jj^{n−j} of x = v t (j counted from 1)."""
    diag = np.diagonal(as_array(t), axis1=-2, axis2=-1)
    exponents = n - np.arange(1, diag.shape[-1] + 1)
    return np.prod(diag ** exponents, axis=-1)


def _complement_canonical(u: np.ndarray) -> np.ndarray:
    n, k = u.shape[-2:]
    eye = np.eye(n)
    q = u
    picks = []
    for _ in range(n - k):
        resid = eye - q @ transpose(q)
        norms = np.linalg.norm(resid, axis=-2)
        pivot = np.asarray(np.argmax(norms, axis=-1))
        index = np.broadcast_to(pivot[..., None, None], resid.shape[:-1] + (1,))
        col = np.take_along_axis(resid, index, axis=-1)
        # second Gram-Schmidt pass
        col = col - q @ (transpose(q) @ col)
        col = col / np.linalg.norm(col, axis=-2, keepdims=True)
        picks.append(col)
        q = np.concatenate([q, col], axis=-1)
    if not picks:
        return np.zeros(u.shape[:-1] + (0,))
    return np.concatenate(picks, axis=-1)


def _complement_random(u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n, k = u.shape[-2:]
    z = rng.standard_normal(u.shape[:-1] + (n - k,))
    z = z - u @ (transpose(u) @ z)
    q, t = np.linalg.qr(z)
    signs = np.sign(np.diagonal(t, axis1=-2, axis2=-1))
    signs = np.where(signs == 0, 1.0, signs)
    q = q * signs[..., None, :]
    # re-project once to kill rounding drift
    q = q - u @ (transpose(u) @ q)
    return polar_factor(q)


def frame_completion(
    u,
    policy: str = "canonical",
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Orthogonal g_u with g_u u₀ = u, u₀ = [0; I_k].

    The first n−k columns span the orthogonal complement of u and the last
    k columns are u itself. The canonical policy runs Gram–Schmidt over the
    standard basis, always taking the basis vector with the largest residual
    (lowest index on ties); the random policy orthonormalizes a Gaussian
    draw projected onto the complement.
    """
    u = as_array(u)
    n, k = u.shape[-2:]
    if k > n:
        raise DimensionError(f"cannot complete a {n}x{k} frame")
    if policy == "canonical":
        complement = _complement_canonical(u)
    elif policy == "random":
        if rng is None:
            raise ValueError("random completion policy needs a generator")
        complement = _complement_random(u, rng)
    else:
        raise ValueError(f"unknown completion policy: {policy}")
    return np.concatenate([complement, u], axis=-1)


def orth_complement_frame(u, policy: str = "canonical", rng=None) -> np.ndarray:
    u = as_array(u)
    n, k = u.shape[-2:]
    if k >= n:
        raise DimensionError(f"a {n}x{k} frame has no orthogonal complement")
    return frame_completion(u, policy=policy, rng=rng)[..., : n - k]


def cayley_chart(y) -> np.ndarray:
    """v = [y; I_m] (I_m + y'y)^{-1/2} for y of shape (n−m)×m."""
    y = as_array(y)
    m = y.shape[-1]
    eye = np.broadcast_to(np.eye(m), y.shape[:-2] + (m, m))
    stacked = np.concatenate([y, eye], axis=-2)
    return stacked @ sym_inv_sqrt(eye + gram(y))


def cayley_chart_inverse(v) -> np.ndarray:
    """y = v₁ v₂^{-1}; the bottom m×m block v₂ must be invertible."""
    v = as_array(v)
    n, m = v.shape[-2:]
    top, bottom = v[..., : n - m, :], v[..., n - m:, :]
    if np.any(np.abs(np.linalg.det(bottom)) < get_settings().rank_tol):
        raise RankDeficient("bottom block of the frame is singular")
    return np.swapaxes(np.linalg.solve(transpose(bottom), transpose(top)), -1, -2)
