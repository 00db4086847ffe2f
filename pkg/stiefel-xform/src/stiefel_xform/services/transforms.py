"""Monte Carlo realizations of the Stiefel transforms.

Every transform is an average over a probability measure attached to a point:
``(T f)(x) = E_{y ~ μ_x}[K(x, y) f(y)]``. Funk-type transforms draw y from a
fiber of frames orthogonal to x and use K ≡ 1; cosine-type transforms draw y
uniformly and weight it by a composite power of y'xx'y or I − y'xx'y.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from stiefel_xform.core.exceptions import AdmissibilityError, DimensionError
from stiefel_xform.core.logging import get_logger
from stiefel_xform.schemas.constants import ConstantKind, ConstantSpec
from stiefel_xform.schemas.mc import MCConfig, MCEstimate
from stiefel_xform.services import estimator
from stiefel_xform.services.fields import ScalarField
from stiefel_xform.services.manifold import RandomSource, haar_frames, sample_fiber
from stiefel_xform.services.special import log_composite_power, paper_constant
from stiefel_xform.utils.linalg import (
    as_array,
    frame_residual,
    orth_complement_frame,
    transpose,
)

logger = get_logger(__name__)


class TransformKind(str, Enum):
    funk = "funk"
    dual_funk = "dual-funk"
    cosine = "cosine"
    dual_cosine = "dual-cosine"
    sine = "sine"
    dual_sine = "dual-sine"
    mcos = "m"
    qsin = "q"
    composite_cosine = "composite-cosine"
    comp_radon = "comp-radon"


FIBER_KINDS = {TransformKind.funk, TransformKind.dual_funk, TransformKind.comp_radon}
# kinds evaluated at an m-frame and integrating over k-frames
DUAL_KINDS = {
    TransformKind.dual_funk,
    TransformKind.dual_cosine,
    TransformKind.dual_sine,
    TransformKind.composite_cosine,
    TransformKind.comp_radon,
}
NORMALIZERS = {
    TransformKind.cosine: ConstantKind.delta_nmk,
    TransformKind.dual_cosine: ConstantKind.delta_nmk,
    TransformKind.sine: ConstantKind.d_nmk,
    TransformKind.dual_sine: ConstantKind.d_nmk,
    TransformKind.mcos: ConstantKind.delta_nm,
    TransformKind.qsin: ConstantKind.d_nm,
}


def _cross_gram(v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """(v'u)(v'u)' for an m-frame v and a k-frame u."""
    c = transpose(v) @ u
    return c @ transpose(c)


@dataclass(frozen=True)
class Transform:
    """One transform kind with fixed dimensions and exponent.

    For Funk-type and cosine/sine kinds, `m` is the width of the frames of
    the integrated field on V_{n,m} and `k` the width of the other frame;
    M and Q use k = m.
    """

    kind: TransformKind
    n: int
    m: int
    k: int
    alpha: Optional[float] = None
    lam: Optional[Tuple[float, ...]] = None
    unsafe: bool = False
    mode: str = "direct"
    policy: str = "canonical"

    def __post_init__(self):
        object.__setattr__(self, "kind", TransformKind(self.kind))
        if self.lam is not None:
            object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))
        self._check()

    # ------------------------------------------------------------ guards

    def _require(self, holds: bool, hypothesis: str) -> None:
        if not holds:
            detail = f"{self.kind.value} n={self.n} m={self.m} k={self.k}"
            raise AdmissibilityError(hypothesis, detail)

    def _alpha_guard(self) -> None:
        if self.alpha is None:
            raise AdmissibilityError("alpha required", self.kind.value)
        if self.alpha <= self.m - 1:
            if not self.unsafe:
                self._require(False, "alpha > m-1")
            logger.warning("Convergence guard alpha > m-1 overridden (alpha=%g)", self.alpha)

    def _check(self) -> None:
        n, m, k, kind = self.n, self.m, self.k, self.kind
        if not (1 <= m <= n and 1 <= k <= n):
            raise DimensionError(f"{kind.value}: need 1 <= m, k <= n, got n={n}, m={m}, k={k}")
        if kind in (TransformKind.funk, TransformKind.dual_funk):
            if k + m > n:
                raise DimensionError(f"{kind.value}: need k + m <= n, got k={k}, m={m}, n={n}")
        elif kind in (TransformKind.cosine, TransformKind.dual_cosine):
            self._require(m <= k, "m <= k")
            self._alpha_guard()
        elif kind in (TransformKind.sine, TransformKind.dual_sine):
            self._require(m <= n - k, "m <= n-k")
            self._alpha_guard()
            if self.mode not in ("direct", "complement"):
                raise AdmissibilityError("mode in {direct, complement}", self.mode)
            if self.mode == "complement" and kind is TransformKind.dual_sine:
                raise AdmissibilityError("complement mode applies to the sine transform only")
        elif kind is TransformKind.mcos:
            self._require(k == m, "k = m")
            self._alpha_guard()
        elif kind is TransformKind.qsin:
            self._require(k == m, "k = m")
            self._require(2 * m <= n, "2m <= n")
            self._alpha_guard()
        elif kind is TransformKind.composite_cosine:
            self._require(m <= k, "m <= k")
            if self.lam is None or len(self.lam) != m:
                raise AdmissibilityError("lam has length m", f"got {self.lam}")
            bounds = np.arange(1, m + 1) - k - 1
            self._require(bool(np.all(np.asarray(self.lam) > bounds)), "lam_j > j-k-1")
        elif kind is TransformKind.comp_radon:
            if not m <= k <= n - 1:
                raise DimensionError(f"comp-radon: need m <= k <= n-1, got m={m}, k={k}, n={n}")

    # ------------------------------------------------------------ shapes

    @property
    def point_cols(self) -> int:
        return self.m if self.kind in DUAL_KINDS or self.kind in (
            TransformKind.mcos, TransformKind.qsin) else self.k

    @property
    def field_cols(self) -> int:
        return self.k if self.kind in DUAL_KINDS else self.m

    # ------------------------------------------------------------ sampling

    def draw(self, points: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draws y ~ μ_x of shape points.shape[:-2] + (size, n, field_cols)."""
        kind = self.kind
        if kind is TransformKind.funk:
            return sample_fiber(points, self.m, rng, size, policy=self.policy)
        if kind is TransformKind.dual_funk:
            return sample_fiber(points, self.k, rng, size, policy=self.policy)
        if kind is TransformKind.comp_radon:
            target = points.shape[:-2] + (size,) + points.shape[-2:]
            base = np.broadcast_to(points[..., None, :, :], target)
            if self.k == self.m:
                return np.array(base)
            extra = sample_fiber(points, self.k - self.m, rng, size, policy=self.policy)
            return np.concatenate([extra, base], axis=-1)
        return haar_frames(self.n, self.field_cols, rng, points.shape[:-2] + (size,))

    def weight(self, points: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """K(x, y) for points (..., n, p) and draws (..., size, n, q)."""
        kind = self.kind
        shape = ys.shape[:-2]
        if kind in FIBER_KINDS or (kind is TransformKind.composite_cosine and not any(self.lam)):
            return np.ones(shape)
        x = points[..., None, :, :]
        if kind in DUAL_KINDS:
            r = _cross_gram(x, ys)
        else:
            r = _cross_gram(ys, x)
        if kind is TransformKind.composite_cosine:
            return np.exp(log_composite_power(r, self.lam))
        if kind in (TransformKind.cosine, TransformKind.dual_cosine):
            exponent = self.alpha - self.k
        elif kind is TransformKind.mcos:
            exponent = self.alpha - self.m
        elif kind is TransformKind.qsin:
            exponent = self.alpha + self.m - self.n
            r = np.eye(self.m) - r
        else:
            exponent = self.alpha + self.k - self.n
            r = np.eye(self.m) - r
        if exponent == 0:
            return np.ones(shape)
        return np.exp(log_composite_power(r, np.full(self.m, exponent)))

    def values(self, field: ScalarField, points: np.ndarray, size: int,
               rng: np.random.Generator) -> np.ndarray:
        if self.kind is TransformKind.sine and self.mode == "complement":
            return self._complement_route().values(
                field, orth_complement_frame(points), size, rng
            )
        ys = self.draw(points, size, rng)
        return field(ys) * self.weight(points, ys)

    def inner_mean(self, field: ScalarField, points: np.ndarray, size: int,
                   rng: np.random.Generator) -> np.ndarray:
        return np.mean(self.values(field, points, size, rng), axis=-1)

    def _complement_route(self) -> "Transform":
        # sine at u equals cosine at an orthogonal complement frame of u
        return Transform(TransformKind.cosine, self.n, self.m, self.n - self.k,
                         alpha=self.alpha, unsafe=self.unsafe)

    def check_field(self, field: ScalarField) -> None:
        if (field.n, field.cols) != (self.n, self.field_cols):
            raise DimensionError(
                f"{self.kind.value} integrates fields on V_{{{self.n},{self.field_cols}}}, "
                f"got {field.name} on V_{{{field.n},{field.cols}}}"
            )

    def check_point(self, point) -> np.ndarray:
        point = as_array(point)
        if point.shape != (self.n, self.point_cols):
            raise DimensionError(
                f"{self.kind.value} is evaluated at {self.n}x{self.point_cols} frames, "
                f"got {point.shape}"
            )
        if frame_residual(point) > 1e-8:
            raise DimensionError("evaluation point is not a frame")
        return point


def evaluate(transform: Transform, field: ScalarField, point, cfg: MCConfig,
             source: Optional[RandomSource] = None) -> MCEstimate:
    """(T f)(x) by plain Monte Carlo over cfg.samples draws of μ_x."""
    transform.check_field(field)
    point = transform.check_point(point)
    return estimator.estimate_batches(
        lambda rng, size: transform.values(field, point, size, rng), cfg, source=source
    )


def compose(outer: Transform, inner: Transform, field: ScalarField, point, cfg: MCConfig,
            source: Optional[RandomSource] = None, n_outer: Optional[int] = None,
            n_inner: Optional[int] = None) -> MCEstimate:
    """(outer ∘ inner) f at a point by nested Monte Carlo."""
    inner.check_field(field)
    point = outer.check_point(point)
    if (outer.n, outer.field_cols) != (inner.n, inner.point_cols):
        raise DimensionError(
            f"cannot compose {outer.kind.value} after {inner.kind.value}: "
            f"{outer.field_cols} vs {inner.point_cols} columns"
        )

    def draw(rng: np.random.Generator, size: int):
        ys = outer.draw(point, size, rng)
        return ys, outer.weight(point, ys)

    def inner_means(sample, count: int, rng: np.random.Generator) -> np.ndarray:
        ys, weights = sample
        return weights * inner.inner_mean(field, ys, count, rng)

    return estimator.nested(draw, inner_means, cfg, source=source, n_outer=n_outer,
                            n_inner=n_inner)


def mass(transform: Transform, field: ScalarField, cfg: MCConfig,
         point_weight: Optional[Callable[[np.ndarray], np.ndarray]] = None,
         source: Optional[RandomSource] = None) -> MCEstimate:
    """∫ (T f)(x) w(x) d*x over uniform x, one joint draw of (x, y) per sample."""
    transform.check_field(field)

    def batch(rng: np.random.Generator, size: int) -> np.ndarray:
        points = haar_frames(transform.n, transform.point_cols, rng, (size,))
        values = transform.values(field, points, 1, rng)[:, 0]
        if point_weight is not None:
            values = values * point_weight(points)
        return values

    return estimator.estimate_batches(batch, cfg, source=source)


def funk(f: ScalarField, u, cfg: MCConfig, policy: str = "canonical",
         source: Optional[RandomSource] = None) -> MCEstimate:
    u = as_array(u)
    return evaluate(Transform(TransformKind.funk, u.shape[0], f.cols, u.shape[1], policy=policy),
                    f, u, cfg, source)


def dual_funk(phi: ScalarField, v, cfg: MCConfig,
              source: Optional[RandomSource] = None) -> MCEstimate:
    v = as_array(v)
    return evaluate(Transform(TransformKind.dual_funk, v.shape[0], v.shape[1], phi.cols),
                    phi, v, cfg, source)


def cosine(f: ScalarField, u, alpha: float, cfg: MCConfig, unsafe: bool = False,
           source: Optional[RandomSource] = None) -> MCEstimate:
    u = as_array(u)
    transform = Transform(TransformKind.cosine, u.shape[0], f.cols, u.shape[1], alpha=alpha,
                          unsafe=unsafe)
    return evaluate(transform, f, u, cfg, source)


def dual_cosine(phi: ScalarField, v, alpha: float, cfg: MCConfig, unsafe: bool = False,
                source: Optional[RandomSource] = None) -> MCEstimate:
    v = as_array(v)
    transform = Transform(TransformKind.dual_cosine, v.shape[0], v.shape[1], phi.cols,
                          alpha=alpha, unsafe=unsafe)
    return evaluate(transform, phi, v, cfg, source)


def sine(f: ScalarField, u, alpha: float, cfg: MCConfig, mode: str = "direct",
         unsafe: bool = False, source: Optional[RandomSource] = None) -> MCEstimate:
    u = as_array(u)
    transform = Transform(TransformKind.sine, u.shape[0], f.cols, u.shape[1], alpha=alpha,
                          unsafe=unsafe, mode=mode)
    return evaluate(transform, f, u, cfg, source)


def dual_sine(phi: ScalarField, v, alpha: float, cfg: MCConfig, unsafe: bool = False,
              source: Optional[RandomSource] = None) -> MCEstimate:
    v = as_array(v)
    transform = Transform(TransformKind.dual_sine, v.shape[0], v.shape[1], phi.cols,
                          alpha=alpha, unsafe=unsafe)
    return evaluate(transform, phi, v, cfg, source)


def m_transform(f: ScalarField, u, alpha: float, cfg: MCConfig, unsafe: bool = False,
                source: Optional[RandomSource] = None) -> MCEstimate:
    u = as_array(u)
    transform = Transform(TransformKind.mcos, u.shape[0], u.shape[1], u.shape[1], alpha=alpha,
                          unsafe=unsafe)
    return evaluate(transform, f, u, cfg, source)


def q_transform(f: ScalarField, u, alpha: float, cfg: MCConfig, unsafe: bool = False,
                source: Optional[RandomSource] = None) -> MCEstimate:
    u = as_array(u)
    transform = Transform(TransformKind.qsin, u.shape[0], u.shape[1], u.shape[1], alpha=alpha,
                          unsafe=unsafe)
    return evaluate(transform, f, u, cfg, source)


def composite_cosine(phi: ScalarField, v, lam: Sequence[float], cfg: MCConfig,
                     source: Optional[RandomSource] = None) -> MCEstimate:
    v = as_array(v)
    transform = Transform(TransformKind.composite_cosine, v.shape[0], v.shape[1], phi.cols,
                          lam=tuple(lam))
    return evaluate(transform, phi, v, cfg, source)


def comp_radon(phi: ScalarField, v, cfg: MCConfig,
               source: Optional[RandomSource] = None) -> MCEstimate:
    v = as_array(v)
    return evaluate(Transform(TransformKind.comp_radon, v.shape[0], v.shape[1], phi.cols),
                    phi, v, cfg, source)


def normalizer(transform: Transform) -> float:
    """The normalizing coefficient of a cosine, sine, M or Q transform."""
    if transform.kind not in NORMALIZERS:
        raise AdmissibilityError("normalized transform of cosine/sine/M/Q kind",
                                 transform.kind.value)
    spec = ConstantSpec(kind=NORMALIZERS[transform.kind], n=transform.n, m=transform.m,
                        k=transform.k, alpha=transform.alpha)
    return paper_constant(spec)


def normalized(transform: Transform, field: ScalarField, point, cfg: MCConfig,
               source: Optional[RandomSource] = None) -> MCEstimate:
    """Normalizing coefficient times the raw transform; the se scales with it."""
    coefficient = normalizer(transform)
    return evaluate(transform, field, point, cfg, source).scaled(coefficient)
