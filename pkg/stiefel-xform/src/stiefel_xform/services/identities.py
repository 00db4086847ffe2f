"""Catalog of checkable identities between Stiefel transforms.

Each fixture estimates a left and a right side, compares ``lhs ≈ c · rhs``
against a closed-form constant, and may carry extra checks (second routes,
quadrature oracles) that have to agree as well. Fixtures with a constant
and at least three audit fields can also fit the constant empirically.
"""
import math
import time
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from stiefel_xform.core.exceptions import (
    AdmissibilityError,
    DegenerateFit,
    StiefelXformError,
    UnknownIdentity,
)
from stiefel_xform.core.logging import get_logger
from stiefel_xform.schemas.constants import ConstantSpec
from stiefel_xform.schemas.identity import (
    ConstantFit,
    FixtureInfo,
    IdentityParams,
    IdentityReport,
    Verdict,
)
from stiefel_xform.schemas.mc import MCConfig, MCEstimate
from stiefel_xform.services import estimator, special
from stiefel_xform.services.fields import (
    ScalarField,
    make_field,
    minor_power,
    parse_field_spec,
    right_average,
)
from stiefel_xform.services.manifold import (
    RandomSource,
    haar_frames,
    polar_weight,
    sample_bistiefel,
    sample_matrix_interval,
    sample_matrix_t,
    sample_wishart,
    interval_box_volume,
    wishart_logpdf,
)
from stiefel_xform.services.transforms import (
    Transform,
    TransformKind as K,
    compose,
    evaluate,
    mass,
    normalizer,
)
from stiefel_xform.utils.linalg import (
    canonical_frame,
    cayley_chart,
    gram,
    orth_complement_frame,
    polar_factor,
    transpose,
    triangular_weight,
)

logger = get_logger(__name__)

MISMATCH_SIGMAS = 5.0
BOOTSTRAP_DRAWS = 2000
MIN_ESS_FRACTION = 0.05
QUADRATURE_TOL = 1e-6
AUDIT_FIELDS = ("constant", "minor-power:p=1", "minor-power:p=0.5,w=leading")


@dataclass(frozen=True)
class Check:
    name: str
    lhs: MCEstimate
    rhs: MCEstimate
    constant: float = 1.0
    abs_tol: Optional[float] = None


@dataclass
class Outcome:
    lhs: MCEstimate
    rhs: MCEstimate
    constant: Optional[float] = None
    checks: List[Check] = dc_field(default_factory=list)
    diagnostics: Dict[str, Any] = dc_field(default_factory=dict)
    inconclusive: bool = False
    abs_tol: Optional[float] = None


Hypothesis = Tuple[str, Callable[[IdentityParams], bool]]
Runner = Callable[[IdentityParams, MCConfig, RandomSource], Outcome]


@dataclass(frozen=True)
class Fixture:
    id: str
    anchor: str
    statement: str
    params: Tuple[str, ...]
    hypotheses: Tuple[Hypothesis, ...]
    defaults: IdentityParams
    boundary: IdentityParams
    run: Runner
    constant: Optional[str] = None
    audit_fields: Tuple[str, ...] = ()
    audit: bool = False
    grid: Tuple[IdentityParams, ...] = ()

    def violations(self, params: IdentityParams) -> List[str]:
        broken = []
        for label, holds in self.hypotheses:
            try:
                ok = holds(params)
            except StiefelXformError:
                ok = False
            if not ok:
                broken.append(label)
        return broken

    def info(self) -> FixtureInfo:
        return FixtureInfo(
            id=self.id,
            anchor=self.anchor,
            statement=self.statement,
            params=list(self.params),
            hypotheses=[label for label, _ in self.hypotheses],
            defaults=self.defaults.model_dump(exclude_none=True),
            boundary=self.boundary.model_dump(exclude_none=True),
            constant=self.constant,
            audit_fields=list(self.audit_fields),
        )


CATALOG: Dict[str, Fixture] = {}


def fixture(id: str, *, anchor: str, statement: str, params: Tuple[str, ...],
            hypotheses: Tuple[Hypothesis, ...], defaults: Dict[str, Any],
            boundary: Dict[str, Any], constant: Optional[str] = None,
            audit_fields: Tuple[str, ...] = (), audit: bool = False,
            grid: Tuple[Dict[str, Any], ...] = ()):
    def register(run: Runner) -> Runner:
        base = IdentityParams(**defaults)
        CATALOG[id] = Fixture(
            id=id,
            anchor=anchor,
            statement=statement,
            params=params,
            hypotheses=hypotheses,
            defaults=base,
            boundary=base.model_copy(update=boundary),
            run=run,
            constant=constant,
            audit_fields=audit_fields,
            audit=audit,
            grid=tuple(base.model_copy(update=entry) for entry in grid),
        )
        return run
    return register


# ---------------------------------------------------------------- helpers


def _const(kind: str, p: IdentityParams, **overrides) -> float:
    values = {"n": p.n, "m": p.m, "k": p.k, "alpha": p.alpha}
    values.update(overrides)
    return special.paper_constant(ConstantSpec(kind=kind, **values))


def _field(p: IdentityParams, cols: int, which: str = "field") -> ScalarField:
    return make_field(getattr(p, which), p.n, cols)


def _point(p: IdentityParams, cols: int, source: RandomSource, index: Optional[int] = None):
    index = p.point if index is None else index
    return haar_frames(p.n, cols, source.spawn("point", index).generator())


def _uniform_average(f: ScalarField, cfg: MCConfig, source: RandomSource) -> MCEstimate:
    return estimator.estimate_batches(
        lambda rng, size: f(haar_frames(f.n, f.cols, rng, (size,))), cfg, source=source
    )


def _ratio(pair: Callable[[np.random.Generator, int], Tuple[np.ndarray, np.ndarray]],
           cfg: MCConfig, source: RandomSource) -> MCEstimate:
    """E[a]/E[b] from paired draws; the three passes replay the same stream."""
    num = estimator.estimate_batches(lambda rng, size: pair(rng, size)[0], cfg, source=source)
    den = estimator.estimate_batches(lambda rng, size: pair(rng, size)[1], cfg, source=source)
    ratio = num.mean / den.mean

    def linear(rng, size):
        a, b = pair(rng, size)
        return a - ratio * b

    lin = estimator.estimate_batches(linear, cfg, source=source)
    return MCEstimate(mean=ratio, se=lin.se / abs(den.mean), samples=num.samples, seed=cfg.seed)


def _ess_fraction(weights: Callable[[np.random.Generator, int], np.ndarray], cfg: MCConfig,
                  source: RandomSource) -> float:
    first = estimator.estimate_batches(weights, cfg, source=source)
    second = estimator.estimate_batches(lambda rng, size: weights(rng, size) ** 2, cfg,
                                        source=source)
    if second.mean <= 0:
        return 0.0
    return first.mean ** 2 / second.mean


def _positive_integer(x: float) -> bool:
    return x > 0.5 and abs(x - round(x)) < 1e-12


def _invariant(p: IdentityParams) -> bool:
    return make_field(p.field, p.n, p.m).right_invariant


def _log_abs_det(x: np.ndarray) -> np.ndarray:
    return np.linalg.slogdet(x)[1]


# ---------------------------------------------------------------- hypotheses

_DIMS_FIBER: Hypothesis = ("1 <= m, k and k + m <= n",
                           lambda p: p.m >= 1 and p.k >= 1 and p.k + p.m <= p.n)
_M_K_N1: Hypothesis = ("1 <= m <= k <= n-1", lambda p: 1 <= p.m <= p.k <= p.n - 1)
_M_K_NM: Hypothesis = ("1 <= m <= k <= n-m", lambda p: 1 <= p.m <= p.k <= p.n - p.m)
_M_NK: Hypothesis = ("1 <= k <= n-1 and 1 <= m <= n-k",
                     lambda p: 1 <= p.k <= p.n - 1 and 1 <= p.m <= p.n - p.k)
_ALPHA_M: Hypothesis = ("alpha > m-1", lambda p: p.alpha > p.m - 1)
_ALPHA_K: Hypothesis = ("alpha > k-1", lambda p: p.alpha > p.k - 1)
_TWO_M: Hypothesis = ("2m <= n", lambda p: 2 * p.m <= p.n)
_M_N: Hypothesis = ("1 <= m <= n", lambda p: 1 <= p.m <= p.n)
_LAM: Hypothesis = ("lam has length m and lam_j > j-k-1",
                    lambda p: p.lam is not None and len(p.lam) == p.m
                    and all(lam > j - p.k - 1 for j, lam in enumerate(p.lam, start=1)))
_INVARIANT: Hypothesis = ("f right O(m)-invariant", _invariant)
_SMALL_M: Hypothesis = ("m in {1, 2}", lambda p: p.m in (1, 2))


# ---------------------------------------------------------------- masses


@fixture(
    "ID-MASS-FUNK",
    anchor="mass of the Funk transform",
    statement="∫ F_{m,k} f d*u = ∫ f d*v",
    params=("n", "m", "k", "field"),
    hypotheses=(_DIMS_FIBER,),
    defaults={"n": 4, "m": 1, "k": 2, "field": "minor-power:p=1"},
    boundary={"n": 4, "m": 2, "k": 3},
)
def _mass_funk(p, cfg, source):
    f = _field(p, p.m)
    lhs = mass(Transform(K.funk, p.n, p.m, p.k), f, cfg, source=source.spawn("lhs"))
    rhs = _uniform_average(f, cfg, source.spawn("rhs"))
    return Outcome(lhs, rhs)


@fixture(
    "ID-DUALITY",
    anchor="duality of the Funk transform and its dual",
    statement="⟨F_{m,k} f, φ⟩ = ⟨f, F̂* φ⟩",
    params=("n", "m", "k", "field", "field2"),
    hypotheses=(_DIMS_FIBER,),
    defaults={"n": 5, "m": 1, "k": 2, "field": "poly:seed=1", "field2": "poly:seed=2"},
    boundary={"n": 4, "m": 2, "k": 3},
)
def _duality(p, cfg, source):
    f, phi = _field(p, p.m), _field(p, p.k, "field2")
    lhs = mass(Transform(K.funk, p.n, p.m, p.k), f, cfg, point_weight=phi,
               source=source.spawn("lhs"))
    rhs = mass(Transform(K.dual_funk, p.n, p.m, p.k), phi, cfg, point_weight=f,
               source=source.spawn("rhs"))
    return Outcome(lhs, rhs)


def _mass_fixture(kind: K, dual: bool, constant_kind: str):
    def run(p, cfg, source):
        cols = p.k if dual else p.m
        f = _field(p, cols)
        transform = Transform(kind, p.n, p.m, p.k, alpha=p.alpha)
        lhs = mass(transform, f, cfg, source=source.spawn("lhs"))
        rhs = _uniform_average(f, cfg, source.spawn("rhs"))
        return Outcome(lhs, rhs, constant=_const(constant_kind, p))
    return run


_MASS_GRID = ({"n": 4, "m": 1, "k": 2, "alpha": 2.0},)

fixture(
    "ID-MASS-COS",
    anchor="mass of the cosine transform",
    statement="∫ C^α_{m,k} f d*u = c1 ∫ f d*v",
    params=("n", "m", "k", "alpha", "field"),
    hypotheses=(_M_K_N1, _ALPHA_M),
    defaults={"n": 5, "m": 2, "k": 2, "alpha": 3.0, "field": "minor-power:p=1"},
    boundary={"alpha": 1.0},
    constant="c1_mass_cos",
    audit_fields=AUDIT_FIELDS,
    grid=_MASS_GRID,
)(_mass_fixture(K.cosine, False, "c1_mass_cos"))
fixture(
    "ID-MASS-COS-DUAL",
    anchor="mass of the dual cosine transform",
    statement="∫ Ĉ*^α φ d*v = c1 ∫ φ d*u",
    params=("n", "m", "k", "alpha", "field"),
    hypotheses=(_M_K_N1, _ALPHA_M),
    defaults={"n": 5, "m": 2, "k": 2, "alpha": 3.0, "field": "minor-power:p=1"},
    boundary={"m": 3, "k": 2},
    constant="c1_mass_cos",
    audit_fields=AUDIT_FIELDS,
    grid=_MASS_GRID,
)(_mass_fixture(K.dual_cosine, True, "c1_mass_cos"))
fixture(
    "ID-MASS-SIN",
    anchor="mass of the sine transform",
    statement="∫ S^α_{m,k} f d*u = c2 ∫ f d*v",
    params=("n", "m", "k", "alpha", "field"),
    hypotheses=(_M_NK, _ALPHA_M),
    defaults={"n": 5, "m": 2, "k": 2, "alpha": 3.0, "field": "minor-power:p=1"},
    boundary={"k": 4},
    constant="c2_mass_sin",
    audit_fields=AUDIT_FIELDS,
    grid=_MASS_GRID,
)(_mass_fixture(K.sine, False, "c2_mass_sin"))
fixture(
    "ID-MASS-SIN-DUAL",
    anchor="mass of the dual sine transform",
    statement="∫ Ŝ*^α φ d*v = c2 ∫ φ d*u",
    params=("n", "m", "k", "alpha", "field"),
    hypotheses=(_M_NK, _ALPHA_M),
    defaults={"n": 5, "m": 2, "k": 2, "alpha": 3.0, "field": "minor-power:p=1"},
    boundary={"alpha": 0.5},
    constant="c2_mass_sin",
    audit_fields=AUDIT_FIELDS,
    grid=_MASS_GRID,
)(_mass_fixture(K.dual_sine, True, "c2_mass_sin"))


def _quartic(z: np.ndarray) -> np.ndarray:
    return np.sum(z ** 4, axis=(-2, -1))


@fixture(
    "ID-AVG-SYM",
    anchor="two-sided averages of a function of v'u are equal and constant",
    statement="∫ g(v'u) d*u = ∫ g(v'u) d*v, g(z) = Σ z_ij^4",
    params=("n", "m", "k"),
    hypotheses=(("1 <= m, k <= n", lambda p: 1 <= p.m <= p.n and 1 <= p.k <= p.n),),
    defaults={"n": 5, "m": 2, "k": 3},
    boundary={"m": 6},
)
def _avg_sym(p, cfg, source):
    def over_u(v):
        return lambda rng, size: _quartic(transpose(v) @ haar_frames(p.n, p.k, rng, (size,)))

    def over_v(u):
        return lambda rng, size: _quartic(transpose(haar_frames(p.n, p.m, rng, (size,))) @ u)

    bases = [_point(p, p.m, source, p.point + index) for index in range(3)]
    lhs_all = [estimator.estimate_batches(over_u(v), cfg, source=source.spawn("lhs", i))
               for i, v in enumerate(bases)]
    rhs = estimator.estimate_batches(over_v(_point(p, p.k, source)), cfg,
                                     source=source.spawn("rhs"))
    exact = p.m * p.k * 3.0 / (p.n * (p.n + 2))
    checks = [Check(f"base point {i} vs 0", lhs_all[i], lhs_all[0]) for i in (1, 2)]
    checks.append(Check("closed-form fourth moment", lhs_all[0], MCEstimate.exact(exact)))
    return Outcome(lhs_all[0], rhs, checks=checks, diagnostics={"fourth_moment": exact})


# ---------------------------------------------------------------- composite cosine moments


def _lam(p: IdentityParams) -> np.ndarray:
    return np.asarray(p.lam, dtype=float)


@fixture(
    "ID-EXL",
    anchor="moments of the composite power of v'uu'v",
    statement="∫ (v'uu'v)^λ d*u = Γ_m(n/2)Γ_Ω(λ+k) / (Γ_m(k/2)Γ_Ω(λ+n))",
    params=("n", "m", "k", "lam"),
    hypotheses=(("1 <= m <= k <= n", lambda p: 1 <= p.m <= p.k <= p.n), _LAM),
    defaults={"n": 4, "m": 2, "k": 3, "lam": (1.5, 0.5)},
    boundary={"lam": (-3.0, 0.5)},
    constant="exl_mass",
)
def _exl(p, cfg, source):
    lam = _lam(p)
    oracle = special.exl_mass(p.n, p.m, p.k, lam)
    printed = special.exl_mass(p.n, p.m, p.k, lam, printed=True)
    ones = make_field("constant", p.n, p.k)
    v = _point(p, p.m, source)
    lhs = evaluate(Transform(K.composite_cosine, p.n, p.m, p.k, lam=tuple(lam)), ones, v, cfg,
                   source=source.spawn("lhs"))
    u = _point(p, p.k, source, p.point + 1)

    def over_v(rng, size):
        vs = haar_frames(p.n, p.m, rng, (size,))
        return np.exp(special.log_composite_power(gram(transpose(u) @ vs), lam))

    other = estimator.estimate_batches(over_v, cfg, source=source.spawn("dual"))
    return Outcome(
        lhs, MCEstimate.exact(1.0), constant=oracle,
        checks=[Check("average over v at fixed u", other, MCEstimate.exact(1.0), oracle)],
        diagnostics={"constant_printed": printed, "printed_over_oracle": printed / oracle},
    )


@fixture(
    "ID-MNV",
    anchor="scalar moments of det(v'uu'v)",
    statement="∫ det(v'uu'v)^{α/2} d*v = Γ_m(n/2)Γ_m((α+k)/2) / (Γ_m(k/2)Γ_m((α+n)/2))",
    params=("n", "m", "k", "alpha"),
    hypotheses=(("1 <= m <= k <= n", lambda p: 1 <= p.m <= p.k <= p.n),
                ("alpha > m-k-1", lambda p: p.alpha > p.m - p.k - 1)),
    defaults={"n": 4, "m": 2, "k": 3, "alpha": 1.0},
    boundary={"alpha": -2.0},
    constant="mnv_moment",
)
def _mnv(p, cfg, source):
    oracle = _const("mnv_moment", p)
    u = _point(p, p.k, source)

    def over_v(rng, size):
        vs = haar_frames(p.n, p.m, rng, (size,))
        return np.exp(p.alpha / 2.0 * _log_abs_det(gram(transpose(u) @ vs)))

    lhs = estimator.estimate_batches(over_v, cfg, source=source.spawn("lhs"))
    diagonal = special.exl_mass(p.n, p.m, p.k, np.full(p.m, p.alpha))
    sigma = special.stiefel_volume(p.n, p.m)
    return Outcome(lhs, MCEstimate.exact(1.0), constant=oracle, diagnostics={
        "sigma_nm": sigma,
        "unnormalized_reading": oracle * sigma,
        "diagonal_exl_value": diagonal,
        "diagonal_exl_agrees": math.isclose(diagonal, oracle, rel_tol=1e-10),
    })


# ---------------------------------------------------------------- pointwise dual Funk


@fixture(
    "ID-KJA",
    anchor="dual Funk transform of a minor power",
    statement="F̂* det(v₀'uu'v₀)^{(α−k)/2} (v) = c_α det(I − v₀'vv'v₀)^{(α−k)/2}",
    params=("n", "m", "k", "alpha", "points"),
    hypotheses=(_M_K_NM, _ALPHA_M),
    defaults={"n": 5, "m": 2, "k": 2, "alpha": 3.0, "points": 5},
    boundary={"alpha": 1.0},
    constant="c_alpha_kja",
)
def _kja(p, cfg, source):
    c = _const("c_alpha_kja", p)
    exponent = (p.alpha - p.k) / 2.0
    phi = minor_power(p.n, p.k, p=exponent, w="canonical", q=p.m)
    v0 = canonical_frame(p.n, p.m)
    transform = Transform(K.dual_funk, p.n, p.m, p.k)
    rows = []
    for index in range(p.points or 1):
        v = _point(p, p.m, source, p.point + index)
        lhs = evaluate(transform, phi, v, cfg, source=source.spawn("lhs", index))
        proj = transpose(v0) @ v
        exact = math.exp(exponent * _log_abs_det(np.eye(p.m) - proj @ transpose(proj)))
        rows.append(Check(f"point {p.point + index}", lhs, MCEstimate.exact(exact), c))
    zs = [_z(row.lhs, row.rhs, row.constant, cfg) for row in rows]
    worst = int(np.argmax(np.abs(zs)))
    return Outcome(rows[worst].lhs, rows[worst].rhs, constant=c, checks=rows,
                   diagnostics={"point_z_scores": zs, "worst_point": p.point + worst})


@fixture(
    "ID-PMZ",
    anchor="weighted mass of the Funk transform",
    statement=("∫ F_{m,k} f(u) det(w'uu'w)^{(α−k)/2} d*u"
               " = c_α ∫ f(v) det(I − w'vv'w)^{(α−k)/2} d*v"),
    params=("n", "m", "k", "alpha", "field"),
    hypotheses=(_M_K_NM, _ALPHA_M),
    defaults={"n": 5, "m": 1, "k": 2, "alpha": 3.0, "field": "minor-power:p=1,w=leading"},
    boundary={"n": 4, "m": 2, "k": 3},
    constant="c_alpha_kja",
    audit_fields=AUDIT_FIELDS,
)
def _pmz(p, cfg, source):
    f = _field(p, p.m)
    exponent = (p.alpha - p.k) / 2.0
    weight = minor_power(p.n, p.k, p=exponent, w="canonical", q=p.m)
    w = canonical_frame(p.n, p.m)
    lhs = mass(Transform(K.funk, p.n, p.m, p.k), f, cfg, point_weight=weight,
               source=source.spawn("lhs"))

    def rhs_batch(rng, size):
        vs = haar_frames(p.n, p.m, rng, (size,))
        proj = transpose(w) @ vs
        gap = np.eye(p.m) - proj @ transpose(proj)
        return f(vs) * np.exp(exponent * _log_abs_det(gap))

    rhs = estimator.estimate_batches(rhs_batch, cfg, source=source.spawn("rhs"))
    return Outcome(lhs, rhs, constant=_const("c_alpha_kja", p))


# ---------------------------------------------------------------- compositions


_COMPOSITION_FIELD = "minor-power:p=1,w=leading"


@fixture(
    "ID-GTY",
    anchor="dual cosine of Funk equals Q",
    statement="Ĉ*^α F_{m,k} f = F̂* C^α f = c_α Q^{α+n−k−m} f",
    params=("n", "m", "k", "alpha", "field", "point"),
    hypotheses=(_M_K_NM, _ALPHA_M),
    defaults={"n": 4, "m": 1, "k": 1, "alpha": 2.0, "field": _COMPOSITION_FIELD},
    boundary={"alpha": 0.0},
    constant="c_alpha_gty",
    audit_fields=AUDIT_FIELDS,
    grid=({"n": 6, "m": 2, "k": 2, "alpha": 3.0},),
)
def _gty(p, cfg, source):
    f = _field(p, p.m)
    v = _point(p, p.m, source)
    beta = p.alpha + p.n - p.k - p.m
    lhs = compose(Transform(K.dual_cosine, p.n, p.m, p.k, alpha=p.alpha),
                  Transform(K.funk, p.n, p.m, p.k), f, v, cfg, source=source.spawn("lhs"))
    other = compose(Transform(K.dual_funk, p.n, p.m, p.k),
                    Transform(K.cosine, p.n, p.m, p.k, alpha=p.alpha), f, v, cfg,
                    source=source.spawn("route"))
    rhs = evaluate(Transform(K.qsin, p.n, p.m, p.m, alpha=beta), f, v, cfg,
                   source=source.spawn("rhs"))
    c = _const("c_alpha_gty", p)
    return Outcome(lhs, rhs, constant=c,
                   checks=[Check("F̂* C^α route", other, rhs, c)],
                   diagnostics={"q_exponent": beta, "route_difference": other.mean - lhs.mean})


@fixture(
    "ID-GTY7",
    anchor="dual cosine of Funk through M and the Funk transform F_m",
    statement="Ĉ*^α F_{m,k} f = c̃_α M^{α+m−k} F_m f",
    params=("n", "m", "k", "alpha", "field", "point"),
    hypotheses=(_M_K_NM, _ALPHA_K),
    defaults={"n": 5, "m": 1, "k": 2, "alpha": 3.0, "field": _COMPOSITION_FIELD},
    boundary={"alpha": 1.0},
    constant="ctilde_alpha_gty7",
    audit_fields=AUDIT_FIELDS,
)
def _gty7(p, cfg, source):
    f = _field(p, p.m)
    v = _point(p, p.m, source)
    lhs = compose(Transform(K.dual_cosine, p.n, p.m, p.k, alpha=p.alpha),
                  Transform(K.funk, p.n, p.m, p.k), f, v, cfg, source=source.spawn("lhs"))
    rhs = compose(Transform(K.mcos, p.n, p.m, p.m, alpha=p.alpha + p.m - p.k),
                  Transform(K.funk, p.n, p.m, p.m), f, v, cfg, source=source.spawn("rhs"))
    return Outcome(lhs, rhs, constant=_const("ctilde_alpha_gty7", p))


@fixture(
    "ID-782",
    anchor="Funk transform of M equals a sine transform",
    statement="F_{m,k} M^α f = c_{n,k,m}(α) S^{α+n−k−m}_{m,k} f",
    params=("n", "m", "k", "alpha", "field", "point"),
    hypotheses=(("1 <= m and 1 <= k <= n-m", lambda p: p.m >= 1 and 1 <= p.k <= p.n - p.m),
                _ALPHA_M),
    defaults={"n": 5, "m": 1, "k": 2, "alpha": 2.0, "field": _COMPOSITION_FIELD},
    boundary={"alpha": 0.0},
    constant="c_nkm_782",
    audit_fields=AUDIT_FIELDS,
)
def _782(p, cfg, source):
    f = _field(p, p.m)
    u = _point(p, p.k, source)
    lhs = compose(Transform(K.funk, p.n, p.m, p.k),
                  Transform(K.mcos, p.n, p.m, p.m, alpha=p.alpha), f, u, cfg,
                  source=source.spawn("lhs"))
    rhs = evaluate(Transform(K.sine, p.n, p.m, p.k, alpha=p.alpha + p.n - p.k - p.m), f, u,
                   cfg, source=source.spawn("rhs"))
    return Outcome(lhs, rhs, constant=_const("c_nkm_782", p))


@fixture(
    "ID-782M",
    anchor="F_m and M commute and compose to Q",
    statement="F_m M^α f = M^α F_m f = c_{n,m}(α) Q^{α+n−2m} f",
    params=("n", "m", "alpha", "field", "point"),
    hypotheses=(_TWO_M, _ALPHA_M),
    defaults={"n": 4, "m": 1, "alpha": 2.0, "field": _COMPOSITION_FIELD},
    boundary={"n": 3, "m": 2},
    constant="c_nm_782m",
    audit_fields=AUDIT_FIELDS,
)
def _782m(p, cfg, source):
    f = _field(p, p.m)
    u = _point(p, p.m, source)
    funk_m = Transform(K.funk, p.n, p.m, p.m)
    m_alpha = Transform(K.mcos, p.n, p.m, p.m, alpha=p.alpha)
    lhs = compose(funk_m, m_alpha, f, u, cfg, source=source.spawn("lhs"))
    swapped = compose(m_alpha, funk_m, f, u, cfg, source=source.spawn("swapped"))
    rhs = evaluate(Transform(K.qsin, p.n, p.m, p.m, alpha=p.alpha + p.n - 2 * p.m), f, u, cfg,
                   source=source.spawn("rhs"))
    c = _const("c_nm_782m", p, k=None)
    return Outcome(lhs, rhs, constant=c, checks=[Check("commutation", lhs, swapped)])


@fixture(
    "ID-GTY4",
    anchor="Q factors through M and F_m",
    statement="Q^α f = d_α M^{α+2m−n} F_m f",
    params=("n", "m", "alpha", "field", "point"),
    hypotheses=(_TWO_M, ("alpha > n-m-1", lambda p: p.alpha > p.n - p.m - 1)),
    defaults={"n": 4, "m": 1, "alpha": 3.5, "field": _COMPOSITION_FIELD},
    boundary={"alpha": 2.0},
    constant="d_alpha_85b",
    audit_fields=AUDIT_FIELDS,
)
def _gty4(p, cfg, source):
    f = _field(p, p.m)
    u = _point(p, p.m, source)
    gamma = p.alpha + 2 * p.m - p.n
    funk_m = Transform(K.funk, p.n, p.m, p.m)
    m_gamma = Transform(K.mcos, p.n, p.m, p.m, alpha=gamma)
    lhs = evaluate(Transform(K.qsin, p.n, p.m, p.m, alpha=p.alpha), f, u, cfg,
                   source=source.spawn("lhs"))
    rhs = compose(m_gamma, funk_m, f, u, cfg, source=source.spawn("rhs"))
    swapped = compose(funk_m, m_gamma, f, u, cfg, source=source.spawn("swapped"))
    c = _const("d_alpha_85b", p, k=None)
    return Outcome(lhs, rhs, constant=c, checks=[Check("F_m M route", lhs, swapped, c)])


@fixture(
    "ID-782A",
    anchor="cosine transform through the complement frame",
    statement="C^α_{m,k} f(u) = d̃_α (F_{m,n−k} M^{α+m−k} f)(ũ)",
    params=("n", "m", "k", "alpha", "field", "point"),
    hypotheses=(_M_K_N1, _ALPHA_K),
    defaults={"n": 4, "m": 1, "k": 2, "alpha": 3.0, "field": _COMPOSITION_FIELD},
    boundary={"alpha": 1.0},
    constant="dtilde_alpha_85b",
    audit_fields=AUDIT_FIELDS,
)
def _782a(p, cfg, source):
    f = _field(p, p.m)
    u = _point(p, p.k, source)
    lhs = evaluate(Transform(K.cosine, p.n, p.m, p.k, alpha=p.alpha), f, u, cfg,
                   source=source.spawn("lhs"))
    rhs = compose(Transform(K.funk, p.n, p.m, p.n - p.k),
                  Transform(K.mcos, p.n, p.m, p.m, alpha=p.alpha + p.m - p.k), f,
                  orth_complement_frame(u), cfg, source=source.spawn("rhs"))
    return Outcome(lhs, rhs, constant=_const("dtilde_alpha_85b", p))


@fixture(
    "ID-ARN",
    anchor="dual Funk of Funk equals Q",
    statement="F̂* F_{m,k} f = c̃ Q^{n−k−m} f",
    params=("n", "m", "k", "field", "point"),
    hypotheses=(("1 <= k <= n-1", lambda p: 1 <= p.k <= p.n - 1),
                ("2m <= n-k", lambda p: p.m >= 1 and 2 * p.m <= p.n - p.k)),
    defaults={"n": 4, "m": 1, "k": 1, "field": "constant"},
    boundary={"n": 4, "m": 2, "k": 1},
    constant="ctilde_arn",
    audit_fields=AUDIT_FIELDS,
    audit=True,
)
def _arn(p, cfg, source):
    f = _field(p, p.m)
    v = _point(p, p.m, source)
    lhs = compose(Transform(K.dual_funk, p.n, p.m, p.k), Transform(K.funk, p.n, p.m, p.k),
                  f, v, cfg, source=source.spawn("lhs"))
    rhs = evaluate(Transform(K.qsin, p.n, p.m, p.m, alpha=p.n - p.k - p.m), f, v, cfg,
                   source=source.spawn("rhs"))
    printed = _const("ctilde_arn", p, alpha=None)
    forced = _const("ctilde_arn_mass", p, alpha=None)
    return Outcome(lhs, rhs, constant=printed, diagnostics={
        "ctilde_arn_mass": forced,
        "printed_over_mass": printed / forced,
        "sigma_n_minus_m_m": special.stiefel_volume(p.n - p.m, p.m),
    })


@fixture(
    "ID-ROBP",
    anchor="sine transform as a cosine transform at the complement",
    statement="S^α_{m,k} f(u) = C^α_{m,n−k} f(ũ)",
    params=("n", "m", "k", "alpha", "field", "point"),
    hypotheses=(_M_NK, _ALPHA_M),
    defaults={"n": 5, "m": 1, "k": 2, "alpha": 2.5, "field": "poly:seed=3"},
    boundary={"n": 4, "m": 2, "k": 3},
)
def _robp(p, cfg, source):
    f = _field(p, p.m)
    u = _point(p, p.k, source)
    lhs = evaluate(Transform(K.sine, p.n, p.m, p.k, alpha=p.alpha), f, u, cfg,
                   source=source.spawn("lhs"))
    rhs = evaluate(Transform(K.sine, p.n, p.m, p.k, alpha=p.alpha, mode="complement"), f, u,
                   cfg, source=source.spawn("rhs"))
    return Outcome(lhs, rhs)


@fixture(
    "ID-AKM-MASS",
    anchor="mass of the complementary Radon transform",
    statement="∫ A_{k,m} φ d*v = ∫ φ d*u",
    params=("n", "m", "k", "field"),
    hypotheses=(_M_K_N1,),
    defaults={"n": 5, "m": 1, "k": 2, "field": "poly:seed=4"},
    boundary={"m": 3},
)
def _akm(p, cfg, source):
    phi = _field(p, p.k)
    lhs = mass(Transform(K.comp_radon, p.n, p.m, p.k), phi, cfg, source=source.spawn("lhs"))
    rhs = _uniform_average(phi, cfg, source.spawn("rhs"))
    return Outcome(lhs, rhs)


@fixture(
    "ID-TLAM-MASS",
    anchor="mass of the composite cosine transform",
    statement="∫ T^λ φ d*v = Γ_m(n/2)Γ_Ω(λ+k) / (Γ_m(k/2)Γ_Ω(λ+n)) ∫ φ d*u",
    params=("n", "m", "k", "lam", "field"),
    hypotheses=(_M_K_N1, _LAM),
    defaults={"n": 4, "m": 2, "k": 3, "lam": (1.5, 0.5), "field": "minor-power:p=0.5"},
    boundary={"m": 2, "k": 1},
    constant="exl_mass",
    audit_fields=AUDIT_FIELDS,
)
def _tlam(p, cfg, source):
    phi = _field(p, p.k)
    lam = _lam(p)
    oracle = special.exl_mass(p.n, p.m, p.k, lam)
    lhs = mass(Transform(K.composite_cosine, p.n, p.m, p.k, lam=tuple(lam)), phi, cfg,
               source=source.spawn("lhs"))
    rhs = _uniform_average(phi, cfg, source.spawn("rhs"))
    printed = special.exl_mass(p.n, p.m, p.k, lam, printed=True)
    return Outcome(lhs, rhs, constant=oracle, diagnostics={"constant_printed": printed})


@fixture(
    "ID-ORES",
    anchor="normalized dual cosine of Funk against normalized Q",
    statement="δ_{n,m,k}(α) Ĉ*^α F_{m,k} f = κ_k d_{n,m}(β) Q^β f, β = α+n−k−m",
    params=("n", "m", "k", "alpha", "field", "point"),
    hypotheses=(_M_K_NM, _ALPHA_M,
                ("alpha+m-k not in {1,2,...}",
                 lambda p: not _positive_integer(p.alpha + p.m - p.k)),
                _INVARIANT),
    defaults={"n": 4, "m": 1, "k": 1, "alpha": 0.75, "field": _COMPOSITION_FIELD},
    boundary={"alpha": 1.0},
    constant="kappa_k_ores",
    audit_fields=AUDIT_FIELDS,
)
def _ores(p, cfg, source):
    f = _field(p, p.m)
    v = _point(p, p.m, source)
    beta = p.alpha + p.n - p.k - p.m
    outer = Transform(K.dual_cosine, p.n, p.m, p.k, alpha=p.alpha)
    q = Transform(K.qsin, p.n, p.m, p.m, alpha=beta)
    lhs = compose(outer, Transform(K.funk, p.n, p.m, p.k), f, v, cfg,
                  source=source.spawn("lhs")).scaled(normalizer(outer))
    rhs = evaluate(q, f, v, cfg, source=source.spawn("rhs")).scaled(normalizer(q))
    return Outcome(lhs, rhs, constant=_const("kappa_k_ores", p, alpha=None))


# ---------------------------------------------------------------- measure decompositions


@fixture(
    "ID-POLAR",
    anchor="polar coordinates x = v r^{1/2}",
    statement="∫ e^{−tr x'x} h(v(x)) dx = π^{nm/2} ∫ h d*v",
    params=("n", "m", "field"),
    hypotheses=(_M_N,),
    defaults={"n": 4, "m": 2, "field": "constant"},
    boundary={"n": 2, "m": 3},
)
def _polar(p, cfg, source):
    h = _field(p, p.m)
    log_gauss = p.n * p.m / 2.0 * math.log(2 * math.pi)

    def gaussian(rng, size):
        x = rng.standard_normal((size, p.n, p.m))
        return np.exp(log_gauss - 0.5 * np.sum(x ** 2, axis=(-2, -1))) * h(polar_factor(x))

    sigma = special.stiefel_volume(p.n, p.m)
    eye = np.eye(p.m)

    def polar(rng, size):
        v = haar_frames(p.n, p.m, rng, (size,))
        r = sample_wishart(p.m, p.n, eye, rng, size)
        log_target = -np.trace(r, axis1=-2, axis2=-1)
        weight = polar_weight(r, p.n, p.m) * np.exp(log_target - wishart_logpdf(r, p.n, eye))
        return sigma * h(v) * weight

    lhs = estimator.estimate_batches(gaussian, cfg, source=source.spawn("lhs"))
    rhs = estimator.estimate_batches(polar, cfg, source=source.spawn("rhs"))
    exact = math.pi ** (p.n * p.m / 2.0)
    outcome = Outcome(lhs, rhs, diagnostics={"gaussian_integral": exact})
    if h.name.startswith("constant"):
        level = float(h(np.eye(p.n, p.m)))
        outcome.checks.append(Check("Gaussian integral", lhs, MCEstimate.exact(exact * level)))
        outcome.diagnostics["relative_error"] = lhs.mean / (exact * level) - 1.0
    return outcome


TRIANGULAR_SCALE = 2.0


@fixture(
    "ID-TRI",
    anchor="triangular coordinates x = v t",
    statement="σ_{n,m} ∫ e^{−tr t't} ∏ t_jj^{n−j} dt = π^{nm/2}",
    params=("n", "m"),
    hypotheses=(_M_N,),
    defaults={"n": 4, "m": 2},
    boundary={"n": 2, "m": 3},
)
def _tri(p, cfg, source):
    n, m, s = p.n, p.m, TRIANGULAR_SCALE
    shapes = (n - np.arange(1, m + 1) + 1) / 2.0
    rows, cols = np.triu_indices(m, 1)
    log_sigma = special.log_stiefel_volume(n, m)
    powers = n - np.arange(1, m + 1)
    # t_jj^2 ~ Gamma((n-j+1)/2, s), t_ij ~ N(0, s/2) above the diagonal
    log_norm = np.sum(gammaln(shapes) + shapes * math.log(s) - math.log(2.0))
    log_norm += rows.size * 0.5 * math.log(math.pi * s)

    def batch(rng, size):
        t = np.zeros((size, m, m))
        diag = np.sqrt(rng.gamma(shapes, s, size=(size, m)))
        t[:, np.arange(m), np.arange(m)] = diag
        t[:, rows, cols] = rng.normal(0.0, math.sqrt(s / 2.0), size=(size, rows.size))
        squares = np.sum(t ** 2, axis=(-2, -1))
        log_target = log_sigma - squares + np.log(triangular_weight(t, n))
        log_proposal = np.sum(powers * np.log(diag), axis=-1) - squares / s - log_norm
        return np.exp(log_target - log_proposal)

    lhs = estimator.estimate_batches(batch, cfg, source=source.spawn("lhs"))
    return Outcome(lhs, MCEstimate.exact(math.pi ** (n * m / 2.0)))


@fixture(
    "ID-BISTIEFEL",
    anchor="bi-Stiefel coordinates v = [a; u(I − a'a)^{1/2}]",
    statement="∫ f1 / ∫ f2 over d*v equals the ratio under det(I − a'a)^δ da du",
    params=("n", "m", "k", "field", "field2"),
    hypotheses=(("1 <= k < n and 1 <= m <= n-k",
                 lambda p: 1 <= p.k < p.n and 1 <= p.m <= p.n - p.k),),
    defaults={"n": 5, "m": 2, "k": 2, "field": "monomial:i=1,j=1,d=2",
              "field2": "minor-power:p=1"},
    boundary={"n": 4, "m": 2, "k": 3},
)
def _bistiefel(p, cfg, source):
    f1, f2 = _field(p, p.m), _field(p, p.m, "field2")

    def direct(rng, size):
        v = haar_frames(p.n, p.m, rng, (size,))
        return f1(v), f2(v)

    def coordinates(rng, size):
        v, weight = sample_bistiefel(p.n, p.k, p.m, rng, size)
        return weight * f1(v), weight * f2(v)

    lhs = _ratio(direct, cfg, source.spawn("lhs"))
    rhs = _ratio(coordinates, cfg, source.spawn("rhs"))
    return Outcome(lhs, rhs)


# ---------------------------------------------------------------- cone integrals


def _spd_point(p: IdentityParams, source: RandomSource) -> np.ndarray:
    g = source.spawn("spd", p.point).generator().standard_normal((p.m, p.m))
    return np.eye(p.m) + 0.5 * g.T @ g / p.m


@fixture(
    "ID-EQ11",
    anchor="Laplace transform of the composite power",
    statement="∫_Ω e^{−tr(rs)} r^λ d*r = Γ_Ω(λ) (s*)^{−λ*}",
    params=("m", "lam", "point"),
    hypotheses=(_SMALL_M,
                ("lam has length m and lam_j > j-1",
                 lambda p: p.lam is not None and len(p.lam) == p.m
                 and special.composite_gamma_converges(p.lam))),
    defaults={"m": 1, "lam": (3.0,)},
    boundary={"lam": (0.0,)},
    constant="composite_gamma",
    grid=({"m": 2, "lam": (3.0, 2.0)},),
)
def _eq11(p, cfg, source):
    m, lam = p.m, _lam(p)
    s = _spd_point(p, source)
    oracle = special.composite_gamma(lam)
    rhs_value = float(special.composite_power(special.reverse_matrix(s),
                                              -special.reverse_exponent(lam)))
    rhs = MCEstimate.exact(rhs_value)
    d = (m + 1) / 2.0
    floor = float(np.min(2 * lam - np.arange(m)))
    df = max((m - 1 + floor) / 2.0, m - 1 + 0.25)
    scale = np.linalg.inv(2.0 * s)

    def weights(rng, size):
        r = sample_wishart(m, df, scale, rng, size)
        log_target = (-np.einsum("ij,...ji->...", s, r) + special.log_composite_power(r, lam)
                      - d * _log_abs_det(r))
        return np.exp(log_target - wishart_logpdf(r, df, scale))

    sampled = estimator.estimate_batches(weights, cfg, source=source.spawn("mc"))
    diagnostics = {"proposal_df": df}
    if m == 1:
        value, error = integrate.quad(
            lambda r: r ** (lam[0] / 2.0 - 1.0) * math.exp(-r * s[0, 0]), 0.0, math.inf
        )
        lhs = MCEstimate(mean=value, se=0.0, samples=1, seed=cfg.seed)
        diagnostics["quadrature_error"] = error
        return Outcome(lhs, rhs, constant=oracle,
                       abs_tol=QUADRATURE_TOL * max(1.0, abs(value)),
                       checks=[Check("importance sampling", sampled, rhs, oracle)],
                       diagnostics=diagnostics)
    ess = _ess_fraction(weights, cfg, source.spawn("mc"))
    diagnostics["ess_fraction"] = ess
    return Outcome(sampled, rhs, constant=oracle, diagnostics=diagnostics,
                   inconclusive=ess < MIN_ESS_FRACTION)


@fixture(
    "ID-BETA",
    anchor="beta integral over the matrix interval 0 < r < I",
    statement="∫_{0<r<I} |r|^{α−d} |I−r|^{β−d} dr = B_m(α, β)",
    params=("m", "alpha", "beta"),
    hypotheses=(_SMALL_M,
                ("alpha > (m-1)/2 and beta > (m-1)/2",
                 lambda p: p.alpha > (p.m - 1) / 2 and p.beta > (p.m - 1) / 2)),
    defaults={"m": 1, "alpha": 2.0, "beta": 3.0},
    boundary={"m": 2, "alpha": 0.5},
    constant="siegel_beta",
    grid=({"m": 2, "alpha": 2.0, "beta": 2.0},),
)
def _beta(p, cfg, source):
    m, a, b = p.m, p.alpha, p.beta
    d = (m + 1) / 2.0
    oracle = special.siegel_beta(m, a, b)
    rhs = MCEstimate.exact(1.0)
    if m == 1:
        value, error = integrate.quad(lambda r: r ** (a - 1) * (1 - r) ** (b - 1), 0.0, 1.0)
        lhs = MCEstimate(mean=value, se=0.0, samples=1, seed=cfg.seed)
        return Outcome(lhs, rhs, constant=oracle, abs_tol=QUADRATURE_TOL * max(1.0, value),
                       diagnostics={"quadrature_error": error})
    volume = interval_box_volume(m)

    def batch(rng, size):
        r, accepted = sample_matrix_interval(m, rng, size)
        safe = np.where(accepted[:, None, None], r, 0.5 * np.eye(m))
        log_value = (a - d) * _log_abs_det(safe) + (b - d) * _log_abs_det(np.eye(m) - safe)
        return np.where(accepted, volume * np.exp(log_value), 0.0)

    lhs = estimator.estimate_batches(batch, cfg, source=source.spawn("lhs"))
    return Outcome(lhs, rhs, constant=oracle)


# ---------------------------------------------------------------- matrix-space charts


CHART_DF = 1.0


def _chart_ratio(n: int, m: int) -> float:
    return math.exp(special.log_stiefel_volume(m, m) - special.log_stiefel_volume(n, m))


def _last_row_power(text: str) -> Optional[Tuple[float, float]]:
    """(level, p) when the field on V_{n,1} is level · |v_n|^{2p}, else None."""
    name, params = parse_field_spec(text)
    if name == "constant":
        return float(params.get("c", 1.0)), 0.0
    if name == "minor-power" and params.get("w", "canonical") == "canonical":
        return 1.0, float(params.get("p", 1.0))
    return None


@fixture(
    "ID-MKZE",
    anchor="Stiefel integral as an integral over the matrix chart",
    statement="∫ f d*v = (σ_{m,m}/σ_{n,m}) ∫ f(μ(y)) |I+y'y|^{−n/2} dy",
    params=("n", "m", "field"),
    hypotheses=(("1 <= m < n", lambda p: 1 <= p.m < p.n), _INVARIANT),
    defaults={"n": 4, "m": 1, "field": "minor-power:p=0.5"},
    boundary={"n": 2, "m": 2},
    grid=({"n": 4, "m": 2},),
)
def _mkze(p, cfg, source):
    n, m = p.n, p.m
    f = _field(p, m)
    factor = _chart_ratio(n, m)
    lhs = _uniform_average(f, cfg, source.spawn("lhs"))

    def weights(rng, size):
        y, log_q = sample_matrix_t(n - m, m, CHART_DF, rng, size)
        log_target = -n / 2.0 * _log_abs_det(np.eye(m) + gram(y))
        return y, factor * np.exp(log_target - log_q)

    def batch(rng, size):
        y, w = weights(rng, size)
        return f(cayley_chart(y)) * w

    rhs = estimator.estimate_batches(batch, cfg, source=source.spawn("rhs"))
    outcome = Outcome(lhs, rhs)
    shape = _last_row_power(p.field) if m == 1 else None
    if shape is not None:
        level, exponent = shape
        # radial quadrature with v_n^2 = 1 / (1 + |y|^2)
        radial, error = integrate.quad(
            lambda rho: rho ** (n - 2) * (1 + rho * rho) ** (-exponent - n / 2.0), 0.0, math.inf
        )
        oracle = level * factor * special.stiefel_volume(n - 1, 1) * radial
        exact = MCEstimate.exact(oracle)
        outcome.checks += [Check("Stiefel side vs quadrature", lhs, exact),
                           Check("chart side vs quadrature", rhs, exact)]
        outcome.diagnostics.update({"quadrature": oracle, "quadrature_error": error})
    if m > 1:
        ess = _ess_fraction(lambda rng, size: weights(rng, size)[1], cfg, source.spawn("rhs"))
        outcome.diagnostics["ess_fraction"] = ess
        outcome.inconclusive = ess < MIN_ESS_FRACTION
    return outcome


@fixture(
    "ID-OONTR",
    anchor="M transform as a kernel integral over the matrix chart",
    statement=("∫ f(v)|u'v|^{α−m} d*v"
               " = (σ_{m,m}/σ_{n,m}) ∫ f(μ(y)) |I+x'y|^{α−m} K̃_α(x,y) dy"),
    params=("n", "m", "alpha", "field", "point"),
    hypotheses=(("1 <= m < n", lambda p: 1 <= p.m < p.n), _ALPHA_M, _INVARIANT),
    defaults={"n": 4, "m": 1, "alpha": 2.0, "field": "constant"},
    boundary={"alpha": 0.0},
    grid=({"n": 4, "m": 2, "alpha": 2.5},),
)
def _oontr(p, cfg, source):
    n, m, alpha = p.n, p.m, p.alpha
    f = _field(p, m)
    factor = _chart_ratio(n, m)
    x = source.spawn("chart-point", p.point).generator().standard_normal((n - m, m))
    u = cayley_chart(x)
    lhs = evaluate(Transform(K.mcos, n, m, m, alpha=alpha), f, u, cfg, source=source.spawn("lhs"))
    log_x = (m - alpha) / 2.0 * _log_abs_det(np.eye(m) + gram(x))

    def weights(rng, size):
        y, log_q = sample_matrix_t(n - m, m, CHART_DF, rng, size)
        log_kernel = (
            (alpha - m) * _log_abs_det(np.eye(m) + transpose(x) @ y)
            + log_x
            - (n + alpha - m) / 2.0 * _log_abs_det(np.eye(m) + gram(y))
        )
        return y, factor * np.exp(log_kernel - log_q)

    def batch(rng, size):
        y, w = weights(rng, size)
        return f(cayley_chart(y)) * w

    rhs = estimator.estimate_batches(batch, cfg, source=source.spawn("rhs"))
    outcome = Outcome(lhs, rhs)
    if parse_field_spec(p.field)[0] == "constant":
        level = float(f(np.eye(n, m)))
        oracle = level * _const("mnv_moment", p, k=m, alpha=alpha - m)
        exact = MCEstimate.exact(oracle)
        outcome.checks += [Check("M side vs closed form", lhs, exact),
                           Check("chart side vs closed form", rhs, exact)]
        outcome.diagnostics["closed_form"] = oracle
    if m > 1:
        ess = _ess_fraction(lambda rng, size: weights(rng, size)[1], cfg, source.spawn("rhs"))
        outcome.diagnostics["ess_fraction"] = ess
        outcome.inconclusive = ess < MIN_ESS_FRACTION
    return outcome


# ---------------------------------------------------------------- invariance fixtures


@fixture(
    "ID-GRASS",
    anchor="Funk transform depends on the span of u only",
    statement="F_{m,k} f(uγ) = F_{m,k} f(u), γ ∈ O(k)",
    params=("n", "m", "k", "field", "point"),
    hypotheses=(_DIMS_FIBER,),
    defaults={"n": 5, "m": 1, "k": 2, "field": _COMPOSITION_FIELD},
    boundary={"n": 4, "m": 2, "k": 3},
)
def _grass(p, cfg, source):
    f = _field(p, p.m)
    u = _point(p, p.k, source)
    gamma = haar_frames(p.k, p.k, source.spawn("gamma").generator())
    transform = Transform(K.funk, p.n, p.m, p.k)
    lhs = evaluate(transform, f, u, cfg, source=source.spawn("lhs"))
    rhs = evaluate(transform, f, u @ gamma, cfg, source=source.spawn("rhs"))
    return Outcome(lhs, rhs)


@fixture(
    "ID-78HY",
    anchor="the Funk transform absorbs right averaging",
    statement="F_{m,k} f = F_{m,k} f̃, f̃(v) = mean over γ of f(vγ)",
    params=("n", "m", "k", "field", "point"),
    hypotheses=(_DIMS_FIBER,),
    defaults={"n": 5, "m": 2, "k": 2, "field": "poly:seed=5"},
    boundary={"n": 4, "m": 2, "k": 3},
)
def _78hy(p, cfg, source):
    f = _field(p, p.m)
    u = _point(p, p.k, source)
    transform = Transform(K.funk, p.n, p.m, p.k)
    lhs = evaluate(transform, f, u, cfg, source=source.spawn("lhs"))
    rhs = evaluate(transform, right_average(f, 32, seed=cfg.seed), u, cfg,
                   source=source.spawn("rhs"))
    return Outcome(lhs, rhs)


# ---------------------------------------------------------------- verification


def _combined_se(lhs: MCEstimate, rhs: MCEstimate, c: float) -> float:
    return math.sqrt(lhs.se ** 2 + (c * rhs.se) ** 2)


def _z(lhs: MCEstimate, rhs: MCEstimate, c: float, cfg: MCConfig) -> float:
    diff = lhs.mean - c * rhs.mean
    scale = max(_combined_se(lhs, rhs, c), cfg.abs_tol)
    return diff / scale if diff else 0.0


def _agrees(lhs: MCEstimate, rhs: MCEstimate, c: float, cfg: MCConfig,
            abs_tol: Optional[float] = None) -> bool:
    tol = cfg.abs_tol if abs_tol is None else max(abs_tol, cfg.abs_tol)
    return abs(lhs.mean - c * rhs.mean) <= max(tol, cfg.z_tol * _combined_se(lhs, rhs, c))


def list_identities() -> List[FixtureInfo]:
    return [entry.info() for entry in CATALOG.values()]


def export_catalog() -> List[Dict[str, Any]]:
    return [info.model_dump() for info in list_identities()]


def get_fixture(identity_id: str) -> Fixture:
    try:
        return CATALOG[identity_id]
    except KeyError:
        raise UnknownIdentity(identity_id) from None


def resolve(identity_id: str,
            params: Optional[IdentityParams] = None) -> Tuple[Fixture, IdentityParams]:
    fixture_ = get_fixture(identity_id)
    merged = (params or IdentityParams()).merged(fixture_.defaults)
    broken = fixture_.violations(merged)
    if broken:
        raise AdmissibilityError(broken[0], identity_id)
    return fixture_, merged


def _require_auditable(fixture_: Fixture) -> None:
    if fixture_.constant is None or len(fixture_.audit_fields) < 3:
        raise AdmissibilityError("fixture has a constant and at least 3 audit fields",
                                 fixture_.id)


def _report_params(params: IdentityParams) -> Dict[str, Any]:
    data = params.model_dump(exclude_none=True)
    if "lam" in data:
        data["lam"] = list(data["lam"])
    return data


def verify(identity_id: str, params: Optional[IdentityParams] = None,
           cfg: Optional[MCConfig] = None, timings: bool = False,
           audit: bool = False) -> IdentityReport:
    """Estimate both sides of a fixture and decide pass, fail or constant-mismatch.

    With `audit` the constant is fitted even when the identity passes.
    """
    cfg = cfg or MCConfig.from_settings()
    fixture_, merged = resolve(identity_id, params)
    if audit:
        _require_auditable(fixture_)
    source = RandomSource(cfg.seed).spawn(fixture_.id)
    started = time.perf_counter()
    outcome = fixture_.run(merged, cfg, source)

    c = 1.0 if outcome.constant is None else outcome.constant
    passed = _agrees(outcome.lhs, outcome.rhs, c, cfg, outcome.abs_tol)
    failed_checks = [check.name for check in outcome.checks
                     if not _agrees(check.lhs, check.rhs, check.constant, cfg, check.abs_tol)]
    diagnostics = dict(outcome.diagnostics)
    if outcome.checks:
        diagnostics["checks"] = {
            check.name: {
                "lhs": check.lhs.mean,
                "rhs": check.rhs.mean,
                "constant": check.constant,
                "z_score": _z(check.lhs, check.rhs, check.constant, cfg),
            }
            for check in outcome.checks
        }
    if failed_checks:
        diagnostics["failed_checks"] = failed_checks

    verdict = Verdict.passed if passed and not failed_checks else Verdict.failed
    fit = None
    auditable = outcome.constant is not None and len(fixture_.audit_fields) >= 3
    if auditable and (audit or fixture_.audit or verdict is Verdict.failed):
        try:
            fit = _fit(fixture_, merged, cfg, source, outcome.constant)
        except DegenerateFit as exc:
            if audit:
                raise
            diagnostics["audit_error"] = str(exc)
    if fit is not None:
        mismatch = abs(fit.value - outcome.constant) > MISMATCH_SIGMAS * max(fit.se, cfg.abs_tol)
        if fit.proportional and mismatch:
            verdict = Verdict.constant_mismatch
    if outcome.inconclusive and verdict is Verdict.failed:
        verdict = Verdict.inconclusive

    runtime = (time.perf_counter() - started) * 1000.0
    logger.info("%s %s (z=%.2f)", fixture_.id, verdict.value, _z(outcome.lhs, outcome.rhs, c, cfg))
    return IdentityReport(
        id=fixture_.id,
        params=_report_params(merged),
        lhs=outcome.lhs,
        rhs=outcome.rhs,
        constant_paper=outcome.constant,
        constant_empirical=fit,
        z_score=_z(outcome.lhs, outcome.rhs, c, cfg),
        verdict=verdict,
        runtime_ms=runtime if timings else None,
        seed=cfg.seed,
        diagnostics=diagnostics,
    )


def _fit(fixture_: Fixture, params: IdentityParams, cfg: MCConfig, source: RandomSource,
         paper: Optional[float]) -> ConstantFit:
    lhs, rhs = [], []
    for index, name in enumerate(fixture_.audit_fields):
        outcome = fixture_.run(params.with_field(name), cfg, source.spawn("audit", index))
        lhs.append(outcome.lhs)
        rhs.append(outcome.rhs)

    l_mean = np.array([e.mean for e in lhs])
    l_se = np.array([e.se for e in lhs])
    r_mean = np.array([e.mean for e in rhs])
    r_se = np.array([e.se for e in rhs])
    if np.all(np.abs(r_mean) <= np.maximum(cfg.abs_tol, cfg.z_tol * r_se)):
        raise DegenerateFit(f"{fixture_.id}: every right-hand side is indistinguishable from 0")

    def solve(left: np.ndarray, right: np.ndarray) -> float:
        c = float(np.sum(left * right) / np.sum(right * right))
        for _ in range(2):
            var = l_se ** 2 + (c * r_se) ** 2 + (cfg.abs_tol * np.maximum(1.0, np.abs(left))) ** 2
            weights = 1.0 / var
            c = float(np.sum(weights * left * right) / np.sum(weights * right * right))
        return c

    value = solve(l_mean, r_mean)
    rng = source.spawn("bootstrap").generator()
    draws = np.array([
        solve(l_mean + l_se * rng.standard_normal(l_mean.size),
              r_mean + r_se * rng.standard_normal(r_mean.size))
        for _ in range(BOOTSTRAP_DRAWS)
    ])
    se = float(np.std(draws, ddof=1))
    low, high = np.percentile(draws, [2.5, 97.5])

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = l_mean / r_mean
        ratio_se = np.abs(ratios) * np.sqrt((l_se / l_mean) ** 2 + (r_se / r_mean) ** 2)
    ratio_se = np.where(np.isfinite(ratio_se), ratio_se, np.inf)
    proportional = True
    for i in range(ratios.size):
        for j in range(i + 1, ratios.size):
            spread = math.sqrt(ratio_se[i] ** 2 + ratio_se[j] ** 2)
            if abs(ratios[i] - ratios[j]) > max(cfg.abs_tol, MISMATCH_SIGMAS * spread):
                proportional = False

    return ConstantFit(
        value=value,
        se=se,
        ci_low=float(low),
        ci_high=float(high),
        ratio_to_paper=None if not paper else value / paper,
        proportional=proportional,
        fields=list(fixture_.audit_fields),
        ratios=[float(r) if np.isfinite(r) else 0.0 for r in ratios],
    )


def fit_constant(identity_id: str, params: Optional[IdentityParams] = None,
                 cfg: Optional[MCConfig] = None) -> ConstantFit:
    """Least-squares fit of c in lhs ≈ c · rhs over the fixture's audit fields."""
    cfg = cfg or MCConfig.from_settings()
    fixture_, merged = resolve(identity_id, params)
    _require_auditable(fixture_)
    source = RandomSource(cfg.seed).spawn(fixture_.id)
    paper = fixture_.run(merged, cfg, source).constant
    return _fit(fixture_, merged, cfg, source, paper)
