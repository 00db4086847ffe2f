"""Gamma functions of the cone of positive definite matrices and the
registry of closed-form constants built from them."""
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import special as sps

from stiefel_xform.core.config import get_settings
from stiefel_xform.core.exceptions import (
    AdmissibilityError,
    DimensionError,
    DomainError,
    NotPositiveDefinite,
    PoleError,
)
from stiefel_xform.core.logging import get_logger
from stiefel_xform.schemas.constants import ConstantInfo, ConstantKind, ConstantSpec, kind_params
from stiefel_xform.utils.linalg import as_array, log_principal_minors

logger = get_logger(__name__)

LOG_PI = math.log(math.pi)
LOG_OVERFLOW = 700.0


def _check_poles(args: np.ndarray, what: str) -> None:
    tol = get_settings().pole_tol
    for index, arg in enumerate(args):
        if arg <= tol and abs(arg - round(arg)) <= tol:
            raise PoleError(f"{what}: factor {index} hits a pole at {arg:g}", factor_index=index)


def _siegel_args(m: int, alpha: float) -> np.ndarray:
    if m < 1:
        raise DimensionError(f"Siegel gamma order must be >= 1, got {m}")
    return alpha - np.arange(m) / 2.0


def _composite_args(lam: Sequence[float]) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size < 1:
        raise DimensionError("composite exponent must be a non-empty vector")
    return (lam - np.arange(lam.size)) / 2.0


def _signed_log_product(args: np.ndarray, m: int) -> Tuple[float, float]:
    sign = float(np.prod(sps.gammasgn(args)))
    log = float(np.sum(sps.gammaln(args))) + m * (m - 1) / 4.0 * LOG_PI
    return sign, log


def _finish(sign: float, log: float, what: str) -> float:
    if abs(log) > LOG_OVERFLOW:
        raise DomainError(f"{what} out of floating range (log {log:.1f})")
    return sign * math.exp(log)


def signed_log_siegel_gamma(m: int, alpha: float) -> Tuple[float, float]:
    args = _siegel_args(m, alpha)
    _check_poles(args, f"Γ_{m}({alpha:g})")
    return _signed_log_product(args, m)


def siegel_gamma(m: int, alpha: float) -> float:
    """Γ_m(α) = π^{m(m−1)/4} ∏_{j<m} Γ(α − j/2)."""
    sign, log = signed_log_siegel_gamma(m, alpha)
    return _finish(sign, log, f"Γ_{m}({alpha:g})")


def log_siegel_gamma(m: int, alpha: float) -> float:
    args = _siegel_args(m, alpha)
    _check_poles(args, f"Γ_{m}({alpha:g})")
    if np.any(args <= 0):
        raise DomainError(f"log Γ_{m}({alpha:g}) needs every factor argument positive")
    return _signed_log_product(args, m)[1]


def signed_log_composite_gamma(lam: Sequence[float]) -> Tuple[float, float]:
    args = _composite_args(lam)
    _check_poles(args, f"Γ_Ω({list(lam)})")
    return _signed_log_product(args, args.size)


def composite_gamma(lam: Sequence[float]) -> float:
    """Γ_Ω(λ) = π^{m(m−1)/4} ∏_j Γ((λ_j − j + 1)/2)."""
    sign, log = signed_log_composite_gamma(lam)
    return _finish(sign, log, "Γ_Ω")


def log_composite_gamma(lam: Sequence[float]) -> float:
    sign, log = signed_log_composite_gamma(lam)
    if sign <= 0 or np.any(_composite_args(lam) <= 0):
        raise DomainError("log Γ_Ω needs every factor argument positive")
    return log


def composite_gamma_converges(lam: Sequence[float]) -> bool:
    """True when the defining cone integral converges, λ_j > j − 1."""
    lam = np.asarray(lam, dtype=float)
    return bool(np.all(lam > np.arange(lam.size)))


def log_composite_power(r, lam: Sequence[float]) -> np.ndarray:
    """log r^λ, batched over leading axes; NaN where r is not positive definite."""
    r = as_array(r)
    lam = np.asarray(lam, dtype=float)
    if r.shape[-1] != lam.size:
        raise DimensionError(
            f"exponent length {lam.size} does not match matrix order {r.shape[-1]}"
        )
    logs = log_principal_minors(r)
    steps = np.diff(logs, axis=-1, prepend=0.0)
    with np.errstate(invalid="ignore"):
        terms = np.where(lam == 0.0, 0.0, 0.5 * lam * steps)
    return np.sum(terms, axis=-1)


def composite_power(r, lam: Sequence[float]):
    """r^λ = ∏_i (Δ_i/Δ_{i−1})^{λ_i/2}."""
    log = log_composite_power(r, lam)
    if np.any(np.isnan(log)):
        raise NotPositiveDefinite("composite power needs a positive definite argument")
    value = np.exp(log)
    return float(value) if np.ndim(value) == 0 else value


def reverse_exponent(lam: Sequence[float]) -> np.ndarray:
    return np.asarray(lam, dtype=float)[::-1].copy()


def reverse_matrix(r) -> np.ndarray:
    """r* = ω r ω with ω the anti-diagonal permutation."""
    return as_array(r)[..., ::-1, ::-1].copy()


def log_siegel_beta(m: int, a: float, b: float) -> float:
    return log_siegel_gamma(m, a) + log_siegel_gamma(m, b) - log_siegel_gamma(m, a + b)


def siegel_beta(m: int, a: float, b: float) -> float:
    return math.exp(log_siegel_beta(m, a, b))


def log_stiefel_volume(n: int, m: int) -> float:
    """log σ_{n,m}, the total volume of V_{n,m}."""
    if not 1 <= m <= n:
        raise DimensionError(f"V_{{{n},{m}}} needs 1 <= m <= n")
    return m * math.log(2.0) + n * m / 2.0 * LOG_PI - log_siegel_gamma(m, n / 2.0)


def stiefel_volume(n: int, m: int) -> float:
    return math.exp(log_stiefel_volume(n, m))


def log_exl_mass(n: int, m: int, k: int, lam: Sequence[float], printed: bool = False) -> float:
    """log of ∫ (v'uu'v)^λ d*u over V_{n,k}.

    The normalized value carries Γ_m(n/2) in the numerator; `printed=True`
    swaps in Γ_m(m/2), the form kept for audit diagnostics.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.size != m:
        raise DimensionError(f"exponent length {lam.size} does not match m={m}")
    top = log_siegel_gamma(m, (m if printed else n) / 2.0)
    return (
        top
        + log_composite_gamma(lam + k)
        - log_siegel_gamma(m, k / 2.0)
        - log_composite_gamma(lam + n)
    )


def exl_mass(n: int, m: int, k: int, lam: Sequence[float], printed: bool = False) -> float:
    return math.exp(log_exl_mass(n, m, k, lam, printed=printed))


# ---------------------------------------------------------------- registry

Term = Tuple[int, float]
Terms = Tuple[List[Term], List[Term], float]
Hypothesis = Tuple[str, Callable[[ConstantSpec], bool]]


@dataclass(frozen=True)
class ConstantDefinition:
    kind: ConstantKind
    formula: str
    terms: Callable[[ConstantSpec], Terms]
    hypotheses: Tuple[Hypothesis, ...]
    excluded: Optional[Tuple[str, Callable[[ConstantSpec], float]]] = None
    note: Optional[str] = None


def _mass_hyps(alpha_floor: str = "m-1") -> Tuple[Hypothesis, ...]:
    floors = {
        "m-1": ("alpha > m-1", lambda s: s.alpha > s.m - 1),
        "k-1": ("alpha > k-1", lambda s: s.alpha > s.k - 1),
        "n-m-1": ("alpha > n-m-1", lambda s: s.alpha > s.n - s.m - 1),
    }
    return (floors[alpha_floor],)


_M_LE_K_LT_N: Hypothesis = ("1 <= m <= k <= n-1", lambda s: 1 <= s.m <= s.k <= s.n - 1)
_M_LE_K_LE_NM: Hypothesis = ("1 <= m <= k <= n-m", lambda s: 1 <= s.m <= s.k <= s.n - s.m)
_TWO_M_LE_N: Hypothesis = ("2m <= n", lambda s: 2 * s.m <= s.n)


def _g(s: ConstantSpec, x: float) -> Term:
    return (s.m, x)


REGISTRY: Dict[ConstantKind, ConstantDefinition] = {}


def _register(definition: ConstantDefinition) -> None:
    REGISTRY[definition.kind] = definition


_register(ConstantDefinition(
    kind=ConstantKind.sigma_nm,
    formula="2^m π^{nm/2} / Γ_m(n/2)",
    terms=lambda s: ([], [_g(s, s.n / 2)], s.m * math.log(2) + s.n * s.m / 2 * LOG_PI),
    hypotheses=(("1 <= m <= n", lambda s: 1 <= s.m <= s.n),),
))
_register(ConstantDefinition(
    kind=ConstantKind.c1_mass_cos,
    formula="Γ_m(n/2)Γ_m(α/2) / (Γ_m(k/2)Γ_m((α+n−k)/2))",
    terms=lambda s: (
        [_g(s, s.n / 2), _g(s, s.alpha / 2)],
        [_g(s, s.k / 2), _g(s, (s.alpha + s.n - s.k) / 2)],
        0.0,
    ),
    hypotheses=(_M_LE_K_LT_N,) + _mass_hyps(),
))
_register(ConstantDefinition(
    kind=ConstantKind.c2_mass_sin,
    formula="Γ_m(n/2)Γ_m(α/2) / (Γ_m((n−k)/2)Γ_m((α+k)/2))",
    terms=lambda s: (
        [_g(s, s.n / 2), _g(s, s.alpha / 2)],
        [_g(s, (s.n - s.k) / 2), _g(s, (s.alpha + s.k) / 2)],
        0.0,
    ),
    hypotheses=(
        ("1 <= k <= n-1", lambda s: 1 <= s.k <= s.n - 1),
        ("1 <= m <= n-k", lambda s: 1 <= s.m <= s.n - s.k),
    ) + _mass_hyps(),
))


def _c_alpha_terms(s: ConstantSpec) -> Terms:
    return (
        [_g(s, (s.n - s.m) / 2), _g(s, s.alpha / 2)],
        [_g(s, s.k / 2), _g(s, (s.alpha + s.n - s.m - s.k) / 2)],
        0.0,
    )


_register(ConstantDefinition(
    kind=ConstantKind.c_alpha_gty,
    formula="Γ_m((n−m)/2)Γ_m(α/2) / (Γ_m(k/2)Γ_m((α+n−m−k)/2))",
    terms=_c_alpha_terms,
    hypotheses=(_M_LE_K_LE_NM,) + _mass_hyps(),
))
_register(ConstantDefinition(
    kind=ConstantKind.c_alpha_kja,
    formula="Γ_m((n−m)/2)Γ_m(α/2) / (Γ_m(k/2)Γ_m((α+n−m−k)/2))",
    terms=_c_alpha_terms,
    hypotheses=(_M_LE_K_LE_NM,) + _mass_hyps(),
))
_register(ConstantDefinition(
    kind=ConstantKind.ctilde_alpha_gty7,
    formula="Γ_m(m/2)Γ_m(α/2) / (Γ_m(k/2)Γ_m((α+m−k)/2))",
    terms=lambda s: (
        [_g(s, s.m / 2), _g(s, s.alpha / 2)],
        [_g(s, s.k / 2), _g(s, (s.alpha + s.m - s.k) / 2)],
        0.0,
    ),
    hypotheses=(_M_LE_K_LE_NM,) + _mass_hyps("k-1"),
))
_register(ConstantDefinition(
    kind=ConstantKind.c_nkm_782,
    formula="Γ_m((n−k)/2)Γ_m(α/2) / (Γ_m(m/2)Γ_m((α+n−k−m)/2))",
    terms=lambda s: (
        [_g(s, (s.n - s.k) / 2), _g(s, s.alpha / 2)],
        [_g(s, s.m / 2), _g(s, (s.alpha + s.n - s.k - s.m) / 2)],
        0.0,
    ),
    hypotheses=(("1 <= k <= n-m", lambda s: s.m >= 1 and 1 <= s.k <= s.n - s.m),)
    + _mass_hyps(),
))
_register(ConstantDefinition(
    kind=ConstantKind.c_nm_782m,
    formula="Γ_m((n−m)/2)Γ_m(α/2) / (Γ_m(m/2)Γ_m((α+n−2m)/2))",
    terms=lambda s: (
        [_g(s, (s.n - s.m) / 2), _g(s, s.alpha / 2)],
        [_g(s, s.m / 2), _g(s, (s.alpha + s.n - 2 * s.m) / 2)],
        0.0,
    ),
    hypotheses=(_TWO_M_LE_N,) + _mass_hyps(),
))
_register(ConstantDefinition(
    kind=ConstantKind.d_alpha_85b,
    formula="Γ_m(m/2)Γ_m(α/2) / (Γ_m((n−m)/2)Γ_m((α+2m−n)/2))",
    terms=lambda s: (
        [_g(s, s.m / 2), _g(s, s.alpha / 2)],
        [_g(s, (s.n - s.m) / 2), _g(s, (s.alpha + 2 * s.m - s.n) / 2)],
        0.0,
    ),
    hypotheses=(_TWO_M_LE_N,) + _mass_hyps("n-m-1"),
))
_register(ConstantDefinition(
    kind=ConstantKind.dtilde_alpha_85b,
    formula="Γ_m(m/2)Γ_m(α/2) / (Γ_m(k/2)Γ_m((α+m−k)/2))",
    terms=lambda s: (
        [_g(s, s.m / 2), _g(s, s.alpha / 2)],
        [_g(s, s.k / 2), _g(s, (s.alpha + s.m - s.k) / 2)],
        0.0,
    ),
    hypotheses=(_M_LE_K_LT_N,) + _mass_hyps("k-1"),
))
_register(ConstantDefinition(
    kind=ConstantKind.ctilde_arn,
    formula="2^m π^{(n−m)m/2} Γ_m((n−k)/2) / (Γ_m(n/2)Γ_m((n−k−m)/2))",
    terms=lambda s: (
        [_g(s, (s.n - s.k) / 2)],
        [_g(s, s.n / 2), _g(s, (s.n - s.k - s.m) / 2)],
        s.m * math.log(2) + (s.n - s.m) * s.m / 2 * LOG_PI,
    ),
    hypotheses=(
        ("1 <= k <= n-1", lambda s: 1 <= s.k <= s.n - 1),
        ("2m <= n-k", lambda s: 2 * s.m <= s.n - s.k),
    ),
    note="printed form; equals ctilde_arn_mass times σ_{n−m,m}",
))
_register(ConstantDefinition(
    kind=ConstantKind.ctilde_arn_mass,
    formula="Γ_m((n−m)/2)Γ_m((n−k)/2) / (Γ_m(n/2)Γ_m((n−k−m)/2))",
    terms=lambda s: (
        [_g(s, (s.n - s.m) / 2), _g(s, (s.n - s.k) / 2)],
        [_g(s, s.n / 2), _g(s, (s.n - s.k - s.m) / 2)],
        0.0,
    ),
    hypotheses=(
        ("1 <= k <= n-1", lambda s: 1 <= s.k <= s.n - 1),
        ("2m <= n-k", lambda s: 2 * s.m <= s.n - s.k),
    ),
    note="value forced by the f ≡ 1 masses of both sides",
))
_register(ConstantDefinition(
    kind=ConstantKind.kappa_k_ores,
    formula="Γ_m((n−m)/2) / Γ_m(k/2)",
    terms=lambda s: ([_g(s, (s.n - s.m) / 2)], [_g(s, s.k / 2)], 0.0),
    hypotheses=(_M_LE_K_LE_NM,),
))


def _positive_integer(x: float) -> bool:
    tol = get_settings().pole_tol
    return x > 0.5 and abs(x - round(x)) <= tol


_register(ConstantDefinition(
    kind=ConstantKind.delta_nmk,
    formula="Γ_m(m/2)Γ_m((k−α)/2) / (Γ_m(n/2)Γ_m(α/2))",
    terms=lambda s: (
        [_g(s, s.m / 2), _g(s, (s.k - s.alpha) / 2)],
        [_g(s, s.n / 2), _g(s, s.alpha / 2)],
        0.0,
    ),
    hypotheses=(_M_LE_K_LT_N,),
    excluded=("alpha+m-k in {1,2,...}", lambda s: s.alpha + s.m - s.k),
))
_register(ConstantDefinition(
    kind=ConstantKind.d_nmk,
    formula="Γ_m(k/2)Γ_m((n−k−α)/2) / (Γ_m(n/2)Γ_m(α/2))",
    terms=lambda s: (
        [_g(s, s.k / 2), _g(s, (s.n - s.k - s.alpha) / 2)],
        [_g(s, s.n / 2), _g(s, s.alpha / 2)],
        0.0,
    ),
    hypotheses=(
        ("1 <= k <= n-1", lambda s: 1 <= s.k <= s.n - 1),
        ("1 <= m <= n-k", lambda s: 1 <= s.m <= s.n - s.k),
    ),
    excluded=("alpha+k+m-n in {1,2,...}", lambda s: s.alpha + s.k + s.m - s.n),
))
_register(ConstantDefinition(
    kind=ConstantKind.delta_nm,
    formula="Γ_m(m/2)Γ_m((m−α)/2) / (Γ_m(n/2)Γ_m(α/2))",
    terms=lambda s: (
        [_g(s, s.m / 2), _g(s, (s.m - s.alpha) / 2)],
        [_g(s, s.n / 2), _g(s, s.alpha / 2)],
        0.0,
    ),
    hypotheses=(("1 <= m <= n-1", lambda s: 1 <= s.m <= s.n - 1),),
    excluded=("alpha in {1,2,...}", lambda s: s.alpha),
))
_register(ConstantDefinition(
    kind=ConstantKind.d_nm,
    formula="Γ_m(m/2)Γ_m((n−m−α)/2) / (Γ_m(n/2)Γ_m(α/2))",
    terms=lambda s: (
        [_g(s, s.m / 2), _g(s, (s.n - s.m - s.alpha) / 2)],
        [_g(s, s.n / 2), _g(s, s.alpha / 2)],
        0.0,
    ),
    hypotheses=(_TWO_M_LE_N,),
    excluded=("alpha+2m-n in {1,2,...}", lambda s: s.alpha + 2 * s.m - s.n),
))
_register(ConstantDefinition(
    kind=ConstantKind.mu_k_for1y,
    formula="Γ_m(m/2) / Γ_m((n−k)/2)",
    terms=lambda s: ([_g(s, s.m / 2)], [_g(s, (s.n - s.k) / 2)], 0.0),
    hypotheses=(("1 <= m <= n-k", lambda s: 1 <= s.m <= s.n - s.k),),
))
_register(ConstantDefinition(
    kind=ConstantKind.mnv_moment,
    formula="Γ_m(n/2)Γ_m((α+k)/2) / (Γ_m(k/2)Γ_m((α+n)/2)), α the scalar exponent",
    terms=lambda s: (
        [_g(s, s.n / 2), _g(s, (s.alpha + s.k) / 2)],
        [_g(s, s.k / 2), _g(s, (s.alpha + s.n) / 2)],
        0.0,
    ),
    hypotheses=(
        ("1 <= m <= k <= n", lambda s: 1 <= s.m <= s.k <= s.n),
        ("alpha > m-k-1", lambda s: s.alpha > s.m - s.k - 1),
    ),
    note="normalized-measure reading; the unnormalized reading carries σ_{n,m}",
))


def violated_hypotheses(spec: ConstantSpec) -> List[str]:
    definition = REGISTRY[spec.kind]
    return [label for label, holds in definition.hypotheses if not holds(spec)]


def signed_log_constant(spec: ConstantSpec, strict: bool = False) -> Tuple[float, float]:
    definition = REGISTRY[spec.kind]
    violated = violated_hypotheses(spec)
    if violated:
        if strict:
            raise AdmissibilityError(violated[0], f"constant {spec.kind.value}")
        logger.warning(
            "Constant %s outside its hypotheses: %s", spec.kind.value, "; ".join(violated)
        )
    if definition.excluded is not None:
        label, shifted = definition.excluded
        if _positive_integer(shifted(spec)):
            raise PoleError(f"{spec.kind.value}: {label} (value {shifted(spec):g})", factor_index=0)

    numerator, denominator, log = definition.terms(spec)
    sign = 1.0
    for order, arg in numerator:
        s, lg = signed_log_siegel_gamma(order, arg)
        sign *= s
        log += lg
    for order, arg in denominator:
        s, lg = signed_log_siegel_gamma(order, arg)
        sign *= s
        log -= lg
    return sign, log


def paper_constant(spec: ConstantSpec, strict: bool = False) -> float:
    """Evaluate a registry constant as a ratio of Siegel gamma values.

    Hypothesis violations are advisory unless `strict` is set.
    """
    sign, log = signed_log_constant(spec, strict=strict)
    return _finish(sign, log, spec.kind.value)


def constant(kind: str, n: int, m: int, k: Optional[int] = None, alpha: Optional[float] = None,
             strict: bool = False) -> float:
    return paper_constant(ConstantSpec(kind=kind, n=n, m=m, k=k, alpha=alpha), strict=strict)


def list_constants() -> List[ConstantInfo]:
    return [
        ConstantInfo(
            kind=definition.kind.value,
            params=kind_params(definition.kind),
            formula=definition.formula,
            hypotheses=[label for label, _ in definition.hypotheses],
            excluded=definition.excluded[0] if definition.excluded else None,
            printed_vs_corrected=definition.note,
        )
        for definition in REGISTRY.values()
    ]
