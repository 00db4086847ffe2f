from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, model_validator


class ConstantKind(str, Enum):
    sigma_nm = "sigma_nm"
    c1_mass_cos = "c1_mass_cos"
    c2_mass_sin = "c2_mass_sin"
    c_alpha_gty = "c_alpha_gty"
    ctilde_alpha_gty7 = "ctilde_alpha_gty7"
    c_nkm_782 = "c_nkm_782"
    c_nm_782m = "c_nm_782m"
    d_alpha_85b = "d_alpha_85b"
    dtilde_alpha_85b = "dtilde_alpha_85b"
    ctilde_arn = "ctilde_arn"
    ctilde_arn_mass = "ctilde_arn_mass"
    kappa_k_ores = "kappa_k_ores"
    delta_nmk = "delta_nmk"
    d_nmk = "d_nmk"
    delta_nm = "delta_nm"
    d_nm = "d_nm"
    c_alpha_kja = "c_alpha_kja"
    mu_k_for1y = "mu_k_for1y"
    mnv_moment = "mnv_moment"


# parameters each kind reads; everything else is ignored
KIND_PARAMS: Dict[ConstantKind, List[str]] = {
    ConstantKind.sigma_nm: ["n", "m"],
    ConstantKind.ctilde_arn: ["n", "m", "k"],
    ConstantKind.ctilde_arn_mass: ["n", "m", "k"],
    ConstantKind.kappa_k_ores: ["n", "m", "k"],
    ConstantKind.mu_k_for1y: ["n", "m", "k"],
    ConstantKind.c_nm_782m: ["n", "m", "alpha"],
    ConstantKind.d_alpha_85b: ["n", "m", "alpha"],
    ConstantKind.delta_nm: ["n", "m", "alpha"],
    ConstantKind.d_nm: ["n", "m", "alpha"],
}


def kind_params(kind: ConstantKind) -> List[str]:
    return KIND_PARAMS.get(kind, ["n", "m", "k", "alpha"])


class ConstantSpec(BaseModel):
    kind: ConstantKind
    n: int
    m: int
    k: Optional[int] = None
    alpha: Optional[float] = None

    @model_validator(mode="after")
    def _check_required(self) -> "ConstantSpec":
        missing = [name for name in kind_params(self.kind) if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind.value} requires {', '.join(missing)}")
        return self


class ConstantInfo(BaseModel):
    kind: str
    params: List[str]
    formula: str
    hypotheses: List[str]
    excluded: Optional[str] = None
    printed_vs_corrected: Optional[str] = None
