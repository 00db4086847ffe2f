from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from stiefel_xform.schemas.mc import MCEstimate


class Verdict(str, Enum):
    passed = "pass"
    failed = "fail"
    constant_mismatch = "constant-mismatch"
    inconclusive = "inconclusive"


class IdentityParams(BaseModel):
    """Parameters of one fixture run; fields a fixture does not read stay None."""

    model_config = ConfigDict(frozen=True)

    n: Optional[int] = None
    m: Optional[int] = None
    k: Optional[int] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    lam: Optional[Tuple[float, ...]] = None
    field: Optional[str] = None
    field2: Optional[str] = None
    point: int = 0
    points: Optional[int] = None

    def merged(self, defaults: "IdentityParams") -> "IdentityParams":
        given = self.model_dump(exclude_none=True, exclude_defaults=True)
        return defaults.model_copy(update=given)

    def with_field(self, field: str) -> "IdentityParams":
        return self.model_copy(update={"field": field})


class ConstantFit(BaseModel):
    value: float
    se: float
    ci_low: float
    ci_high: float
    ratio_to_paper: Optional[float] = None
    proportional: bool
    fields: List[str]
    ratios: List[float]


class IdentityReport(BaseModel):
    id: str
    params: Dict[str, Any]
    lhs: MCEstimate
    rhs: MCEstimate
    constant_paper: Optional[float] = None
    constant_empirical: Optional[ConstantFit] = None
    z_score: float
    verdict: Verdict
    runtime_ms: Optional[float] = None
    seed: int
    error: Optional[str] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)


class FixtureInfo(BaseModel):
    id: str
    anchor: str
    statement: str
    params: List[str]
    hypotheses: List[str]
    defaults: Dict[str, Any]
    boundary: Dict[str, Any]
    constant: Optional[str] = None
    audit_fields: List[str] = Field(default_factory=list)
