from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, model_validator

from stiefel_xform.schemas.identity import IdentityReport, Verdict
from stiefel_xform.schemas.mc import MCConfig, MCEstimate

SCHEMA_VERSION = "1.0"


class Command(str, Enum):
    list = "list"
    verify = "verify"
    audit = "audit"
    eval = "eval"
    suite = "suite"


class OutputFormat(str, Enum):
    json = "json"
    text = "text"


class ExitStatus(int, Enum):
    passed = 0
    failed = 1
    constant_mismatch = 2
    usage = 3


class RunConfig(BaseModel):
    command: Command
    ids: List[str] = Field(default_factory=list)
    transform: Optional[str] = None
    n: Optional[int] = None
    m: Optional[int] = None
    k: Optional[int] = None
    alpha: Optional[float] = None
    lam: Optional[Tuple[float, ...]] = None
    field: Optional[str] = None
    profile: Optional[str] = None
    mc: MCConfig
    out: Optional[str] = None
    format: OutputFormat = OutputFormat.json

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.command is Command.eval and not (self.transform and self.field):
            raise ValueError("eval requires a transform kind and a field")
        if self.command in (Command.verify, Command.audit) and not self.ids:
            raise ValueError(f"{self.command.value} requires an identity id")
        if self.command is Command.suite and self.profile not in ("smoke", "full"):
            raise ValueError("suite profile must be smoke or full")
        return self


class EvalResult(BaseModel):
    transform: str
    params: Dict[str, Any]
    field: str
    estimate: MCEstimate
    normalized: Optional[MCEstimate] = None


class SuiteSummary(BaseModel):
    run_id: str
    profile: str
    status: str
    counts: Dict[str, int]
    error: Optional[str] = None


class ReportEnvelope(BaseModel):
    schema_version: str = SCHEMA_VERSION
    tool: str = "stiefel-xform"
    version: str
    timestamp: Optional[str] = None
    config: Dict[str, Any]
    reports: List[Union[IdentityReport, EvalResult]] = Field(default_factory=list)
    summary: Optional[SuiteSummary] = None
    exit_status: ExitStatus


def exit_status(verdicts: List[Verdict]) -> ExitStatus:
    if Verdict.failed in verdicts:
        return ExitStatus.failed
    if Verdict.constant_mismatch in verdicts:
        return ExitStatus.constant_mismatch
    return ExitStatus.passed
