from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from stiefel_xform.core.config import Settings, get_settings


class MCConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int = Field(100_000, ge=100)
    seed: int = 0
    shards: int = Field(1, ge=1)
    z_tol: float = Field(4.0, gt=0)
    abs_tol: float = Field(1e-9, ge=0)
    # nested compositions: outer points and inner draws per point
    n_outer: int = Field(10_000, ge=100)
    n_inner: int = Field(1_000, ge=1)
    threads: int = Field(1, ge=1)
    chunk_size: int = Field(8_192, ge=1)

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None, **overrides) -> "MCConfig":
        settings = settings or get_settings()
        values = {
            "samples": settings.samples,
            "seed": settings.seed,
            "shards": settings.shards,
            "z_tol": settings.z_tol,
            "abs_tol": settings.abs_tol,
            "n_outer": settings.n_outer,
            "n_inner": settings.n_inner,
            "threads": settings.threads,
            "chunk_size": settings.chunk_size,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


class MCEstimate(BaseModel):
    mean: float
    se: float = Field(ge=0)
    samples: int = Field(gt=0)
    seed: int

    def scaled(self, factor: float) -> "MCEstimate":
        return MCEstimate(
            mean=self.mean * factor,
            se=self.se * abs(factor),
            samples=self.samples,
            seed=self.seed,
        )

    @classmethod
    def exact(cls, value: float, seed: int = 0) -> "MCEstimate":
        return cls(mean=value, se=0.0, samples=1, seed=seed)
