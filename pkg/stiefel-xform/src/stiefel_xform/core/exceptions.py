from typing import Optional


class StiefelXformError(Exception):
    """Base class for every error raised by the package."""


class NotPositiveDefinite(StiefelXformError):
    def __init__(self, message: str = "matrix is not positive definite",
                 index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class RankDeficient(StiefelXformError):
    pass


class DimensionError(StiefelXformError):
    pass


class NotAFrame(StiefelXformError):
    pass


class OutOfRegion(StiefelXformError):
    pass


class PoleError(StiefelXformError):
    def __init__(self, message: str, factor_index: int):
        super().__init__(message)
        self.factor_index = factor_index


class DomainError(StiefelXformError):
    pass


class AdmissibilityError(StiefelXformError):
    def __init__(self, hypothesis: str, detail: str = ""):
        message = f"admissibility violated: {hypothesis}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.hypothesis = hypothesis


class NonFiniteSample(StiefelXformError):
    def __init__(self, sample_index: int, value: float):
        super().__init__(f"integrand returned {value!r} at sample {sample_index}")
        self.sample_index = sample_index
        self.value = value


class FieldError(StiefelXformError):
    pass


class UnknownIdentity(StiefelXformError):
    def __init__(self, identity_id: str):
        super().__init__(f"unknown identity: {identity_id}")
        self.identity_id = identity_id


class DegenerateFit(StiefelXformError):
    pass


class ConfigError(StiefelXformError):
    pass
