from __future__ import annotations

from typing import Any


# ---------------------------------------------------------
# Unified error payload
# ---------------------------------------------------------
class HeatlabError(Exception):
    """
    Base error. Every subclass has a stable `code`; `detail` mirrors the
    {code, message, field} payload the CLI prints on failure.
    """

    code = "heatlab_error"

    def __init__(self, message: str, *, field: str | None = None, **extra: Any):
        super().__init__(message)
        self.message = message
        self.field = field
        self.extra = extra

    @property
    def detail(self) -> dict[str, Any]:
        detail: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.field:
            detail["field"] = self.field
        return detail


class InvalidArgumentError(HeatlabError, ValueError):
    code = "invalid_argument"


class ModelInvalidError(HeatlabError):
    code = "model_invalid"


class QuadratureError(HeatlabError):
    code = "quadrature_not_converged"

    def __init__(self, message: str, *, partial_sums=(), error_estimate: float = float("nan"), **extra: Any):
        super().__init__(message, **extra)
        self.partial_sums = [float(s) for s in partial_sums]
        self.error_estimate = float(error_estimate)


class ScalingViolatedError(HeatlabError):
    code = "scaling_violated"

    def __init__(self, message: str, *, worst_pair: tuple[float, float], exponent: float, **extra: Any):
        super().__init__(message, **extra)
        self.worst_pair = worst_pair
        self.exponent = exponent


class RenewalInversionError(HeatlabError):
    code = "renewal_inversion_unstable"

    def __init__(self, message: str, *, radii=(), **extra: Any):
        super().__init__(message, **extra)
        self.radii = [float(r) for r in radii]


class TableRangeError(HeatlabError, ValueError):
    code = "table_range"


class RegimeError(HeatlabError):
    code = "regime"

    def __init__(self, message: str, *, window: tuple[float, float], **extra: Any):
        super().__init__(message, **extra)
        self.window = window


class UnsupportedRegimeError(HeatlabError):
    code = "unsupported_regime"

    def __init__(self, message: str, *, hypothesis: str, **extra: Any):
        super().__init__(message, **extra)
        self.hypothesis = hypothesis


class ConditionHUndecidableError(HeatlabError):
    code = "condition_h_undecidable"


class HartmanWintnerError(ModelInvalidError):
    code = "hartman_wintner"


class ConfigError(HeatlabError):
    code = "config_invalid"

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None, **extra: Any):
        super().__init__(message, field=field, **extra)
        self.line = line

    @property
    def detail(self) -> dict[str, Any]:
        detail = super().detail
        if self.line is not None:
            detail["line"] = self.line
        return detail


class UnknownCheckError(HeatlabError, KeyError):
    code = "unknown_check"

    def __init__(self, name: str, available):
        self.available = sorted(available)
        super().__init__(
            f"unknown check {name!r}; available: {', '.join(self.available) or '(none)'}",
            field="check",
        )

    def __str__(self) -> str:
        return self.message


# ---------------------------------------------------------
# Warnings
# ---------------------------------------------------------
class AccuracyWarning(UserWarning):
    def __init__(self, message: str, achieved_error: float):
        super().__init__(message)
        self.achieved_error = achieved_error


class SimulationWarning(UserWarning):
    pass
