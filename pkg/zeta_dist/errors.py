"""
Error hierarchy for zeta_dist.

Every error knows how to render itself as a machine-readable dict so the CLI can
print it on stderr and exit 2.
"""

from typing import Any, Dict, List, Optional


class ZetaDistError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class SpecValidationError(ZetaDistError):
    """A ProductSpec breaks one or more invariants."""

    def __init__(self, violations: List[Dict[str, Any]]) -> None:
        fields = ", ".join(v["field"] for v in violations)
        super().__init__(
            f"Invalid product spec ({len(violations)} violation(s): {fields})",
            {"violations": violations},
        )
        self.violations = violations


class DomainError(ZetaDistError):
    """An argument lies outside the domain of the operation."""


class UnsupportedCoefficientsError(ZetaDistError):
    """Coefficients outside {-1, 0, 1} reached a sum-based theorem path."""


class NotADistributionError(ZetaDistError):
    """A measure with negative mass was used where a probability law is needed."""


class TargetDerivationError(ZetaDistError):
    """No negative contribution exists, so there is nothing to witness."""


class CatalogLookupError(ZetaDistError):
    """Unknown catalog entry or parameter."""


class ConfigError(ZetaDistError):
    """Malformed settings file or CLI configuration."""
