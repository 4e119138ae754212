"""
QSBA Error Hierarchy

Every failure raised by the toolkit derives from ``QSBAError`` and carries a
stable machine-readable ``code``. Input and validation failures also derive
from ``ValueError`` so callers that only care about "bad input" can catch the
builtin.
"""

from typing import Any, Dict, Optional


class QSBAError(Exception):
    """Base class for all QSBA errors."""

    code = "qsba-error"

    def __init__(self, message: str = "", **context: Any):
        super().__init__(message or self.code)
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the error for reports and structured logs."""
        payload: Dict[str, Any] = {"code": self.code, "message": str(self)}
        payload.update({k: v for k, v in self.context.items() if v is not None})
        return payload


class PreconditionError(QSBAError, ValueError):
    code = "precondition"


class ZeroModulusError(QSBAError, ValueError):
    code = "zero-modulus"


class DegenerateDegreeError(QSBAError, ValueError):
    code = "degenerate-degree"


class SamplingExhaustedError(QSBAError):
    code = "sampling-exhausted"


class KeyExhaustedError(QSBAError):
    """A key pool cannot serve a draw."""

    code = "key-exhausted"

    def __init__(self, link: Any, shortfall: int, message: Optional[str] = None):
        super().__init__(
            message or f"key pool {link} short by {shortfall} bits",
            link=str(link),
            shortfall=shortfall,
        )
        self.link = link
        self.shortfall = shortfall


class OTPLengthMismatchError(QSBAError, ValueError):
    code = "otp-length-mismatch"


class AccessDeniedError(QSBAError, PermissionError):
    code = "access-denied"


class NoRecipientsError(QSBAError, ValueError):
    code = "no-recipients"


class NoPartialSignatureError(QSBAError, LookupError):
    code = "no-partial-signature"


class MalformedSignatureError(QSBAError, ValueError):
    code = "malformed-signature"


class MalformedFrameError(QSBAError, ValueError):
    code = "malformed-frame"


class InvalidChainError(QSBAError, ValueError):
    code = "invalid-chain"


class InvalidParamsError(QSBAError, ValueError):
    code = "invalid-params"


class InvalidCostError(QSBAError, ValueError):
    code = "invalid-cost"


class NoSuchLinkError(QSBAError, LookupError):
    code = "no-such-link"


class AuthTamperForbiddenError(QSBAError):
    code = "auth-tamper-forbidden"


class InvalidScenarioError(QSBAError, ValueError):
    """Scenario input failed validation; ``errors`` lists the field problems."""

    code = "invalid-scenario"

    def __init__(self, message: str, errors: Optional[list] = None):
        super().__init__(message, errors=errors or [])
        self.errors = errors or []
