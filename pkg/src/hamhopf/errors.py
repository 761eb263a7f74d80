"""Error type shared by every module.

Each failure carries a short machine-readable ``code`` so reports and the
CLI can serialize it without parsing messages.
"""

from __future__ import annotations

H3_VIOLATION = "H3_VIOLATION"
NONCONVERGENT = "NONCONVERGENT"
BLOCK_STRUCTURE_VIOLATION = "BLOCK_STRUCTURE_VIOLATION"
FIT_RESIDUAL_EXCEEDED = "FIT_RESIDUAL_EXCEEDED"
NO_ROOT = "NO_ROOT"
RHO_SINGULAR = "RHO_SINGULAR"
NEWTON_DIVERGED = "NEWTON_DIVERGED"
DEGENERATE_COEFFICIENTS = "DEGENERATE_COEFFICIENTS"
CONDITION_VIOLATED = "CONDITION_VIOLATED"
RANK_DEFICIENT = "RANK_DEFICIENT"
SECTION_DEGENERATE = "SECTION_DEGENERATE"
SCHEMA_ERROR = "SCHEMA_ERROR"
DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
NOT_HAMILTONIAN = "NOT_HAMILTONIAN"
CLUSTER_AMBIGUITY = "CLUSTER_AMBIGUITY"
NOT_RESONANT = "NOT_RESONANT"
H1_VIOLATION = "H1_VIOLATION"
H4_VIOLATION = "H4_VIOLATION"
UNSUPPORTED_ORDER = "UNSUPPORTED_ORDER"
HOMOLOGICAL_RESIDUAL = "HOMOLOGICAL_RESIDUAL"
PARITY_VIOLATION = "PARITY_VIOLATION"
NOT_ISOTROPY = "NOT_ISOTROPY"
INVALID_ROTATION = "INVALID_ROTATION"
NOETHER_VIOLATION = "NOETHER_VIOLATION"
FRAME_MISMATCH = "FRAME_MISMATCH"
NOT_INVARIANT = "NOT_INVARIANT"

# codes that signal a failed hypothesis (H1-H4) rather than a bug
HYPOTHESIS_CODES = frozenset(
    {H1_VIOLATION, H3_VIOLATION, H4_VIOLATION, NOT_RESONANT, NO_ROOT, DEGENERATE_COEFFICIENTS}
)


class HopfError(Exception):
    """Raised with a code from this module and an optional detail dict."""

    def __init__(self, code: str, message: str = "", **detail):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}: {message}" if message else code)

    @property
    def is_hypothesis_failure(self) -> bool:
        return self.code in HYPOTHESIS_CODES

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "detail": _plain(self.detail)}


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, (int, float, str, bool)) or obj is None:
        return obj
    return repr(obj)
