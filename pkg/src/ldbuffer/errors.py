"""Exception hierarchy.

Every domain error carries a short machine-readable ``kind`` so the CLI can
emit ``{"kind": ..., "message": ...}`` without string matching.
"""


class LdBufferError(Exception):
    kind = "LdBufferError"

    def to_dict(self):
        return {"kind": self.kind, "message": str(self)}


class ModelError(LdBufferError, ValueError):
    kind = "ModelError"


class RangeError(LdBufferError, OverflowError):
    kind = "RangeError"


class NonConvergence(LdBufferError):
    kind = "NonConvergence"


class UnboundedDual(LdBufferError):
    """The Legendre dual has no finite maximizer (velocity outside the
    attainable cone of jump directions)."""
    kind = "UnboundedDual"


class InfiniteCost(LdBufferError):
    kind = "InfiniteCost"


class Infeasible(LdBufferError):
    kind = "Infeasible"


class BracketExhausted(LdBufferError):
    kind = "BracketExhausted"


class NoRoot(LdBufferError):
    kind = "NoRoot"


class DriftAtQViolation(LdBufferError):
    kind = "DriftAtQViolation"


class InfeasibleHyperplane(LdBufferError):
    kind = "InfeasibleHyperplane"


class QuadrantEscape(LdBufferError):
    kind = "QuadrantEscape"


class RateExplosion(LdBufferError):
    kind = "RateExplosion"


class TooFewHits(LdBufferError):
    kind = "TooFewHits"


class NoInfimum(LdBufferError):
    kind = "NoInfimum"
