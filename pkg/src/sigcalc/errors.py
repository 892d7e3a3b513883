"""Exception taxonomy shared by every module of the toolkit."""

from __future__ import annotations


class SigcalcError(Exception):
    """Base class for all toolkit errors."""


class BadInput(SigcalcError):
    """An arithmetic precondition on the inputs is violated."""


class NonResidue(SigcalcError):
    """The argument is not a quadratic residue at the requested prime."""


class Ramified(SigcalcError):
    """The prime divides the radicand; no unit square root exists."""


class NotAUnit(SigcalcError):
    """The element is divisible by the prime and has no Teichmuller part."""


class NotInSubgroup(SigcalcError):
    """The target is not a power of the generator."""


class NotSmooth(SigcalcError):
    """Factorisation aborted: a cofactor above the bound survives."""

    def __init__(self, cofactor: int, message: str | None = None):
        super().__init__(message or f"not smooth: surviving cofactor {cofactor}")
        self.cofactor = cofactor


class NotSquarefree(SigcalcError):
    """The radicand of a quadratic field must be squarefree."""


class TooLarge(SigcalcError):
    """Beyond the desk-scale bound for exhaustive methods."""


class ZeroElement(SigcalcError):
    """The zero element has no ideal factorisation."""


class ClassNumberDivisible(SigcalcError):
    """ell divides the class number; the rank formula does not apply."""


class BudgetExhausted(SigcalcError):
    """A randomized search ran out of attempts."""

    def __init__(self, attempts: int, counters: dict | None = None,
                 message: str | None = None):
        detail = f"budget exhausted after {attempts} attempts"
        if counters:
            worst = max(counters, key=counters.get)
            detail += f" (most frequent rejection: {worst} x{counters[worst]})"
        super().__init__(message or detail)
        self.attempts = attempts
        self.counters = dict(counters or {})


class Inconsistent(SigcalcError):
    """The linear system has no solution."""


class RankDeficient(SigcalcError):
    """Requested unknowns are not determined by the system."""

    def __init__(self, undetermined, message: str | None = None):
        self.undetermined = sorted(undetermined)
        super().__init__(message or f"undetermined unknowns: {self.undetermined}")


class VerificationFailed(SigcalcError):
    """A result failed its built-in cross-check."""


class DegenerateTarget(SigcalcError):
    """The discrete-log target is +-1; the lifting does not apply."""


class OracleInconsistent(SigcalcError):
    """An oracle answer failed verification against the instance."""


class ZeroY(SigcalcError):
    """The 1-unit exponent vanishes; the signature relation degenerates."""


class BadSupport(SigcalcError):
    """A rational argument is supported at a disallowed prime."""


class NonInvertibleDenominator(SigcalcError):
    """A group-law denominator is not invertible in the local ring."""


class Singular(SigcalcError):
    """The curve is singular over the requested base."""


class OutOfScope(SigcalcError):
    """The local dimension formula does not cover this case."""


class PrecisionLoss(SigcalcError):
    """Local arithmetic lost too many digits; retry at higher precision."""


class BadReduction(SigcalcError):
    """The curve has bad reduction at the requested place."""


class SingularSystem(SigcalcError):
    """The 2x2 signature system is singular; the instance is invalid."""


class AssumptionViolated(SigcalcError):
    """A documented heuristic assumption fails its proxy check."""
