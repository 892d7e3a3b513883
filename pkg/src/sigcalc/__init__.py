"""Desk-scale signature calculus toolkit.

Discrete logarithms and index calculus over prime fields, their lifts
to real quadratic fields, ramification signatures of cyclic extensions
and of principal homogeneous spaces under elliptic curves, and numeric
verifiers for the local-global dimension and reciprocity identities
underpinning them.
"""

from . import arith, charsig, ecsig, ecurve, errors, indexcalc, quadfield

__version__ = "0.1.0"

__all__ = ["arith", "quadfield", "indexcalc", "charsig", "ecurve", "ecsig", "errors", "__version__"]
