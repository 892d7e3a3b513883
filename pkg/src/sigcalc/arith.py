"""Exact modular and p-adic arithmetic primitives.

Hensel lifting of square roots, Teichmuller decomposition of units
modulo ell^2, a generic baby-step giant-step discrete log, power
residue tests and smoothness factoring.  Everything is a pure function
of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd, isqrt

from .errors import (
    BadInput,
    NonResidue,
    NotAUnit,
    NotInSubgroup,
    NotSmooth,
    Ramified,
)

__all__ = [
    "PadicApprox",
    "TeichmullerDecomp",
    "hensel_sqrt",
    "teichmuller",
    "bsgs_dlog",
    "mult_group_ops",
    "ell_power_residue_test",
    "factor_smooth",
    "primes_up_to",
    "sqrt_mod_prime",
    "jacobi",
]


@dataclass(frozen=True)
class PadicApprox:
    """Truncated q-adic integer: a residue mod q**k with exact valuation.

    ``valuation`` is None when the residue is zero, i.e. the valuation is
    >= k and cannot be resolved at this precision.
    """

    q: int
    k: int
    value: int
    valuation: int | None = field(init=False)

    def __post_init__(self):
        if self.k < 1:
            raise BadInput("precision k must be >= 1")
        if not 0 <= self.value < self.q ** self.k:
            raise BadInput("value must lie in [0, q^k)")
        if self.value == 0:
            v = None
        else:
            v, t = 0, self.value
            while t % self.q == 0:
                t //= self.q
                v += 1
        object.__setattr__(self, "valuation", v)

    def unit_part(self) -> int:
        if self.valuation is None:
            raise BadInput("zero residue has no unit part")
        return self.value // self.q ** self.valuation


@dataclass(frozen=True)
class TeichmullerDecomp:
    """Unit x mod ell^2 written as xi * (1 + y*ell) with xi^(ell-1) = 1."""

    xi: int
    y: int


def primes_up_to(bound: int) -> list[int]:
    """All primes <= bound by sieve."""
    if bound < 2:
        return []
    sieve = bytearray([1]) * (bound + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, isqrt(bound) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return [i for i, flag in enumerate(sieve) if flag]


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd n > 0."""
    if n <= 0 or n % 2 == 0:
        raise BadInput("jacobi symbol needs odd n > 0")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def sqrt_mod_prime(n: int, q: int) -> int:
    """A square root of n mod odd prime q (Tonelli-Shanks); n must be a QR."""
    n %= q
    if n == 0:
        return 0
    if jacobi(n, q) != 1:
        raise NonResidue(f"{n} is not a square mod {q}")
    if q % 4 == 3:
        return pow(n, (q + 1) // 4, q)
    # write q-1 = t * 2^s with t odd
    t, s = q - 1, 0
    while t % 2 == 0:
        t //= 2
        s += 1
    z = 2
    while jacobi(z, q) != -1:
        z += 1
    c = pow(z, t, q)
    x = pow(n, (t + 1) // 2, q)
    b = pow(n, t, q)
    m = s
    while b != 1:
        i, e = 0, b
        while e != 1:
            e = e * e % q
            i += 1
        f = pow(c, 1 << (m - i - 1), q)
        x = x * f % q
        c = f * f % q
        b = b * c % q
        m = i
    return x


def hensel_sqrt(n: int, q: int, k: int) -> PadicApprox:
    """Square root of n mod q**k for an odd prime q not dividing n.

    Root selection is canonical: the returned root reduces mod q into
    [1, (q-1)/2], so conjugate labellings are reproducible across runs.
    """
    if k < 1:
        raise BadInput("precision k must be >= 1")
    if q < 3 or q % 2 == 0:
        raise BadInput("q must be an odd prime")
    n0 = n % q
    if n0 == 0:
        raise Ramified(f"{q} divides {n}")
    if pow(n0, (q - 1) // 2, q) != 1:
        raise NonResidue(f"{n} is not a quadratic residue mod {q}")
    r = sqrt_mod_prime(n0, q)
    if not 1 <= r <= (q - 1) // 2:
        r = q - r
    x, prec = r, 1
    while prec < k:
        prec = min(2 * prec, k)
        mod = q**prec
        # Newton step x -> (x + n/x)/2 fixes the mod-q residue
        x = (x + (n % mod) * pow(x, -1, mod)) * pow(2, -1, mod) % mod
    return PadicApprox(q, k, x % q**k)


def sqrt_2adic(n: int, k: int) -> int:
    """The square root of n in Z_2 that is 1 mod 4, returned mod 2**k.

    Requires n = 1 mod 8 (the solvable unit case).
    """
    if n % 2 == 0:
        raise Ramified(f"2 divides {n}")
    if n % 8 != 1:
        raise NonResidue(f"{n} is not a 2-adic square")
    x = 1
    for j in range(3, k):
        # x is a root mod 2^j; adjust by 2^(j-1) to reach mod 2^(j+1)
        if ((x * x - n) >> j) & 1:
            x += 1 << (j - 1)
    return x % (1 << k)


def teichmuller(x: int, ell: int) -> TeichmullerDecomp:
    """Decompose a unit x mod ell**2 as xi*(1 + y*ell), xi^(ell-1) = 1.

    xi is obtained as the fixed point of repeated ell-th powering mod
    ell**2 (one powering already lands on the fixed point at this
    precision), then y = ((x * xi^-1 mod ell^2) - 1) / ell.
    """
    m = ell * ell
    x %= m
    if x % ell == 0:
        raise NotAUnit(f"{x} is divisible by {ell}")
    xi = pow(x, ell, m)
    while pow(xi, ell, m) != xi:
        xi = pow(xi, ell, m)
    y = (x * pow(xi, -1, m) % m - 1) // ell
    return TeichmullerDecomp(xi, y % ell)


def mult_group_ops(p: int) -> dict:
    """Operation table of F_p^* for bsgs_dlog."""
    return {
        "op": lambda a, b: a * b % p,
        "identity": 1,
        "invert": lambda a: pow(a, -1, p),
    }


def bsgs_dlog(generator, target, group_order: int, *, op, identity, invert) -> int:
    """Least m >= 0 with m*generator = target (additive notation).

    The group is supplied through its operation table; elements must be
    hashable.  Baby table size is ceil(sqrt(group_order)).
    """
    if group_order < 1:
        raise BadInput("group order must be positive")
    s = isqrt(group_order - 1) + 1 if group_order > 1 else 1
    table: dict = {}
    e = identity
    for j in range(s):
        table.setdefault(e, j)
        e = op(e, generator)
    giant = invert(e)  # e is now s * generator
    gamma = target
    for i in range(s + 1):
        j = table.get(gamma)
        if j is not None:
            m = i * s + j
            if m < group_order:
                return m
        gamma = op(gamma, giant)
    raise NotInSubgroup("target is not a multiple of the generator")


def ell_power_residue_test(a: int, p: int, ell: int) -> bool:
    """True iff a^((p-1)/ell) = 1 mod p, i.e. a is an ell-th power residue."""
    if (p - 1) % ell != 0:
        raise BadInput(f"{ell} does not divide {p} - 1")
    if a % p == 0:
        raise BadInput(f"{p} divides {a}")
    return pow(a, (p - 1) // ell, p) == 1


def _prime_product(bound: int) -> int:
    prod = 1
    for q in primes_up_to(bound):
        prod *= q
    return prod


_PRIME_PRODUCT_CACHE: dict[int, int] = {}


def smooth_cofactor(n: int, bound: int) -> int:
    """The part of n coprime to every prime <= bound (fast gcd screen)."""
    if bound not in _PRIME_PRODUCT_CACHE:
        _PRIME_PRODUCT_CACHE[bound] = _prime_product(bound)
    r = n
    g = gcd(r, _PRIME_PRODUCT_CACHE[bound])
    while g > 1:
        r //= g
        g = gcd(r, g)
    return r


def factor_smooth(n: int, bound: int) -> dict[int, int]:
    """Full factorisation of n by trial division over primes <= bound.

    Raises NotSmooth (carrying the surviving cofactor) when a factor
    above the bound remains.
    """
    if n < 1:
        raise BadInput("n must be a positive integer")
    if n == 1:
        return {}
    cofactor = smooth_cofactor(n, bound)
    if cofactor > 1:
        raise NotSmooth(cofactor)
    factors: dict[int, int] = {}
    rem = n
    for q in primes_up_to(bound):
        if rem == 1:
            break
        if rem % q == 0:
            e = 0
            while rem % q == 0:
                rem //= q
                e += 1
            factors[q] = e
    return factors
