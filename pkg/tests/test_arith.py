import pytest
from hypothesis import given, settings, strategies as st

from sigcalc.arith import (
    PadicApprox,
    bsgs_dlog,
    ell_power_residue_test,
    factor_smooth,
    hensel_sqrt,
    jacobi,
    mult_group_ops,
    primes_up_to,
    sqrt_2adic,
    sqrt_mod_prime,
    teichmuller,
)
from sigcalc.errors import (
    BadInput,
    NonResidue,
    NotAUnit,
    NotInSubgroup,
    NotSmooth,
    Ramified,
)

ODD_PRIMES = [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]


def brute_sqrt_mod(n, modulus):
    return sorted(x for x in range(modulus) if x * x % modulus == n % modulus)


class TestHenselSqrt:
    def test_identity(self):
        assert hensel_sqrt(1, 7, 3).value == 1

    def test_exact_square(self):
        # canonical root of 4 mod 5^3 is 2 (base residue 2 <= (5-1)/2)
        assert hensel_sqrt(4, 5, 3).value == 2

    def test_one_lift_step(self):
        # base root 3 of 2 mod 7; one lift reaches 10 with 10^2 = 100 = 2 mod 49
        approx = hensel_sqrt(2, 7, 2)
        assert approx.value == 10
        assert approx.value**2 % 49 == 2
        # brute-force oracle: roots of 2 mod 49 are {10, 39}; 10 = 3 mod 7 is canonical
        assert brute_sqrt_mod(2, 49) == [10, 39]

    def test_non_residue_rejected(self):
        with pytest.raises(NonResidue):
            hensel_sqrt(3, 7, 2)

    def test_ramified_rejected(self):
        with pytest.raises(Ramified):
            hensel_sqrt(14, 7, 2)

    @given(st.sampled_from(ODD_PRIMES), st.integers(1, 5), st.integers(1, 10**6))
    @settings(max_examples=200, deadline=None)
    def test_square_property(self, q, k, n):
        if n % q == 0 or jacobi(n % q, q) != 1:
            return
        x = hensel_sqrt(n, q, k).value
        assert (x * x - n) % q**k == 0
        assert 1 <= x % q <= (q - 1) // 2


class TestTeichmuller:
    def test_identity(self):
        assert teichmuller(1, 7) == teichmuller(1, 7).__class__(1, 0)

    def test_one_unit(self):
        d = teichmuller(1 + 11, 11)
        assert (d.xi, d.y) == (1, 1)

    def test_worked_decomposition(self):
        # 2^5 = 32 = 7 mod 25, 7^4 = 1 mod 25, and 2 * 7^-1 = 11 = 1 + 5*2
        d = teichmuller(2, 5)
        assert (d.xi, d.y) == (7, 2)

    def test_not_a_unit(self):
        with pytest.raises(NotAUnit):
            teichmuller(10, 5)

    @given(st.sampled_from(ODD_PRIMES), st.integers(1, 10**6))
    @settings(max_examples=200, deadline=None)
    def test_round_trip(self, ell, x):
        if x % ell == 0:
            return
        m = ell * ell
        d = teichmuller(x, ell)
        assert pow(d.xi, ell - 1, m) == 1
        assert d.xi * (1 + d.y * ell) % m == x % m

    @given(st.sampled_from(ODD_PRIMES), st.integers(1, 10**4), st.integers(1, 10**4))
    @settings(max_examples=200, deadline=None)
    def test_y_is_additive(self, ell, x1, x2):
        if x1 % ell == 0 or x2 % ell == 0:
            return
        y12 = teichmuller(x1 * x2, ell).y
        assert y12 == (teichmuller(x1, ell).y + teichmuller(x2, ell).y) % ell


class TestBsgs:
    def test_trivial_cases(self):
        ops = mult_group_ops(31)
        assert bsgs_dlog(3, 1, 30, **ops) == 0
        assert bsgs_dlog(3, 3, 30, **ops) == 1

    def test_worked_example(self):
        # 3^7 = 2187 = 17 mod 31, confirmed by exhaustive powering
        assert pow(3, 7, 31) == 17
        assert bsgs_dlog(3, 17, 30, **mult_group_ops(31)) == 7

    def test_not_in_subgroup(self):
        # 4 generates the squares mod 31; 3 is a non-square
        with pytest.raises(NotInSubgroup):
            bsgs_dlog(4, 3, 15, **mult_group_ops(31))

    @given(st.integers(0, 10**6))
    @settings(max_examples=100, deadline=None)
    def test_round_trip(self, m):
        import sympy

        p = 104729  # prime
        g = sympy.primitive_root(p)
        m %= p - 1
        assert bsgs_dlog(g, pow(g, m, p), p - 1, **mult_group_ops(p)) == m


class TestPowerResidue:
    def test_one_is_always_residue(self):
        assert ell_power_residue_test(1, 31, 5)

    def test_non_residue(self):
        assert pow(2, 6, 31) == 2  # 2^6 = 64 = 2 mod 31
        assert not ell_power_residue_test(2, 31, 5)

    def test_fifth_power(self):
        assert pow(3, 5, 31) == 26
        assert ell_power_residue_test(26, 31, 5)

    def test_bad_input(self):
        with pytest.raises(BadInput):
            ell_power_residue_test(2, 31, 7)


class TestFactorSmooth:
    def test_one(self):
        assert factor_smooth(1, 10) == {}

    def test_full_factorisation(self):
        assert factor_smooth(12, 5) == {2: 2, 3: 1}

    def test_cofactor_reported(self):
        with pytest.raises(NotSmooth) as exc:
            factor_smooth(14, 5)
        assert exc.value.cofactor == 7

    @given(st.integers(1, 10**9))
    @settings(max_examples=200, deadline=None)
    def test_reassembles(self, n):
        try:
            factors = factor_smooth(n, 100)
        except NotSmooth as exc:
            assert exc.cofactor > 100 or any(
                exc.cofactor % q == 0 for q in primes_up_to(10**5))
            return
        product = 1
        for q, e in factors.items():
            product *= q**e
        assert product == n


class TestPadicApprox:
    def test_valuation(self):
        a = PadicApprox(5, 3, 50)
        assert a.valuation == 2
        assert a.unit_part() == 2

    def test_zero_has_no_valuation(self):
        assert PadicApprox(5, 3, 0).valuation is None

    def test_range_check(self):
        with pytest.raises(BadInput):
            PadicApprox(5, 2, 25)


class TestTwoAdic:
    @given(st.integers(1, 10**6))
    @settings(max_examples=100, deadline=None)
    def test_sqrt_2adic(self, n):
        if n % 8 != 1:
            return
        for k in (4, 8, 12):
            x = sqrt_2adic(n, k)
            assert (x * x - n) % (1 << k) == 0
            assert x % 4 == 1


def test_sqrt_mod_prime_matches_brute_force():
    for q in ODD_PRIMES:
        for n in range(1, q):
            if jacobi(n, q) == 1:
                r = sqrt_mod_prime(n, q)
                assert r * r % q == n
