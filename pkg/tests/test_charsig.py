from dataclasses import replace
from math import isqrt

import pytest
import sympy

from sigcalc.arith import bsgs_dlog, mult_group_ops, teichmuller
from sigcalc.charsig import (
    SIGNATURE_COLUMN,
    check_conditions,
    dl_from_signature,
    instance_from_json,
    instance_to_json,
    lift_unit,
    pairing_column,
    signature_from_dl,
    signature_index_calculus,
    _beta_attempt,
)
from sigcalc.errors import (
    BadInput,
    DegenerateTarget,
    OracleInconsistent,
    VerificationFailed,
)
from sigcalc.indexcalc import FactorBase
from sigcalc.quadfield import RealQuadField, embed, split_places
from sigcalc.seeds import rng_for


def bsgs_oracle(p):
    ops = mult_group_ops(p)

    def oracle(g, a):
        return bsgs_dlog(g, a, p - 1, **ops)

    return oracle


class TestLiftUnit:
    def test_worked_lift(self):
        # d sweeps 3, 34, 65; 1+3^2 = 10 = 0 mod 5 and 1+34^2 = 1157 = 2 mod 5
        # (a non-residue) are rejected, 1+65^2 = 4226 = 1 mod 5 is kept
        inst = lift_unit(17, 31, 5, seed=0)
        assert inst.K.D == 4226
        assert (inst.alpha.a, inst.alpha.b) == (65, 1)
        assert inst.place_v.root_label == 14
        assert inst.place_u.root_label == 1
        assert inst.alpha.norm() == -1
        assert inst.residue_at_v() == 17
        assert inst.condition_report.all_ok

    def test_degenerate_targets(self):
        with pytest.raises(DegenerateTarget):
            lift_unit(1, 31, 5, seed=0)
        with pytest.raises(DegenerateTarget):
            lift_unit(30, 31, 5, seed=0)

    def test_ell_power_target_rejected(self):
        # 26 = 3^5 mod 31 is a fifth power; its log is 0 mod 5 by inspection
        with pytest.raises(BadInput):
            lift_unit(26, 31, 5, seed=0)

    def test_norm_is_minus_one_always(self):
        rng = rng_for(2, "lift")
        p, ell = 211, 7  # 210 = 2*3*5*7
        for _ in range(10):
            a = rng.randrange(2, p - 1)
            if pow(a, (p - 1) // ell, p) == 1 or a == p - 1:
                continue
            inst = lift_unit(a, p, ell, seed=0)
            assert inst.alpha.norm() == -1
            assert inst.residue_at_v() == a


class TestConditions:
    def test_ell_power_alpha_fails_condition_two(self):
        inst = lift_unit(17, 31, 5, seed=0)
        powered = replace(inst, alpha=inst.alpha**5, condition_report=None)
        report = check_conditions(powered)
        assert not report.unit_wild_somewhere

    def test_condition_three_worked_value(self):
        # alpha = 17 at v and 17^6 = 8 != 1 mod 31
        assert pow(17, 6, 31) == 8
        inst = lift_unit(17, 31, 5, seed=0)
        assert inst.condition_report.target_not_ell_power

    def test_class_number_failure_fixture(self):
        # h(Q(sqrt 79)) = 3: a field with ell | h for ell = 3
        K = RealQuadField(79)
        assert K.class_number == 3


class TestSignatureFromDl:
    def test_worked_chain(self):
        # alpha = 16 mod 25 at the root-1 place: 16 = 1 * (1 + 5*3), y = 3;
        # m = 7 = 2 mod 5; s = -2 * 3^-1 = 1 mod 5
        inst = lift_unit(17, 31, 5, seed=0)
        sig = signature_from_dl(inst, bsgs_oracle(31))
        assert (sig.s, sig.m, sig.y) == (1, 2, 3)

    def test_conjugate_place_changes_signature(self):
        # at the root-4 place alpha = 14 = 24*(1+5*2) mod 25, so y' = 2
        # and s' = -2 * 2^-1 = 4 mod 5
        inst = lift_unit(17, 31, 5, seed=0)
        swapped = replace(inst, place_u=inst.place_u_conj,
                          place_u_conj=inst.place_u, condition_report=None)
        swapped = replace(swapped, condition_report=check_conditions(swapped))
        sig = signature_from_dl(swapped, bsgs_oracle(31))
        assert (sig.s, sig.y) == (4, 2)

    def test_wrong_oracle_rejected(self):
        inst = lift_unit(17, 31, 5, seed=0)
        with pytest.raises(OracleInconsistent):
            signature_from_dl(inst, lambda g, a: 3)

    def test_invariant_under_unit_rescaling(self):
        # replacing alpha by +-alpha^k (k coprime to ell) fixes s
        inst = lift_unit(17, 31, 5, seed=0)
        s0 = signature_from_dl(inst, bsgs_oracle(31)).s
        for k in (1, 2, 3, 4, 6):
            for sign in (1, -1):
                alpha = inst.alpha**k * sign
                variant = replace(inst, alpha=alpha, condition_report=None)
                report = check_conditions(variant)
                if not report.all_ok:
                    continue
                variant = replace(variant, condition_report=report)
                assert signature_from_dl(variant, bsgs_oracle(31)).s == s0


class TestDlFromSignature:
    def test_shortcut_for_ell_powers(self):
        # 26 = 3^5: answered without consulting the oracle
        def exploding_oracle(instance):
            raise AssertionError("oracle must not be called")

        assert dl_from_signature(26, 3, 31, 5, exploding_oracle) == 0

    def test_worked_inverse_chain(self):
        def sig_oracle(instance):
            return signature_from_dl(instance, bsgs_oracle(31))

        assert dl_from_signature(17, 3, 31, 5, sig_oracle, seed=0) == 2

    def test_round_trip_100_targets(self):
        p, ell = 211, 7
        g = sympy.primitive_root(p)
        ops = mult_group_ops(p)

        def sig_oracle(instance):
            return signature_from_dl(instance, bsgs_oracle(p))

        rng = rng_for(4, "roundtrip")
        checked = 0
        draws = 0
        while checked < 100 and draws < 200:
            draws += 1
            a = pow(g, rng.randrange(1, p - 1), p)
            if a in (1, p - 1):
                continue
            m = dl_from_signature(a, g, p, ell, sig_oracle, seed=0)
            assert m == bsgs_dlog(g, a, p - 1, **ops) % ell
            checked += 1
        assert checked == 100


class TestSquareRootOfMinusOne:
    def test_imaginary_targets_shortcut_to_zero(self):
        # a^2 = -1 forces 4 | (p-1)/ell, so such a is always an ell-th
        # power: the lift never runs and the log is 0 mod ell
        from sigcalc.arith import sqrt_mod_prime

        for p, ell in ((1021, 5), (1013, 11)):
            a = sqrt_mod_prime(p - 1, p)
            assert pow(a, (p - 1) // ell, p) == 1
            with pytest.raises(BadInput):
                lift_unit(a, p, ell, seed=0)
            m = dl_from_signature(a, sympy.primitive_root(p), p, ell,
                                  lambda i: None)
            assert m == 0
            g = sympy.primitive_root(p)
            assert bsgs_dlog(g, a, p - 1, **mult_group_ops(p)) % ell == 0


class TestSignatureIndexCalculus:
    def test_bound_validation(self):
        inst = lift_unit(17, 31, 5, seed=0)
        with pytest.raises(BadInput):
            signature_index_calculus(inst, 1, seed=0)

    def test_attempt_budget_respected(self):
        from sigcalc.errors import BudgetExhausted, RankDeficient

        inst = lift_unit(17, 31, 5, seed=0)
        with pytest.raises((BudgetExhausted, RankDeficient)):
            signature_index_calculus(inst, 60, seed=0, max_attempts=20)

    def test_agrees_with_dl_oracle_path(self):
        inst = lift_unit(17, 31, 5, seed=0)
        s_dl = signature_from_dl(inst, bsgs_oracle(31)).s
        s_ic = signature_index_calculus(inst, 60, seed=0).s
        assert s_ic == s_dl == 1

    def test_agreement_across_targets(self):
        for a in (7, 11, 22):
            inst = lift_unit(a, 31, 5, seed=0)
            s_dl = signature_from_dl(inst, bsgs_oracle(31)).s
            s_ic = signature_index_calculus(inst, 60, seed=0).s
            assert s_ic == s_dl

    def test_relation_rows_vanish_on_oracle_values(self):
        """Independent check of the relation semantics: local pairing
        values of the unramified places, derived from principal
        generators (h = 1) and the dl-oracle signature, satisfy every
        sampled relation identically."""
        p, ell = 211, 7
        inst = None
        g = sympy.primitive_root(p)
        for a in range(2, p - 1):
            if pow(a, (p - 1) // ell, p) == 1:
                continue
            try:
                candidate = lift_unit(a, p, ell, seed=0, g=g)
            except Exception:
                continue
            if candidate.K.class_number == 1:
                inst = candidate
                break
        assert inst is not None, "no class-number-one lift found"
        bound = 40
        s_true = signature_from_dl(inst, bsgs_oracle(p)).s

        def theta_v(x):
            residue = embed(x, inst.place_v, 1).value
            return bsgs_dlog(inst.g, residue, p - 1,
                             **mult_group_ops(p)) % ell

        def y_u(x):
            return teichmuller(embed(x, inst.place_u, 2).value, ell).y

        def generator_of(place):
            # brute search xi = (X + b sqrt(D))/2 with |N(xi)| = norm(place)
            # and v_place(xi) = 1; h = 1 guarantees one exists
            K, q = inst.K, place.norm
            if place.splitting == "inert":
                return K.element(place.q, 0)
            for b in range(4001):
                for sign in (4 * q, -4 * q):
                    X2 = K.D * b * b + sign
                    if X2 <= 0:
                        continue
                    X = isqrt(X2)
                    if X * X != X2:
                        continue
                    xi = _integral_half(K, X, b)
                    if xi is None:
                        continue
                    assert abs(xi.norm()) == q
                    if place.splitting == "ramified":
                        return xi
                    for cand in (xi, xi.conjugate()):
                        if embed(cand, place, 2).valuation == 1:
                            return cand
            return None

        oracle_x = {}
        columns = {}
        base = FactorBase.quadratic(inst.K, bound,
                                    exclude=(inst.place_u, inst.place_v))
        for place in (*base.entries, inst.place_u_conj, inst.place_v_conj):
            columns[place] = pairing_column(place)
            xi = generator_of(place)
            if xi is None:
                continue
            oracle_x[columns[place]] = (-(y_u(xi) * s_true + theta_v(xi))) % ell
        # require the oracle to cover the base: h = 1 guarantees generators
        assert len(oracle_x) == len(columns)

        alpha_res_v = inst.residue_at_v()
        alpha_res_u = embed(inst.alpha, inst.place_u, 1).value
        rows = 0
        for index in range(300_000):
            rel = _beta_attempt(inst, base, columns, alpha_res_v, alpha_res_u,
                                0, index, 4)
            if rel is None:
                continue
            total = 1  # the theta_v(beta) = 1 contribution at v
            for col, coeff in rel.coeffs:
                value = s_true if col == SIGNATURE_COLUMN else oracle_x[col]
                total += coeff * value
            assert total % ell == 0
            assert rel.const == (-1) % ell
            rows += 1
            if rows >= 25:
                break
        assert rows >= 25


def _integral_half(K, X, b):
    """(X + b*sqrt(D))/2 as an integer of K, or None if not integral."""
    if K.omega_is_half:
        if (X - b) % 2:
            return None
        return K.element((X - b) // 2, b)
    if X % 2 or b % 2:
        return None
    return K.from_sqrt_coords(X // 2, b // 2)


class TestSerialization:
    def test_round_trip_bit_exact(self):
        inst = lift_unit(17, 31, 5, seed=3)
        text = instance_to_json(inst)
        again = instance_from_json(text)
        assert instance_to_json(again) == text
        assert again.K.D == inst.K.D
        assert again.alpha == inst.alpha
        assert again.place_u == inst.place_u
        assert again.place_v == inst.place_v
        assert again.condition_report.all_ok

    def test_numbers_are_decimal_strings(self):
        import json

        doc = json.loads(instance_to_json(lift_unit(17, 31, 5, seed=0)))
        assert doc["p"] == "31" and doc["D"] == "4226"
        assert doc["alpha"] == ["65", "1"]
