"""Bound formulas against independent combinatorial and numerical oracles.

Oracles here: permutation/partition enumeration for the Stirling numbers,
exact Fraction-polynomial integration for the comparison-polynomial
recurrences, a truncated Poisson series for the second-family moments, and
dense matrix norms for the nested commutators.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    count_permutations_with_cycles,
    count_set_partitions,
    recurrence_coeffs,
    set_partitions,
)

from enloc import bounds
from enloc.bounds import (
    BoundParameterError,
    BoundSpec,
    chernoff_poisson_bound,
    delta_q,
    f_poly,
    f_poly_coeffs,
    leakage_bound,
    markov_min_k,
    nested_commutator,
    nested_commutator_bound,
    stirling,
)
from enloc.pauli import OperatorSum


class TestStirling:
    def test_first_kind_example(self):
        assert stirling("first_unsigned", 3, 2) == count_permutations_with_cycles(3, 2) == 3

    def test_second_kind_example(self):
        assert stirling("second", 4, 2) == count_set_partitions(4, 2) == 7

    def test_diagonal_ones(self):
        for n in range(9):
            assert stirling("first_unsigned", n, n) == 1
            assert stirling("second", n, n) == 1

    def test_exhaustive_against_enumeration(self):
        for n in range(0, 8):
            for k in range(0, n + 1):
                assert stirling("first_unsigned", n, k) == count_permutations_with_cycles(n, k)
                assert stirling("second", n, k) == count_set_partitions(n, k)

    def test_domain_errors(self):
        with pytest.raises(BoundParameterError):
            stirling("second", 3, 4)
        with pytest.raises(BoundParameterError):
            stirling("second", 65, 1)
        with pytest.raises(BoundParameterError):
            stirling("third", 3, 1)

    def test_large_values_are_exact_integers(self):
        v = stirling("first_unsigned", 60, 3)
        assert isinstance(v, int) and v > 10**70


class TestComparisonPolynomials:
    def test_first_family_base_cases(self):
        assert f_poly(1, 0, 3.7) == 1.0
        assert f_poly(1, 1, 3.7) == pytest.approx(3.7)
        assert f_poly(1, 3, 2.0) == pytest.approx(24.0)  # 2 * 3 * 4
        for k in range(1, 9):
            assert f_poly(1, k, 0.0) == 0.0

    def test_second_family_base_cases(self):
        assert f_poly(2, 0, 2.0) == 1.0
        assert f_poly(2, 1, 2.0) == pytest.approx(2.0)
        # Brute-force sum over all set partitions of 3 elements at x = 1.
        expected = sum(1 for _ in set_partitions([0, 1, 2]))
        assert f_poly(2, 3, 1.0) == pytest.approx(expected) == pytest.approx(5.0)

    def test_closed_forms_equal_recurrences_exactly(self):
        for kind in (1, 2):
            rows = recurrence_coeffs(kind, 12)
            for k in range(13):
                closed = f_poly_coeffs(kind, k)
                rec = rows[k]
                assert len(closed) == len(rec)
                for j, c in enumerate(rec):
                    assert c.denominator == 1
                    assert c.numerator == closed[j]

    def test_second_family_is_poisson_moment(self):
        # k-th moment of a mean-x Poisson variable by truncated series.
        for x in (0.5, 1.0, 2.0, 5.0):
            for k in range(0, 9):
                series = 0.0
                p_j = math.exp(-x)  # Poisson pmf built recursively to stay in float range
                for j in range(0, 200):
                    series += j**k * p_j
                    p_j *= x / (j + 1)
                assert f_poly(2, k, x) == pytest.approx(series, abs=1e-10, rel=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 20), st.floats(0.0, 30.0))
    def test_log_form_matches_linear(self, k, x):
        for kind in (1, 2):
            val = f_poly(kind, k, x)
            logv = bounds.log_f_poly(kind, k, x)
            if val == 0.0:
                assert logv == -math.inf
            else:
                assert logv == pytest.approx(math.log(val), rel=1e-9)

    def test_domain_errors(self):
        with pytest.raises(BoundParameterError):
            f_poly(1, -1, 0.5)
        with pytest.raises(BoundParameterError):
            f_poly(2, 2, -0.5)
        with pytest.raises(BoundParameterError):
            f_poly(3, 2, 0.5)


class TestLeakageBound:
    def test_trivial_at_window_edge(self):
        rep = leakage_bound(BoundSpec.per_site(0.3, 2.0, 0.3, 6))
        assert rep.trivial and rep.epsilon2 == 1.0 and rep.epsilon1_finite == 1.0

    def test_gamma_ratio_example(self):
        # Lambda/Delta = 1, D/Delta = 2 -> k_D = 1, value (1/2) Gamma(2)/Gamma(1).
        rep = leakage_bound(BoundSpec(Lambda=2.0, Delta=2.0, D=4.0))
        assert rep.k_d == 1
        assert rep.xi1 == pytest.approx(0.5, rel=1e-12)

    def test_asymptotic_plugin_example(self):
        # lambda=1, delta=2, d=e: exponent density (e - 2)/2 per site.
        d = math.e
        for n in (10, 100):
            rep = leakage_bound(BoundSpec.per_site(1.0, 2.0, d, n))
            assert rep.log_epsilon1_asymptotic == pytest.approx(
                -n * (d - 2.0) / 2.0, rel=1e-9
            )

    def test_zero_variation_leaks_nothing(self):
        rep = leakage_bound(BoundSpec.per_site(0.0, 2.0, 0.5, 8))
        assert rep.epsilon1_finite == 0.0 and rep.epsilon2 == 0.0

    @settings(max_examples=60, deadline=None)
    @given(
        st.floats(0.01, 2.0),
        st.floats(0.5, 8.0),
        st.floats(1.01, 10.0),
        st.integers(1, 200),
    )
    def test_values_in_unit_interval_and_ordering(self, lam, delta, ratio, n):
        d = lam * ratio
        rep = leakage_bound(BoundSpec.per_site(lam, delta, d, n))
        # Mathematically in (0, 1]; the linear value may underflow to 0.0,
        # in which case the log field still certifies positivity.
        for log_v, v in (
            (rep.log_epsilon1_finite, rep.epsilon1_finite),
            (rep.log_epsilon2, rep.epsilon2),
            (rep.log_epsilon1_asymptotic, rep.epsilon1_asymptotic),
        ):
            assert math.isfinite(log_v)
            assert 0.0 <= v <= 1.0 + 1e-12
            assert v > 0.0 or log_v < -700.0
        # The commuting-core bound improves on the first-family asymptotic:
        # r ln r - (r - 1) >= r - 1 - ln r for r >= 1.
        slack = 1e-9 * (1.0 + abs(rep.log_epsilon1_asymptotic))
        assert rep.log_epsilon2 <= rep.log_epsilon1_asymptotic + slack

    def test_general_equals_per_site(self):
        a = leakage_bound(BoundSpec.per_site(0.2, 4.0, 0.5, 10))
        b = leakage_bound(BoundSpec(Lambda=2.0, Delta=4.0, D=5.0))
        assert a.log_epsilon1_finite == pytest.approx(b.log_epsilon1_finite)
        assert a.log_epsilon2 == pytest.approx(b.log_epsilon2)

    def test_parameter_errors(self):
        with pytest.raises(BoundParameterError):
            BoundSpec(Lambda=1.0, Delta=0.0, D=2.0)
        with pytest.raises(BoundParameterError):
            BoundSpec.per_site(0.1, 1.0, 0.2, 0)


class TestMarkovMinK:
    def test_point_mass(self):
        k, v = markov_min_k([0.0, 0.0, 0.0], 2.0)
        assert v == 0.0 and k == 1

    def test_single_moment_arithmetic(self):
        d = 2.0
        k, v = markov_min_k([d * d / 4.0], d)
        assert k == 1 and v == pytest.approx(0.5)

    def test_tie_break_smallest_k(self):
        d = 1.0
        k, _ = markov_min_k([1.0, 1.0], d)
        assert k == 1

    def test_poisson_moments_beat_chernoff_never(self):
        for x in (1.0, 2.0, 5.0):
            y = 2.0 * x
            moments = [f_poly(2, k, x) ** 2 for k in range(1, 61)]
            _, best = markov_min_k(moments, y)
            assert best <= chernoff_poisson_bound(x, y) + 1e-12

    def test_empty_rejected(self):
        with pytest.raises(BoundParameterError):
            markov_min_k([], 1.0)


class TestNestedCommutator:
    def test_commuting_inputs_vanish(self):
        h = OperatorSum.from_strings(3, [(1.0, "ZZI"), (0.5, "IZZ")])
        v = OperatorSum.from_strings(3, [(0.3, "ZII")])
        for m in (1, 2, 3):
            assert len(nested_commutator(h, v, m)) == 0

    def test_zz_x_ladder(self):
        h = OperatorSum.from_strings(2, [(1.0, "ZZ")])
        v = OperatorSum.from_strings(2, [(1.0, "XI")])
        assert nested_commutator(h, v, 0).x_norm() == pytest.approx(1.0)
        m1 = nested_commutator(h, v, 1)
        assert m1.spectral_norm() == pytest.approx(2.0)
        m2 = nested_commutator(h, v, 2)
        assert m2.spectral_norm() == pytest.approx(4.0)
        # Saturates the commuting-core growth with q = 1, M = 1: (2qM)^m.
        assert nested_commutator_bound("commuting", 2, 1.0, M=1.0, q=1) == pytest.approx(4.0)

    def test_guards(self):
        h = OperatorSum.identity(9)
        with pytest.raises(Exception):
            nested_commutator(h, h, 1)
        with pytest.raises(BoundParameterError):
            nested_commutator(OperatorSum.identity(2), OperatorSum.identity(2), 7)


class TestNestedCommutatorBound:
    def test_order_zero_returns_norm(self):
        for case in ("strict", "commuting", "quasi"):
            assert nested_commutator_bound(case, 0, 1.7, M=2.0, q=3, q_star=1.0) == 1.7

    def test_strict_formula(self):
        assert nested_commutator_bound("strict", 2, 1.0, M=1.0, q=2) == pytest.approx(32.0)

    def test_commuting_formula(self):
        assert nested_commutator_bound("commuting", 3, 1.0, M=1.0, q=1) == pytest.approx(8.0)

    def test_strict_with_p_refinement_below(self):
        # q <= p-1 keeps the smaller base 2(p-1)M.
        v = nested_commutator_bound("strict", 2, 1.0, M=1.0, p=3, q=1)
        assert v == pytest.approx(2 * 16.0)

    def test_strict_with_p_gamma_ratio(self):
        # q > p-1: Gamma(q/(p-1) + m) / Gamma(q/(p-1)) with base 2(p-1)M.
        p, q, m = 2, 3, 2
        v = nested_commutator_bound("strict", m, 1.0, M=1.0, p=p, q=q)
        ratio = math.gamma(3 + m) / math.gamma(3)
        assert v == pytest.approx(ratio * (2.0 * (p - 1)) ** m)

    def test_quasi_formula(self):
        assert nested_commutator_bound("quasi", 2, 2.0, M=1.0, q_star=0.5) == pytest.approx(4.0)

    def test_unknown_case(self):
        with pytest.raises(BoundParameterError):
            nested_commutator_bound("other", 1, 1.0, M=1.0, q=1)

    def test_delta_q(self):
        assert delta_q(2, 1.5) == 6.0
