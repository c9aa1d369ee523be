"""Model generators: structure, reproducibility, and declared invariants."""

import numpy as np
import pytest

from enloc import models
from enloc.pauli import OperatorSum


class TestRandomTwoLocal:
    def test_seed_reproducibility(self):
        a = models.random_two_local_schedule(5, seed=42)
        b = models.random_two_local_schedule(5, seed=42)
        assert len(a.knots) == len(b.knots)
        for (ta, ha), (tb, hb) in zip(a.knots, b.knots):
            assert ta == tb and ha == hb
        c = models.random_two_local_schedule(5, seed=43)
        assert any(ha != hc for (_, ha), (_, hc) in zip(a.knots, c.knots))

    def test_zero_strength_is_constant(self):
        s = models.random_two_local_schedule(4, seed=1, strength=0.0)
        first = s.knots[0][1]
        assert all(op == first for _, op in s.knots)

    def test_local_norm_normalized(self):
        s = models.random_two_local_schedule(6, seed=3, loc_norm_target=1.0)
        assert s.max_loc_norm() == pytest.approx(1.0, rel=1e-12)
        s.validate_case()
        assert s.case == 1 and s.q == 2

    def test_all_terms_at_most_two_local(self):
        s = models.random_two_local_schedule(5, seed=8)
        for _, op in s.knots:
            assert op.max_locality() <= 2


class TestCommutingCore:
    def test_ising_chain_ramp_budget(self):
        s = models.commuting_core_model(4, core="ising-chain", drive=0.2)
        assert s.total_variation() == pytest.approx(0.8)
        s.validate_case()
        assert s.case == 3

    def test_zero_drive_keeps_eigenstates(self):
        s = models.commuting_core_model(4, core="ising-chain", drive=0.0)
        assert s.evaluate(0.0) == s.evaluate(1.0)

    def test_all_pairs_core(self):
        s = models.commuting_core_model(4, core="ising-all-pairs", drive=0.1)
        s.validate_case()
        assert s.core.loc_norm() == pytest.approx(3.0)

    def test_non_commuting_core_rejected(self):
        bad = OperatorSum.from_strings(2, [(1.0, "ZZ"), (1.0, "XI")])
        with pytest.raises(ValueError):
            models.commuting_core_model(2, core=bad, drive=0.1)


class TestParityCheckCode:
    def test_repetition_codewords(self):
        code = models.repetition_code(4)
        assert list(code.codewords()) == [0, 0b1111]

    def test_single_check_parity_sectors(self):
        code, h_c = models.parity_check_code(2, [(0, 1)])
        vals = h_c.diagonal_values()
        # even-parity states 00, 11 sit at -1; odd states at +1
        assert vals[0] == vals[3] == -1.0
        assert vals[1] == vals[2] == 1.0
        assert list(code.codewords()) == [0, 3]
        assert code.violations(np.array([1, 2])).tolist() == [1, 1]

    def test_degree_and_weight(self):
        code = models.repetition_code(5)
        assert code.p_c == 2 and code.q_c == 2
        assert code.hamiltonian().loc_norm() == pytest.approx(2.0)

    def test_classical_is_diagonal(self):
        code = models.repetition_code(6, periodic=True)
        assert code.hamiltonian().is_diagonal()

    def test_css_commutation_enforced(self):
        # Overlap of odd size between X and Z checks must be rejected.
        with pytest.raises(ValueError, match="even"):
            models.parity_check_code(3, [(0, 1)], [(1, 2)])
        # Even overlap passes and the Hamiltonian terms commute.
        code, h_c = models.parity_check_code(4, [(0, 1, 2, 3)], [(0, 1)])
        assert not code.is_classical
        assert h_c.terms_mutually_commute()

    def test_energies_count_violations(self):
        code = models.repetition_code(4)
        vals = code.energies()
        assert vals[0] == -3.0
        assert vals[0b0001] == -1.0  # one broken bond at the edge
        assert vals[0b0010] == 1.0   # interior flip breaks two bonds

    def test_check_file_round_trip(self):
        code, _ = models.parity_check_code(4, [(0, 1), (1, 2), (2, 3)], [(0, 1, 2, 3)])
        back = models.checks_from_text(models.checks_to_text(code))
        assert back == code


class TestDetuning:
    def test_deterministic_and_diagonal(self):
        a = models.detuning_field(4, seed=9)
        b = models.detuning_field(4, seed=9)
        assert a == b and a.is_diagonal()
        assert len(a) == 4

    def test_norm_scale(self):
        n = 6
        op = models.detuning_field(n, seed=1)
        coeffs = [abs(t.coeff) for t in op]
        assert op.x_norm() == pytest.approx(sum(coeffs))
        assert max(coeffs) < 10.0 / n**2

    def test_sample_statistics(self):
        # h_j are standard Gaussians: mean/variance within 5% over 1e4 draws.
        n = 4
        draws = []
        for seed in range(2500):
            draws.extend(t.coeff.real * n**2 for t in models.detuning_field(n, seed))
        arr = np.array(draws)
        assert abs(arr.mean()) < 0.05
        assert abs(arr.var() - 1.0) < 0.05


class TestPspin:
    def test_reproducible(self):
        a, ha = models.pspin_model(10, 3, 4, seed=2)
        b, hb = models.pspin_model(10, 3, 4, seed=2)
        assert a.edges == b.edges and a.couplings == b.couplings
        assert ha == hb

    def test_structure(self):
        inst, h = models.pspin_model(12, 3, 4, seed=5)
        assert all(len(e) == 4 for e in inst.edges)
        assert all(j in (-1, 1) for j in inst.couplings)
        assert inst.exactly_regular
        assert set(inst.degrees()) == {3}
        assert h.loc_norm() == pytest.approx(3.0)
        assert h.is_diagonal()

    def test_near_regular_flagged(self):
        inst, _ = models.pspin_model(10, 3, 4, seed=4)  # 30 stubs, 7 edges
        assert not inst.exactly_regular
        assert set(inst.degrees()) <= {2, 3}

    def test_uniform_couplings_chain_ground(self):
        # J = -1 on every bond of a 2-uniform chain favors aligned neighbors,
        # so the two uniform strings are the ground states.
        n = 5
        edges = tuple((i, i + 1) for i in range(n - 1))
        inst = models.HypergraphInstance(
            n=n, edges=edges, couplings=(-1,) * (n - 1),
            p_degree=2, q_body=2, exactly_regular=False,
        )
        vals = inst.hamiltonian().diagonal_values()
        ground = np.flatnonzero(vals == vals.min())
        assert list(ground) == [0, (1 << n) - 1]

    def test_hypergraph_file_round_trip(self):
        inst, _ = models.pspin_model(8, 3, 4, seed=3)
        back = models.hypergraph_from_text(models.hypergraph_to_text(inst))
        assert back.edges == inst.edges and back.couplings == inst.couplings


class TestMis:
    def test_edgeless_graph(self):
        mm = models.mis_model(3, [])
        assert len(mm.h_e) == 0
        assert mm.mis_size() == 3

    def test_single_edge(self):
        mm = models.mis_model(2, [(0, 1)])
        mask = mm.independent_set_mask()
        assert mask.tolist() == [True, True, True, False]
        # Edge penalty acts as 4 P1 P1 on the doubly-occupied state.
        vals = mm.h_e.diagonal_values()
        assert vals.tolist() == [0.0, 0.0, 0.0, 4.0]

    def test_mis_matches_constrained_ground(self):
        edges = list(models.random_regular_graph(10, 3, seed=6))
        mm = models.mis_model(10, edges)
        mask = mm.independent_set_mask()
        hv = mm.h_v.diagonal_values()
        # Exhaustive: largest independent set vs ground of the counting
        # Hamiltonian restricted to the zero-penalty subspace.
        best = mm.mis_size()
        assert hv[mask].min() == pytest.approx(10 - 2 * best)

    def test_flip_drive_preserves_subspace_exactly(self):
        edges = [(i, (i + 1) % 6) for i in range(6)]
        mm = models.mis_model(6, edges)
        mask = mm.independent_set_mask()
        dense = mm.v_pxp.to_dense()
        proj = np.diag(mask.astype(float))
        off = (np.eye(64) - proj) @ dense @ proj
        assert np.max(np.abs(off)) == 0.0

    def test_drive_norms(self):
        edges = [(i, (i + 1) % 6) for i in range(6)]
        mm = models.mis_model(6, edges)
        assert mm.v_pxp.x_norm() == pytest.approx(6.0)
        assert mm.v_pxp.max_locality() == 3

    def test_graph_file_round_trip(self):
        edges = models.random_regular_graph(8, 3, seed=0)
        n, back = models.graph_from_text(models.graph_to_text(8, edges))
        assert n == 8 and back == edges

    def test_bad_edges_rejected(self):
        with pytest.raises(ValueError):
            models.mis_model(3, [(0, 0)])
        with pytest.raises(ValueError):
            models.mis_model(3, [(0, 1), (1, 0)])


class TestAdiabatic:
    def test_constant_at_s_one(self):
        h_l = models.ising_chain(3)
        h_m = models.transverse_field(3)
        s = models.adiabatic_schedule(h_l, h_m, [(0.0, 1.0)])
        assert s.knots[0][1] == h_l

    def test_linear_sweep_variation(self):
        h_l = models.ising_chain(4)
        h_m = models.transverse_field(4)
        s = models.adiabatic_schedule(h_l, h_m, [(0.0, 0.0), (1.0, 1.0)])
        assert s.total_variation() == pytest.approx((h_l - h_m).x_norm())
        assert s.total_variation() == pytest.approx(h_l.x_norm() + h_m.x_norm())

    def test_tail_variation_formula(self):
        n = 9
        h_m = models.transverse_field(n)
        assert models.tail_variation(h_m, 0.9) == pytest.approx(n / 9.0)

    def test_tail_schedule_budget(self):
        h_l = models.ising_chain(4)
        h_m = models.transverse_field(4)
        s = models.adiabatic_tail_schedule(h_l, h_m, s_star=0.8)
        assert s.total_variation() == pytest.approx(models.tail_variation(h_m, 0.8))
        s.validate_case()

    def test_monotonicity_enforced(self):
        h_l = models.ising_chain(3)
        h_m = models.transverse_field(3)
        with pytest.raises(ValueError):
            models.adiabatic_schedule(h_l, h_m, [(0.0, 0.5), (1.0, 0.2)])


class TestGeneratedCaseTags:
    def test_every_generator_passes_its_declared_tag(self):
        gens = [
            models.random_two_local_schedule(4, seed=0),
            models.commuting_core_model(4, drive=0.15),
            models.adiabatic_tail_schedule(
                models.pspin_model(8, 3, 4, seed=3)[1],
                models.transverse_field(8),
                s_star=0.95,
            ),
        ]
        for s in gens:
            s.validate_case()


class TestDimacs:
    def test_edge_format_round_trip(self):
        text = "c a comment\np edge 4 3\ne 1 2\ne 2 3\ne 3 4\n"
        n, edges = models.graph_from_dimacs(text)
        assert n == 4 and edges == ((0, 1), (1, 2), (2, 3))

    def test_missing_problem_line(self):
        with pytest.raises(ValueError, match="problem line"):
            models.graph_from_dimacs("e 1 2\n")


class TestQuasiLocalOperator:
    def test_budget_normalization_and_hermiticity(self):
        v = models.quasi_local_operator(6, seed=4, q_star=0.7, qx_density=0.12)
        assert v.is_hermitian()
        assert v.qx_norm(0.7) == pytest.approx(0.12 * 6, rel=1e-12)

    def test_deterministic(self):
        a = models.quasi_local_operator(5, seed=9, q_star=1.0)
        b = models.quasi_local_operator(5, seed=9, q_star=1.0)
        assert a == b

    def test_decay_profile(self):
        # Larger supports carry exponentially less weight on average.
        v = models.quasi_local_operator(8, seed=2, q_star=0.6, n_terms=40,
                                        qx_density=0.1)
        small = [abs(t.coeff) for t in v if t.locality <= 2]
        large = [abs(t.coeff) for t in v if t.locality >= 6]
        assert small and large
        assert max(large) < min(1e-2 * np.mean(small), max(small))

    def test_positive_decay_scale_required(self):
        with pytest.raises(ValueError):
            models.quasi_local_operator(4, seed=1, q_star=0.0)
