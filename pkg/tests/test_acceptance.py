"""Acceptance suite: one test per criterion, one printed verdict line each.

Every inequality is checked at its stated tolerance (numerical slack only:
lhs <= rhs * (1 + 1e-9) + 1e-12); nothing is deferred to calibration.
Criteria with runtime budgets assert them too.
"""

import json
import math
import os
import time

import numpy as np

from oracles import (
    count_permutations_with_cycles,
    count_set_partitions,
    recurrence_coeffs,
)

from enloc import bounds, models
from enloc import experiments as ex
from enloc.cli import main as cli_main
from enloc.dynamics import (
    central_moments,
    evolve,
    leakage_profile,
    spectral_decompose,
)
from enloc.experiments import window_leakages
from enloc.pauli import OperatorSum, PauliTerm

SLACK = 1e-9


def report(number: int, description: str, ok: bool) -> None:
    print(f"ACCEPTANCE {number:02d} [{'PASS' if ok else 'FAIL'}] {description}")
    assert ok, f"criterion {number} failed: {description}"


def within(lhs: float, rhs: float) -> bool:
    return lhs <= rhs * (1.0 + SLACK) + 1e-12


def test_criterion_01_spreading_map_qualitative():
    started = time.monotonic()
    rec, _profile = ex.spreading_map(ex.Fig1Config())
    elapsed = time.monotonic() - started
    outside_ok = all(
        c.passed for c in rec.checks if c.name == "weight_outside_variation_window"
    )
    decay_checks = [c for c in rec.checks if c.name == "log_weight_decays_beyond_window"]
    decay_ok = len(decay_checks) >= 4 and all(c.passed for c in decay_checks)
    ok = outside_ok and decay_ok and elapsed < 120.0
    report(
        1,
        f"n=8 spreading map: window weight < 0.05 at all {9} samples, "
        f"log decay across >= 4 bins at {len(decay_checks)} samples, {elapsed:.0f}s",
        ok,
    )


def test_criterion_02_moment_inequality_factorial_regime():
    started = time.monotonic()
    violations = 0
    total = 0
    k_max = 6
    for idx in range(20):
        n = 4 + (idx % 3)  # n in {4, 5, 6}
        s = models.random_two_local_schedule(n, seed=100 + idx, strength=0.3)
        s.validate_case()
        delta = s.energy_quantum()  # 2 q M with q = 2 and unit local norm
        dec0 = spectral_decompose(s.evaluate(0.0))
        j0 = (1 << n) // 2
        psi0 = dec0.eigenstate(j0)
        e0 = float(dec0.energies[j0])
        traj = evolve(s, psi0, list(np.linspace(0.0, 1.0, 5)), fidelity_tol=1e-8)
        for t, psi in traj:
            md = central_moments(psi, s.evaluate(t), e0, k_max)
            x = s.lambda_t(t) * n / delta
            for k in range(1, k_max + 1):
                total += 1
                if not within(md.g[k - 1], delta**k * bounds.f_poly(1, k, x)):
                    violations += 1
    elapsed = time.monotonic() - started
    ok = violations == 0 and elapsed < 300.0
    report(
        2,
        f"20 random 2-local schedules, k <= {k_max}: {total} moment inequalities, "
        f"{violations} violations, {elapsed:.0f}s",
        ok,
    )


def test_criterion_03_commuting_core_improvement():
    violations = 0
    total = 0
    k_max = 6
    for n in (6, 8):
        s = models.commuting_core_model(n, core="ising-chain", drive=0.3)
        s.validate_case()
        delta = s.energy_quantum()  # 2 * 1 * loc_norm(chain) = 4
        dec0 = spectral_decompose(s.evaluate(0.0))
        j0 = (1 << n) // 3
        psi0 = dec0.eigenstate(j0)
        e0 = float(dec0.energies[j0])
        samples = list(np.linspace(0.0, 1.0, 6))
        traj = evolve(s, psi0, samples, fidelity_tol=1e-8)
        for t, psi in traj:
            md = central_moments(psi, s.evaluate(t), e0, k_max)
            x = s.lambda_t(t) * n / delta
            for k in range(1, k_max + 1):
                total += 1
                if not within(md.g[k - 1], delta**k * bounds.f_poly(2, k, x)):
                    violations += 1
        prof = leakage_profile(traj, s, e0, d_grid=[0.1, 0.2, 0.35, 0.5, 0.8])
        for i in range(len(traj)):
            for j, d in enumerate(prof.d_grid):
                if d <= prof.lambda_ts[i]:
                    continue
                total += 1
                if not within(prof.eps[i, j], prof.bound_eps2[i, j]):
                    violations += 1
    report(
        3,
        f"transverse ramp on the commuting chain: {total} moment + leakage "
        f"inequalities, {violations} violations",
        violations == 0,
    )


def test_criterion_04_static_reduction_every_eigenstate():
    started = time.monotonic()
    violations = 0
    total = 0
    d_grid = (0.3, 0.5, 0.8)
    for n in range(4, 11):
        chain = models.ising_chain(n)
        h0_values = chain.diagonal_values()
        delta = 2.0 * 1.0 * chain.loc_norm()
        for lam in (0.05, 0.1, 0.2):
            h = chain + models.transverse_field(n, lam)
            dec = spectral_decompose(h)
            for d in d_grid:
                if d <= lam:
                    continue
                leaks = window_leakages(h0_values, dec.vectors, dec.energies, d * n)
                cap = bounds.leakage_bound(
                    bounds.BoundSpec.per_site(lam, delta, d, n)
                ).epsilon2
                total += leaks.shape[0]
                violations += int(np.sum(leaks > cap * (1.0 + SLACK) + 1e-12))
    elapsed = time.monotonic() - started
    ok = violations == 0 and elapsed < 600.0
    report(
        4,
        f"static reduction, n=4..10, lam in {{0.05,0.1,0.2}}: {total} per-eigenstate "
        f"window checks, {violations} violations, {elapsed:.0f}s",
        ok,
    )


def _random_local_operator(rng, n, n_terms, max_locality, hermitian=True):
    terms = []
    sites = list(range(n))
    while len(terms) < n_terms:
        k = int(rng.integers(1, max_locality + 1))
        chosen = rng.choice(sites, size=k, replace=False)
        x = z = 0
        for i in chosen:
            axis = int(rng.integers(0, 3))
            if axis != 1:
                x |= 1 << int(i)
            if axis != 0:
                z |= 1 << int(i)
        if x == 0 and z == 0:
            continue
        terms.append(PauliTerm(n, x, z, float(rng.normal())))
    return OperatorSum(n, terms)


def _random_z_strings(rng, n, n_terms):
    terms = []
    while len(terms) < n_terms:
        z = int(rng.integers(1, 1 << n))
        terms.append(PauliTerm(n, 0, z, float(rng.normal())))
    return OperatorSum(n, terms)


def test_criterion_05_nested_commutator_regimes():
    started = time.monotonic()
    n = 4
    draws = 200
    m_max = 4
    failures = {"strict": 0, "commuting": 0, "quasi": 0}
    checks = 0
    for i in range(draws):
        rng = np.random.default_rng(10_000 + i)

        # Strictly local pair: the joint locality feeds the factorial bound.
        h = _random_local_operator(rng, n, 5, 3)
        h = (h + h.dagger()).scaled(0.5)
        v = _random_local_operator(rng, n, 3, 2)
        v = (v + v.dagger()).scaled(0.5)
        k_joint = max(h.max_locality(), v.max_locality(), 1)
        big_m = h.loc_norm()
        acc = v
        for m in range(1, m_max + 1):
            acc = bounds.nested_commutator(h, acc, 1)
            cap = bounds.nested_commutator_bound(
                "strict", m, v.x_norm(), M=big_m, q=k_joint
            )
            checks += 1
            if not within(acc.spectral_norm(), cap):
                failures["strict"] += 1

        # Mutually commuting generator.
        hz = _random_z_strings(rng, n, 5)
        v2 = _random_local_operator(rng, n, 3, 2)
        v2 = (v2 + v2.dagger()).scaled(0.5)
        q_v = max(v2.max_locality(), 1)
        acc = v2
        for m in range(1, m_max + 1):
            acc = bounds.nested_commutator(hz, acc, 1)
            cap = bounds.nested_commutator_bound(
                "commuting", m, v2.x_norm(), M=hz.loc_norm(), q=q_v
            )
            checks += 1
            if not within(acc.spectral_norm(), cap):
                failures["commuting"] += 1

        # Quasi-local argument: term strengths scaled down exponentially in
        # their support size, measured through the weighted norm.
        q_star = 0.75
        raw = _random_local_operator(rng, n, 6, n)
        raw = (raw + raw.dagger()).scaled(0.5)
        vq = OperatorSum(
            n,
            [
                PauliTerm(
                    n, t.x_mask, t.z_mask, t.coeff * math.exp(-t.locality / q_star)
                )
                for t in raw
            ],
        )
        acc = vq
        for m in range(1, m_max + 1):
            acc = bounds.nested_commutator(hz, acc, 1)
            cap = bounds.nested_commutator_bound(
                "quasi", m, vq.qx_norm(q_star), M=hz.loc_norm(), q_star=q_star
            )
            checks += 1
            if not within(acc.spectral_norm(), cap):
                failures["quasi"] += 1
    elapsed = time.monotonic() - started
    ok = all(v == 0 for v in failures.values())
    report(
        5,
        f"{draws} draws x 3 regimes x m<=4 ({checks} norms): "
        f"violations {failures}, {elapsed:.0f}s",
        ok,
    )


def test_criterion_06_combinatorics_exact():
    ok = True
    # Closed forms equal the defining recurrences, coefficient by coefficient.
    for kind in (1, 2):
        rows = recurrence_coeffs(kind, 12)
        for k in range(13):
            closed = bounds.f_poly_coeffs(kind, k)
            if list(map(int, closed)) != [int(c) for c in rows[k]]:
                ok = False
            if any(c.denominator != 1 for c in rows[k]):
                ok = False

    # Cycle/partition-splitting identities by exhaustive enumeration, n <= 8.
    for n in range(1, 9):
        for j in range(0, n):
            lhs1 = sum(
                math.comb(n, m)
                * math.factorial(m - 1)
                * count_permutations_with_cycles(n - m, j)
                for m in range(1, n - j + 1)
            )
            if lhs1 != (j + 1) * count_permutations_with_cycles(n, j + 1):
                ok = False
            lhs2 = sum(
                math.comb(n, m) * count_set_partitions(n - m, j)
                for m in range(1, n - j + 1)
            )
            if lhs2 != (j + 1) * count_set_partitions(n, j + 1):
                ok = False

    # Best integer-moment bound never beats the Chernoff value on the grid.
    grid_checks = 0
    for x in (1.0, 2.0, 5.0):
        for ratio in (1.5, 2.0, 3.0):
            y = ratio * x
            moments = [bounds.f_poly(2, k, x) ** 2 for k in range(1, 61)]
            _, best = bounds.markov_min_k(moments, y)
            grid_checks += 1
            if best > bounds.chernoff_poisson_bound(x, y) + 1e-12:
                ok = False
    report(
        6,
        "closed forms == recurrences (k <= 12), splitting identities (n <= 8), "
        f"Chernoff dominance on {grid_checks} grid points",
        ok,
    )


def test_criterion_07_dynamical_localization_sweep():
    started = time.monotonic()
    all_pass = True
    nonvacuous = 0
    vacuous = 0
    for n in (8, 10, 12):
        for horizon in (1.0, 10.0, 100.0):
            cfg = ex.DynamicalConfig(
                code_kind="repetition-ring",
                n=n,
                barrier_offset=4.0,
                drive_coeff=0.03,
                t_lambda_n=horizon,
                n_samples=7,
                fidelity_tol=1e-6,
            )
            rec = ex.dynamical_localization(cfg)
            if not rec.passed:
                all_pass = False
            vacuous += rec.n_vacuous
            nonvacuous += sum(1 for c in rec.checks if not c.vacuous)
    elapsed = time.monotonic() - started
    ok = all_pass and nonvacuous > 0
    report(
        7,
        f"two-cluster ring codes n=8..12, T*lambda*n in {{1,10,100}}: "
        f"{nonvacuous} non-vacuous checks all hold ({vacuous} vacuous), {elapsed:.0f}s",
        ok,
    )


def test_criterion_08_gibbs_bottleneck():
    started = time.monotonic()
    cfg = ex.GibbsConfig(
        code_kind="repetition-ring",
        n=12,
        beta=2.0,
        v0_kind="uniform-z",
        v0_coeff=0.02,
        barrier_offset=4.0,
    )
    rec = ex.gibbs_bottleneck(cfg)
    res = {c.name: c for c in rec.checks}
    elapsed = time.monotonic() - started
    ok = (
        rec.passed
        and res["stationary_distribution_residual"].lhs <= 1e-10
        and res["gap_le_c_times_eps_m"].passed
        and elapsed < 600.0
    )
    report(
        8,
        f"n=12 beta=2: eps_M={min(rec.info['eps_m']):.3g} within the analytic chain, "
        f"stationarity residual {res['stationary_distribution_residual'].lhs:.1e}, "
        f"gap {rec.info['spectral_gap']:.2e} <= {cfg.c_gap} * eps_M, {elapsed:.0f}s",
        ok,
    )


def test_criterion_09_constrained_flip_symmetry():
    ok = True
    tested = 0
    seed = 0
    while tested < 5:
        try:
            edges = models.random_regular_graph(10, 3, seed=seed)
        except models.ModelGenerationError:
            seed += 1
            continue
        seed += 1
        mm = models.mis_model(10, list(edges))
        mask = mm.independent_set_mask()
        dense = mm.v_pxp.to_dense()
        proj = np.diag(mask.astype(float))
        off = (np.eye(1 << 10) - proj) @ dense @ proj
        if np.max(np.abs(off)) != 0.0:
            ok = False
        tested += 1
    report(
        9,
        f"constrained flip drive leaves the zero-penalty subspace invariant on "
        f"{tested} random 3-regular graphs (exact zero cross-block norm)",
        ok,
    )


def test_criterion_10_reproducibility(tmp_path):
    cfg = tmp_path / "sim.toml"
    cfg.write_text(
        'code_kind = "repetition-ring"\nn = 8\ndrive_coeff = 0.04\n'
        "t_lambda_n = 1.0\nn_samples = 5\nseed = 13\n",
        encoding="utf-8",
    )
    f1cfg = tmp_path / "fig1.toml"
    f1cfg.write_text("n = 8\nseed = 2024\nn_samples = 5\n", encoding="utf-8")
    ok = True
    for name, args in (
        ("simulate", ["simulate", "--config", str(cfg)]),
        ("fig1", ["fig1", "--config", str(f1cfg)]),
    ):
        out1 = tmp_path / f"{name}_a"
        out2 = tmp_path / f"{name}_b"
        if cli_main(args + ["--out", str(out1)]) != 0:
            ok = False
        if cli_main(args + ["--out", str(out2)]) != 0:
            ok = False
        for fname in sorted(os.listdir(out1)):
            a = (out1 / fname).read_bytes()
            b = (out2 / fname).read_bytes()
            if fname == "manifest.json":
                da, db = json.loads(a), json.loads(b)
                da.pop("timestamp")
                db.pop("timestamp")
                if da != db:
                    ok = False
            elif a != b:
                ok = False
    report(
        10,
        "simulate + fig1 reruns byte-identical (manifest timestamp excluded)",
        ok,
    )
