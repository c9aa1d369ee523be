"""Unitary evolution under a schedule and instantaneous spectral analysis.

The integrator is a second-order Magnus midpoint rule: each step applies
exp(-i * H(t + h/2) * h) to the state through a sparse matrix exponential,
which is unitary per step up to solver roundoff.  Step counts double until
the sampled states move by less than the fidelity target, so constant
segments converge immediately and rapidly varying ones refine as needed.

Spectral decompositions fix eigenvector phases (first nonzero component
real positive) so trajectories and expansion coefficients reproduce across
runs and platforms.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .bounds import BoundSpec, leakage_bound
from .pauli import (
    DimensionMismatchError,
    OperatorSum,
    ResourceLimitError,
    DENSE_LIMIT,
)
from .schedule import Schedule

_NORM_TOL = 1e-10
_DRIFT_TOL = 1e-8


class IntegrationError(RuntimeError):
    """Step refinement failed to reach the fidelity target."""


def thread_count() -> int:
    """Worker cap for parallel spectral sampling; ENLOC_THREADS overrides."""
    env = os.environ.get("ENLOC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(8, os.cpu_count() or 1))


@dataclass(frozen=True)
class StateVector:
    """Normalized 2^n state vector."""

    n_sites: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        dim = 1 << self.n_sites
        if self.amplitudes.shape != (dim,):
            raise DimensionMismatchError(
                f"amplitudes shape {self.amplitudes.shape}, expected ({dim},)"
            )
        object.__setattr__(
            self, "amplitudes", np.asarray(self.amplitudes, dtype=np.complex128)
        )

    @classmethod
    def basis_state(cls, n_sites: int, index: int) -> "StateVector":
        amp = np.zeros(1 << n_sites, dtype=np.complex128)
        amp[index] = 1.0
        return cls(n_sites, amp)

    @classmethod
    def from_array(cls, arr: np.ndarray, normalize: bool = True) -> "StateVector":
        n = int(round(math.log2(arr.shape[0])))
        if 1 << n != arr.shape[0]:
            raise DimensionMismatchError("state length is not a power of two")
        vec = np.asarray(arr, dtype=np.complex128)
        if normalize:
            nrm = np.linalg.norm(vec)
            if nrm == 0:
                raise ValueError("cannot normalize the zero vector")
            vec = vec / nrm
        return cls(n, vec)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and phase-fixed eigenvector columns."""

    n_sites: int
    energies: np.ndarray
    vectors: np.ndarray

    def ground_energy(self) -> float:
        return float(self.energies[0])

    def eigenstate(self, j: int) -> StateVector:
        return StateVector(self.n_sites, self.vectors[:, j].copy())


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.argmax(np.abs(col) > 1e-12)
        pivot = col[idx]
        if pivot != 0:
            out[:, j] = col * (abs(pivot) / pivot)
    return out


def spectral_decompose(op: OperatorSum) -> SpectralDecomposition:
    op.require_hermitian()
    if op.n_sites > DENSE_LIMIT:
        raise ResourceLimitError(
            f"dense eigensolve for n={op.n_sites} exceeds the cap of {DENSE_LIMIT}"
        )
    energies, vectors = np.linalg.eigh(op.to_dense())
    return SpectralDecomposition(op.n_sites, energies, _fix_phases(vectors))


def expand_in_basis(psi: StateVector, basis: SpectralDecomposition) -> np.ndarray:
    """Coefficients a_j = <phi_j | psi> in the given eigenbasis."""
    if psi.n_sites != basis.n_sites:
        raise DimensionMismatchError("state and basis act on different site counts")
    return basis.vectors.conj().T @ psi.amplitudes


# -- evolution ----------------------------------------------------------------------


def _propagate(
    s: Schedule,
    psi0: np.ndarray,
    grid: list[float],
    substeps: int,
) -> list[np.ndarray]:
    """March psi across the grid with `substeps` midpoint steps per interval."""
    seg_cache: dict[int, tuple] = {}
    times = [k[0] for k in s.knots]
    dim = psi0.shape[0]

    def segment_data(i: int):
        if i not in seg_cache:
            t0, h0 = s.knots[i]
            t1, h1 = s.knots[i + 1]
            slope = (h1 - h0).scaled(1.0 / (t1 - t0))
            a = h0.to_sparse()
            b = slope.to_sparse() if len(slope) else None
            tr_a = h0.coefficient(0, 0).real * dim
            tr_b = slope.coefficient(0, 0).real * dim
            seg_cache[i] = (t0, a, b, tr_a, tr_b)
        return seg_cache[i]

    psi = psi0.copy()
    out = [psi.copy()]
    for ta, tb in zip(grid, grid[1:]):
        if len(s.knots) > 1:
            # Grid points include knot times, so each interval sits in one segment.
            i = s._segment(0.5 * (ta + tb))
        else:
            i = None
        h = (tb - ta) / substeps
        for step in range(substeps):
            tm = ta + (step + 0.5) * h
            if i is None:
                a = s.knots[0][1].to_sparse()
                tr = s.knots[0][1].coefficient(0, 0).real * dim
                mat, tr_mid = a, tr
            else:
                t0, a, b, tr_a, tr_b = segment_data(i)
                if b is None:
                    mat, tr_mid = a, tr_a
                else:
                    rel = tm - t0
                    mat = a + rel * b
                    tr_mid = tr_a + rel * tr_b
            psi = scipy.sparse.linalg.expm_multiply(
                (-1j * h) * mat, psi, traceA=(-1j * h) * tr_mid
            )
            nrm = np.linalg.norm(psi)
            if abs(nrm - 1.0) > _DRIFT_TOL:
                raise IntegrationError(f"norm drifted to {nrm} in one step")
            psi = psi / nrm
        out.append(psi.copy())
    return out


def evolve(
    s: Schedule,
    psi0: StateVector,
    sample_times: list[float],
    fidelity_tol: float = 1e-6,
    max_refinements: int = 14,
) -> list[tuple[float, StateVector]]:
    """Evolve psi0 under the schedule, returning states at the sample times.

    Adaptive control: the whole trajectory is recomputed with doubled
    substep counts until every sampled state moves by less than
    ``fidelity_tol`` in 2-norm between refinements.
    """
    if abs(psi0.norm() - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")
    samples = sorted(set(float(t) for t in sample_times))
    if not samples:
        raise ValueError("need at least one sample time")
    if samples[0] < 0 or samples[-1] > s.t_final + 1e-12:
        raise ValueError("sample times outside the schedule range")
    grid = sorted(
        {0.0}
        | set(samples)
        | {t for t, _ in s.knots if t < samples[-1]}
    )
    sample_idx = [grid.index(t) for t in samples]

    substeps = 1
    prev = _propagate(s, psi0.amplitudes, grid, substeps)
    for _ in range(max_refinements):
        substeps *= 2
        cur = _propagate(s, psi0.amplitudes, grid, substeps)
        diff = max(
            float(np.linalg.norm(cur[i] - prev[i])) for i in sample_idx
        )
        if diff < fidelity_tol:
            return [
                (samples[j], StateVector(s.n_sites, cur[sample_idx[j]]))
                for j in range(len(samples))
            ]
        prev = cur
    raise IntegrationError(
        f"no convergence to {fidelity_tol} after {max_refinements} refinements"
    )


def evolve_static(
    h: OperatorSum, psi0: StateVector, times: list[float]
) -> list[tuple[float, StateVector]]:
    """Exact evolution under a constant Hamiltonian via its eigenbasis.

    Cost is one dense diagonalization regardless of how late the samples
    sit, which is what makes long-horizon stroboscopic checks cheap.
    """
    dec = spectral_decompose(h)
    a0 = expand_in_basis(psi0, dec)
    out = []
    for t in times:
        amps = dec.vectors @ (np.exp(-1j * dec.energies * t) * a0)
        out.append((t, StateVector(h.n_sites, amps)))
    return out


# -- leakage profiles -----------------------------------------------------------------


@dataclass(frozen=True)
class LeakageProfile:
    """Per-sample energy-space weights against the analytic bound family.

    ``eps[i, j]`` is the measured leakage outside the window of half-width
    ``d_grid[j] * n`` around ``e0`` at sample i; the bound arrays are the
    matching finite-size values (trivial entries are 1).  ``bin_weights``
    histograms the instantaneous weights by |E - e0| for plotting.
    """

    n_sites: int
    e0: float
    times: np.ndarray
    lambda_ts: np.ndarray
    d_grid: np.ndarray
    eps: np.ndarray
    bound_eps1: np.ndarray
    bound_eps2: np.ndarray
    bin_edges: np.ndarray
    bin_weights: np.ndarray
    delta: float

    def to_json_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "e0": self.e0,
            "delta": self.delta,
            "times": self.times.tolist(),
            "lambda_t": self.lambda_ts.tolist(),
            "d_grid": self.d_grid.tolist(),
            "eps": self.eps.tolist(),
            "bound_eps1_finite": self.bound_eps1.tolist(),
            "bound_eps2": self.bound_eps2.tolist(),
            "bin_edges": self.bin_edges.tolist(),
            "bin_weights": self.bin_weights.tolist(),
        }

    def csv_rows(self) -> list[list]:
        header = ["time", "lambda_t", "E0"] + [
            f"bin_{lo!r}_{hi!r}" for lo, hi in zip(self.bin_edges, self.bin_edges[1:])
        ]
        rows: list[list] = [header]
        for i, t in enumerate(self.times):
            rows.append(
                [repr(float(t)), repr(float(self.lambda_ts[i])), repr(self.e0)]
                + [repr(float(w)) for w in self.bin_weights[i]]
            )
        return rows


def leakage_profile(
    traj: list[tuple[float, StateVector]],
    s: Schedule,
    e0: float,
    d_grid: list[float],
    delta: float | None = None,
    n_bins: int = 32,
    norm: str | None = None,
) -> LeakageProfile:
    """Decompose each sampled state in its instantaneous eigenbasis.

    ``delta`` defaults to the schedule's energy quantum when a case tag is
    declared.  The variation norm follows the tag (qx for tag 4).
    """
    if delta is None:
        delta = s.energy_quantum()
    if norm is None:
        norm = "qx" if s.case == 4 else "x"
    n = s.n_sites
    d_arr = np.asarray(sorted(d_grid), dtype=float)
    times = np.array([t for t, _ in traj])

    def analyze(item: tuple[float, StateVector]):
        t, psi = item
        dec = spectral_decompose(s.evaluate(t))
        weights = np.abs(expand_in_basis(psi, dec)) ** 2
        gaps = np.abs(dec.energies - e0)
        eps_row = np.array(
            [math.sqrt(max(float(weights[gaps > d * n].sum()), 0.0)) for d in d_arr]
        )
        return gaps, weights, eps_row

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(analyze, traj))

    max_gap = max(float(g.max()) for g, _, _ in results)
    bin_edges = np.linspace(0.0, max(max_gap, 1e-9), n_bins + 1)
    bin_weights = np.zeros((len(traj), n_bins))
    eps = np.zeros((len(traj), len(d_arr)))
    lam = np.zeros(len(traj))
    for i, ((t, _psi), (gaps, weights, eps_row)) in enumerate(zip(traj, results)):
        lam[i] = s.lambda_t(t, norm=norm)
        hist, _ = np.histogram(gaps, bins=bin_edges, weights=weights)
        bin_weights[i] = hist
        eps[i] = eps_row

    b1 = np.ones((len(traj), len(d_arr)))
    b2 = np.ones((len(traj), len(d_arr)))
    for i in range(len(traj)):
        for j, d in enumerate(d_arr):
            rep = leakage_bound(BoundSpec.per_site(lam[i], delta, float(d), n))
            b1[i, j] = rep.epsilon1_finite
            b2[i, j] = rep.epsilon2
    return LeakageProfile(
        n_sites=n,
        e0=e0,
        times=times,
        lambda_ts=lam,
        d_grid=d_arr,
        eps=eps,
        bound_eps1=b1,
        bound_eps2=b2,
        bin_edges=bin_edges,
        bin_weights=bin_weights,
        delta=delta,
    )


# -- central moments -------------------------------------------------------------------


@dataclass(frozen=True)
class MomentData:
    """g_k = |(H - E0)^k psi| and G_2k = g_k^2, with log values for headroom."""

    log_g: np.ndarray

    @property
    def g(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_g)

    @property
    def big_g(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(2.0 * self.log_g)

    def moments_list(self) -> list[float]:
        return [float(v) for v in self.big_g]


def central_moments(
    psi: StateVector, h: OperatorSum, e0: float, k_max: int
) -> MomentData:
    """Iterated application of (H - e0) with per-step renormalization.

    The log-scale accumulator keeps high moments finite where the raw
    values would overflow.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if psi.n_sites != h.n_sites:
        raise DimensionMismatchError("state and operator act on different site counts")
    a = h.to_sparse()
    v = psi.amplitudes.copy()
    log_acc = 0.0
    logs = []
    for _ in range(k_max):
        v = a @ v - e0 * v
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:
            logs.extend([-math.inf] * (k_max - len(logs)))
            break
        log_acc += math.log(nrm)
        v = v / nrm
        logs.append(log_acc)
    return MomentData(log_g=np.array(logs))
