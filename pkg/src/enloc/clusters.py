"""Energy-landscape geometry for diagonal Hamiltonians.

Sub-cutoff Z-basis states are grouped into connected components of the
graph whose edges join states within a chosen Hamming hop radius.  A
partition carries the standard geometry numbers: the largest
intra-cluster diameter nu1, the smallest cross-cluster distance nu2, and
the barrier density b = (cutoff - ground) / n.  Distances here are
Hamming distances between bitstrings, which is the right notion for
diagonal landscapes; general eigenstate distances are out of scope.

A Pauli term can connect two Z-basis states only when its X-mask weight
reaches their Hamming distance, so a perturbation whose largest X weight
sits below nu2 provably has no matrix elements between clusters; the
block-restricted Hamiltonian used for the cross-cluster gap is validated
against this exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import OperatorSum, ResourceLimitError

_SCAN_STATE_LIMIT = 1 << 24
_COMPONENT_LIMIT = 60_000


class ClusterError(ValueError):
    """Partition request is malformed or outside the supported regime."""


@dataclass(frozen=True)
class ClusterPartition:
    """Disjoint clusters of sub-cutoff basis states with their geometry."""

    n: int
    e_cutoff: float
    hop_radius: int
    states: np.ndarray
    energies: np.ndarray
    clusters: tuple[np.ndarray, ...]
    anchors: tuple[int, ...] | None
    nu1: int
    nu2: int | None
    e_ground: float

    @property
    def barrier_density(self) -> float:
        return (self.e_cutoff - self.e_ground) / self.n

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def member_cluster(self, state: int) -> int | None:
        for k, cl in enumerate(self.clusters):
            if state in cl:
                return k
        return None

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "e_cutoff": self.e_cutoff,
            "hop_radius": self.hop_radius,
            "e_ground": self.e_ground,
            "barrier_density": self.barrier_density,
            "nu1": self.nu1,
            "nu2": self.nu2,
            "anchors": None if self.anchors is None else [format(a, f"0{self.n}b")[::-1] for a in self.anchors],
            "clusters": [
                [format(int(z), f"0{self.n}b")[::-1] for z in cl] for cl in self.clusters
            ],
            "cluster_energies": [
                [float(self.energies[np.searchsorted(self.states, z)]) for z in cl]
                for cl in self.clusters
            ],
        }


def _pairwise_hamming(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.bitwise_xor(a[:, None], b[None, :]))


def find_clusters(
    energies: np.ndarray,
    e_cutoff: float,
    hop_radius: int,
    codewords: np.ndarray | None = None,
    mask: np.ndarray | None = None,
) -> ClusterPartition:
    """Partition the strictly-sub-cutoff states into hop components.

    ``energies`` indexes every basis state of a diagonal Hamiltonian;
    ``mask`` optionally restricts the landscape to an invariant subspace
    (states outside it are ignored entirely).  Components are computed on
    the graph with edges at Hamming distance <= hop_radius; the output is
    canonical (clusters sorted by smallest member) regardless of input
    order.
    """
    energies = np.asarray(energies, dtype=float)
    dim = energies.shape[0]
    if dim & (dim - 1) or dim == 0:
        raise ClusterError("energies length must be a power of two")
    if dim > _SCAN_STATE_LIMIT:
        raise ResourceLimitError("landscape scan beyond 2^24 states")
    n = dim.bit_length() - 1
    if hop_radius < 1:
        raise ClusterError("hop radius must be at least 1")
    keep = energies < e_cutoff
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    states = np.flatnonzero(keep).astype(np.int64)
    if states.size == 0:
        raise ClusterError("no states below the cutoff")
    if states.size > _COMPONENT_LIMIT:
        raise ResourceLimitError(
            f"{states.size} sub-cutoff states exceed the pairwise scan limit"
        )
    sub_e = energies[states]

    dist = _pairwise_hamming(states, states)
    adj = dist <= hop_radius
    label = np.full(states.size, -1, dtype=np.int64)
    current = 0
    for start in range(states.size):
        if label[start] >= 0:
            continue
        frontier = [start]
        label[start] = current
        while frontier:
            nxt = np.flatnonzero(adj[frontier].any(axis=0) & (label < 0))
            label[nxt] = current
            frontier = list(nxt)
        current += 1
    clusters = tuple(
        np.sort(states[label == k]) for k in range(current)
    )
    clusters = tuple(sorted(clusters, key=lambda cl: int(cl[0])))

    nu1 = 0
    for cl in clusters:
        if cl.size > 1:
            nu1 = max(nu1, int(_pairwise_hamming(cl, cl).max()))
    nu2 = None
    if len(clusters) > 1:
        nu2 = min(
            int(_pairwise_hamming(a, b).min())
            for i, a in enumerate(clusters)
            for b in clusters[i + 1:]
        )
        if nu2 <= hop_radius:
            raise ClusterError("internal error: clusters closer than the hop radius")

    anchors: tuple[int, ...] | None = None
    if codewords is not None and len(codewords) > 0:
        cw = np.asarray(codewords, dtype=np.int64)
        anchor_list = []
        for cl in clusters:
            d = _pairwise_hamming(cl, cw)
            anchor_list.append(int(cw[int(np.argmin(d.min(axis=0)))]))
        anchors = tuple(anchor_list)

    return ClusterPartition(
        n=n,
        e_cutoff=float(e_cutoff),
        hop_radius=hop_radius,
        states=states,
        energies=sub_e,
        clusters=clusters,
        anchors=anchors,
        nu1=nu1,
        nu2=nu2,
        e_ground=float(sub_e.min()),
    )


@dataclass(frozen=True)
class ClusterMetrics:
    nu1: int
    nu2: int | None
    barrier_density: float
    alpha_hat: float | None
    gamma_hat: float | None
    witness_state: int | None

    def to_json_dict(self) -> dict:
        return {
            "nu1": self.nu1,
            "nu2": self.nu2,
            "b": self.barrier_density,
            "alpha_hat": self.alpha_hat,
            "gamma_hat": self.gamma_hat,
            "witness_state": self.witness_state,
        }


def cluster_metrics(partition: ClusterPartition, code=None) -> ClusterMetrics:
    """Empirical soundness and radius from the exhaustive sub-cutoff scan.

    alpha_hat is the smallest violations-per-distance ratio over sub-cutoff
    states at positive distance from their nearest codeword (the witness
    state attains it); gamma_hat the largest distance-to-anchor density.
    These stand in for the code parameters that only exist asymptotically,
    and every report downstream says which was used.
    """
    alpha_hat = gamma_hat = None
    witness = None
    if code is not None and code.is_classical:
        cw = code.codewords()
        dists = _pairwise_hamming(partition.states, cw.astype(np.int64)).min(axis=1)
        viol = code.violations(partition.states)
        gamma_hat = float(dists.max()) / partition.n
        moved = dists > 0
        if moved.any():
            ratios = viol[moved] / dists[moved]
            idx = int(np.argmin(ratios))
            alpha_hat = float(ratios[idx])
            witness = int(partition.states[np.flatnonzero(moved)[idx]])
        else:
            alpha_hat = None
    return ClusterMetrics(
        nu1=partition.nu1,
        nu2=partition.nu2,
        barrier_density=partition.barrier_density,
        alpha_hat=alpha_hat,
        gamma_hat=gamma_hat,
        witness_state=witness,
    )


def cluster_weights(
    amplitudes: np.ndarray, partition: ClusterPartition
) -> tuple[np.ndarray, float]:
    """Per-cluster probability weight and the weight above all clusters.

    The above-cluster weight is summed over the complement directly, so a
    landscape fully covered by clusters reports exactly zero.
    """
    probs = np.abs(np.asarray(amplitudes)) ** 2
    if probs.shape[0] != 1 << partition.n:
        raise ClusterError("state dimension does not match the partition")
    weights = np.array([float(probs[cl].sum()) for cl in partition.clusters])
    member = np.zeros(probs.shape[0], dtype=bool)
    for cl in partition.clusters:
        member[cl] = True
    return weights, float(probs[~member].sum())


def max_connecting_x_weight(v: OperatorSum, partition: ClusterPartition) -> int:
    """Largest X weight in v, to compare against nu2 for tunneling safety."""
    if v.n_sites != partition.n:
        raise ClusterError("operator and partition disagree on n")
    return v.max_x_weight()


def truncated_blocks(
    h: OperatorSum, partition: ClusterPartition, verify: bool = True
) -> list[np.ndarray]:
    """Dense blocks of the cluster-restricted Hamiltonian, one per cluster.

    With ``verify`` the cross-cluster matrix elements are built explicitly
    and required to vanish, which is exact whenever every term's X weight
    stays below nu2.
    """
    if h.n_sites != partition.n:
        raise ClusterError("operator and partition disagree on n")
    index: dict[int, tuple[int, int]] = {}
    for k, cl in enumerate(partition.clusters):
        for a, z in enumerate(cl):
            index[int(z)] = (k, a)
    blocks = [
        np.zeros((cl.size, cl.size), dtype=np.complex128) for cl in partition.clusters
    ]
    cross = 0.0
    for term in h:
        phase = term.coeff * (1j) ** ((term.x_mask & term.z_mask).bit_count() % 4)
        for z, (k, a) in index.items():
            target = z ^ term.x_mask
            hit = index.get(target)
            if hit is None:
                continue
            sign = -1.0 if (term.z_mask & z).bit_count() & 1 else 1.0
            k2, b = hit
            if k2 == k:
                blocks[k][b, a] += phase * sign
            else:
                cross = max(cross, abs(phase * sign))
    if verify and cross != 0.0:
        raise ClusterError(
            f"perturbation connects distinct clusters (element magnitude {cross})"
        )
    return blocks


def cluster_gap_delta_w(
    block_spectra: list[np.ndarray],
) -> tuple[float, tuple[int, int]]:
    """Smallest cross-block eigenvalue separation of the truncated Hamiltonian.

    Undefined for a single cluster.  Returns the gap with the pair of
    cluster indices attaining it.
    """
    if len(block_spectra) < 2:
        raise ClusterError("cross-cluster gap needs at least two clusters")
    best = np.inf
    pair = (0, 1)
    for i, ei in enumerate(block_spectra):
        for j in range(i + 1, len(block_spectra)):
            d = np.abs(ei[:, None] - block_spectra[j][None, :])
            val = float(d.min())
            if val < best:
                best, pair = val, (i, j)
    return best, pair
