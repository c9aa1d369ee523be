"""Generators for the Hamiltonian families under study.

Covers random all-to-all 2-local drives, commuting-core models with a
transverse ramp, classical/CSS parity-check codes, p-regular q-uniform
spin-glass instances, the independent-set model with its
symmetry-preserving flip drive, diagonal detuning fields, and adiabatic
interpolation schedules.

Randomness comes from numpy's SFC64 bit generator (a 64-bit
shift-register/chaotic family) seeded explicitly; every generator is a
pure function of (parameters, seed) and the seed is echoed into all run
outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import OperatorSum, PauliTerm, ResourceLimitError
from .schedule import Schedule

_CODEWORD_ENUM_LIMIT = 20


class ModelGenerationError(RuntimeError):
    """A random instance with the requested structure could not be built."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.SFC64(seed))


# -- elementary operators ----------------------------------------------------------


def transverse_field(n: int, coeff: float = 1.0) -> OperatorSum:
    """coeff * sum_i X_i."""
    return OperatorSum(
        n, [PauliTerm(n, 1 << i, 0, coeff) for i in range(n)]
    )


def ising_chain(n: int, coupling: float = 1.0, periodic: bool = False) -> OperatorSum:
    """coupling * sum_i Z_i Z_{i+1} on a chain or ring."""
    if n < 2:
        raise ValueError("chain needs at least two sites")
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    return OperatorSum(
        n,
        [PauliTerm(n, 0, (1 << i) | (1 << j), coupling) for i, j in bonds],
    )


def ising_all_pairs(n: int, coupling: float = 1.0) -> OperatorSum:
    return OperatorSum(
        n,
        [
            PauliTerm(n, 0, (1 << i) | (1 << j), coupling)
            for i in range(n)
            for j in range(i + 1, n)
        ],
    )


def quasi_local_operator(
    n: int,
    seed: int,
    q_star: float,
    n_terms: int = 12,
    qx_density: float = 0.1,
) -> OperatorSum:
    """Random Hermitian sum whose k-local strengths decay as exp(-k/q_star).

    Support sizes are drawn uniformly over 1..n and coefficients are
    Gaussian times the decay factor; the result is rescaled so the
    weighted termwise norm per site equals ``qx_density``.
    """
    if q_star <= 0:
        raise ValueError("q_star must be positive")
    rng = make_rng(seed)
    terms: list[PauliTerm] = []
    while len(terms) < n_terms:
        k = int(rng.integers(1, n + 1))
        sites = rng.choice(n, size=k, replace=False)
        x = z = 0
        for i in sites:
            axis = int(rng.integers(0, 3))
            if axis != 1:
                x |= 1 << int(i)
            if axis != 0:
                z |= 1 << int(i)
        if x == 0 and z == 0:
            continue
        coeff = float(rng.normal()) * math.exp(-k / q_star)
        terms.append(PauliTerm(n, x, z, coeff))
    op = OperatorSum(n, terms)
    if len(op) == 0 or qx_density == 0.0:
        return OperatorSum.zero(n)
    return op.scaled(qx_density * n / op.qx_norm(q_star))


def detuning_field(n: int, seed: int) -> OperatorSum:
    """Diagonal (1/n^2) sum_j h_j Z_j with standard Gaussian h_j.

    Polynomially small, enough to lift classical-code degeneracies without
    materially changing any variation budget.
    """
    rng = make_rng(seed)
    h = rng.normal(size=n)
    return OperatorSum(
        n, [PauliTerm(n, 0, 1 << j, h[j] / n**2) for j in range(n)]
    )


# -- random two-local drives ----------------------------------------------------------


def _random_two_local(n: int, rng: np.random.Generator) -> OperatorSum:
    """All-to-all sum of one- and two-site Paulis, coefficients U(-1, 1)."""
    terms = []
    for i in range(n):
        for ax in range(3):  # X, Z, Y single-site factors
            x = (ax != 1) << i
            z = (ax != 0) << i
            terms.append(PauliTerm(n, x, z, float(rng.uniform(-1.0, 1.0))))
    for i in range(n):
        for j in range(i + 1, n):
            for ai in range(3):
                for aj in range(3):
                    x = ((ai != 1) << i) | ((aj != 1) << j)
                    z = ((ai != 0) << i) | ((aj != 0) << j)
                    terms.append(PauliTerm(n, x, z, float(rng.uniform(-1.0, 1.0))))
    return OperatorSum(n, terms)


def random_two_local_schedule(
    n: int,
    seed: int,
    n_knots: int = 5,
    strength: float = 0.4,
    loc_norm_target: float = 1.0,
    t_final: float = 1.0,
) -> Schedule:
    """Random all-to-all 2-local Hamiltonian with independent knot increments.

    The initial operator and each of the ``n_knots`` increments are drawn
    independently; increments are scaled so the pre-normalization variation
    density is ``strength``, then every knot is rescaled together so the
    largest local norm over the path equals ``loc_norm_target``.  The exact
    per-site variation is whatever the schedule measures afterwards.
    Case tag 1 with q = 2.
    """
    if n < 2:
        raise ValueError("need at least two sites")
    rng = make_rng(seed)
    h = _random_two_local(n, rng)
    h = h.scaled(loc_norm_target / h.loc_norm())
    knots = [(0.0, h)]
    acc = h
    for k in range(1, n_knots + 1):
        inc = _random_two_local(n, rng)
        inc = inc.scaled(strength * n / (n_knots * inc.x_norm()))
        acc = acc + inc
        knots.append((t_final * k / n_knots, acc))
    scale = loc_norm_target / max(op.loc_norm() for _, op in knots)
    knots = [(t, op.scaled(scale)) for t, op in knots]
    return Schedule(tuple(knots), case=1, q=2)


def commuting_core_model(
    n: int,
    core: str | OperatorSum = "ising-chain",
    drive: float | list[tuple[float, float]] = 0.2,
    t_final: float = 1.0,
) -> Schedule:
    """Commuting core plus a transverse-field ramp, tagged Case 3.

    ``drive`` is either the final field strength of a linear 0 -> value
    ramp over [0, t_final], or an explicit list of (time, strength) knots.
    The single drive direction makes [V, H'] = 0 hold identically.
    """
    if isinstance(core, str):
        if core == "ising-chain":
            core_op = ising_chain(n)
        elif core == "ising-all-pairs":
            core_op = ising_all_pairs(n)
        else:
            raise ValueError(f"unknown core kind {core!r}")
    else:
        core_op = core
    if not core_op.terms_mutually_commute():
        raise ValueError("core terms must be mutually commuting")
    field = transverse_field(n)
    if isinstance(drive, (int, float)):
        lam_knots = [(0.0, 0.0), (t_final, float(drive))]
    else:
        lam_knots = [(float(t), float(g)) for t, g in drive]
    knots = tuple(
        (t, core_op + field.scaled(g) if g != 0.0 else core_op) for t, g in lam_knots
    )
    return Schedule(knots, core=core_op, case=3, q=1)


# -- parity-check codes ------------------------------------------------------------------


@dataclass(frozen=True)
class CodeInstance:
    """Parity checks as site masks; classical when there are no X checks.

    ``p_c`` is the largest number of checks touching one site (the local
    norm of the check Hamiltonian is at most this), ``q_c`` the largest
    check weight.
    """

    n: int
    z_checks: tuple[int, ...]
    x_checks: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        full = (1 << self.n) - 1
        for mask in self.z_checks + self.x_checks:
            if mask == 0 or mask & ~full:
                raise ValueError("check masks must be nonempty and within n sites")
        for xm in self.x_checks:
            for zm in self.z_checks:
                if (xm & zm).bit_count() % 2:
                    raise ValueError(
                        "X and Z checks must overlap on an even number of sites"
                    )

    @property
    def is_classical(self) -> bool:
        return not self.x_checks

    @property
    def n_checks(self) -> int:
        return len(self.z_checks) + len(self.x_checks)

    @property
    def p_c(self) -> int:
        counts = [0] * self.n
        for mask in self.z_checks + self.x_checks:
            for i in range(self.n):
                if mask >> i & 1:
                    counts[i] += 1
        return max(counts)

    @property
    def q_c(self) -> int:
        return max(m.bit_count() for m in self.z_checks + self.x_checks)

    def hamiltonian(self) -> OperatorSum:
        """-(sum of Z checks + sum of X checks); diagonal when classical."""
        terms = [PauliTerm(self.n, 0, m, -1.0) for m in self.z_checks]
        terms += [PauliTerm(self.n, m, 0, -1.0) for m in self.x_checks]
        return OperatorSum(self.n, terms)

    def violations(self, states: np.ndarray) -> np.ndarray:
        """Number of violated Z checks per basis state (classical codes)."""
        if not self.is_classical:
            raise ValueError("violation counting is defined for classical codes")
        states = np.asarray(states, dtype=np.int64)
        out = np.zeros(states.shape, dtype=np.int64)
        for mask in self.z_checks:
            out += np.bitwise_count(np.bitwise_and(states, np.int64(mask))) & 1
        return out

    def energies(self) -> np.ndarray:
        """Diagonal energy of every basis state: 2 * violations - n_checks."""
        all_states = np.arange(1 << self.n, dtype=np.int64)
        return 2.0 * self.violations(all_states) - float(self.n_checks)

    def codewords(self) -> np.ndarray:
        """All zero-violation bitstrings, enumerated exhaustively."""
        if not self.is_classical:
            raise ValueError("codeword enumeration is defined for classical codes")
        if self.n > _CODEWORD_ENUM_LIMIT:
            raise ResourceLimitError(
                f"codeword enumeration capped at n={_CODEWORD_ENUM_LIMIT}"
            )
        all_states = np.arange(1 << self.n, dtype=np.int64)
        return all_states[self.violations(all_states) == 0]


def parity_check_code(
    n: int,
    z_checks: list[tuple[int, ...]],
    x_checks: list[tuple[int, ...]] | None = None,
) -> tuple[CodeInstance, OperatorSum]:
    """Build a code instance from index sets and return it with its Hamiltonian."""

    def to_mask(sites: tuple[int, ...]) -> int:
        mask = 0
        for i in sites:
            if not 0 <= i < n:
                raise ValueError(f"site {i} outside range(0, {n})")
            if mask >> i & 1:
                raise ValueError(f"duplicate site {i} in check {sites}")
            mask |= 1 << i
        return mask

    inst = CodeInstance(
        n,
        tuple(to_mask(c) for c in z_checks),
        tuple(to_mask(c) for c in (x_checks or [])),
    )
    return inst, inst.hamiltonian()


def repetition_code(n: int, periodic: bool = False) -> CodeInstance:
    checks = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        checks.append((n - 1, 0))
    return parity_check_code(n, checks)[0]


# -- spin glasses on hypergraphs ------------------------------------------------------------


@dataclass(frozen=True)
class HypergraphInstance:
    """q-uniform hypergraph with +-1 couplings, degrees p within +-1."""

    n: int
    edges: tuple[tuple[int, ...], ...]
    couplings: tuple[int, ...]
    p_degree: int
    q_body: int
    exactly_regular: bool

    def hamiltonian(self) -> OperatorSum:
        terms = []
        for edge, j in zip(self.edges, self.couplings):
            mask = 0
            for i in edge:
                mask |= 1 << i
            terms.append(PauliTerm(self.n, 0, mask, float(j)))
        return OperatorSum(self.n, terms)

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for edge in self.edges:
            for i in edge:
                deg[i] += 1
        return deg


def _configuration_hypergraph(
    n: int, p_degree: int, q_body: int, rng: np.random.Generator, attempts: int
) -> tuple[tuple[tuple[int, ...], ...], bool]:
    total = n * p_degree
    exact = total % q_body == 0
    n_edges = total // q_body
    if n_edges == 0:
        raise ModelGenerationError("no edges possible with these parameters")
    stubs = np.repeat(np.arange(n), p_degree)
    for _ in range(attempts):
        perm = rng.permutation(stubs)[: n_edges * q_body]
        groups = perm.reshape(n_edges, q_body)
        edges = []
        seen = set()
        ok = True
        for grp in groups:
            key = tuple(sorted(int(v) for v in grp))
            if len(set(key)) != q_body or key in seen:
                ok = False
                break
            seen.add(key)
            edges.append(key)
        if ok:
            return tuple(sorted(edges)), exact
    raise ModelGenerationError(
        f"failed to draw a simple {q_body}-uniform {p_degree}-regular hypergraph "
        f"on {n} sites after {attempts} attempts"
    )


def pspin_model(
    n: int, p_degree: int, q_body: int, seed: int, attempts: int = 500
) -> tuple[HypergraphInstance, OperatorSum]:
    """Diagonal q-body spin glass on a random near-regular hypergraph.

    Couplings are drawn from {-1, +1}.  When n * p_degree is not divisible
    by q_body the instance has some degree-(p-1) sites and is flagged not
    exactly regular.  q_body below 4 is allowed but the low-energy
    landscape is then less reliably clustered.
    """
    if q_body < 2:
        raise ValueError("q_body must be at least 2")
    rng = make_rng(seed)
    edges, exact = _configuration_hypergraph(n, p_degree, q_body, rng, attempts)
    couplings = tuple(int(v) for v in rng.integers(0, 2, size=len(edges)) * 2 - 1)
    inst = HypergraphInstance(
        n=n,
        edges=edges,
        couplings=couplings,
        p_degree=p_degree,
        q_body=q_body,
        exactly_regular=exact,
    )
    return inst, inst.hamiltonian()


def random_regular_graph(n: int, degree: int, seed: int, attempts: int = 500) -> tuple[tuple[int, int], ...]:
    """Simple d-regular graph edges via the configuration model."""
    if (n * degree) % 2:
        raise ValueError("n * degree must be even")
    rng = make_rng(seed)
    stubs = np.repeat(np.arange(n), degree)
    for _ in range(attempts):
        perm = rng.permutation(stubs)
        pairs = perm.reshape(-1, 2)
        edges = set()
        ok = True
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b or (min(a, b), max(a, b)) in edges:
                ok = False
                break
            edges.add((min(a, b), max(a, b)))
        if ok:
            return tuple(sorted(edges))
    raise ModelGenerationError(
        f"failed to draw a simple {degree}-regular graph on {n} vertices"
    )


# -- independent sets -----------------------------------------------------------------------


@dataclass(frozen=True)
class MisModel:
    """Vertex-counting Hamiltonian, edge penalty, and the constrained flip drive.

    Bit i set in a basis state means vertex i is in the candidate set
    (Z_i eigenvalue -1), so the vertex count is minimized by large
    independent sets.  ``v_pxp`` carries unit strength; scale as needed.
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    h_v: OperatorSum
    h_e: OperatorSum
    v_pxp: OperatorSum

    def independent_set_mask(self) -> np.ndarray:
        """Boolean mask over basis states with zero edge penalty."""
        states = np.arange(1 << self.n, dtype=np.int64)
        ok = np.ones(states.shape, dtype=bool)
        for i, j in self.edges:
            both = np.int64((1 << i) | (1 << j))
            ok &= np.bitwise_and(states, both) != both
        return ok

    def mis_size(self) -> int:
        states = np.arange(1 << self.n, dtype=np.int64)
        sizes = np.bitwise_count(states[self.independent_set_mask()])
        return int(sizes.max())


def mis_model(n: int, edges: list[tuple[int, int]]) -> MisModel:
    """Build the three operators for a (simple) graph.

    The flip drive attaches X_i behind the projector onto all neighbors
    empty, which keeps the zero-penalty subspace invariant; each site term
    expands into 2^deg Pauli strings of weight deg+1.
    """
    neighbors: dict[int, list[int]] = {i: [] for i in range(n)}
    seen = set()
    for i, j in edges:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"bad edge ({i}, {j})")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"duplicate edge {key}")
        seen.add(key)
        neighbors[i].append(j)
        neighbors[j].append(i)
    h_v = OperatorSum(n, [PauliTerm(n, 0, 1 << i, 1.0) for i in range(n)])
    e_terms = []
    for i, j in sorted(seen):
        # (1 - Z_i)(1 - Z_j) = 1 - Z_i - Z_j + Z_i Z_j
        e_terms.append(PauliTerm(n, 0, 0, 1.0))
        e_terms.append(PauliTerm(n, 0, 1 << i, -1.0))
        e_terms.append(PauliTerm(n, 0, 1 << j, -1.0))
        e_terms.append(PauliTerm(n, 0, (1 << i) | (1 << j), 1.0))
    h_e = OperatorSum(n, e_terms)
    drive_terms = []
    for i in range(n):
        nbrs = neighbors[i]
        weight = 2.0 ** (-len(nbrs))
        for subset_bits in range(1 << len(nbrs)):
            zmask = 0
            for b, v in enumerate(nbrs):
                if subset_bits >> b & 1:
                    zmask |= 1 << v
            drive_terms.append(PauliTerm(n, 1 << i, zmask, weight))
    return MisModel(
        n=n,
        edges=tuple(sorted(seen)),
        h_v=h_v,
        h_e=h_e,
        v_pxp=OperatorSum(n, drive_terms),
    )


# -- adiabatic interpolation -----------------------------------------------------------------


def adiabatic_schedule(
    h_l: OperatorSum,
    h_m: OperatorSum,
    s_knots: list[tuple[float, float]],
    case: int | None = None,
    q: float | None = None,
) -> Schedule:
    """Knots H(t_i) = s_i * h_l + (1 - s_i) * h_m for monotone s."""
    if not s_knots:
        raise ValueError("need at least one s knot")
    svals = [s for _, s in s_knots]
    for a, b in zip(svals, svals[1:]):
        if b < a:
            raise ValueError("s(t) must be nondecreasing")
    if not (0.0 <= svals[0] and svals[-1] <= 1.0):
        raise ValueError("s(t) must stay within [0, 1]")
    knots = tuple(
        (t, h_l.scaled(s) + h_m.scaled(1.0 - s) if s < 1.0 else h_l)
        for t, s in s_knots
    )
    return Schedule(knots, core=h_l, case=case, q=q)


def tail_variation(h_m: OperatorSum, s_star: float) -> float:
    """Variation budget of the rescaled tail from s_star to 1."""
    if not 0.0 < s_star <= 1.0:
        raise ValueError("s_star must lie in (0, 1]")
    return (1.0 - s_star) / s_star * h_m.x_norm()


def adiabatic_tail_schedule(
    h_l: OperatorSum,
    h_m: OperatorSum,
    s_star: float,
    t_final: float = 1.0,
    case: int | None = 3,
    q: float | None = None,
) -> Schedule:
    """Tail evolution in rescaled form: h_l + mu(t) h_m with mu ramping to 0.

    Dividing the interpolation by s makes the problem part constant, and
    the drive coefficient mu = (1 - s)/s runs from its s_star value down to
    zero; the variation of the tail is then exactly ``tail_variation``.
    """
    mu = (1.0 - s_star) / s_star
    if q is None:
        q = float(h_m.max_locality())
    if mu == 0.0:
        return Schedule(((0.0, h_l),), core=h_l, case=case, q=q)
    return Schedule(
        ((0.0, h_l + h_m.scaled(mu)), (t_final, h_l)),
        core=h_l,
        case=case,
        q=q,
    )


# -- instance files -------------------------------------------------------------------------


def graph_to_text(n: int, edges: tuple[tuple[int, int], ...]) -> str:
    lines = [f"n {n}"] + [f"{i} {j}" for i, j in edges]
    return "\n".join(lines) + "\n"


def graph_from_dimacs(text: str) -> tuple[int, tuple[tuple[int, int], ...]]:
    """Minimal DIMACS edge reader: 'p edge N M' header, 'e i j' lines, 1-based."""
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        fields = line.split()
        if fields[0] == "p":
            if len(fields) < 3 or fields[1] not in ("edge", "col"):
                raise ValueError(f"line {lineno}: malformed problem line {raw!r}")
            n = int(fields[2])
            continue
        if fields[0] == "e" and len(fields) == 3:
            edges.append((int(fields[1]) - 1, int(fields[2]) - 1))
            continue
        raise ValueError(f"line {lineno}: unrecognized DIMACS line {raw!r}")
    if n is None:
        raise ValueError("DIMACS text is missing the problem line")
    return n, tuple(edges)


def graph_from_text(text: str) -> tuple[int, tuple[tuple[int, int], ...]]:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "n":
            n = int(fields[1])
            continue
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 'i j', got {raw!r}")
        edges.append((int(fields[0]), int(fields[1])))
    if n is None:
        raise ValueError("graph text is missing the 'n <sites>' line")
    return n, tuple(edges)


def hypergraph_to_text(inst: HypergraphInstance) -> str:
    lines = [f"n {inst.n}"]
    for edge, j in zip(inst.edges, inst.couplings):
        lines.append(f"{j} " + " ".join(str(i) for i in edge))
    return "\n".join(lines) + "\n"


def hypergraph_from_text(
    text: str, p_degree: int = 0, q_body: int = 0
) -> HypergraphInstance:
    n = None
    edges, couplings = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "n":
            n = int(fields[1])
            continue
        if len(fields) < 3:
            raise ValueError(f"line {lineno}: expected 'J i1 i2 ...', got {raw!r}")
        couplings.append(int(fields[0]))
        edges.append(tuple(int(v) for v in fields[1:]))
    if n is None:
        raise ValueError("hypergraph text is missing the 'n <sites>' line")
    qb = q_body or (len(edges[0]) if edges else 0)
    deg = [0] * n
    for e in edges:
        for i in e:
            deg[i] += 1
    pd = p_degree or (max(deg) if deg else 0)
    return HypergraphInstance(
        n=n,
        edges=tuple(edges),
        couplings=tuple(couplings),
        p_degree=pd,
        q_body=qb,
        exactly_regular=len(set(deg)) == 1 and (n * pd) % max(qb, 1) == 0,
    )


def checks_to_text(code: CodeInstance) -> str:
    lines = [f"n {code.n}"]
    for mask in code.z_checks:
        sites = [str(i) for i in range(code.n) if mask >> i & 1]
        lines.append("Z " + " ".join(sites))
    for mask in code.x_checks:
        sites = [str(i) for i in range(code.n) if mask >> i & 1]
        lines.append("X " + " ".join(sites))
    return "\n".join(lines) + "\n"


def checks_from_text(text: str) -> CodeInstance:
    n = None
    z_checks, x_checks = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "n":
            n = int(fields[1])
            continue
        if fields[0] not in ("Z", "X") or len(fields) < 2:
            raise ValueError(f"line {lineno}: expected 'Z|X i j ...', got {raw!r}")
        sites = tuple(int(v) for v in fields[1:])
        (z_checks if fields[0] == "Z" else x_checks).append(sites)
    if n is None:
        raise ValueError("check text is missing the 'n <sites>' line")
    return parity_check_code(n, z_checks, x_checks)[0]
