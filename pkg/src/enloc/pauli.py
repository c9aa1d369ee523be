"""Exact Pauli-string algebra on n qubits.

Operators are stored as sums of Pauli strings in the symplectic (x_mask,
z_mask) encoding: bit i of ``x_mask`` puts an X factor on site i, bit i of
``z_mask`` a Z factor, both bits a Y.  The represented operator for a mask
pair is the Hermitian Pauli string

    P(x, z) = i**popcount(x & z) * (prod_i X_i**x_i) * (prod_i Z_i**z_i),

so products and commutators are exact integer/phase arithmetic.  The Pauli
basis fixes a canonical decomposition, which makes the termwise norms below
well defined:

* ``x_norm``    -- sum of |coefficient| over terms,
* ``loc_norm``  -- max over sites of the summed |coefficient| of all terms
                   touching that site,
* ``qx_norm``   -- sum of (q+1) * exp(|support|/q) * |coefficient|, the
                   termwise norm weighted for quasi-local decay.

Everything here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
import scipy.sparse

#: Coefficients with magnitude at or below this are pruned from sums.
PRUNE_TOL = 1e-14

#: Largest qubit count for which dense 2^n x 2^n matrices are produced.
DENSE_LIMIT = 14

_I4 = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)  # i**k for k = 0..3


class DimensionMismatchError(ValueError):
    """Operands act on different numbers of sites."""


class ResourceLimitError(RuntimeError):
    """A dense or combinatorial request exceeds the configured desk-scale cap."""


class NotHermitianError(ValueError):
    """An operation requiring a Hermitian operator received a non-Hermitian one."""


def _check_same_sites(a_sites: int, b_sites: int) -> None:
    if a_sites != b_sites:
        raise DimensionMismatchError(
            f"operands act on {a_sites} and {b_sites} sites"
        )


@dataclass(frozen=True)
class PauliTerm:
    """A single Pauli string with a complex coefficient.

    ``support`` is the union of X and Z masks; ``locality`` its popcount.
    """

    n_sites: int
    x_mask: int
    z_mask: int
    coeff: complex

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        full = (1 << self.n_sites) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask has bits set beyond n_sites")

    @property
    def support(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def locality(self) -> int:
        return (self.x_mask | self.z_mask).bit_count()

    def label(self) -> str:
        """Site-0-first string such as ``'XIZY'``."""
        chars = []
        for i in range(self.n_sites):
            x = (self.x_mask >> i) & 1
            z = (self.z_mask >> i) & 1
            chars.append("IXZY"[x + 2 * z])
        return "".join(chars)

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliTerm":
        x_mask = z_mask = 0
        for i, ch in enumerate(label):
            if ch == "X":
                x_mask |= 1 << i
            elif ch == "Z":
                z_mask |= 1 << i
            elif ch == "Y":
                x_mask |= 1 << i
                z_mask |= 1 << i
            elif ch != "I":
                raise ValueError(f"invalid Pauli character {ch!r}")
        return cls(len(label), x_mask, z_mask, complex(coeff))

    def __repr__(self) -> str:
        return f"PauliTerm({self.coeff!r} * {self.label()!r})"


def mul_terms(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Exact Pauli group product a * b, masks XOR and phase tracked."""
    _check_same_sites(a.n_sites, b.n_sites)
    x = a.x_mask ^ b.x_mask
    z = a.z_mask ^ b.z_mask
    # Phase bookkeeping: P(x,z) = i^{|x&z|} X^x Z^z and Z^z1 X^x2 picks up
    # (-1)^{|z1&x2|} when commuted through.
    k = (
        (a.x_mask & a.z_mask).bit_count()
        + (b.x_mask & b.z_mask).bit_count()
        - (x & z).bit_count()
        + 2 * (a.z_mask & b.x_mask).bit_count()
    ) % 4
    return PauliTerm(a.n_sites, x, z, a.coeff * b.coeff * _I4[k])


def terms_commute(a: PauliTerm, b: PauliTerm) -> bool:
    """Two Pauli strings commute iff their symplectic product is even."""
    return ((a.x_mask & b.z_mask).bit_count() + (a.z_mask & b.x_mask).bit_count()) % 2 == 0


class OperatorSum:
    """A canonical sum of Pauli strings on a fixed number of sites.

    Terms are keyed by (x_mask, z_mask); duplicate keys merge on
    construction and coefficients below :data:`PRUNE_TOL` are dropped.
    Instances are immutable; all arithmetic returns new objects.
    """

    __slots__ = ("n_sites", "_terms")

    def __init__(self, n_sites: int, terms: Iterable[PauliTerm] = ()) -> None:
        if n_sites < 1:
            raise ValueError("n_sites must be positive")
        merged: dict[tuple[int, int], complex] = {}
        for t in terms:
            _check_same_sites(t.n_sites, n_sites)
            key = (t.x_mask, t.z_mask)
            merged[key] = merged.get(key, 0.0 + 0.0j) + complex(t.coeff)
        object.__setattr__(self, "n_sites", n_sites)
        object.__setattr__(
            self,
            "_terms",
            {k: c for k, c in sorted(merged.items()) if abs(c) > PRUNE_TOL},
        )

    def __setattr__(self, *_: object) -> None:  # pragma: no cover
        raise AttributeError("OperatorSum is immutable")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, n_sites: int) -> "OperatorSum":
        return cls(n_sites)

    @classmethod
    def identity(cls, n_sites: int, coeff: complex = 1.0) -> "OperatorSum":
        return cls(n_sites, [PauliTerm(n_sites, 0, 0, coeff)])

    @classmethod
    def from_strings(cls, n_sites: int, pairs: Iterable[tuple[complex, str]]) -> "OperatorSum":
        terms = []
        for coeff, label in pairs:
            if len(label) != n_sites:
                raise DimensionMismatchError(
                    f"label {label!r} has length {len(label)}, expected {n_sites}"
                )
            terms.append(PauliTerm.from_label(label, coeff))
        return cls(n_sites, terms)

    @classmethod
    def _from_dict(cls, n_sites: int, d: dict[tuple[int, int], complex]) -> "OperatorSum":
        out = cls.__new__(cls)
        object.__setattr__(out, "n_sites", n_sites)
        object.__setattr__(
            out, "_terms", {k: c for k, c in sorted(d.items()) if abs(c) > PRUNE_TOL}
        )
        return out

    # -- container protocol ----------------------------------------------------

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        for (x, z), c in self._terms.items():
            yield PauliTerm(self.n_sites, x, z, c)

    def coefficient(self, x_mask: int, z_mask: int) -> complex:
        return self._terms.get((x_mask, z_mask), 0.0 + 0.0j)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OperatorSum):
            return NotImplemented
        return self.n_sites == other.n_sites and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.n_sites, tuple(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"OperatorSum(n={self.n_sites}, 0)"
        parts = " + ".join(f"{c:.6g}*{PauliTerm(self.n_sites, x, z, c).label()}"
                           for (x, z), c in list(self._terms.items())[:4])
        more = "" if len(self._terms) <= 4 else f" + ... ({len(self._terms)} terms)"
        return f"OperatorSum(n={self.n_sites}, {parts}{more})"

    # -- arithmetic -------------------------------------------------------------

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        _check_same_sites(self.n_sites, other.n_sites)
        d = dict(self._terms)
        for k, c in other._terms.items():
            d[k] = d.get(k, 0.0 + 0.0j) + c
        return OperatorSum._from_dict(self.n_sites, d)

    def __sub__(self, other: "OperatorSum") -> "OperatorSum":
        return self + (-other)

    def __neg__(self) -> "OperatorSum":
        return self.scaled(-1.0)

    def scaled(self, factor: complex) -> "OperatorSum":
        return OperatorSum._from_dict(
            self.n_sites, {k: c * factor for k, c in self._terms.items()}
        )

    def __mul__(self, other: object) -> "OperatorSum":
        if isinstance(other, OperatorSum):
            _check_same_sites(self.n_sites, other.n_sites)
            d: dict[tuple[int, int], complex] = {}
            for (xa, za), ca in self._terms.items():
                for (xb, zb), cb in other._terms.items():
                    t = mul_terms(
                        PauliTerm(self.n_sites, xa, za, ca),
                        PauliTerm(self.n_sites, xb, zb, cb),
                    )
                    key = (t.x_mask, t.z_mask)
                    d[key] = d.get(key, 0.0 + 0.0j) + t.coeff
            return OperatorSum._from_dict(self.n_sites, d)
        return self.scaled(complex(other))  # type: ignore[arg-type]

    def __rmul__(self, other: object) -> "OperatorSum":
        return self.scaled(complex(other))  # type: ignore[arg-type]

    def dagger(self) -> "OperatorSum":
        return OperatorSum._from_dict(
            self.n_sites, {k: c.conjugate() for k, c in self._terms.items()}
        )

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Pauli strings are Hermitian, so this reduces to real coefficients."""
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def require_hermitian(self, tol: float = 1e-12) -> "OperatorSum":
        if not self.is_hermitian(tol):
            raise NotHermitianError("operator has complex Pauli coefficients")
        return self

    # -- structure queries -------------------------------------------------------

    def max_locality(self) -> int:
        return max(((x | z).bit_count() for (x, z) in self._terms), default=0)

    def is_diagonal(self) -> bool:
        """True when every term is Z-type (no X factors)."""
        return all(x == 0 for (x, _z) in self._terms)

    def terms_mutually_commute(self) -> bool:
        keys = list(self._terms)
        for i, (xa, za) in enumerate(keys):
            for xb, zb in keys[i + 1:]:
                if ((xa & zb).bit_count() + (za & xb).bit_count()) % 2:
                    return False
        return True

    def max_x_weight(self) -> int:
        """Largest number of bit flips any single term can cause."""
        return max((x.bit_count() for (x, _z) in self._terms), default=0)

    # -- norms ---------------------------------------------------------------------

    def x_norm(self) -> float:
        return float(sum(abs(c) for c in self._terms.values()))

    def loc_norm(self) -> float:
        per_site = [0.0] * self.n_sites
        for (x, z), c in self._terms.items():
            supp = x | z
            a = abs(c)
            while supp:
                low = supp & -supp
                per_site[low.bit_length() - 1] += a
                supp ^= low
        return max(per_site, default=0.0)

    def qx_norm(self, q: float) -> float:
        if q <= 0:
            raise ValueError("q must be positive")
        return float(
            sum(
                (q + 1.0) * math.exp((x | z).bit_count() / q) * abs(c)
                for (x, z), c in self._terms.items()
            )
        )

    def operator_norm(self) -> float:
        """Spectral norm (largest |eigenvalue|) through the dense oracle."""
        self.require_hermitian()
        if len(self._terms) == 0:
            return 0.0
        evals = np.linalg.eigvalsh(self.to_dense())
        return float(np.max(np.abs(evals)))

    def spectral_norm(self) -> float:
        """Largest singular value; works for non-Hermitian sums too.

        Nested commutators of Hermitian operators alternate between
        Hermitian and anti-Hermitian, so their norms go through here.
        """
        if len(self._terms) == 0:
            return 0.0
        return float(np.linalg.norm(self.to_dense(), 2))

    # -- dense / sparse backends ------------------------------------------------------

    def _term_action(self, x: int, z: int, coeff: complex) -> tuple[np.ndarray, np.ndarray]:
        """Column permutation and phases of coeff * P(x, z).

        P|b> = i^{|x&z|} (-1)^{|z&b|} |b ^ x>, so column b maps to row b^x.
        """
        dim = 1 << self.n_sites
        cols = np.arange(dim, dtype=np.int64)
        signs = 1.0 - 2.0 * (
            np.bitwise_count(np.bitwise_and(cols, np.int64(z))) & 1
        ).astype(np.float64)
        phase = coeff * _I4[(x & z).bit_count() % 4]
        return np.bitwise_xor(cols, np.int64(x)), phase * signs

    def to_dense(self) -> np.ndarray:
        if self.n_sites > DENSE_LIMIT:
            raise ResourceLimitError(
                f"dense matrix for n={self.n_sites} exceeds the cap of {DENSE_LIMIT}"
            )
        dim = 1 << self.n_sites
        out = np.zeros((dim, dim), dtype=np.complex128)
        cols = np.arange(dim, dtype=np.int64)
        for (x, z), c in self._terms.items():
            rows, vals = self._term_action(x, z, c)
            out[rows, cols] += vals
        return out

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        if self.n_sites > DENSE_LIMIT:
            raise ResourceLimitError(
                f"sparse matrix for n={self.n_sites} exceeds the cap of {DENSE_LIMIT}"
            )
        dim = 1 << self.n_sites
        cols = np.arange(dim, dtype=np.int64)
        row_blocks, data_blocks = [], []
        for (x, z), c in self._terms.items():
            rows, vals = self._term_action(x, z, c)
            row_blocks.append(rows)
            data_blocks.append(vals)
        if not row_blocks:
            return scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
        rows = np.concatenate(row_blocks)
        data = np.concatenate(data_blocks)
        all_cols = np.tile(cols, len(row_blocks))
        return scipy.sparse.coo_matrix(
            (data, (rows, all_cols)), shape=(dim, dim)
        ).tocsr()

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply the operator to a state vector without building a matrix."""
        dim = 1 << self.n_sites
        if vec.shape != (dim,):
            raise DimensionMismatchError(
                f"state has shape {vec.shape}, expected ({dim},)"
            )
        out = np.zeros(dim, dtype=np.complex128)
        for (x, z), c in self._terms.items():
            rows, vals = self._term_action(x, z, c)
            out[rows] += vals * vec
        return out

    def diagonal_values(self) -> np.ndarray:
        """Eigenvalues by basis state for a diagonal (Z-type) operator."""
        if not self.is_diagonal():
            raise NotHermitianError("operator is not diagonal in the Z basis")
        dim = 1 << self.n_sites
        cols = np.arange(dim, dtype=np.int64)
        out = np.zeros(dim, dtype=np.float64)
        for (x, z), c in self._terms.items():
            signs = 1.0 - 2.0 * (
                np.bitwise_count(np.bitwise_and(cols, np.int64(z))) & 1
            ).astype(np.float64)
            out += c.real * signs
        return out


def termwise_norms(op: OperatorSum, q: float | None = None) -> dict[str, float]:
    """All termwise norm families of ``op`` in one sweep."""
    out = {"x_norm": op.x_norm(), "loc_norm": op.loc_norm()}
    if q is not None:
        out["qx_norm"] = op.qx_norm(q)
    return out


def commutator(a: OperatorSum, b: OperatorSum) -> OperatorSum:
    """[a, b] = ab - ba, using the anticommutation dichotomy termwise.

    Two Pauli strings either commute or anticommute; in the latter case
    [P, Q] = 2 P Q, so only anticommuting pairs contribute.
    """
    _check_same_sites(a.n_sites, b.n_sites)
    d: dict[tuple[int, int], complex] = {}
    for (xa, za), ca in a._terms.items():
        for (xb, zb), cb in b._terms.items():
            if ((xa & zb).bit_count() + (za & xb).bit_count()) % 2 == 0:
                continue
            t = mul_terms(
                PauliTerm(a.n_sites, xa, za, ca), PauliTerm(a.n_sites, xb, zb, cb)
            )
            key = (t.x_mask, t.z_mask)
            d[key] = d.get(key, 0.0 + 0.0j) + 2.0 * t.coeff
    return OperatorSum._from_dict(a.n_sites, d)


# -- text serialization ------------------------------------------------------------


def _format_coeff(c: complex) -> str:
    if c.imag == 0.0:
        return repr(c.real)
    return repr(c).replace(" ", "")


def to_text(op: OperatorSum) -> str:
    """One term per line: ``coeff  pauli-string``; round-trips exactly."""
    lines = []
    for (x, z), c in op._terms.items():
        lines.append(f"{_format_coeff(c)}  {PauliTerm(op.n_sites, x, z, c).label()}")
    return "\n".join(lines) + ("\n" if lines else "")


def from_text(text: str, n_sites: int | None = None) -> OperatorSum:
    """Parse the output of :func:`to_text`.

    ``n_sites`` is inferred from the first Pauli string when omitted; an
    empty serialization then needs it explicitly.
    """
    pairs: list[tuple[complex, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(f"line {lineno}: expected 'coeff pauli-string', got {raw!r}")
        coeff = complex(fields[0])
        pairs.append((coeff, fields[1]))
    if n_sites is None:
        if not pairs:
            raise ValueError("empty operator text requires explicit n_sites")
        n_sites = len(pairs[0][1])
    return OperatorSum.from_strings(n_sites, pairs)
