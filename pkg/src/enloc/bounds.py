"""Analytic bounds and combinatorial quantities for energy-space spreading.

The central objects are the comparison polynomials

    f_k1(x) = prod_{j=0}^{k-1} (x + j) = sum_j c1(k, j) x^j,
    f_k2(x) = sum_j c2(k, j) x^j,

where c1 are unsigned Stirling numbers of the first kind and c2 Stirling
numbers of the second kind.  f_k2(x) equals the k-th moment of a mean-x
Poisson variable, which is what makes the Chernoff comparison below work.

Leakage bounds for a window of half-width D around the initial energy,
given a total variation budget Lambda and energy quantum Delta = 2*q*M:

    xi1(D)  = (Delta/D)**k_D * Gamma(Lambda/Delta + k_D) / Gamma(Lambda/Delta)
              with k_D = ceil((D - Lambda)/Delta)      [finite, factorial regime]
    xi2(D)  = exp(-(Lambda/Delta) * (r*ln(r) - (r - 1))),   r = D/Lambda
              [commuting-core regime, valid at finite size]

and the per-site forms epsilon1/epsilon2 are these with Lambda = lambda*n,
D = d*n.  The first-kind asymptotic exp(-(Lambda/Delta)*(r - 1 - ln r)) drops
a subleading correction and is reported as informational only; the Gamma-ratio
form is the authoritative finite-size bound.  All bounds are trivial (1) when
D <= Lambda.

Gamma ratios and exponentials are evaluated in log space so reports stay
meaningful when the bound underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .pauli import OperatorSum, ResourceLimitError, commutator

_STIRLING_MAX_N = 64


class BoundParameterError(ValueError):
    """A bound was requested outside its domain of definition."""


# -- Stirling numbers, exact integer arithmetic --------------------------------


@lru_cache(maxsize=None)
def _stirling1_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling1_row(n - 1)
    # [n, k] = [n-1, k-1] + (n-1) * [n-1, k]
    row = [0] * (n + 1)
    for k in range(n + 1):
        row[k] = (prev[k - 1] if k >= 1 else 0) + (n - 1) * (prev[k] if k < n else 0)
    return tuple(row)


@lru_cache(maxsize=None)
def _stirling2_row(n: int) -> tuple[int, ...]:
    if n == 0:
        return (1,)
    prev = _stirling2_row(n - 1)
    # {n, k} = {n-1, k-1} + k * {n-1, k}
    row = [0] * (n + 1)
    for k in range(n + 1):
        row[k] = (prev[k - 1] if k >= 1 else 0) + k * (prev[k] if k < n else 0)
    return tuple(row)


def stirling(kind: str, n: int, k: int) -> int:
    """Stirling numbers: ``'first_unsigned'`` counts permutations of n
    elements with k disjoint cycles, ``'second'`` partitions of n elements
    into k unlabeled non-empty sets.  Exact Python integers."""
    if not (0 <= k <= n <= _STIRLING_MAX_N):
        raise BoundParameterError(f"need 0 <= k <= n <= {_STIRLING_MAX_N}, got n={n}, k={k}")
    if kind == "first_unsigned":
        return _stirling1_row(n)[k]
    if kind == "second":
        return _stirling2_row(n)[k]
    raise BoundParameterError(f"unknown Stirling kind {kind!r}")


def f_poly_coeffs(kind: int, k: int) -> tuple[int, ...]:
    """Exact integer coefficients of f_k, index j holds the x^j coefficient."""
    if k < 0:
        raise BoundParameterError("k must be nonnegative")
    if kind == 1:
        return _stirling1_row(k)
    if kind == 2:
        return _stirling2_row(k)
    raise BoundParameterError(f"f_poly kind must be 1 or 2, got {kind!r}")


def f_poly(kind: int, k: int, x: float) -> float:
    """Evaluate f_k1 (rising-factorial product) or f_k2 (Poisson moment)."""
    if k < 0 or x < 0:
        raise BoundParameterError("k and x must be nonnegative")
    if kind == 1:
        out = 1.0
        for j in range(k):
            out *= x + j
        return out
    if kind == 2:
        row = _stirling2_row(k)
        # Horner from the top coefficient down.
        out = 0.0
        for c in reversed(row):
            out = out * x + c
        return out
    raise BoundParameterError(f"f_poly kind must be 1 or 2, got {kind!r}")


def log_f_poly(kind: int, k: int, x: float) -> float:
    """log f_k(x), stable for large k where the value itself overflows."""
    if k < 0 or x < 0:
        raise BoundParameterError("k and x must be nonnegative")
    if k == 0:
        return 0.0
    if x == 0.0:
        return -math.inf  # both families have no constant term for k >= 1
    if kind == 1:
        return math.lgamma(x + k) - math.lgamma(x)
    if kind == 2:
        logx = math.log(x)
        logs = [
            math.log(c) + j * logx
            for j, c in enumerate(_stirling2_row(k))
            if c > 0
        ]
        top = max(logs)
        return top + math.log(sum(math.exp(v - top) for v in logs))
    raise BoundParameterError(f"f_poly kind must be 1 or 2, got {kind!r}")


# -- leakage bounds ---------------------------------------------------------------


def delta_q(q: float, loc_norm_bound: float) -> float:
    """Energy quantum 2*q*M controlling commutator growth."""
    return 2.0 * q * loc_norm_bound


@dataclass(frozen=True)
class BoundSpec:
    """Inputs of a leakage bound in general-scaling form.

    ``Lambda`` is the total variation budget, ``Delta`` the energy quantum
    2*q*M, and ``D`` the window half-width, all in absolute energy units.
    The per-site constructor takes densities and a site count.  The bound is
    only nontrivial for D > Lambda; ``n`` is carried for reporting.
    """

    Lambda: float
    Delta: float
    D: float
    n: int | None = None

    def __post_init__(self) -> None:
        if self.Delta <= 0:
            raise BoundParameterError("Delta must be positive")
        if self.Lambda < 0 or self.D < 0:
            raise BoundParameterError("Lambda and D must be nonnegative")
        if self.n is not None and self.n < 1:
            raise BoundParameterError("n must be at least 1")

    @classmethod
    def per_site(cls, lam: float, delta: float, d: float, n: int) -> "BoundSpec":
        if n < 1:
            raise BoundParameterError("n must be at least 1")
        return cls(Lambda=lam * n, Delta=delta, D=d * n, n=n)

    @property
    def trivial(self) -> bool:
        return self.D <= self.Lambda


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bounds with their log values and echoed inputs.

    ``epsilon1_finite`` (== ``xi1``) is the Gamma-ratio bound, authoritative
    at finite size for the factorial commutator regime.
    ``epsilon1_asymptotic`` drops the subleading correction and is
    informational only.  ``epsilon2`` (== ``xi2``) is the commuting-core
    bound, valid at finite size as a Chernoff bound.
    """

    spec: BoundSpec
    trivial: bool
    log_epsilon1_finite: float
    log_epsilon1_asymptotic: float
    log_epsilon2: float
    k_d: int | None

    @property
    def epsilon1_finite(self) -> float:
        return math.exp(min(self.log_epsilon1_finite, 0.0))

    @property
    def epsilon1_asymptotic(self) -> float:
        return math.exp(min(self.log_epsilon1_asymptotic, 0.0))

    @property
    def epsilon2(self) -> float:
        return math.exp(min(self.log_epsilon2, 0.0))

    # General-scaling aliases.
    @property
    def xi1(self) -> float:
        return self.epsilon1_finite

    @property
    def xi2(self) -> float:
        return self.epsilon2

    def to_dict(self) -> dict:
        return {
            "inputs": {
                "Lambda": self.spec.Lambda,
                "Delta": self.spec.Delta,
                "D": self.spec.D,
                "n": self.spec.n,
            },
            "trivial": self.trivial,
            "k_d": self.k_d,
            "epsilon1_finite": self.epsilon1_finite,
            "epsilon1_asymptotic": self.epsilon1_asymptotic,
            "epsilon2": self.epsilon2,
            "log_epsilon1_finite": self.log_epsilon1_finite,
            "log_epsilon1_asymptotic": self.log_epsilon1_asymptotic,
            "log_epsilon2": self.log_epsilon2,
        }


def leakage_bound(spec: BoundSpec) -> BoundReport:
    """Evaluate the full bound family for one parameter point.

    Returns the trivial report (all bounds 1) when D <= Lambda, with the
    ``trivial`` flag set, matching the regime where no universal bound
    exists.
    """
    if spec.trivial:
        return BoundReport(
            spec=spec,
            trivial=True,
            log_epsilon1_finite=0.0,
            log_epsilon1_asymptotic=0.0,
            log_epsilon2=0.0,
            k_d=None,
        )
    Lam, Dlt, D = spec.Lambda, spec.Delta, spec.D
    k_d = math.ceil((D - Lam) / Dlt)
    if Lam == 0.0:
        # No variation: nothing leaks.
        return BoundReport(
            spec=spec,
            trivial=False,
            log_epsilon1_finite=-math.inf,
            log_epsilon1_asymptotic=-math.inf,
            log_epsilon2=-math.inf,
            k_d=k_d,
        )
    x = Lam / Dlt
    log_e1_fin = k_d * math.log(Dlt / D) + math.lgamma(x + k_d) - math.lgamma(x)
    r = D / Lam
    log_e1_asy = -x * (r - 1.0 - math.log(r))
    log_e2 = -x * (r * math.log(r) - (r - 1.0))
    return BoundReport(
        spec=spec,
        trivial=False,
        log_epsilon1_finite=log_e1_fin,
        log_epsilon1_asymptotic=log_e1_asy,
        log_epsilon2=log_e2,
        k_d=k_d,
    )


def markov_min_k(moments: list[float], D: float) -> tuple[int, float]:
    """Best moment bound min_k sqrt(G_2k)/D^k over the supplied moments.

    ``moments[i]`` holds G_{2(i+1)}; no extrapolation beyond the list.
    Returns (k_star, bound) with the smallest k on ties.
    """
    if not moments:
        raise BoundParameterError("need at least one moment")
    if D <= 0:
        raise BoundParameterError("D must be positive")
    best_k, best_log = 1, math.inf
    logD = math.log(D)
    for i, g in enumerate(moments):
        if g < 0:
            raise BoundParameterError(f"negative moment G_{2 * (i + 1)}")
        k = i + 1
        log_val = (0.5 * math.log(g) if g > 0 else -math.inf) - k * logD
        if log_val < best_log - 1e-15:
            best_k, best_log = k, log_val
    return best_k, math.exp(best_log) if best_log > -math.inf else 0.0


def chernoff_poisson_bound(x: float, y: float) -> float:
    """inf_tau E[exp(tau*Y)] * exp(-y*tau) for Y ~ Poisson(x).

    The optimum sits at tau = ln(y/x) for y > x, giving
    exp(-x*(r*ln(r) - (r - 1))) with r = y/x; for y <= x the infimum over
    tau >= 0 is at tau = 0 and the bound is 1.  Dominates the best integer
    moment bound min_k f_k2(x)/y^k.
    """
    if x < 0 or y <= 0:
        raise BoundParameterError("need x >= 0 and y > 0")
    if x == 0.0:
        return 0.0
    r = y / x
    if r <= 1.0:
        return 1.0
    return math.exp(-x * (r * math.log(r) - (r - 1.0)))


# -- nested commutators -------------------------------------------------------------


_NESTED_MAX_M = 6
_NESTED_MAX_N = 8


def nested_commutator(
    h: OperatorSum, v: OperatorSum, m: int, term_cap: int = 500_000
) -> OperatorSum:
    """Exact ad_h^m(v) in the Pauli algebra.

    Guarded against term blow-up: m <= 6 and n <= 8, plus a hard cap on the
    intermediate term count.
    """
    if m < 0 or m > _NESTED_MAX_M:
        raise BoundParameterError(f"m must be in [0, {_NESTED_MAX_M}]")
    if h.n_sites > _NESTED_MAX_N:
        raise ResourceLimitError(
            f"nested commutators capped at n={_NESTED_MAX_N}, got {h.n_sites}"
        )
    out = v
    for _ in range(m):
        out = commutator(h, out)
        if len(out) > term_cap:
            raise ResourceLimitError(
                f"term count {len(out)} exceeded cap {term_cap}"
            )
    return out


def nested_commutator_bound(
    case: str,
    m: int,
    v_norm: float,
    M: float,
    q: float | None = None,
    p: int | None = None,
    q_star: float | None = None,
) -> float:
    """Norm bound on ad^m matching one of the three growth regimes.

    * ``'strict'``   -- q is the joint locality of the pair: m! * (2qM)^m * |V|_X.
      With ``p`` given (p-local generator, q-local argument) the sharper
      form applies: m! * (2(p-1)M)^m for q <= p-1, and the Gamma-ratio
      refinement for q > p-1.
    * ``'commuting'``-- mutually commuting generator, q-local argument:
      (2qM)^m * |V|_X with no factorial.
    * ``'quasi'``    -- mutually commuting generator, quasi-q*-local argument:
      m! * (2 q* M)^m * |V|_{q*-X}.
    """
    if m < 0:
        raise BoundParameterError("m must be nonnegative")
    if M < 0 or v_norm < 0:
        raise BoundParameterError("M and v_norm must be nonnegative")
    if m == 0:
        return v_norm
    if case == "strict":
        if p is not None:
            if p < 2:
                raise BoundParameterError("strict case with p needs p >= 2")
            if q is None:
                raise BoundParameterError("strict case with p also needs q")
            base = delta_q(p - 1, M)
            if q <= p - 1:
                return math.factorial(m) * base**m * v_norm
            ratio = q / (p - 1)
            return math.exp(math.lgamma(ratio + m) - math.lgamma(ratio)) * base**m * v_norm
        if q is None:
            raise BoundParameterError("strict case needs q (joint locality)")
        return math.factorial(m) * delta_q(q, M) ** m * v_norm
    if case == "commuting":
        if q is None:
            raise BoundParameterError("commuting case needs q")
        return delta_q(q, M) ** m * v_norm
    if case == "quasi":
        if q_star is None:
            raise BoundParameterError("quasi case needs q_star")
        return math.factorial(m) * delta_q(q_star, M) ** m * v_norm
    raise BoundParameterError(f"unknown case tag {case!r}")
