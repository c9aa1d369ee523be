"""Time-dependent Hamiltonians as piecewise-linear coefficient paths.

A schedule is an ordered list of (time, OperatorSum) knots; between knots
the coefficients interpolate linearly, so the derivative is piecewise
constant and every total-variation integral collapses to an exact sum of
knot-difference norms.  That choice makes the variation accounting exact
(no quadrature) and manifestly invariant under monotone retiming.

A schedule may carry a split into a constant commuting-core part and a
perturbation V(t) = H(t) - core, plus a declared case tag:

    1 -- q-local H(t), bounded local norm
    2 -- q-local H(t) = core + V(t) with [V, H'] = 0
    3 -- mutually commuting core, q-local H'(t), [V, H'] = 0
    4 -- mutually commuting core, quasi-q*-local H'(t), [V, H'] = 0

Tags are declared by the caller and verified, never inferred.  For tags
2-4 the local-norm budget M binds the core; for tag 1 it binds the whole
Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass

from .pauli import (
    DimensionMismatchError,
    OperatorSum,
    commutator,
    from_text,
    to_text,
)

_TIME_TOL = 1e-12


class ScheduleRangeError(ValueError):
    """A time outside [0, t_final] was requested."""


class CaseValidationError(ValueError):
    """The declared case tag's machine-checkable preconditions fail."""


@dataclass(frozen=True)
class Schedule:
    """Piecewise-linear time-dependent Hamiltonian with optional core split."""

    knots: tuple[tuple[float, OperatorSum], ...]
    core: OperatorSum | None = None
    case: int | None = None
    q: float | None = None
    q_star: float | None = None

    def __post_init__(self) -> None:
        if not self.knots:
            raise ValueError("schedule needs at least one knot")
        times = [t for t, _ in self.knots]
        if abs(times[0]) > _TIME_TOL:
            raise ValueError("first knot must sit at time 0")
        for a, b in zip(times, times[1:]):
            if b <= a:
                raise ValueError("knot times must be strictly increasing")
        n = self.knots[0][1].n_sites
        for _, op in self.knots:
            if op.n_sites != n:
                raise DimensionMismatchError("knot operators disagree on n_sites")
            op.require_hermitian()
        if self.core is not None and self.core.n_sites != n:
            raise DimensionMismatchError("core operator disagrees on n_sites")
        if self.case is not None and self.case not in (1, 2, 3, 4):
            raise ValueError(f"case tag must be 1..4, got {self.case}")
        object.__setattr__(self, "knots", tuple((float(t), op) for t, op in self.knots))

    # -- basic queries ---------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.knots[0][1].n_sites

    @property
    def t_final(self) -> float:
        return self.knots[-1][0]

    def _segment(self, t: float) -> int:
        """Index i with knot times t_i <= t <= t_{i+1}, right-open at knots."""
        if t < -_TIME_TOL or t > self.t_final + _TIME_TOL:
            raise ScheduleRangeError(f"t={t} outside [0, {self.t_final}]")
        times = [k[0] for k in self.knots]
        for i in range(len(times) - 1):
            if t < times[i + 1] - _TIME_TOL:
                return i
        return max(len(times) - 2, 0)

    def evaluate(self, t: float) -> OperatorSum:
        if len(self.knots) == 1:
            if abs(t) > _TIME_TOL:
                raise ScheduleRangeError("constant schedule is defined only at t=0")
            return self.knots[0][1]
        i = self._segment(t)
        t0, h0 = self.knots[i]
        t1, h1 = self.knots[i + 1]
        frac = (t - t0) / (t1 - t0)
        frac = min(max(frac, 0.0), 1.0)
        if frac == 0.0:
            return h0
        if frac == 1.0:
            return h1
        return h0 + (h1 - h0).scaled(frac)

    def derivative(self, t: float) -> OperatorSum:
        """Piecewise-constant slope; right-derivative at interior knots."""
        if len(self.knots) == 1:
            return OperatorSum.zero(self.n_sites)
        i = self._segment(t)
        t0, h0 = self.knots[i]
        t1, h1 = self.knots[i + 1]
        return (h1 - h0).scaled(1.0 / (t1 - t0))

    def v_part(self, t: float) -> OperatorSum:
        if self.core is None:
            raise CaseValidationError("schedule has no core/perturbation split")
        return self.evaluate(t) - self.core

    # -- total variation ---------------------------------------------------------

    def _segment_norm(self, dh: OperatorSum, norm: str, q: float | None) -> float:
        if norm == "x":
            return dh.x_norm()
        if norm == "qx":
            qq = q if q is not None else self.q_star
            if qq is None:
                raise ValueError("qx norm needs q (or a schedule q_star)")
            return dh.qx_norm(qq)
        raise ValueError(f"unknown norm {norm!r}")

    def total_variation(
        self,
        window: tuple[float, float] | None = None,
        norm: str = "x",
        q: float | None = None,
    ) -> float:
        """Exact integral of the chosen norm of dH over the window.

        Slopes are constant per segment, so each segment contributes its
        knot-difference norm scaled by the covered fraction.  Depends only
        on knot differences, hence invariant under monotone retiming and
        additive over adjacent windows.
        """
        ta, tb = window if window is not None else (0.0, self.t_final)
        if ta < -_TIME_TOL or tb > self.t_final + _TIME_TOL or tb < ta - _TIME_TOL:
            raise ScheduleRangeError(f"window ({ta}, {tb}) outside [0, {self.t_final}]")
        total = 0.0
        for (t0, h0), (t1, h1) in zip(self.knots, self.knots[1:]):
            lo, hi = max(t0, ta), min(t1, tb)
            if hi <= lo:
                continue
            total += self._segment_norm(h1 - h0, norm, q) * (hi - lo) / (t1 - t0)
        return total

    def lambda_t(self, t: float, norm: str = "x", q: float | None = None) -> float:
        """Per-site variation density accumulated on [0, t]."""
        return self.total_variation(window=(0.0, t), norm=norm, q=q) / self.n_sites

    def max_loc_norm(self) -> float:
        """max_t loc_norm(H(t)); the max sits at a knot by convexity."""
        return max(op.loc_norm() for _, op in self.knots)

    def core_loc_norm(self) -> float:
        if self.core is None:
            raise CaseValidationError("schedule has no core/perturbation split")
        return self.core.loc_norm()

    def loc_norm_budget(self) -> float:
        """The measured M entering Delta = 2qM for the declared tag."""
        if self.case == 1 or self.case is None:
            return self.max_loc_norm()
        return self.core_loc_norm()

    def energy_quantum(self) -> float:
        """Delta = 2*q*M for the declared case tag with measured M."""
        if self.case in (1, 2, 3):
            if self.q is None:
                raise CaseValidationError("case tag needs a declared q")
            return 2.0 * self.q * self.loc_norm_budget()
        if self.case == 4:
            if self.q_star is None:
                raise CaseValidationError("case 4 needs a declared q_star")
            return 2.0 * self.q_star * self.loc_norm_budget()
        raise CaseValidationError("schedule has no case tag")

    # -- case validation -----------------------------------------------------------

    def _check_locality(self, errors: list[str]) -> None:
        if self.q is None:
            errors.append("tag requires a declared locality q")
            return
        for t, op in self.knots:
            if op.max_locality() > self.q:
                errors.append(
                    f"knot at t={t} has a {op.max_locality()}-local term, q={self.q}"
                )

    def _check_derivative_locality(self, errors: list[str]) -> None:
        if self.q is None:
            errors.append("tag requires a declared locality q for H'(t)")
            return
        for (t0, h0), (t1, h1) in zip(self.knots, self.knots[1:]):
            dh = h1 - h0
            if dh.max_locality() > self.q:
                errors.append(
                    f"segment [{t0}, {t1}] slope has a {dh.max_locality()}-local term, "
                    f"q={self.q}"
                )

    def _check_v_commutes_with_slope(self, errors: list[str]) -> None:
        # [V(t), H'(t)] = 0 on a segment iff it holds at both endpoints,
        # since V interpolates linearly against the constant slope.
        for (t0, h0), (t1, h1) in zip(self.knots, self.knots[1:]):
            dh = h1 - h0
            for t, h in ((t0, h0), (t1, h1)):
                v = h - self.core  # type: ignore[operator]
                if len(commutator(v, dh)) != 0:
                    errors.append(f"[V({t}), H'] is nonzero on segment [{t0}, {t1}]")

    def validate_case(self) -> None:
        """Machine-check the declared tag's preconditions; raise on failure."""
        if self.case is None:
            raise CaseValidationError("schedule carries no case tag")
        errors: list[str] = []
        if self.case == 1:
            self._check_locality(errors)
        else:
            if self.core is None:
                errors.append("tags 2-4 require a core/perturbation split")
            else:
                if self.case == 2:
                    self._check_locality(errors)
                else:
                    if not self.core.terms_mutually_commute():
                        errors.append("core terms are not mutually commuting")
                    if self.case == 3:
                        self._check_derivative_locality(errors)
                    elif self.q_star is None:
                        errors.append("case 4 requires a declared q_star")
                self._check_v_commutes_with_slope(errors)
        if errors:
            raise CaseValidationError("; ".join(errors))


def make_static_quench(
    h0: OperatorSum,
    v0: OperatorSum,
    t_final: float = 1.0,
    case: int | None = None,
    q: float | None = None,
    q_star: float | None = None,
) -> Schedule:
    """Two-knot ramp (0, h0 + v0) -> (t_final, h0).

    The total variation equals the termwise norm of v0, which reduces the
    dynamical localization statement to the static one: an eigenstate of
    h0 + v0 is localized in the h0 spectrum with budget |v0|.
    """
    if h0.n_sites != v0.n_sites:
        raise DimensionMismatchError("h0 and v0 act on different site counts")
    if len(v0) == 0:
        return Schedule(((0.0, h0),), core=h0, case=case, q=q, q_star=q_star)
    return Schedule(
        ((0.0, h0 + v0), (t_final, h0)),
        core=h0,
        case=case,
        q=q,
        q_star=q_star,
    )


def extend_evolution(s: Schedule, t1: float, ramp: float = 1.0) -> Schedule:
    """Wrap s in core -> core+V(0) ... core+V(t1) -> core ramps.

    The extension starts from the bare core, ramps the perturbation in,
    follows s up to t1, and ramps back out.  Its total variation is
    |V(0)| + TV(s; [0, t1]) + |V(t1)|, at most twice the accumulated
    budget of s at t1.  Ramp durations are formal; the variation does not
    depend on them.
    """
    if s.core is None:
        raise CaseValidationError("extension requires a core/perturbation split")
    if t1 < 0 or t1 > s.t_final + _TIME_TOL:
        raise ScheduleRangeError(f"t1={t1} outside [0, {s.t_final}]")
    if ramp <= 0:
        raise ValueError("ramp duration must be positive")
    knots: list[tuple[float, OperatorSum]] = [(0.0, s.core)]

    def _push(t: float, op: OperatorSum) -> None:
        if knots and abs(knots[-1][0] - t) <= _TIME_TOL:
            if knots[-1][1] == op:
                return
            raise ValueError("conflicting knots at equal times")
        knots.append((t, op))

    _push(ramp, s.evaluate(0.0))
    for t, op in s.knots:
        if _TIME_TOL < t < t1 - _TIME_TOL:
            _push(ramp + t, op)
    _push(ramp + t1, s.evaluate(t1))
    _push(2 * ramp + t1, s.core)
    return Schedule(tuple(knots), core=s.core, case=s.case, q=s.q, q_star=s.q_star)


# -- schedule files ------------------------------------------------------------------


def schedule_to_text(s: Schedule) -> str:
    """Structured text: header keys, optional [core] block, ordered [knot] blocks."""
    lines = [f"n_sites = {s.n_sites}"]
    if s.case is not None:
        lines.append(f"case = {s.case}")
    if s.q is not None:
        lines.append(f"q = {s.q!r}")
    if s.q_star is not None:
        lines.append(f"q_star = {s.q_star!r}")
    if s.core is not None:
        lines.append("[core]")
        lines.append(to_text(s.core).rstrip("\n"))
    for t, op in s.knots:
        lines.append("[knot]")
        lines.append(f"time = {t!r}")
        body = to_text(op).rstrip("\n")
        if body:
            lines.append(body)
    return "\n".join(line for line in lines if line != "") + "\n"


def schedule_from_text(text: str) -> Schedule:
    header: dict[str, str] = {}
    core_lines: list[str] | None = None
    knot_blocks: list[tuple[float | None, list[str]]] = []
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[core]":
            section = "core"
            core_lines = []
            continue
        if line == "[knot]":
            section = "knot"
            knot_blocks.append((None, []))
            continue
        if "=" in line and section != "core" and (section != "knot" or line.startswith("time")):
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if section == "knot" and key == "time":
                t, body = knot_blocks[-1]
                if t is not None:
                    raise ValueError(f"line {lineno}: duplicate time in knot block")
                knot_blocks[-1] = (float(value), body)
                continue
            if section is None:
                if key not in ("n_sites", "case", "q", "q_star"):
                    raise ValueError(f"line {lineno}: unknown header key {key!r}")
                header[key] = value
                continue
            raise ValueError(f"line {lineno}: unexpected assignment {line!r}")
        if section == "core":
            core_lines.append(line)  # type: ignore[union-attr]
        elif section == "knot":
            knot_blocks[-1][1].append(line)
        else:
            raise ValueError(f"line {lineno}: content outside any block: {line!r}")
    if "n_sites" not in header:
        raise ValueError("schedule text is missing n_sites")
    n = int(header["n_sites"])
    core = from_text("\n".join(core_lines), n) if core_lines is not None else None
    knots = []
    for t, body in knot_blocks:
        if t is None:
            raise ValueError("knot block is missing its time")
        knots.append((t, from_text("\n".join(body), n)))
    return Schedule(
        tuple(knots),
        core=core,
        case=int(header["case"]) if "case" in header else None,
        q=float(header["q"]) if "q" in header else None,
        q_star=float(header["q_star"]) if "q_star" in header else None,
    )
