"""TCP-ACK reformulation: ACK-problem costs, conversions and LP certificates.

The integer ACK problem has variables d(t) and z_i(t) (packet i still
unacknowledged at slot t); its LP relaxation has the dual y_i(t) in [0, 1]
with one constraint per slot::

    s(t) * sum_{i <= t} sum_{tau >= t} y_i(tau) <= c

Everything here is exact: costs and dual values are Fractions or ints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from aoisched.aoi import CostBreakdown, Schedule, as_cost, format_number
from aoisched.errors import ConversionError, IngestionError, ParameterError

MAX_WITNESSES = 20


@dataclass(frozen=True)
class AckSolution:
    """Integer ACK-problem solution: ACK slots plus the set of (i, t) with z_i(t) = 1."""

    ack_times: tuple
    unacked: frozenset
    horizon: int

    def __post_init__(self):
        acks = tuple(int(t) for t in self.ack_times)
        if any(b <= a for a, b in zip(acks, acks[1:])):
            raise ParameterError("ack_times must be strictly increasing")
        if acks and not (1 <= acks[0] and acks[-1] <= self.horizon):
            raise ParameterError("ack_times outside [1, horizon]")
        object.__setattr__(self, "ack_times", acks)
        object.__setattr__(self, "unacked", frozenset(self.unacked))

    @property
    def holding_cost(self) -> int:
        return len(self.unacked)


@dataclass(frozen=True)
class DualSolution:
    """Sparse dual assignment (i, t) -> y_i(t); absent entries are 0."""

    values: Mapping

    def total(self):
        return sum(self.values.values(), Fraction(0))

    def scaled(self, factor) -> "DualSolution":
        factor = Fraction(factor)
        return DualSolution({k: v * factor for k, v in self.values.items()})


@dataclass(frozen=True)
class IntervalBound:
    """Primal/dual sums of one ACK interval [start, end]."""

    start: int
    end: int
    primal: Fraction
    dual: Fraction
    acked: bool

    @property
    def ratio(self):
        if self.dual == 0:
            return None
        return Fraction(self.primal) / self.dual


@dataclass(frozen=True)
class PrimalDualCertificate:
    """Everything a primal-dual scheduler produced for one run.

    ``ack_solution`` and ``dual`` are ``None`` when the run did not record
    variable assignments; interval sums and totals are always present.
    """

    cost: Fraction
    horizon: int
    ack_times: tuple
    intervals: tuple
    ack_solution: AckSolution | None = None
    dual: DualSolution | None = None

    @property
    def primal_total(self):
        return sum((iv.primal for iv in self.intervals), Fraction(0))

    @property
    def dual_total(self):
        return sum((iv.dual for iv in self.intervals), Fraction(0))

    @property
    def has_entries(self) -> bool:
        return self.ack_solution is not None and self.dual is not None


@dataclass
class Report:
    """Outcome of a certificate check; violations are data, not exceptions."""

    name: str
    ok: bool
    violations: list = field(default_factory=list)
    detail: str = ""

    def __bool__(self):
        return self.ok


def ack_cost(sol: AckSolution, cost) -> CostBreakdown:
    c = as_cost(cost)
    return CostBreakdown(c * len(sol.ack_times), sol.holding_cost)


def _effective_acks(states, ack_times):
    return [t for t in ack_times if states[t - 1]]


def schedule_to_ack_solution(trace, schedule, cost=None) -> AckSolution:
    """Minimal-z ACK solution for an ON-only schedule (same total cost)."""
    states = trace.states
    d = schedule.decisions if isinstance(schedule, Schedule) else tuple(schedule)
    if len(d) != len(states):
        raise ParameterError(f"schedule has {len(d)} slots but trace has {len(states)}")
    bad = [t for t, (s, x) in enumerate(zip(states, d), start=1) if x and not s]
    if bad:
        raise ConversionError(f"schedule transmits on OFF slots {bad[:MAX_WITNESSES]}")
    unacked = set()
    last = 0
    for t in range(1, len(states) + 1):
        if d[t - 1]:
            last = t
        else:
            unacked.update((i, t) for i in range(last + 1, t + 1))
    return AckSolution(tuple(t for t, x in enumerate(d, start=1) if x), frozenset(unacked), len(states))


def ack_solution_to_schedule(sol: AckSolution) -> Schedule:
    return Schedule.from_times(sol.ack_times, sol.horizon)


def check_primal_feasible(trace, sol: AckSolution) -> Report:
    """z_i(t) + sum_{tau=i..t} s(tau) d(tau) >= 1 for all 1 <= i <= t <= T."""
    states = trace.states
    horizon = len(states)
    violations = []
    by_slot: dict[int, set] = {}
    for i, t in sol.unacked:
        if not (1 <= i <= t <= horizon):
            violations.append(("out_of_range", i, t))
            continue
        by_slot.setdefault(t, set()).add(i)
    if sol.horizon != horizon:
        violations.append(("horizon", sol.horizon, horizon))
    acks = set(_effective_acks(states, sol.ack_times)) if sol.horizon == horizon else set()
    last_ack = 0
    for t in range(1, horizon + 1):
        if t in acks:
            last_ack = t
        needed = t - last_ack
        if not needed:
            continue
        have = by_slot.get(t, ())
        count = sum(1 for i in have if i > last_ack)
        if count < needed:
            missing = [(i, t) for i in range(last_ack + 1, t + 1) if i not in have]
            violations.extend(missing[:MAX_WITNESSES - len(violations)])
            if len(violations) >= MAX_WITNESSES:
                break
    return Report("primal_feasible", not violations, violations[:MAX_WITNESSES])


def dual_load(horizon: int, dual: DualSolution) -> list:
    """load[t] = sum_{i <= t} sum_{tau >= t} y_i(tau), for t = 1..T (index 0 unused)."""
    diff = [0] * (horizon + 2)
    for (i, tau), y in dual.values.items():
        diff[i] += y
        diff[tau + 1] -= y
    load = [0] * (horizon + 1)
    acc = 0
    for t in range(1, horizon + 1):
        acc += diff[t]
        load[t] = acc
    return load


def check_dual_feasible(trace, dual: DualSolution, cost, slack=1) -> Report:
    """s(t) * load(t) <= slack * c at every slot and 0 <= y <= 1."""
    c = as_cost(cost)
    slack = Fraction(slack)
    if slack < 1:
        raise ParameterError(f"slack must be >= 1, got {slack}")
    states = trace.states
    horizon = len(states)
    violations = []
    for (i, tau), y in dual.values.items():
        if not (1 <= i <= tau <= horizon):
            violations.append(("out_of_range", i, tau))
        elif not 0 <= y <= 1:
            violations.append(("range", i, tau, y))
        if len(violations) >= MAX_WITNESSES:
            break
    if not violations:
        limit = slack * c
        load = dual_load(horizon, dual)
        worst = Fraction(0)
        for t in range(1, horizon + 1):
            if states[t - 1]:
                worst = max(worst, load[t])
                if load[t] > limit:
                    violations.append(("slot", t, load[t]))
                    if len(violations) >= MAX_WITNESSES:
                        break
        detail = f"max load {format_number(worst)} vs limit {format_number(limit)}"
    else:
        detail = "dual values out of range"
    return Report(f"dual_feasible@{format_number(slack)}", not violations, violations, detail)


def dual_objective(dual: DualSolution):
    return dual.total()


def interval_bounds_from_entries(horizon, cost, ack_times, unacked, dual_values) -> tuple:
    """Recompute per-interval P(k), D(k) by attributing each entry to its slot's interval."""
    c = as_cost(cost)
    acks = list(ack_times)
    starts = [0] + acks
    ends = acks + ([horizon] if not acks or acks[-1] < horizon else [])
    n = len(ends)
    slot_to_k = [0] * (horizon + 1)
    k = 0
    for t in range(1, horizon + 1):
        while k < n - 1 and t > ends[k]:
            k += 1
        slot_to_k[t] = k
    primal = [Fraction(0)] * n
    dual = [Fraction(0)] * n
    for j in range(len(acks)):
        primal[j] += c
    for (_, t) in unacked:
        primal[slot_to_k[t]] += 1
    for (_, t), y in dual_values.items():
        dual[slot_to_k[t]] += y
    return tuple(
        IntervalBound(starts[k] + 1, ends[k], primal[k], dual[k], k < len(acks))
        for k in range(n)
    )


def check_interval_sums(cert: PrimalDualCertificate) -> Report:
    """Stored interval sums must match the ones recomputed from the entries."""
    if not cert.has_entries:
        return Report("interval_sums", False, [], "certificate has no recorded entries")
    recomputed = interval_bounds_from_entries(
        cert.horizon, cert.cost, cert.ack_times, cert.ack_solution.unacked, cert.dual.values
    )
    violations = []
    if len(recomputed) != len(cert.intervals):
        violations.append(("count", len(cert.intervals), len(recomputed)))
    for k, (a, b) in enumerate(zip(cert.intervals, recomputed)):
        if (a.start, a.end, Fraction(a.primal), Fraction(a.dual)) != (b.start, b.end, b.primal, b.dual):
            violations.append((k, (a.start, a.end, a.primal, a.dual), (b.start, b.end, b.primal, b.dual)))
    return Report("interval_sums", not violations, violations[:MAX_WITNESSES])


def interval_ratio_report(cert: PrimalDualCertificate, bound) -> Report:
    """P(k) <= bound * D(k) on every interval, the trailing one included."""
    bound = Fraction(bound)
    if bound <= 0:
        raise ParameterError("bound must be positive")
    violations = []
    worst = Fraction(0)
    for k, iv in enumerate(cert.intervals):
        if iv.primal > bound * iv.dual:
            violations.append((k, iv.start, iv.end, iv.primal, iv.dual))
        if iv.dual:
            worst = max(worst, Fraction(iv.primal) / iv.dual)
    detail = f"max P(k)/D(k) = {float(worst):.4f} vs bound {float(bound):.4f}"
    return Report(f"interval_ratio<={format_number(bound)}", not violations, violations[:MAX_WITNESSES], detail)


def format_interval_table(cert: PrimalDualCertificate) -> str:
    lines = [f"{'k':>4} {'interval':>15} {'P(k)':>12} {'D(k)':>12} {'ratio':>8}"]
    for k, iv in enumerate(cert.intervals):
        ratio = iv.ratio
        r = f"{float(ratio):.4f}" if ratio is not None else "-"
        span = f"[{iv.start},{iv.end}]"
        lines.append(
            f"{k:>4} {span:>15} {format_number(iv.primal):>12} {format_number(iv.dual):>12} {r:>8}"
        )
    return "\n".join(lines)


# -- certificate (de)serialization -------------------------------------------

def certificate_to_dict(cert: PrimalDualCertificate) -> dict:
    out = {
        "c": format_number(cert.cost),
        "horizon": cert.horizon,
        "ack_times": list(cert.ack_times),
        "intervals": [
            [iv.start, iv.end, format_number(iv.primal), format_number(iv.dual), iv.acked]
            for iv in cert.intervals
        ],
        "P": format_number(cert.primal_total),
        "D": format_number(cert.dual_total),
    }
    if cert.has_entries:
        out["z"] = sorted([i, t] for i, t in cert.ack_solution.unacked)
        out["y"] = sorted([i, t, format_number(y)] for (i, t), y in cert.dual.values.items())
    return out


def certificate_from_dict(data: dict) -> PrimalDualCertificate:
    try:
        c = as_cost(data["c"])
        horizon = int(data["horizon"])
        acks = tuple(int(t) for t in data["ack_times"])
        intervals = tuple(
            IntervalBound(int(a), int(b), Fraction(p), Fraction(d), bool(acked))
            for a, b, p, d, acked in data["intervals"]
        )
        ack_solution = dual = None
        if "z" in data and "y" in data:
            ack_solution = AckSolution(acks, frozenset((int(i), int(t)) for i, t in data["z"]), horizon)
            dual = DualSolution({(int(i), int(t)): Fraction(y) for i, t, y in data["y"]})
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"malformed certificate: {exc}") from None
    return PrimalDualCertificate(c, horizon, acks, intervals, ack_solution, dual)


def save_certificate(path, cert: PrimalDualCertificate) -> None:
    with open(path, "w") as fh:
        json.dump(certificate_to_dict(cert), fh, indent=1)
        fh.write("\n")


def load_certificate(path) -> PrimalDualCertificate:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: {exc.msg}", line=exc.lineno) from None
    return certificate_from_dict(data)

