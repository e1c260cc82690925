"""Ground-truth cost model: AoI evolution and total cost of a schedule."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

from aoisched.errors import ParameterError


def as_cost(value) -> Fraction:
    """Convert a transmission cost to an exact rational.

    Floats go through their shortest decimal repr, so ``3.7`` becomes
    ``37/10`` rather than the binary expansion.
    """
    if isinstance(value, bool):
        raise ParameterError(f"invalid cost {value!r}")
    if isinstance(value, Fraction):
        c = value
    elif isinstance(value, Rational):
        c = Fraction(int(value.numerator), int(value.denominator))
    elif isinstance(value, float):
        c = Fraction(repr(value))
    elif isinstance(value, str):
        try:
            c = Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ParameterError(f"invalid cost {value!r}") from None
    else:
        raise ParameterError(f"invalid cost {value!r}")
    if c <= 0:
        raise ParameterError(f"cost must be positive, got {c}")
    return c


def format_number(x) -> str:
    """Render an exact value compactly for reports ("7", "37/10")."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Schedule:
    """Transmission decisions d(1..T)."""

    decisions: tuple

    def __post_init__(self):
        decisions = tuple(int(d) for d in self.decisions)
        if any(d not in (0, 1) for d in decisions):
            raise ParameterError("decisions must be 0 or 1")
        object.__setattr__(self, "decisions", decisions)

    @classmethod
    def from_times(cls, times: Iterable[int], horizon: int) -> "Schedule":
        d = [0] * horizon
        for t in times:
            if not 1 <= t <= horizon:
                raise ParameterError(f"transmission slot {t} outside [1, {horizon}]")
            d[t - 1] = 1
        return cls(tuple(d))

    @property
    def horizon(self) -> int:
        return len(self.decisions)

    @property
    def times(self) -> list[int]:
        return [t for t, d in enumerate(self.decisions, start=1) if d]

    def __len__(self):
        return len(self.decisions)

    def __iter__(self):
        return iter(self.decisions)


@dataclass(frozen=True)
class CostBreakdown:
    transmission_cost: Fraction
    staleness_cost: int
    off_slot_transmissions: int = 0

    @property
    def total(self) -> Fraction:
        return self.transmission_cost + self.staleness_cost

    def as_tuple(self):
        return (self.transmission_cost, self.staleness_cost, self.total)


def _decisions(schedule) -> Sequence[int]:
    return schedule.decisions if isinstance(schedule, Schedule) else tuple(schedule)


def _states(trace) -> Sequence[int]:
    return trace.states if hasattr(trace, "states") else tuple(trace)


def evolve_aoi(trace, schedule) -> list[int]:
    """a(t) = 0 if s(t) d(t) = 1 else a(t-1) + 1, with a(0) = 0."""
    s = _states(trace)
    d = _decisions(schedule)
    if len(s) != len(d):
        raise ParameterError(f"schedule has {len(d)} slots but trace has {len(s)}")
    ages = []
    age = 0
    for st, dt in zip(s, d):
        age = 0 if st and dt else age + 1
        ages.append(age)
    return ages


def evaluate_schedule(trace, schedule, cost) -> CostBreakdown:
    """Total cost sum_t (c d(t) + a(t)).

    Transmissions on OFF slots are legal: they pay ``c`` without resetting
    the age, and are counted in ``off_slot_transmissions``.
    """
    c = as_cost(cost)
    s = _states(trace)
    d = _decisions(schedule)
    ages = evolve_aoi(s, d)
    n_tx = sum(d)
    wasted = sum(1 for st, dt in zip(s, d) if dt and not st)
    return CostBreakdown(c * n_tx, sum(ages), wasted)


def triangle(gap: int) -> int:
    """Staleness accumulated between two consecutive resets ``gap`` slots apart."""
    return (gap - 1) * gap // 2


def tail_triangle(horizon: int, last: int) -> int:
    """Staleness over (last, horizon] after the final reset at ``last`` (0 = never)."""
    n = horizon - last
    return n * (n + 1) // 2


def staleness_from_times(times: Sequence[int], horizon: int) -> int:
    """Closed-form staleness of a schedule transmitting exactly at ON slots ``times``."""
    total = 0
    prev = 0
    for t in times:
        total += triangle(t - prev)
        prev = t
    return total + tail_triangle(horizon, prev)
