"""Online schedulers.

``PDOAScheduler`` and ``LAPDOAScheduler`` are step objects: feed them one
channel state per slot and they return that slot's decision, never looking
ahead.  They also build the primal (z) and dual (y) assignments of the ACK
LP so that a run can be certified afterwards.

The ACK marker M and all dual values are exact Fractions.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from fractions import Fraction

import numpy as np

from aoisched.aoi import Schedule, as_cost, evaluate_schedule
from aoisched.errors import ParameterError
from aoisched.tcp_ack import AckSolution, DualSolution, IntervalBound, PrimalDualCertificate

_ONE = Fraction(1)


def as_trust(value) -> Fraction:
    """Trust parameter lambda as an exact rational in (0, 1]."""
    if isinstance(value, float):
        lam = Fraction(repr(value))
    else:
        try:
            lam = Fraction(value)
        except (TypeError, ValueError, ZeroDivisionError):
            raise ParameterError(f"invalid trust parameter {value!r}") from None
    if not 0 < lam <= 1:
        raise ParameterError(f"trust parameter must be in (0, 1], got {lam}")
    return lam


def _online_cost(cost) -> Fraction:
    c = as_cost(cost)
    if c <= 1:
        raise ParameterError(f"online schedulers need c > 1, got {c} (transmit at every ON slot instead)")
    return c


def _as_slot_list(prediction):
    times = list(getattr(prediction, "ack_times", prediction))
    if any(int(t) != t for t in times):
        raise ParameterError("prediction times must be integers")
    times = [int(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ParameterError("prediction times must be strictly increasing")
    if times and times[0] < 1:
        raise ParameterError("prediction times must be >= 1")
    return times


class PrimalDualScheduler:
    """Shared threshold machinery; subclasses choose the per-packet update."""

    def __init__(self, cost, record: bool = True):
        self.cost = _online_cost(cost)
        self.record = record
        self.t = 0
        self.last_ack = 0  # L
        self.marker = Fraction(0)  # M
        self.last_on = 0
        self.decisions: list[int] = []
        self.ack_times: list[int] = []
        self.intervals: list[IntervalBound] = []
        self._primal = Fraction(0)
        self._dual = Fraction(0)
        self._z: set = set()
        self._y: dict = {}

    def _update(self, i: int, t: int):
        """Return (marker increment, dual value) for packet i at slot t while M < 1."""
        raise NotImplementedError

    def step(self, state: int) -> int:
        if state not in (0, 1):
            raise ParameterError(f"channel state must be 0 or 1, got {state!r}")
        t = self.t = self.t + 1
        L = self.last_ack
        updated = L  # packets L+1..updated got a regular update this slot
        i = L + 1
        while i <= t:
            if self.marker < 1:
                inc, y = self._update(i, t)
                self.marker += inc
                self._primal += 1
                self._dual += y
                updated = i
                if self.record:
                    self._z.add((i, t))
                    self._y[(i, t)] = y
            if self.marker >= 1:
                if state:
                    return self._ack(t)
                # OFF: every remaining packet stays unacknowledged this slot
                first = i + 1 if updated == i else i
                if first <= t:
                    self._primal += t - first + 1
                    if self.record:
                        self._z.update((j, t) for j in range(first, t + 1))
                break
            i += 1
        if state:
            self.last_on = t
        else:
            # packets that arrived in the current OFF run get y_i(t) = 1 if still 0
            lo = max(self.last_on, L, updated)
            if lo < t:
                self._dual += t - lo
                if self.record:
                    for j in range(lo + 1, t + 1):
                        self._y[(j, t)] = 1
        self.decisions.append(0)
        return 0

    def _ack(self, t: int) -> int:
        self._primal += self.cost
        self.intervals.append(IntervalBound(self.last_ack + 1, t, self._primal, self._dual, True))
        self._primal = Fraction(0)
        self._dual = Fraction(0)
        self.marker = Fraction(0)
        self.last_ack = t
        self.last_on = t
        self.ack_times.append(t)
        self.decisions.append(1)
        return 1

    def run(self, states) -> Schedule:
        for s in states:
            self.step(s)
        return self.schedule()

    def schedule(self) -> Schedule:
        return Schedule(tuple(self.decisions))

    def certificate(self) -> PrimalDualCertificate:
        intervals = list(self.intervals)
        if self.t > self.last_ack:
            intervals.append(IntervalBound(self.last_ack + 1, self.t, self._primal, self._dual, False))
        ack_solution = dual = None
        if self.record:
            ack_solution = AckSolution(tuple(self.ack_times), frozenset(self._z), self.t)
            dual = DualSolution(dict(self._y))
        return PrimalDualCertificate(
            self.cost, self.t, tuple(self.ack_times), tuple(intervals), ack_solution, dual
        )


class PDOAScheduler(PrimalDualScheduler):
    """Threshold scheduler: ACK at the first ON slot once holding cost reaches c.

    Each regular update adds 1/c to M.  Its dual value is
    min(1, c - c*M) evaluated with M *before* the increment, so the duals of
    an interval that reaches the threshold sum to exactly c.
    """

    def __init__(self, cost, record: bool = True):
        super().__init__(cost, record)
        self._step_inc = 1 / self.cost

    def _update(self, i, t):
        y = self.cost - self.cost * self.marker
        return self._step_inc, (1 if y >= 1 else y)


class LAPDOAScheduler(PrimalDualScheduler):
    """PDOA steered by predicted ACK times.

    A packet the prediction has already acknowledged (t >= alpha(i)) gets a
    big update, M += 1/(lambda c) with y = 1; otherwise a small update,
    M += lambda/c with y = lambda.  lambda = 1 reproduces PDOA.
    """

    def __init__(self, cost, prediction, trust, record: bool = True):
        super().__init__(cost, record)
        self.trust = as_trust(trust)
        self.prediction = _as_slot_list(prediction)
        self._big = 1 / (self.trust * self.cost)
        self._small = self.trust / self.cost
        self._y_small = 1 if self.trust == 1 else self.trust

    def alpha(self, i: int):
        """Earliest predicted ACK at or after slot i (None if there is none)."""
        k = bisect_left(self.prediction, i)
        return self.prediction[k] if k < len(self.prediction) else None

    def _update(self, i, t):
        a = self.alpha(i)
        if a is not None and t >= a:
            return self._big, 1
        return self._small, self._y_small


def pdoa_run(trace, cost, record: bool = True):
    sched = PDOAScheduler(cost, record=record)
    schedule = sched.run(trace.states)
    return schedule, sched.certificate()


def _check_prediction_range(times, horizon):
    if times and times[-1] > horizon:
        raise ParameterError(f"prediction time {times[-1]} outside [1, {horizon}]")


def lapdoa_run(trace, cost, prediction, trust, record: bool = True):
    times = _as_slot_list(prediction)
    _check_prediction_range(times, trace.horizon)
    sched = LAPDOAScheduler(cost, times, trust, record=record)
    schedule = sched.run(trace.states)
    return schedule, sched.certificate()


def follow_prediction_run(trace, prediction, cost):
    """Transmit exactly at predicted slots that turn out ON; OFF predictions are ignored.

    Returns the schedule and its cost, whose transmission part is C_A and
    staleness part is C_H.
    """
    times = _as_slot_list(prediction)
    _check_prediction_range(times, trace.horizon)
    executed = [t for t in times if trace.states[t - 1]]
    schedule = Schedule.from_times(executed, trace.horizon)
    return schedule, evaluate_schedule(trace, schedule, cost)


def srp_probability(mean_gap: float, cost) -> float:
    return min(mean_gap / math.sqrt(float(cost)), 1.0)


def srp_run(trace, cost, seed: int) -> Schedule:
    """Stationary randomized policy: transmit at each ON slot w.p. min(mu / sqrt(c), 1).

    mu = T / (number of ON slots) needs the whole trace, so this baseline is
    not online.
    """
    c = as_cost(cost)
    n_on = sum(trace.states)
    if n_on == 0:
        raise ParameterError("SRP needs at least one ON slot (mean ON gap undefined)")
    p = srp_probability(trace.horizon / n_on, c)
    rng = np.random.default_rng(seed)
    draws = rng.random(trace.horizon) < p
    return Schedule(tuple(int(s and x) for s, x in zip(trace.states, draws)))
