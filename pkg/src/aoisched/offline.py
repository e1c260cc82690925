"""Offline optimal schedules: exhaustive oracles and the O(#ON * c) dynamic program."""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np

from aoisched.aoi import Schedule, as_cost, staleness_from_times, tail_triangle, triangle
from aoisched.errors import CapacityError

MAX_BRUTE_FORCE_ON = 20
MAX_BRUTE_FORCE_ACK_HORIZON = 16


def brute_force_opt(trace, cost):
    """Minimum total cost over every subset of ON slots, by enumeration.

    Staleness is computed by walking the age recursion directly, not the
    closed-form gaps the DP relies on.
    """
    c = as_cost(cost)
    states = trace.states
    on = [t for t, s in enumerate(states, start=1) if s]
    if len(on) > MAX_BRUTE_FORCE_ON:
        raise CapacityError(f"{len(on)} ON slots exceeds the brute-force limit of {MAX_BRUTE_FORCE_ON}")
    horizon = len(states)
    best = None
    best_times = ()
    for n in range(len(on) + 1):
        for times in combinations(on, n):
            chosen = set(times)
            age = stale = 0
            for t in range(1, horizon + 1):
                age = 0 if t in chosen else age + 1
                stale += age
            total = c * n + stale
            if best is None or total < best:
                best, best_times = total, times
    return best, Schedule.from_times(best_times, horizon)


def brute_force_ack_opt(trace, cost):
    """Minimum of the integer ACK problem over every d in {0,1}^T.

    For fixed d the cheapest feasible z is z_i(t) = 1 exactly when no
    effective ACK falls in [i, t], so enumerating d (OFF slots included)
    enumerates all candidate optima.  Returns (cost, ack_times).
    """
    c = as_cost(cost)
    s = np.asarray(trace.states, dtype=np.int64)
    horizon = len(s)
    if horizon > MAX_BRUTE_FORCE_ACK_HORIZON:
        raise CapacityError(f"horizon {horizon} exceeds {MAX_BRUTE_FORCE_ACK_HORIZON}")
    codes = np.arange(1 << horizon, dtype=np.int64)
    d = (codes[:, None] >> np.arange(horizon)) & 1
    effective = d * s
    cum = np.zeros((len(codes), horizon + 1), dtype=np.int64)
    np.cumsum(effective, axis=1, out=cum[:, 1:])
    holding = np.zeros(len(codes), dtype=np.int64)
    for t in range(1, horizon + 1):
        # packets i = 1..t; column i-1 of cum is the count before slot i
        holding += (cum[:, t:t + 1] - cum[:, :t] == 0).sum(axis=1)
    n_acks = d.sum(axis=1)
    # exact comparison on the common denominator
    scaled = c.numerator * n_acks + c.denominator * holding
    k = int(np.argmin(scaled))
    best = Fraction(int(scaled[k]), c.denominator)
    times = tuple(int(t) + 1 for t in np.flatnonzero(d[k]))
    return best, times


def dp_opt(trace, cost):
    """Optimal offline schedule by dynamic programming over ON slots.

    Between consecutive transmissions the staleness is a closed-form
    triangle, so the state is the index of the last transmission.  A
    transition j -> k is skipped when the first ON slot after j already
    splits the gap profitably ((o[j+1]-o[j]) * (o[k]-o[j+1]) > c), which
    never discards an optimum.

    Ties go to fewer transmissions, then to the lexicographically earliest
    transmission times.
    """
    c = as_cost(cost)
    p, q = c.numerator, c.denominator
    states = trace.states
    horizon = len(states)
    on = [t for t, s in enumerate(states, start=1) if s]
    m = len(on)
    # keys are (q * cost, number of transmissions) compared lexicographically
    best_after = [None] * m
    next_choice = [None] * m
    for j in range(m - 1, -1, -1):
        oj = on[j]
        key = (q * tail_triangle(horizon, oj), 0)
        choice = None
        if j + 1 < m:
            first_gap = on[j + 1] - oj
            for k in range(j + 1, m):
                if k > j + 1 and first_gap * (on[k] - on[j + 1]) * q > p:
                    break
                rest = best_after[k]
                cand = (q * triangle(on[k] - oj) + p + rest[0], rest[1] + 1)
                if cand < key:
                    key, choice = cand, k
        best_after[j] = key
        next_choice[j] = choice

    best = (q * tail_triangle(horizon, 0), 0)
    first = None
    if m:
        for k in range(m):
            # a transmission at on[0] splits the initial gap at profit on[0]*(on[k]-on[0])
            if k > 0 and on[0] * (on[k] - on[0]) * q > p:
                break
            rest = best_after[k]
            cand = (q * triangle(on[k]) + p + rest[0], rest[1] + 1)
            if cand < best:
                best, first = cand, k
    times = []
    k = first
    while k is not None:
        times.append(on[k])
        k = next_choice[k]
    total = Fraction(best[0], q)
    return total, Schedule.from_times(times, horizon)


def opt_cost(trace, cost) -> Fraction:
    return dp_opt(trace, cost)[0]


def schedule_cost_closed_form(times, horizon, cost) -> Fraction:
    return as_cost(cost) * len(times) + staleness_from_times(times, horizon)
