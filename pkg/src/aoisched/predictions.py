"""Prediction sources standing in for an external ML model.

A prediction is just a strictly increasing list of slots at which to ACK.
Quality is controlled by what channel the DP was solved on
(:func:`assumed_channel_prediction`) or by explicit noise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from aoisched.errors import IngestionError, ParameterError
from aoisched.offline import dp_opt


@dataclass(frozen=True)
class Prediction:
    ack_times: tuple

    def __post_init__(self):
        times = tuple(int(t) for t in self.ack_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParameterError("prediction times must be strictly increasing")
        if times and times[0] < 1:
            raise ParameterError("prediction times must be >= 1")
        object.__setattr__(self, "ack_times", times)

    def __len__(self):
        return len(self.ack_times)

    def __iter__(self):
        return iter(self.ack_times)

    def check_horizon(self, horizon: int) -> "Prediction":
        if self.ack_times and self.ack_times[-1] > horizon:
            raise ParameterError(f"prediction time {self.ack_times[-1]} outside [1, {horizon}]")
        return self


def perfect_prediction(trace, cost) -> Prediction:
    """The DP optimum of the true trace; following it costs exactly OPT."""
    _, schedule = dp_opt(trace, cost)
    return Prediction(tuple(schedule.times))


def assumed_channel_prediction(assumed_trace, cost) -> Prediction:
    """Optimal ACK times for a channel the predictor *believes* in.

    Applied to a different test trace this behaves like a model trained on
    the assumed distribution: good under no shift, poor otherwise.
    """
    return perfect_prediction(assumed_trace, cost)


def noisy_prediction(base, shift_prob: float, max_shift: int, drop_prob: float,
                     horizon: int, seed: int) -> Prediction:
    for name, p in (("shift_prob", shift_prob), ("drop_prob", drop_prob)):
        if not 0 <= p <= 1:
            raise ParameterError(f"{name} must be in [0, 1], got {p!r}")
    if max_shift < 0:
        raise ParameterError("max_shift must be >= 0")
    rng = np.random.default_rng(seed)
    out = set()
    for t in getattr(base, "ack_times", base):
        if rng.random() < drop_prob:
            continue
        if max_shift and rng.random() < shift_prob:
            t += int(rng.integers(-max_shift, max_shift + 1))
        out.add(min(max(t, 1), horizon))
    return Prediction(tuple(sorted(out)))


def format_prediction(prediction) -> str:
    return "[" + ",".join(str(t) for t in getattr(prediction, "ack_times", prediction)) + "]"


_LIST_RE = re.compile(r"^\[\s*(\d+(\s*,\s*\d+)*)?\s*\]$")


def parse_prediction(text: str, horizon: int | None = None, source: str = "<prediction>") -> Prediction:
    body = text.strip()
    if "\n" in body or not _LIST_RE.match(body):
        raise IngestionError(f"{source}: expected a single bracketed list like [2,4]", line=1)
    inner = body[1:-1].strip()
    times = tuple(int(x) for x in inner.split(",")) if inner else ()
    try:
        pred = Prediction(times)
        if horizon is not None:
            pred.check_horizon(horizon)
    except ParameterError as exc:
        raise IngestionError(f"{source}: {exc}", line=1) from None
    return pred


def load_prediction(path, horizon: int | None = None) -> Prediction:
    return parse_prediction(Path(path).read_text(), horizon, source=str(path))


def save_prediction(prediction, path) -> None:
    Path(path).write_text(format_prediction(prediction) + "\n")
