"""ON/OFF channel traces: synthetic generators, RSRQ thresholding and file I/O."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from aoisched.errors import IngestionError, ParameterError

DEFAULT_RSRQ_THRESHOLD_DB = -13.0

# Pattern of the bursty training channel: X ~ B(13, 0.9) OFF slots then
# Y ~ B(6, 0.9) ON slots, repeated.
DEFAULT_BURSTY = (13, 0.9, 6, 0.9)


@dataclass(frozen=True)
class ChannelTrace:
    """Binary channel states s(1..T); 1 = ON, 0 = OFF.

    Slot ``t`` (1-based) is ``states[t - 1]``.
    """

    states: tuple

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        if not states:
            raise ParameterError("channel trace must have at least one slot")
        if any(s not in (0, 1) for s in states):
            raise ParameterError("channel states must be 0 or 1")
        object.__setattr__(self, "states", states)

    @property
    def horizon(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, idx):
        return self.states[idx]

    def state(self, t: int) -> int:
        """Channel state at 1-based slot ``t``."""
        return self.states[t - 1]

    @property
    def on_slots(self) -> list[int]:
        return [t for t, s in enumerate(self.states, start=1) if s]

    @property
    def on_fraction(self) -> float:
        return sum(self.states) / len(self.states)

    def prefix(self, t: int) -> "ChannelTrace":
        return ChannelTrace(self.states[:t])

    def chunk(self, index: int, length: int) -> "ChannelTrace":
        start = index * length
        if start + length > len(self.states):
            raise ParameterError(
                f"trace of {len(self.states)} slots has no chunk {index} of length {length}"
            )
        return ChannelTrace(self.states[start:start + length])


@dataclass(frozen=True)
class BurstyPatternParams:
    off_trials: int
    off_prob: float
    on_trials: int
    on_prob: float

    def __post_init__(self):
        for name in ("off_trials", "on_trials"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ParameterError(f"{name} must be a non-negative integer, got {value!r}")
        for name in ("off_prob", "on_prob"):
            _check_prob(getattr(self, name), name)
        off_dead = self.off_trials == 0 or self.off_prob == 0
        on_dead = self.on_trials == 0 or self.on_prob == 0
        if off_dead and on_dead:
            raise ParameterError("bursty pattern blocks are always empty")

    @classmethod
    def parse(cls, text: str) -> "BurstyPatternParams":
        """Parse ``"13,0.9,6,0.9"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ParameterError(f"bursty params need 4 comma-separated values, got {text!r}")
        try:
            return cls(int(parts[0]), float(parts[1]), int(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise ParameterError(f"bad bursty params {text!r}: {exc}") from None

    def echo(self) -> str:
        return f"{self.off_trials},{self.off_prob:g},{self.on_trials},{self.on_prob:g}"

    @property
    def expected_on_fraction(self) -> float:
        on = self.on_trials * self.on_prob
        return on / (self.off_trials * self.off_prob + on)


def _check_prob(p, name="probability"):
    if isinstance(p, bool) or not isinstance(p, (int, float)) or math.isnan(p) or not 0 <= p <= 1:
        raise ParameterError(f"{name} must be in [0, 1], got {p!r}")


def _check_horizon(horizon):
    if int(horizon) != horizon or horizon < 1:
        raise ParameterError(f"horizon must be a positive integer, got {horizon!r}")


def gen_bernoulli(on_prob: float, horizon: int, seed: int) -> ChannelTrace:
    """I.i.d. channel: every slot is ON with probability ``on_prob``."""
    _check_prob(on_prob, "on_prob")
    _check_horizon(horizon)
    rng = np.random.default_rng(seed)
    draws = rng.random(horizon) < on_prob
    return ChannelTrace(tuple(int(x) for x in draws))


def gen_bursty(params: BurstyPatternParams, horizon: int, seed: int) -> ChannelTrace:
    """Concatenate independent [X x OFF, Y x ON] blocks, cut at ``horizon``."""
    _check_horizon(horizon)
    rng = np.random.default_rng(seed)
    states: list[int] = []
    while len(states) < horizon:
        x = int(rng.binomial(params.off_trials, params.off_prob))
        y = int(rng.binomial(params.on_trials, params.on_prob))
        states.extend([0] * x)
        states.extend([1] * y)
    return ChannelTrace(tuple(states[:horizon]))


def ingest_rsrq(rows: Iterable[Sequence], threshold_db: float = DEFAULT_RSRQ_THRESHOLD_DB) -> ChannelTrace:
    """Threshold RSRQ samples into ON/OFF slots.

    A slot is ON iff its RSRQ is strictly greater than ``threshold_db``;
    a sample sitting exactly on the threshold counts as OFF.
    """
    states = []
    for n, row in enumerate(rows, start=1):
        try:
            _, value = row
            rsrq = float(value)
        except (TypeError, ValueError):
            raise IngestionError(f"cannot parse RSRQ row {row!r}", line=n) from None
        if math.isnan(rsrq):
            raise IngestionError("RSRQ value is NaN", line=n)
        states.append(1 if rsrq > threshold_db else 0)
    if not states:
        raise ParameterError("RSRQ input has no rows")
    return ChannelTrace(tuple(states))


def read_rsrq_csv(path, threshold_db: float = DEFAULT_RSRQ_THRESHOLD_DB) -> ChannelTrace:
    """Read a ``timestamp,rsrq`` CSV (one row per slot) and threshold it."""
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParameterError(f"{path}: empty RSRQ file") from None
    if [h.strip().lower() for h in header] != ["timestamp", "rsrq"]:
        raise IngestionError(f"expected header 'timestamp,rsrq', got {','.join(header)!r}", line=1)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise IngestionError(f"expected 2 columns, got {len(row)}", line=lineno)
        try:
            rows.append((row[0], float(row[1])))
        except ValueError:
            raise IngestionError(f"cannot parse RSRQ value {row[1]!r}", line=lineno) from None
    return ingest_rsrq(rows, threshold_db)


def write_rsrq_csv(path, rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "rsrq"])
        for ts, value in rows:
            writer.writerow([ts, value])


def format_trace(states: Iterable[int], header: bool = True) -> str:
    states = list(states)
    lines = [f"# T={len(states)}"] if header else []
    lines.extend(str(int(s)) for s in states)
    return "\n".join(lines) + "\n"


def parse_trace(text: str, source: str = "<trace>") -> ChannelTrace:
    """Parse the one-bit-per-line format. A ``# T=<n>`` header is checked if present."""
    declared = None
    states = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip().replace(" ", "")
            if body.upper().startswith("T="):
                try:
                    declared = int(body[2:])
                except ValueError:
                    raise IngestionError(f"{source}: bad header {line!r}", line=lineno) from None
            continue
        if line not in ("0", "1"):
            raise IngestionError(f"{source}: expected 0 or 1, got {line!r}", line=lineno)
        states.append(int(line))
    if not states:
        raise ParameterError(f"{source}: no slots")
    if declared is not None and declared != len(states):
        raise IngestionError(f"{source}: header says T={declared} but found {len(states)} slots")
    return ChannelTrace(tuple(states))


def read_trace(path) -> ChannelTrace:
    return parse_trace(Path(path).read_text(), source=str(path))


def write_trace(path, trace) -> None:
    Path(path).write_text(format_trace(trace))


def synth_rsrq(trace, seed: int, threshold_db: float = DEFAULT_RSRQ_THRESHOLD_DB):
    """Fake RSRQ samples (one per slot, 1 s apart) that threshold back to ``trace``."""
    rng = np.random.default_rng(seed)
    rows = []
    for t, s in enumerate(trace.states):
        if s:
            value = threshold_db + rng.uniform(0.5, 6.0)
        else:
            value = threshold_db - rng.uniform(0.0, 7.0)
        rows.append((t, round(value, 2) if s else min(round(value, 2), threshold_db)))
    return rows
