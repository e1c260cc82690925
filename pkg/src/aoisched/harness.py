"""Experiment driver: instance generation, certification and metric aggregation."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from aoisched.aoi import Schedule, as_cost, evaluate_schedule, format_number
from aoisched.channel import (
    DEFAULT_RSRQ_THRESHOLD_DB,
    DEFAULT_BURSTY,
    BurstyPatternParams,
    ChannelTrace,
    gen_bernoulli,
    gen_bursty,
    read_rsrq_csv,
    read_trace,
)
from aoisched.errors import AoiSchedError, ParameterError
from aoisched.offline import brute_force_opt, dp_opt
from aoisched.online import (
    as_trust,
    follow_prediction_run,
    lapdoa_run,
    pdoa_run,
    srp_run,
)
from aoisched.predictions import (
    Prediction,
    assumed_channel_prediction,
    load_prediction,
    noisy_prediction,
    perfect_prediction,
)
from aoisched.tcp_ack import (
    Report,
    check_dual_feasible,
    check_interval_sums,
    check_primal_feasible,
    interval_ratio_report,
)

DEFAULT_COST = 15
DEFAULT_HORIZON = 1000
MIXED_BERNOULLI_P = 0.32
MIXED_SEGMENT = 100
SCHEDULERS = ("pdoa", "lapdoa", "follow", "srp", "dp")
CSV_FIELDS = ("scheduler", "channel", "p_or_pattern", "c", "lambda", "quality",
              "run", "cost", "opt", "ratio", "cert_ok")


class RunError(AoiSchedError):
    """A sub-module error raised while executing one run."""

    def __init__(self, run: int, exc: Exception):
        self.run = run
        self.cause = exc
        super().__init__(f"run {run}: {type(exc).__name__}: {exc}")


def derive_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, stream]).generate_state(1, np.uint64)[0])


# -- channel and prediction specs --------------------------------------------

@dataclass(frozen=True)
class ChannelSpec:
    """``bernoulli:<p>``, ``bursty[:n,p,n,p]``, ``mixed:<quality>``, ``trace:<path>``, ``rsrq:<path>``."""

    kind: str
    on_prob: float | None = None
    bursty: BurstyPatternParams | None = None
    quality: float | None = None
    path: str | None = None

    @classmethod
    def parse(cls, text: str) -> "ChannelSpec":
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind == "bernoulli":
            try:
                p = float(arg)
            except ValueError:
                raise ParameterError(f"bad Bernoulli probability in {text!r}") from None
            if not 0 <= p <= 1:
                raise ParameterError(f"Bernoulli probability must be in [0, 1], got {p}")
            return cls("bernoulli", on_prob=p)
        if kind == "bursty":
            params = BurstyPatternParams.parse(arg) if arg else BurstyPatternParams(*DEFAULT_BURSTY)
            return cls("bursty", bursty=params)
        if kind == "mixed":
            try:
                q = float(arg)
            except ValueError:
                raise ParameterError(f"bad quality level in {text!r}") from None
            if not 0 <= q <= 100:
                raise ParameterError(f"quality level must be in [0, 100], got {q}")
            return cls("mixed", quality=q, bursty=BurstyPatternParams(*DEFAULT_BURSTY))
        if kind in ("trace", "rsrq"):
            if not arg:
                raise ParameterError(f"{kind} channel needs a file path")
            return cls(kind, path=arg)
        raise ParameterError(f"unknown channel spec {text!r}")

    def echo(self, threshold_db: float = DEFAULT_RSRQ_THRESHOLD_DB) -> str:
        if self.kind == "bernoulli":
            return f"{self.on_prob:g}"
        if self.kind in ("bursty", "mixed"):
            return self.bursty.echo()
        if self.kind == "rsrq":
            return f"{threshold_db:g}"
        return Path(self.path).name

    def __str__(self):
        if self.kind == "bernoulli":
            return f"bernoulli:{self.on_prob:g}"
        if self.kind == "bursty":
            return f"bursty:{self.bursty.echo()}"
        if self.kind == "mixed":
            return f"mixed:{self.quality:g}"
        return f"{self.kind}:{self.path}"


def mixed_pattern_runs(quality: float, runs: int, seed: int) -> set:
    """Indices of runs that are pattern sequences at the given quality level."""
    n_pattern = int(round(quality * runs / 100))
    order = np.random.default_rng(derive_seed(seed, 7)).permutation(runs)
    return set(int(r) for r in order[:n_pattern])


@dataclass(frozen=True)
class PredictionSpec:
    """``perfect``, ``assumed[:<channel spec>]``, ``noisy:shift,max_shift,drop``, ``file:<path>``, ``empty``, ``all``."""

    kind: str
    channel: ChannelSpec | None = None
    noise: tuple | None = None
    path: str | None = None

    @classmethod
    def parse(cls, text: str) -> "PredictionSpec":
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind in ("perfect", "empty", "all"):
            return cls(kind)
        if kind == "assumed":
            return cls(kind, channel=ChannelSpec.parse(arg) if arg else None)
        if kind == "noisy":
            parts = arg.split(",")
            if len(parts) != 3:
                raise ParameterError("noisy prediction needs shift_prob,max_shift,drop_prob")
            try:
                noise = (float(parts[0]), int(parts[1]), float(parts[2]))
            except ValueError:
                raise ParameterError(f"bad noisy prediction spec {text!r}") from None
            return cls(kind, noise=noise)
        if kind == "file":
            return cls(kind, path=arg)
        raise ParameterError(f"unknown prediction spec {text!r}")

    def __str__(self):
        if self.kind == "assumed" and self.channel is not None:
            return f"assumed:{self.channel}"
        if self.kind == "noisy":
            return "noisy:{},{},{}".format(*self.noise)
        if self.kind == "file":
            return f"file:{self.path}"
        return self.kind


# -- configuration ------------------------------------------------------------

@dataclass
class ExperimentConfig:
    scheduler: str = "pdoa"
    channel: str = "bernoulli:0.5"
    c: Fraction = field(default_factory=lambda: Fraction(DEFAULT_COST))
    horizon: int | None = None  # synthetic channels default to DEFAULT_HORIZON, files to their length
    runs: int = 1
    seed: int = 0
    trust: Fraction | None = None
    prediction: str | None = None
    certificates: bool = False
    rsrq_threshold: float = DEFAULT_RSRQ_THRESHOLD_DB

    def __post_init__(self):
        self.scheduler = self.scheduler.lower()
        if self.scheduler not in SCHEDULERS:
            raise ParameterError(f"unknown scheduler {self.scheduler!r}; choose from {', '.join(SCHEDULERS)}")
        self.c = as_cost(self.c)
        if self.runs < 1:
            raise ParameterError("runs must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ParameterError("horizon must be >= 1")
        self.channel_spec = ChannelSpec.parse(self.channel)
        if self.channel_spec.kind in ("bernoulli", "bursty", "mixed") and self.horizon is None:
            self.horizon = MIXED_SEGMENT if self.channel_spec.kind == "mixed" else DEFAULT_HORIZON
        if self.scheduler == "lapdoa":
            if self.trust is None:
                raise ParameterError("lapdoa needs a trust parameter (--lambda)")
            self.trust = as_trust(self.trust)
        if self.scheduler in ("lapdoa", "follow"):
            self.prediction = self.prediction or "perfect"
        self.prediction_spec = PredictionSpec.parse(self.prediction) if self.prediction else None

    @property
    def quality(self):
        return self.channel_spec.quality

    def to_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "channel": self.channel,
            "c": format_number(self.c),
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "lambda": format_number(self.trust) if self.trust is not None else None,
            "prediction": self.prediction,
            "certificates": self.certificates,
            "rsrq_threshold": self.rsrq_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"scheduler", "channel", "c", "horizon", "runs", "seed", "lambda",
                 "trust", "prediction", "certificates", "rsrq_threshold"}
        unknown = set(data) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if "lambda" in kwargs:
            kwargs["trust"] = kwargs.pop("lambda")
        return cls(**kwargs)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


# -- single run ----------------------------------------------------------------

def make_trace(spec: ChannelSpec, horizon, run: int, seed: int, runs: int = 1,
               threshold_db: float = DEFAULT_RSRQ_THRESHOLD_DB) -> ChannelTrace:
    run_seed = seed + run
    if spec.kind == "bernoulli":
        return gen_bernoulli(spec.on_prob, horizon, run_seed)
    if spec.kind == "bursty":
        return gen_bursty(spec.bursty, horizon, run_seed)
    if spec.kind == "mixed":
        if run in mixed_pattern_runs(spec.quality, runs, seed):
            return gen_bursty(spec.bursty, horizon, run_seed)
        return gen_bernoulli(MIXED_BERNOULLI_P, horizon, derive_seed(run_seed, 1))
    full = read_trace(spec.path) if spec.kind == "trace" else read_rsrq_csv(spec.path, threshold_db)
    if horizon is None:
        if runs != 1:
            raise ParameterError("file channels with several runs need --T to split the file")
        return full
    return full.chunk(run, horizon)


def make_prediction(spec: PredictionSpec, trace: ChannelTrace, cost, run: int, seed: int,
                    channel: ChannelSpec | None = None) -> Prediction:
    run_seed = seed + run
    horizon = trace.horizon
    if spec.kind == "perfect":
        return perfect_prediction(trace, cost)
    if spec.kind == "empty":
        return Prediction(())
    if spec.kind == "all":
        return Prediction(tuple(range(1, horizon + 1)))
    if spec.kind == "assumed":
        assumed = spec.channel
        if assumed is None:
            if channel is None or channel.bursty is None:
                raise ParameterError("'assumed' without a channel needs a bursty or mixed test channel")
            assumed = ChannelSpec("bursty", bursty=channel.bursty)
        return assumed_channel_prediction(make_trace(assumed, horizon, run, seed), cost)
    if spec.kind == "noisy":
        shift, max_shift, drop = spec.noise
        return noisy_prediction(perfect_prediction(trace, cost), shift, max_shift, drop,
                                horizon, derive_seed(run_seed, 2))
    if spec.kind == "file":
        return load_prediction(spec.path, horizon)
    raise ParameterError(f"unknown prediction kind {spec.kind!r}")


def certify(trace, schedule, cert, cost, opt, trust=None, prediction_cost=None) -> list[Report]:
    """Every check a primal-dual run must pass.

    ``trust`` None means PDOA; otherwise LAPDOA with that lambda, whose dual
    is only feasible up to a factor (c+1)/c.  ``prediction_cost`` is the
    (C_A, C_H) split of following the prediction, for the consistency bound.
    """
    c = as_cost(cost)
    cost_now = evaluate_schedule(trace, schedule, c).total
    P, D = cert.primal_total, cert.dual_total
    reports = []
    if cert.has_entries:
        reports.append(check_primal_feasible(trace, cert.ack_solution))
        reports.append(check_interval_sums(cert))
    if trust is None:
        if cert.has_entries:
            reports.append(check_dual_feasible(trace, cert.dual, c, 1))
        reports.append(interval_ratio_report(cert, 3))
        chain_ok = D <= opt <= cost_now <= P
        reports.append(Report("weak_duality_chain", chain_ok, [] if chain_ok else [(D, opt, cost_now, P)],
                              f"D={format_number(D)} <= OPT={format_number(opt)} <= "
                              f"cost={format_number(cost_now)} <= P={format_number(P)}"))
        ok = cost_now <= 3 * opt
        reports.append(Report("cost<=3*OPT", ok, [] if ok else [(cost_now, opt)]))
        return reports
    lam = as_trust(trust)
    scale = c / (c + 1)
    if cert.has_entries:
        reports.append(check_dual_feasible(trace, cert.dual, c, (c + 1) / c))
        scaled = check_dual_feasible(trace, cert.dual.scaled(scale), c, 1)
        scaled.name = "scaled_" + scaled.name
        reports.append(scaled)
    reports.append(interval_ratio_report(cert, 3 / lam))
    chain_ok = scale * D <= opt <= cost_now <= P
    reports.append(Report("weak_duality_chain", chain_ok, [] if chain_ok else [(scale * D, opt, cost_now, P)],
                          f"c/(c+1)*D={format_number(scale * D)} <= OPT={format_number(opt)} <= "
                          f"cost={format_number(cost_now)} <= P={format_number(P)}"))
    robust = robustness_bound(c, lam) * opt
    ok = cost_now <= robust
    reports.append(Report("robustness", ok, [] if ok else [(cost_now, robust)],
                          f"cost={format_number(cost_now)} <= {float(robust):.4f}"))
    if prediction_cost is not None:
        bound = consistency_bound(c, lam, *prediction_cost)
        ok = cost_now <= bound
        reports.append(Report("consistency", ok, [] if ok else [(cost_now, bound)],
                              f"cost={format_number(cost_now)} <= {float(bound):.4f}"))
    return reports


def robustness_bound(cost, trust) -> Fraction:
    c, lam = as_cost(cost), as_trust(trust)
    return 3 / lam * (c + 1) / c


def consistency_bound(cost, trust, ack_cost, holding_cost) -> Fraction:
    """Cost bound relative to following the prediction (ACK cost C_A, holding cost C_H)."""
    c, lam = as_cost(cost), as_trust(trust)
    if lam <= 1 / c:
        return (1 + lam) * holding_cost + ack_cost
    return (lam + 2) * holding_cost + (1 / lam + 2) * math.ceil(lam * c) * Fraction(ack_cost) / c


@dataclass
class MetricsRow:
    scheduler: str
    channel: str
    p_or_pattern: str
    c: Fraction
    trust: Fraction | None
    quality: float | None
    run: int
    cost: Fraction
    opt: Fraction
    cert_ok: bool | None = None
    failed_checks: tuple = ()

    @property
    def ratio(self) -> float:
        if self.opt == 0:
            return 1.0 if self.cost == 0 else math.inf
        return float(Fraction(self.cost) / self.opt)

    def csv_record(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "channel": self.channel,
            "p_or_pattern": self.p_or_pattern,
            "c": format_number(self.c),
            "lambda": "" if self.trust is None else f"{float(self.trust):g}",
            "quality": "" if self.quality is None else f"{self.quality:g}",
            "run": self.run,
            "cost": repr(float(self.cost)),
            "opt": repr(float(self.opt)),
            "ratio": repr(self.ratio),
            "cert_ok": "" if self.cert_ok is None else str(self.cert_ok).lower(),
        }


def scheduler_label(config: ExperimentConfig) -> str:
    if config.scheduler == "lapdoa":
        return f"lapdoa({float(config.trust):g})"
    return config.scheduler


def run_one(config: ExperimentConfig, run: int) -> MetricsRow:
    try:
        return _run_one(config, run)
    except AoiSchedError as exc:
        raise RunError(run, exc) from exc


def _run_one(config: ExperimentConfig, run: int) -> MetricsRow:
    spec = config.channel_spec
    c = config.c
    trace = make_trace(spec, config.horizon, run, config.seed, config.runs, config.rsrq_threshold)
    opt, opt_schedule = dp_opt(trace, c)
    cert_ok = None
    failed = ()
    kind = config.scheduler
    if kind in ("lapdoa", "follow"):
        prediction = make_prediction(config.prediction_spec, trace, c, run, config.seed, spec)
    if kind == "pdoa":
        schedule, cert = pdoa_run(trace, c, record=config.certificates)
    elif kind == "lapdoa":
        schedule, cert = lapdoa_run(trace, c, prediction, config.trust, record=config.certificates)
    elif kind == "follow":
        schedule, _ = follow_prediction_run(trace, prediction, c)
    elif kind == "srp":
        schedule = srp_run(trace, c, derive_seed(config.seed + run, 3))
    else:
        schedule = opt_schedule
    cost = evaluate_schedule(trace, schedule, c).total
    if config.certificates and kind in ("pdoa", "lapdoa"):
        pred_cost = None
        if kind == "lapdoa":
            _, fc = follow_prediction_run(trace, prediction, c)
            pred_cost = (fc.transmission_cost, fc.staleness_cost)
        reports = certify(trace, schedule, cert, c, opt,
                          config.trust if kind == "lapdoa" else None, pred_cost)
        failed = tuple(r.name for r in reports if not r.ok)
        cert_ok = not failed
    return MetricsRow(scheduler_label(config), spec.kind, spec.echo(config.rsrq_threshold), c,
                      config.trust if kind == "lapdoa" else None, spec.quality, run, cost, opt,
                      cert_ok, failed)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> list[MetricsRow]:
    """Execute every run; rows come back ordered by run index whatever ``jobs`` is."""
    if jobs <= 1:
        return [run_one(config, r) for r in range(config.runs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_one, [config] * config.runs, range(config.runs)))


@dataclass
class Summary:
    scheduler: str
    channel: str
    p_or_pattern: str
    quality: float | None
    runs: int
    worst_ratio: float
    avg_ratio: float
    cert_failures: int


def summarize(rows) -> Summary:
    rows = sorted(rows, key=lambda r: r.run)
    if not rows:
        raise ParameterError("no rows to summarize")
    ratios = [r.ratio for r in rows]
    first = rows[0]
    return Summary(first.scheduler, first.channel, first.p_or_pattern, first.quality, len(rows),
                   max(ratios), sum(ratios) / len(ratios),
                   sum(1 for r in rows if r.cert_ok is False))


def write_csv(rows, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.csv_record())


# -- lambda / quality sweep ------------------------------------------------------

@dataclass
class SweepCell:
    quality: float
    scheduler: str
    trust: float | None
    worst_ratio: float
    avg_ratio: float


def sweep_lambda(base: ExperimentConfig, lambdas, qualities, jobs: int = 1,
                 segment: int = MIXED_SEGMENT):
    """Follow-prediction, LAPDOA(lambda) and PDOA on mixed pattern/Bernoulli datasets.

    Every run at quality q is a pattern sequence with probability q% (exact
    count, random placement) of ``segment`` slots; the prediction assumes
    the pattern.  A lambda
    of 0 in ``lambdas`` stands for following the prediction; PDOA is always
    included.  Returns (per-run rows, per-cell summaries).
    """
    lams = []
    for lam in lambdas:
        lam = Fraction(repr(lam)) if isinstance(lam, float) else Fraction(lam)
        if lam != 0:
            as_trust(lam)
        lams.append(lam)
    rows, cells = [], []
    for q in qualities:
        configs = []
        common = dict(channel=f"mixed:{q:g}", horizon=segment,
                      prediction=base.prediction or "assumed")
        if Fraction(0) in lams:
            configs.append(replace_config(base, scheduler="follow", trust=None, **common))
        for lam in lams:
            if lam != 0 and lam != 1:
                configs.append(replace_config(base, scheduler="lapdoa", trust=lam, **common))
        configs.append(replace_config(base, scheduler="pdoa", trust=None, **common))
        for cfg in configs:
            cfg_rows = run_experiment(cfg, jobs)
            rows.extend(cfg_rows)
            s = summarize(cfg_rows)
            trust = 0.0 if cfg.scheduler == "follow" else (1.0 if cfg.scheduler == "pdoa" else float(cfg.trust))
            cells.append(SweepCell(float(q), s.scheduler, trust, s.worst_ratio, s.avg_ratio))
    return rows, cells


def replace_config(base: ExperimentConfig, **changes) -> ExperimentConfig:
    data = base.to_dict()
    data.pop("lambda")
    data["trust"] = base.trust
    data.update(changes)
    return ExperimentConfig(**data)


# -- single-instance verification ----------------------------------------------

@dataclass
class VerificationReport:
    scheduler: str
    cost: Fraction
    opt: Fraction
    primal: Fraction
    dual: Fraction
    checks: list
    certificate: object

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.checks)

    def to_dict(self) -> dict:
        return {
            "scheduler": self.scheduler,
            "ok": self.ok,
            "cost": format_number(self.cost),
            "opt": format_number(self.opt),
            "P": format_number(self.primal),
            "D": format_number(self.dual),
            "checks": [
                {"name": r.name, "ok": r.ok, "detail": r.detail,
                 "violations": [[str(x) for x in v] if isinstance(v, tuple) else str(v) for v in r.violations]}
                for r in self.checks
            ],
            "intervals": [
                {"start": iv.start, "end": iv.end, "P": format_number(iv.primal),
                 "D": format_number(iv.dual), "acked": iv.acked}
                for iv in self.certificate.intervals
            ],
        }


def verify_instance(trace, scheduler: str, cost, trust=None, prediction=None,
                    certificate=None) -> VerificationReport:
    """Run a primal-dual scheduler with certificates on and check everything.

    If ``certificate`` is given it is checked instead of the fresh one, and
    must also match what the scheduler actually produces.
    """
    from aoisched.tcp_ack import certificate_to_dict

    c = as_cost(cost)
    scheduler = scheduler.lower()
    if scheduler == "pdoa":
        _, fresh = pdoa_run(trace, c)
        trust = None
        pred_cost = None
    elif scheduler == "lapdoa":
        if trust is None:
            raise ParameterError("lapdoa needs a trust parameter")
        prediction = prediction if prediction is not None else perfect_prediction(trace, c)
        _, fresh = lapdoa_run(trace, c, prediction, trust)
        _, fc = follow_prediction_run(trace, prediction, c)
        pred_cost = (fc.transmission_cost, fc.staleness_cost)
    else:
        raise ParameterError(f"verify supports pdoa and lapdoa, not {scheduler!r}")
    opt, _ = dp_opt(trace, c)
    checks = []
    if trace.horizon <= 12 and sum(trace.states) <= 12:
        bf, _ = brute_force_opt(trace, c)
        checks.append(Report("opt_crosscheck", bf == opt, [] if bf == opt else [(bf, opt)],
                             f"brute force {format_number(bf)} vs DP {format_number(opt)}"))
    cert = fresh
    if certificate is not None:
        cert = certificate
        same = certificate_to_dict(certificate) == certificate_to_dict(fresh)
        checks.append(Report("matches_fresh_run", same, [] if same else ["certificate differs from a fresh run"]))
        if cert.horizon != trace.horizon or as_cost(cert.cost) != c:
            checks.append(Report("instance", False, [(cert.horizon, cert.cost)],
                                 "certificate horizon/cost do not match the instance"))
            return VerificationReport(scheduler, Fraction(0), opt, cert.primal_total, cert.dual_total,
                                      checks, cert)
    schedule = Schedule.from_times(cert.ack_times, trace.horizon)
    checks.extend(certify(trace, schedule, cert, c, opt, trust, pred_cost))
    cost_now = evaluate_schedule(trace, schedule, c).total
    return VerificationReport(scheduler, cost_now, opt, cert.primal_total, cert.dual_total, checks, cert)
