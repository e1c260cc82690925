"""Command line entry point: ``aoisched {simulate,sweep,verify,gen-channel,gen-prediction}``."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from aoisched.aoi import as_cost, evaluate_schedule, format_number
from aoisched.channel import (
    DEFAULT_RSRQ_THRESHOLD_DB,
    ChannelTrace,
    format_trace,
    read_trace,
    synth_rsrq,
    write_rsrq_csv,
)
from aoisched.errors import AoiSchedError, ParameterError
from aoisched.harness import (
    DEFAULT_COST,
    derive_seed,
    SCHEDULERS,
    ChannelSpec,
    ExperimentConfig,
    PredictionSpec,
    load_config,
    make_prediction,
    make_trace,
    run_experiment,
    summarize,
    sweep_lambda,
    verify_instance,
    write_csv,
)
from aoisched.offline import dp_opt
from aoisched.online import follow_prediction_run, lapdoa_run, pdoa_run, srp_run
from aoisched.predictions import format_prediction
from aoisched.tcp_ack import format_interval_table, load_certificate, save_certificate


def _csv_list(text, conv=float):
    return [conv(x) for x in text.split(",") if x.strip()]


def add_config_args(p, multi_channel=False):
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--scheduler", choices=SCHEDULERS)
    if multi_channel:
        p.add_argument("--channel", action="append",
                       help="bernoulli:P | bursty[:X,p,Y,p] | mixed:Q | trace:PATH | rsrq:PATH (repeatable)")
    else:
        p.add_argument("--channel", help="bernoulli:P | bursty[:X,p,Y,p] | mixed:Q | trace:PATH | rsrq:PATH")
    p.add_argument("--c", help=f"transmission cost (default {DEFAULT_COST}); decimals are read exactly")
    p.add_argument("--T", type=int, dest="horizon", help="slots per run (file channels are split into chunks of T)")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="trust", help="LAPDOA trust parameter in (0, 1]")
    p.add_argument("--prediction", help="perfect | assumed[:CHANNEL] | noisy:SHIFT,MAX,DROP | file:PATH | empty | all")
    p.add_argument("--rsrq-threshold", type=float, help=f"dB, default {DEFAULT_RSRQ_THRESHOLD_DB:g}")
    p.add_argument("--certificates", action="store_true", default=None, help="record and check primal-dual certificates")


def build_config(args, channel=None) -> ExperimentConfig:
    data = {}
    if args.config:
        data = load_config(args.config).to_dict()
        data["trust"] = data.pop("lambda")
    overrides = {
        "scheduler": args.scheduler,
        "channel": channel if channel is not None else args.channel,
        "c": args.c,
        "horizon": args.horizon,
        "runs": args.runs,
        "seed": args.seed,
        "trust": args.trust,
        "prediction": args.prediction,
        "rsrq_threshold": args.rsrq_threshold,
        "certificates": args.certificates,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**data)


def cmd_simulate(args) -> int:
    if isinstance(args.channel, list):
        args.channel = args.channel[0]
    cfg = build_config(args)
    run = args.run
    spec = cfg.channel_spec
    trace = make_trace(spec, cfg.horizon, run, cfg.seed, max(cfg.runs, run + 1), cfg.rsrq_threshold)
    opt, opt_schedule = dp_opt(trace, cfg.c)
    prediction = None
    if cfg.scheduler in ("lapdoa", "follow"):
        prediction = make_prediction(cfg.prediction_spec, trace, cfg.c, run, cfg.seed, spec)
    if cfg.scheduler == "pdoa":
        schedule, _ = pdoa_run(trace, cfg.c, record=False)
    elif cfg.scheduler == "lapdoa":
        schedule, _ = lapdoa_run(trace, cfg.c, prediction, cfg.trust, record=False)
    elif cfg.scheduler == "follow":
        schedule, _ = follow_prediction_run(trace, prediction, cfg.c)
    elif cfg.scheduler == "srp":
        schedule = srp_run(trace, cfg.c, derive_seed(cfg.seed + run, 3))
    else:
        schedule = opt_schedule
    br = evaluate_schedule(trace, schedule, cfg.c)
    print(f"scheduler     {cfg.scheduler}" + (f" lambda={format_number(cfg.trust)}" if cfg.trust is not None else ""))
    print(f"channel       {spec} (T={trace.horizon}, ON slots={len(trace.on_slots)}, run={run})")
    print(f"c             {format_number(cfg.c)}")
    print(f"transmissions {len(schedule.times)}")
    print(f"transmission  {format_number(br.transmission_cost)}")
    print(f"staleness     {format_number(br.staleness_cost)}")
    print(f"total         {format_number(br.total)}")
    print(f"OPT           {format_number(opt)}")
    print(f"ratio         {float(br.total / opt) if opt else float('nan'):.6f}")
    if args.show_times:
        print("times         " + format_prediction(schedule.times))
    return 0


def cmd_sweep(args) -> int:
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if args.lambdas is not None:
            base = build_config(args, channel="bernoulli:0.32")
            rows, cells = sweep_lambda(base, _csv_list(args.lambdas, str),
                                       _csv_list(args.qualities or "100"), jobs=args.jobs)
            write_csv(rows, out)
            for cell in cells:
                print(f"q={cell.quality:g} {cell.scheduler:<14} avg={cell.avg_ratio:.4f} "
                      f"worst={cell.worst_ratio:.4f}", file=sys.stderr)
            return 0
        channels = args.channel or [None]
        rows = []
        failures = 0
        for ch in channels:
            cfg = build_config(args, channel=ch)
            cfg_rows = run_experiment(cfg, jobs=args.jobs)
            rows.extend(cfg_rows)
            s = summarize(cfg_rows)
            failures += s.cert_failures
            print(f"{s.scheduler} {cfg.channel_spec} runs={s.runs} worst={s.worst_ratio:.4f} "
                  f"avg={s.avg_ratio:.4f} cert_failures={s.cert_failures}", file=sys.stderr)
        write_csv(rows, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 1 if failures else 0


def _fmt(v) -> str:
    if isinstance(v, (tuple, list)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
        return format_number(v)
    return str(v)


def _instance_trace(args) -> ChannelTrace:
    if args.states:
        bits = args.states.replace(",", "").strip()
        if not bits or set(bits) - {"0", "1"}:
            raise ParameterError(f"--states must be a string of 0/1, got {args.states!r}")
        return ChannelTrace(tuple(int(ch) for ch in bits))
    if args.trace:
        return read_trace(args.trace)
    if args.channel:
        spec = ChannelSpec.parse(args.channel)
        return make_trace(spec, args.horizon, args.run, args.seed, args.run + 1, args.rsrq_threshold)
    raise ParameterError("give an instance with --states, --trace or --channel")


def cmd_verify(args) -> int:
    trace = _instance_trace(args)
    c = as_cost(args.c or DEFAULT_COST)
    prediction = None
    if args.scheduler == "lapdoa" and args.prediction:
        spec = ChannelSpec.parse(args.channel) if args.channel else None
        prediction = make_prediction(PredictionSpec.parse(args.prediction), trace, c, args.run, args.seed, spec)
    cert = load_certificate(args.certificate) if args.certificate else None
    report = verify_instance(trace, args.scheduler, c, args.trust, prediction, cert)
    print(f"instance: T={trace.horizon} c={format_number(c)} scheduler={args.scheduler}"
          + (f" lambda={args.trust}" if args.trust else ""))
    print(format_interval_table(report.certificate))
    print()
    for r in report.checks:
        mark = "PASS" if r.ok else "FAIL"
        line = f"[{mark}] {r.name}"
        if r.detail:
            line += f"  {r.detail}"
        print(line)
        for v in r.violations[:5]:
            print(f"       violation: {_fmt(v)}")
    print(f"\ncost={format_number(report.cost)} OPT={format_number(report.opt)} "
          f"P={format_number(report.primal)} D={format_number(report.dual)}")
    print("VERIFIED" if report.ok else "FAILED")
    if args.export_cert:
        save_certificate(args.export_cert, report.certificate)
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    return 0 if report.ok else 1


def cmd_gen_channel(args) -> int:
    spec = ChannelSpec.parse(args.channel)
    trace = make_trace(spec, args.horizon, args.run, args.seed, args.run + 1, args.rsrq_threshold)
    if args.format == "rsrq":
        if not args.out:
            raise ParameterError("--format rsrq needs --out")
        write_rsrq_csv(args.out, synth_rsrq(trace, derive_seed(args.seed, 4), args.rsrq_threshold))
        return 0
    text = format_trace(trace.states)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_prediction(args) -> int:
    trace = _instance_trace(args)
    c = as_cost(args.c or DEFAULT_COST)
    spec = ChannelSpec.parse(args.channel) if args.channel else None
    pred = make_prediction(PredictionSpec.parse(args.kind), trace, c, args.run, args.seed, spec)
    text = format_prediction(pred) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def add_instance_args(p):
    p.add_argument("--states", help="inline trace, e.g. 1001")
    p.add_argument("--trace", help="trace file (one 0/1 per line)")
    p.add_argument("--channel", help="generate the instance from a channel spec instead")
    p.add_argument("--T", type=int, dest="horizon", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--run", type=int, default=0)
    p.add_argument("--c", default=None)
    p.add_argument("--rsrq-threshold", type=float, default=DEFAULT_RSRQ_THRESHOLD_DB)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoisched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one instance and print its cost breakdown")
    add_config_args(p)
    p.add_argument("--run", type=int, default=0, help="run index (seed = seed + run)")
    p.add_argument("--show-times", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="many runs, CSV rows per run")
    add_config_args(p, multi_channel=True)
    p.add_argument("--lambdas", help="comma list; switches to the mixed-quality lambda sweep (0 = follow prediction)")
    p.add_argument("--qualities", help="comma list of pattern percentages for --lambdas (default 100)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="certify one PDOA/LAPDOA run; exit status 1 on any failed check")
    add_instance_args(p)
    p.add_argument("--scheduler", choices=("pdoa", "lapdoa"), default="pdoa")
    p.add_argument("--lambda", dest="trust")
    p.add_argument("--prediction", help="prediction spec for lapdoa (default perfect)")
    p.add_argument("--certificate", help="check this certificate JSON instead of a fresh one")
    p.add_argument("--export-cert", help="write the checked certificate as JSON")
    p.add_argument("--json", help="write a machine-readable report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen-channel", help="write a channel trace file")
    p.add_argument("--channel", required=True)
    p.add_argument("--T", type=int, dest="horizon", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--run", type=int, default=0)
    p.add_argument("--format", choices=("trace", "rsrq"), default="trace",
                   help="rsrq writes synthetic timestamp,rsrq samples that threshold back to the trace")
    p.add_argument("--rsrq-threshold", type=float, default=DEFAULT_RSRQ_THRESHOLD_DB)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_channel)

    p = sub.add_parser("gen-prediction", help="write a prediction file for an instance")
    add_instance_args(p)
    p.add_argument("--kind", default="perfect",
                   help="perfect | assumed[:CHANNEL] | noisy:SHIFT,MAX,DROP | empty | all")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_prediction)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AoiSchedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
