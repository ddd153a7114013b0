"""Command-line front end: ``qsc-bench {run,sweep,report,compare,suites}``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics
from .metrics import CsvFormatError, MetricsError
from .runner import (
    DEFAULT_SWEEP_RUNS,
    DESK_MAX_BYTES,
    FULL_MAX_BYTES,
    PRESETS,
    SWEEP_KINDS,
    WORKERS_ENV,
    ScenarioError,
    ScenarioSpec,
    execute,
    load_scenario,
    preset,
    sweep,
    swept_value,
)
from .suites import SuiteError, builtin_catalog, flight_sizes, load_suite_overrides

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

BOX_FILES = {"handshake": "handshake_box.svg", "total": "download_box.svg"}


def _progress(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def _catalog(args):
    if getattr(args, "suite_overrides", None):
        return load_suite_overrides(args.suite_overrides)
    return builtin_catalog()


def _resolve_scenario(args) -> ScenarioSpec:
    target = args.scenario
    if target in PRESETS:
        spec = preset(target)
        if args.latency_is_rtt:
            spec = replace(spec, profile=replace(spec.profile, one_way_latency_s=spec.profile.one_way_latency_s / 2))
    elif Path(target).suffix == ".json" or Path(target).exists():
        spec = load_scenario(target, latency_is_rtt=True if args.latency_is_rtt else None)
    else:
        raise ScenarioError(f"unknown preset {target!r}; valid presets: {', '.join(PRESETS)} (or a scenario .json file)")
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.runs is not None:
        changes["runs"] = args.runs
    return replace(spec, **changes) if changes else spec


def _summary_doc(samples) -> dict:
    doc = {}
    for name, ss in samples.items():
        entry = {"excluded_n": sum(1 for s in ss if not s.valid)}
        for metric in metrics.METRICS:
            vals = metrics.metric_values(ss, metric)
            entry[metric] = metrics.summarize(vals).to_dict() if vals else None
        doc[name] = entry
    return doc


def _write_artifacts(samples, out_dir: Path) -> None:
    (out_dir / "summary.json").write_text(json.dumps(_summary_doc(samples), indent=2) + "\n")
    for metric, fname in BOX_FILES.items():
        summaries = metrics.suite_summaries(samples, metric)
        if summaries:
            metrics.emit_boxplot(summaries, metric, out_dir / fname)


def _print_table(title: str, samples) -> None:
    print(title)
    print(f"{'suite':<18}{'n':>5}{'excl':>6}{'hs_mean':>11}{'hs_median':>11}{'total_mean':>12}{'total_median':>14}")
    for name, ss in samples.items():
        hs = metrics.metric_values(ss, "handshake")
        tot = metrics.metric_values(ss, "total")
        if not hs:
            print(f"{name:<18}{0:>5}{len(ss):>6}")
            continue
        h, t = metrics.summarize(hs), metrics.summarize(tot)
        print(
            f"{name:<18}{h.n:>5}{len(ss) - h.n:>6}{h.mean:>11.4f}{h.median:>11.4f}{t.mean:>12.4f}{t.median:>14.4f}"
        )


def cmd_run(args) -> int:
    spec = _resolve_scenario(args)
    catalog = _catalog(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _progress(args, f"running {spec.name}: {len(spec.suites)} suites x {spec.runs} runs")
    results = execute(spec, catalog, workers=args.workers)
    metrics.write_csv(results, out_dir / "results.csv")
    _write_artifacts(results.samples, out_dir)
    if args.baseline in results.samples:
        try:
            report = metrics.compare(results, args.baseline, (args.threshold_low, args.threshold_high))
        except MetricsError as exc:
            # e.g. an all-zero baseline on the ideal network with free crypto
            print(f"comparison skipped: {exc}", file=sys.stderr)
        else:
            (out_dir / "comparison.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    p = spec.profile
    _print_table(
        f"{spec.name}: latency {p.one_way_latency_s * 1000:g} ms one-way, loss {p.loss_rate * 100:g}%, "
        f"file {spec.file_bytes} B, {spec.runs} runs, seed {spec.base_seed}",
        results.samples,
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    max_bytes = FULL_MAX_BYTES if args.full else args.max_bytes
    specs = sweep(args.kind, runs=args.runs, max_bytes=max_bytes)
    if args.seed is not None:
        specs = [replace(s, base_seed=args.seed) for s in specs]
    catalog = _catalog(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    points = []
    for spec in specs:
        value = swept_value(args.kind, spec)
        _progress(args, f"{args.kind} = {value:g}")
        results = execute(spec, catalog, workers=args.workers)
        records.extend(metrics.results_records(results, value))
        points.append({"swept_value": value, "suites": _summary_doc(results.samples)})
    metrics.write_records(records, out_dir / "sweep.csv", sweep=True)
    (out_dir / "summaries.json").write_text(json.dumps({"kind": args.kind, "points": points}, indent=2) + "\n")
    print(f"sweep {args.kind}: {len(specs)} points x {len(specs[0].suites)} suites x {args.runs} runs")
    print(f"{'swept_value':>14}  " + "  ".join(f"{s:>16}" for s in specs[0].suites) + "   (mean total s)")
    for pt in points:
        cells = []
        for s in specs[0].suites:
            tot = pt["suites"][s]["total"]
            cells.append(f"{tot['mean']:>16.4f}" if tot else f"{'-':>16}")
        print(f"{pt['swept_value']:>14.6g}  " + "  ".join(cells))
    return EXIT_OK


def cmd_report(args) -> int:
    records = metrics.read_csv(args.csv)
    samples = metrics.group_by_suite(records)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_artifacts(samples, out_dir)
    _print_table(f"report: {args.csv}", samples)
    return EXIT_OK


def cmd_compare(args) -> int:
    records = metrics.read_csv(args.csv)
    samples = metrics.group_by_suite(records)
    report = metrics.compare(samples, args.baseline, (args.threshold_low, args.threshold_high))
    sys.stdout.write(metrics.format_report(report))
    if args.json:
        Path(args.json).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if args.fail_over_threshold and report.any_over():
        return EXIT_INVALID
    return EXIT_OK


def cmd_suites(args) -> int:
    print(f"{'suite':<18}{'kem':<16}{'sig':<24}{'CH':>7}{'server':>8}{'CF':>5}{'total':>8}")
    for suite in _catalog(args):
        fs = flight_sizes(suite)
        print(
            f"{suite.name:<18}{suite.kem.name:<16}{suite.sig.name:<24}"
            f"{fs.client_hello:>7}{fs.server_flight:>8}{fs.client_finished:>5}{fs.total:>8}"
        )
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # Usage errors are invalid input (1); 2 is reserved for I/O failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="qsc-bench",
        description="Simulated TLS handshake / download benchmark for classical vs hybrid post-quantum suites.",
        epilog=f"Presets: {', '.join(PRESETS)}. Sweep kinds: {', '.join(SWEEP_KINDS)}. "
        f"Worker count default comes from ${WORKERS_ENV}. Exit codes: 0 ok, 1 invalid input, 2 I/O error.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runs_default=None):
        p.add_argument("--seed", type=int, default=None, help="base seed (default: scenario's, 0 for presets)")
        p.add_argument("--runs", type=int, default=runs_default, help="runs per suite per point")
        p.add_argument("--out-dir", default="qsc-results", help="output directory (default: %(default)s)")
        p.add_argument("--suite-overrides", default=None, help="JSON file overriding catalog sizes/costs")
        p.add_argument("--workers", type=int, default=None, help=f"parallel workers (default: ${WORKERS_ENV} or CPU count)")
        p.add_argument("--quiet", action="store_true", help="suppress progress on stderr")

    def thresholds(p):
        p.add_argument("--baseline", default="classical", help="baseline suite (default: %(default)s)")
        p.add_argument("--threshold-low", type=float, default=10.0, help="tight verdict threshold, percent")
        p.add_argument("--threshold-high", type=float, default=20.0, help="loose verdict threshold, percent")

    p = sub.add_parser("run", help=f"run a preset ({', '.join(PRESETS)}) or a scenario JSON file")
    p.add_argument("scenario", help=f"preset name ({', '.join(PRESETS)}) or path to scenario .json")
    common(p)
    p.add_argument("--latency-is-rtt", action="store_true", help="treat configured latency as round-trip (halve it)")
    thresholds(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help=f"run a sensitivity sweep ({', '.join(SWEEP_KINDS)})")
    p.add_argument("kind", choices=SWEEP_KINDS)
    common(p, runs_default=DEFAULT_SWEEP_RUNS)
    p.add_argument("--max-bytes", type=int, default=DESK_MAX_BYTES, help="file-size sweep cap (default: 64 MiB)")
    p.add_argument("--full", action="store_true", help="file-size sweep up to 16 GiB")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="summaries and box plots from a results CSV")
    p.add_argument("csv")
    p.add_argument("--out-dir", default="qsc-results")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="percent deltas and threshold verdicts from a results CSV")
    p.add_argument("csv")
    thresholds(p)
    p.add_argument("--fail-over-threshold", action="store_true", help="exit 1 if any delta misses a threshold")
    p.add_argument("--json", default=None, help="also write the report as JSON here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("suites", help="list the suite catalog and handshake flight sizes")
    p.add_argument("--suite-overrides", default=None)
    p.set_defaults(func=cmd_suites)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, SuiteError, CsvFormatError, MetricsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
