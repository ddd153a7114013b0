"""Box-plot statistics, percent deltas, threshold verdicts, CSV and plot artifacts."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .session import TimingSample

CSV_HEADER = (
    "scenario",
    "suite",
    "run",
    "seed",
    "handshake_time_s",
    "total_download_time_s",
    "file_bytes",
    "transfer_rate_Bps",
    "valid",
)
SWEEP_COLUMN = "swept_value"
METRICS = ("handshake", "total")
DEFAULT_THRESHOLDS = (10.0, 20.0)


class MetricsError(ValueError):
    pass


class CsvFormatError(MetricsError):
    def __init__(self, path, line: int, message: str) -> None:
        super().__init__(f"{path}: line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class StatsSummary:
    n: int
    mean: float
    median: float
    q1: float
    q3: float
    iqr: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outliers"] = list(self.outliers)
        return d


def _quantile_sorted(xs: Sequence[float], p: float) -> float:
    pos = p * (len(xs) - 1)
    lo = math.floor(pos)
    frac = pos - lo
    if frac == 0.0:
        return float(xs[lo])
    return xs[lo] + (xs[lo + 1] - xs[lo]) * frac


def summarize(values: Sequence[float]) -> StatsSummary:
    """Tukey box-plot summary.

    Quartiles interpolate linearly at position p*(n-1) of the sorted values.
    Whiskers are the most extreme data points inside q1 - 1.5*IQR and
    q3 + 1.5*IQR; everything outside those fences is an outlier.
    """
    if len(values) == 0:
        raise MetricsError("summarize needs at least one value")
    xs = sorted(float(v) for v in values)
    q1 = _quantile_sorted(xs, 0.25)
    median = _quantile_sorted(xs, 0.5)
    q3 = _quantile_sorted(xs, 0.75)
    iqr = q3 - q1
    lo_fence = q1 - 1.5 * iqr
    hi_fence = q3 + 1.5 * iqr
    inside = [x for x in xs if lo_fence <= x <= hi_fence]
    return StatsSummary(
        n=len(xs),
        mean=math.fsum(xs) / len(xs),
        median=median,
        q1=q1,
        q3=q3,
        iqr=iqr,
        whisker_low=inside[0],
        whisker_high=inside[-1],
        outliers=tuple(x for x in xs if x < lo_fence or x > hi_fence),
    )


def percent_delta(baseline_mean: float, candidate_mean: float) -> float:
    """Signed percent change from baseline; negative means the candidate is faster."""
    if not baseline_mean > 0:
        raise MetricsError(f"baseline mean must be > 0, got {baseline_mean!r}")
    return 100.0 * (candidate_mean - baseline_mean) / baseline_mean


def transfer_rate(sample: TimingSample) -> float:
    if not sample.total_download_time_s > 0:
        raise MetricsError(f"total_download_time_s must be > 0 for a transfer rate, got {sample.total_download_time_s!r}")
    return sample.file_bytes / sample.total_download_time_s


def metric_values(samples: Sequence[TimingSample], metric: str) -> list[float]:
    if metric == "handshake":
        return [s.handshake_time_s for s in samples if s.valid]
    if metric == "total":
        return [s.total_download_time_s for s in samples if s.valid]
    raise MetricsError(f"unknown metric {metric!r}; expected one of {METRICS}")


# --- comparison --------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    candidate: str
    baseline_mean: float
    candidate_mean: float
    delta_pct: float
    baseline_median: float
    candidate_median: float
    verdicts: dict[float, bool]
    excluded_n: int = 0

    @property
    def within_10pct(self) -> bool:
        return self.delta_pct < 10.0

    @property
    def within_20pct(self) -> bool:
        return self.delta_pct < 20.0


@dataclass(frozen=True)
class ComparisonReport:
    baseline_suite: str
    rows: list[ComparisonRow] = field(default_factory=list)
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    baseline_excluded_n: int = 0

    def any_over(self) -> bool:
        return any(not all(r.verdicts.values()) for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "baseline_suite": self.baseline_suite,
            "thresholds_pct": list(self.thresholds),
            "baseline_excluded_n": self.baseline_excluded_n,
            "rows": [
                {
                    "metric": r.metric,
                    "candidate": r.candidate,
                    "baseline_mean": r.baseline_mean,
                    "candidate_mean": r.candidate_mean,
                    "delta_pct": r.delta_pct,
                    "baseline_median": r.baseline_median,
                    "candidate_median": r.candidate_median,
                    "verdicts": {f"within_{t:g}pct": ok for t, ok in r.verdicts.items()},
                    "excluded_n": r.excluded_n,
                }
                for r in self.rows
            ],
        }


def _samples_of(results) -> Mapping[str, Sequence[TimingSample]]:
    return results.samples if hasattr(results, "samples") else results


def compare(results, baseline: str = "classical", thresholds: Sequence[float] = DEFAULT_THRESHOLDS) -> ComparisonReport:
    """Mean-based percent deltas of each suite against `baseline`, per metric.

    `results` is a RunResults or a mapping of suite name to samples. A row
    passes a threshold when its delta is strictly below it, so decreases
    always pass. Medians ride along for display only.
    """
    samples = _samples_of(results)
    if baseline not in samples:
        raise MetricsError(f"baseline suite {baseline!r} not in results (have {', '.join(samples)})")
    base = samples[baseline]
    rows = []
    for metric in METRICS:
        base_vals = metric_values(base, metric)
        if not base_vals:
            raise MetricsError(f"baseline suite {baseline!r} has no valid samples")
        b = summarize(base_vals)
        for name, cand in samples.items():
            if name == baseline:
                continue
            vals = metric_values(cand, metric)
            if not vals:
                raise MetricsError(f"suite {name!r} has no valid samples")
            c = summarize(vals)
            delta = percent_delta(b.mean, c.mean)
            rows.append(
                ComparisonRow(
                    metric=metric,
                    candidate=name,
                    baseline_mean=b.mean,
                    candidate_mean=c.mean,
                    delta_pct=delta,
                    baseline_median=b.median,
                    candidate_median=c.median,
                    verdicts={float(t): delta < t for t in thresholds},
                    excluded_n=sum(1 for s in cand if not s.valid),
                )
            )
    return ComparisonReport(
        baseline_suite=baseline,
        rows=rows,
        thresholds=tuple(float(t) for t in thresholds),
        baseline_excluded_n=sum(1 for s in base if not s.valid),
    )


def format_report(report: ComparisonReport) -> str:
    heads = ["metric", "candidate", "base_mean", "cand_mean", "delta_%", "base_median", "cand_median"]
    heads += [f"<{t:g}%" for t in report.thresholds] + ["excluded"]
    lines = [f"baseline: {report.baseline_suite} (excluded {report.baseline_excluded_n})"]
    table = [heads]
    for r in report.rows:
        table.append(
            [
                r.metric,
                r.candidate,
                f"{r.baseline_mean:.4f}",
                f"{r.candidate_mean:.4f}",
                f"{r.delta_pct:+.2f}",
                f"{r.baseline_median:.4f}",
                f"{r.candidate_median:.4f}",
            ]
            + ["pass" if r.verdicts[t] else "FAIL" for t in report.thresholds]
            + [str(r.excluded_n)]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(heads))]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


# --- CSV ---------------------------------------------------------------------


@dataclass(frozen=True)
class CsvRecord:
    scenario: str
    run: int
    sample: TimingSample
    swept_value: float | None = None


def _row(scenario: str, run: int, s: TimingSample, swept: float | None) -> list[str]:
    row = [
        scenario,
        s.suite_name,
        str(run),
        str(s.seed),
        f"{s.handshake_time_s:.9f}",
        f"{s.total_download_time_s:.9f}",
        str(s.file_bytes),
        f"{s.transfer_rate_Bps:.17g}",
        "1" if s.valid else "0",
    ]
    if swept is not None:
        row.append(f"{swept:.17g}")
    return row


def results_records(results, swept: float | None = None) -> list[CsvRecord]:
    """Canonical (suite, run) order."""
    return [
        CsvRecord(results.scenario.name, i, s, swept)
        for suite in results.scenario.suites
        for i, s in enumerate(results.samples[suite])
    ]


def write_records(records: Sequence[CsvRecord], path: str | Path, sweep: bool = False) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER + ((SWEEP_COLUMN,) if sweep else ()))
    for rec in records:
        writer.writerow(_row(rec.scenario, rec.run, rec.sample, rec.swept_value if sweep else None))
    Path(path).write_bytes(buf.getvalue().encode())


def write_csv(results, path: str | Path) -> None:
    write_records(results_records(results), path)


def read_csv(path: str | Path) -> list[CsvRecord]:
    """Parse a results CSV, with or without the trailing swept_value column."""
    path = Path(path)
    text = path.read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError(path, 1, "empty file; expected header") from None
    sweep = tuple(header) == CSV_HEADER + (SWEEP_COLUMN,)
    if tuple(header) != CSV_HEADER and not sweep:
        raise CsvFormatError(path, 1, f"header must be {','.join(CSV_HEADER)}[,{SWEEP_COLUMN}]")
    width = len(header)
    records = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != width:
            raise CsvFormatError(path, line, f"expected {width} fields, got {len(row)}")
        try:
            valid = {"1": True, "0": False}[row[8]]
            sample = TimingSample(
                suite_name=row[1],
                handshake_time_s=float(row[4]),
                total_download_time_s=float(row[5]),
                file_bytes=int(row[6]),
                transfer_rate_Bps=float(row[7]),
                seed=int(row[3]),
                valid=valid,
            )
            rec = CsvRecord(row[0], int(row[2]), sample, float(row[9]) if sweep else None)
        except (ValueError, KeyError) as exc:
            raise CsvFormatError(path, line, f"bad field value ({exc})") from None
        if not row[1]:
            raise CsvFormatError(path, line, "empty suite name")
        records.append(rec)
    return records


def group_by_suite(records: Sequence[CsvRecord]) -> dict[str, list[TimingSample]]:
    out: dict[str, list[TimingSample]] = {}
    for rec in records:
        out.setdefault(rec.sample.suite_name, []).append(rec.sample)
    return out


def suite_summaries(samples: Mapping[str, Sequence[TimingSample]], metric: str) -> dict[str, StatsSummary]:
    return {name: summarize(metric_values(ss, metric)) for name, ss in samples.items() if metric_values(ss, metric)}


# --- box plots ---------------------------------------------------------------


def emit_boxplot(summaries: Mapping[str, StatsSummary], metric: str, path: str | Path) -> Path:
    """SVG box plot, one box per suite, plus a JSON sidecar (same stem) with the plotted numbers."""
    if not summaries:
        raise MetricsError("emit_boxplot needs at least one summary")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    stats = [
        {
            "label": name,
            "med": s.median,
            "q1": s.q1,
            "q3": s.q3,
            "whislo": s.whisker_low,
            "whishi": s.whisker_high,
            "fliers": list(s.outliers),
            "mean": s.mean,
        }
        for name, s in summaries.items()
    ]
    with matplotlib.rc_context({"svg.hashsalt": "qsc-bench", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(1.8 * len(stats) + 2, 4.5))
        try:
            artists = ax.bxp(stats, showmeans=True)
            for name, box in zip(summaries, artists["boxes"]):
                box.set_gid(f"box-{name}")
            ax.set_ylabel(f"{metric} (s)")
            ax.set_title(metric)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    sidecar = path.with_suffix(".json")
    doc = {"metric": metric, "boxes": [{"suite": name, **s.to_dict()} for name, s in summaries.items()]}
    sidecar.write_text(json.dumps(doc, indent=2) + "\n")
    return sidecar
