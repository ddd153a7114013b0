"""Scenario presets, sweep generators and reproducible execution."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .netlink import NetworkProfile, derive_seed
from .session import SessionFailed, TimingSample, run_session
from .suites import SUITE_NAMES, CryptoSuite, catalog_by_name
from .transport import TransportParams

MB2 = 2 * 2**20  # "2 MB", read as binary
SWEEP_BASE_BYTES = 244
DESK_MAX_BYTES = 64 * 2**20
FULL_MAX_BYTES = 16 * 2**30
DEFAULT_SWEEP_RUNS = 10
WORKERS_ENV = "QSC_BENCH_WORKERS"

PRESETS = {
    # name: (one-way latency s, loss fraction)
    "ideal": (0.0, 0.0),
    "normal": (0.100, 0.015),
    "congested": (0.200, 0.025),
}
SWEEP_KINDS = ("file-size", "latency", "loss")


class ScenarioError(ValueError):
    """Invalid scenario: bad field, unknown suite, out-of-range value."""


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    profile: NetworkProfile
    suites: tuple[str, ...] = SUITE_NAMES
    file_bytes: int = MB2
    runs: int = 100
    base_seed: int = 0
    transport: TransportParams = field(default_factory=TransportParams)

    def __post_init__(self) -> None:
        if not self.name:
            raise ScenarioError("scenario name must be non-empty")
        if self.runs < 1:
            raise ScenarioError(f"runs must be >= 1, got {self.runs}")
        if not self.suites:
            raise ScenarioError("suites must be non-empty")
        if len(set(self.suites)) != len(self.suites):
            raise ScenarioError(f"duplicate suite names in {list(self.suites)}")
        if self.file_bytes < 0:
            raise ScenarioError("file_bytes must be >= 0")


@dataclass(frozen=True)
class RunResults:
    scenario: ScenarioSpec
    samples: dict[str, list[TimingSample]]

    def valid(self, suite: str) -> list[TimingSample]:
        return [s for s in self.samples[suite] if s.valid]

    def excluded(self, suite: str) -> int:
        return sum(1 for s in self.samples[suite] if not s.valid)


def preset(name: str) -> ScenarioSpec:
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}")
    latency, loss = PRESETS[name]
    return ScenarioSpec(name=name, profile=NetworkProfile(one_way_latency_s=latency, loss_rate=loss))


def _congested_base(name: str, runs: int) -> ScenarioSpec:
    return replace(preset("congested"), name=name, runs=runs)


def sweep_file_size(max_bytes: int = DESK_MAX_BYTES, runs: int = DEFAULT_SWEEP_RUNS) -> list[ScenarioSpec]:
    """244-byte base doubled while <= `max_bytes`, at the congested profile."""
    if max_bytes < SWEEP_BASE_BYTES:
        raise ScenarioError(f"max_bytes must be >= {SWEEP_BASE_BYTES}")
    base = _congested_base("sweep-file-size", runs)
    specs = []
    size = SWEEP_BASE_BYTES
    while size <= max_bytes:
        specs.append(replace(base, file_bytes=size))
        size *= 2
    return specs


def sweep_latency(runs: int = DEFAULT_SWEEP_RUNS) -> list[ScenarioSpec]:
    """0 to 400 ms one-way in 50 ms steps; 2.5 % loss, 2 MB."""
    base = _congested_base("sweep-latency", runs)
    return [replace(base, profile=replace(base.profile, one_way_latency_s=ms / 1000)) for ms in range(0, 401, 50)]


def sweep_loss(runs: int = DEFAULT_SWEEP_RUNS) -> list[ScenarioSpec]:
    """0 to 5 % loss in 0.5 % steps; 200 ms, 2 MB."""
    base = _congested_base("sweep-loss", runs)
    return [replace(base, profile=replace(base.profile, loss_rate=half / 200)) for half in range(0, 11)]


def sweep(kind: str, *, runs: int = DEFAULT_SWEEP_RUNS, max_bytes: int = DESK_MAX_BYTES) -> list[ScenarioSpec]:
    if kind == "file-size":
        return sweep_file_size(max_bytes, runs)
    if kind == "latency":
        return sweep_latency(runs)
    if kind == "loss":
        return sweep_loss(runs)
    raise ScenarioError(f"unknown sweep kind {kind!r}; valid kinds: {', '.join(SWEEP_KINDS)}")


def swept_value(kind: str, spec: ScenarioSpec) -> float:
    if kind == "file-size":
        return spec.file_bytes
    if kind == "latency":
        return spec.profile.one_way_latency_s
    return spec.profile.loss_rate


def run_seed(spec: ScenarioSpec, run_index: int) -> int:
    """Seed for one run index, shared by every suite in the scenario."""
    return derive_seed(spec.base_seed, spec.name, run_index)


def _check_seeds(spec: ScenarioSpec) -> list[int]:
    seeds = [run_seed(spec, i) for i in range(spec.runs)]
    if len(set(seeds)) != len(seeds):
        raise ScenarioError(f"seed collision in scenario {spec.name!r}; change base_seed")
    return seeds


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ScenarioError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def execute(
    spec: ScenarioSpec,
    suites: list[CryptoSuite] | None = None,
    workers: int | None = None,
) -> RunResults:
    """Run every (suite, run index) of `spec`. Output order never depends on `workers`."""
    catalog = catalog_by_name(suites)
    missing = [s for s in spec.suites if s not in catalog]
    if missing:
        raise ScenarioError(f"unknown suite(s) {missing}; catalog has {', '.join(catalog)}")
    seeds = _check_seeds(spec)

    def one(job: tuple[str, int]) -> TimingSample:
        name, i = job
        try:
            return run_session(catalog[name], spec.profile, spec.file_bytes, spec.transport, seeds[i])
        except SessionFailed as exc:
            return exc.sample

    jobs = [(name, i) for name in spec.suites for i in range(spec.runs)]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(one, jobs))
    else:
        out = [one(job) for job in jobs]
    samples = {name: out[k * spec.runs : (k + 1) * spec.runs] for k, name in enumerate(spec.suites)}
    return RunResults(spec, samples)


# --- scenario files ----------------------------------------------------------

_TOP_KEYS = {
    "name",
    "preset",
    "latency_ms",
    "loss_pct",
    "loss_rate",
    "bandwidth_Bps",
    "mtu_bytes",
    "loss_on_acks",
    "file_bytes",
    "runs",
    "base_seed",
    "suites",
    "transport",
    "latency_is_rtt",
}
_TRANSPORT_KEYS = {f.name for f in fields(TransportParams)}


def _number(doc: dict, key: str, path: Path, *, integer: bool = False):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: field {key!r} must be a number, got {value!r}")
    if integer and not float(value).is_integer():
        raise ScenarioError(f"{path}: field {key!r} must be an integer, got {value!r}")
    return int(value) if integer else float(value)


def scenario_from_dict(doc: dict, path: str | Path = "<scenario>", latency_is_rtt: bool | None = None) -> ScenarioSpec:
    """Build a spec from a parsed scenario document. See README for the schema."""
    path = Path(path)
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"{path}: unknown field(s) {sorted(unknown)}; allowed: {sorted(_TOP_KEYS)}")

    if "preset" in doc:
        try:
            spec = preset(doc["preset"])
        except ScenarioError as exc:
            raise ScenarioError(f"{path}: field 'preset': {exc}") from None
    else:
        spec = ScenarioSpec(name="custom", profile=NetworkProfile())
    name = doc.get("name", spec.name)
    if not isinstance(name, str) or not name:
        raise ScenarioError(f"{path}: field 'name' must be a non-empty string")

    rtt_flag = doc.get("latency_is_rtt", False) if latency_is_rtt is None else latency_is_rtt
    if not isinstance(rtt_flag, bool):
        raise ScenarioError(f"{path}: field 'latency_is_rtt' must be true or false")
    profile = spec.profile
    prof_changes: dict = {}
    if "latency_ms" in doc:
        ms = _number(doc, "latency_ms", path)
        if not (ms >= 0 and math.isfinite(ms)):
            raise ScenarioError(f"{path}: field 'latency_ms' must be a finite value >= 0, got {ms!r}")
        prof_changes["one_way_latency_s"] = ms / 1000
    if rtt_flag:
        prof_changes["one_way_latency_s"] = prof_changes.get("one_way_latency_s", profile.one_way_latency_s) / 2
    if "loss_pct" in doc and "loss_rate" in doc:
        raise ScenarioError(f"{path}: give either 'loss_pct' or 'loss_rate', not both")
    if "loss_pct" in doc:
        pct = _number(doc, "loss_pct", path)
        if not (0 <= pct < 100):
            raise ScenarioError(f"{path}: field 'loss_pct' must be in [0, 100), got {pct!r}")
        prof_changes["loss_rate"] = pct / 100
    if "loss_rate" in doc:
        rate = _number(doc, "loss_rate", path)
        if not (0 <= rate < 1):
            raise ScenarioError(
                f"{path}: field 'loss_rate' must be a fraction in [0, 1), got {rate!r} (use loss_pct for percent)"
            )
        prof_changes["loss_rate"] = rate
    if "bandwidth_Bps" in doc:
        bw = doc["bandwidth_Bps"]
        if bw is None:
            prof_changes["bandwidth_Bps"] = math.inf
        else:
            bw = _number(doc, "bandwidth_Bps", path)
            if not bw > 0:
                raise ScenarioError(f"{path}: field 'bandwidth_Bps' must be > 0 or null, got {bw!r}")
            prof_changes["bandwidth_Bps"] = bw
    if "mtu_bytes" in doc:
        prof_changes["mtu_bytes"] = _number(doc, "mtu_bytes", path, integer=True)
    if "loss_on_acks" in doc:
        if not isinstance(doc["loss_on_acks"], bool):
            raise ScenarioError(f"{path}: field 'loss_on_acks' must be true or false")
        prof_changes["loss_on_acks"] = doc["loss_on_acks"]
    try:
        profile = replace(profile, **prof_changes)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None

    transport = spec.transport
    if "transport" in doc:
        tdoc = doc["transport"]
        if not isinstance(tdoc, dict):
            raise ScenarioError(f"{path}: field 'transport' must be an object")
        bad = set(tdoc) - _TRANSPORT_KEYS
        if bad:
            raise ScenarioError(f"{path}: unknown transport field(s) {sorted(bad)}; allowed: {sorted(_TRANSPORT_KEYS)}")
        try:
            transport = replace(transport, **tdoc)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: field 'transport': {exc}") from None

    changes: dict = {"name": name, "profile": profile, "transport": transport}
    for key in ("file_bytes", "runs", "base_seed"):
        if key in doc:
            changes[key] = _number(doc, key, path, integer=True)
    if "suites" in doc:
        suites = doc["suites"]
        if not isinstance(suites, list) or not all(isinstance(s, str) for s in suites):
            raise ScenarioError(f"{path}: field 'suites' must be a list of suite names")
        known = set(SUITE_NAMES)
        unknown_suites = [s for s in suites if s not in known]
        if unknown_suites:
            raise ScenarioError(f"{path}: field 'suites': unknown suite(s) {unknown_suites}; known: {', '.join(SUITE_NAMES)}")
        changes["suites"] = tuple(suites)
    try:
        return replace(spec, **changes)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def load_scenario(path: str | Path, latency_is_rtt: bool | None = None) -> ScenarioSpec:
    """Read a JSON scenario file. OSError propagates unchanged; content problems raise ScenarioError."""
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc, path, latency_is_rtt)
