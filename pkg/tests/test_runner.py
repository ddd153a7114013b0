import json
import math
from dataclasses import replace

import pytest

from qsc_bench.netlink import NetworkProfile
from qsc_bench.runner import (
    MB2,
    ScenarioError,
    ScenarioSpec,
    execute,
    load_scenario,
    preset,
    run_seed,
    sweep,
    sweep_file_size,
    sweep_latency,
    sweep_loss,
)
from qsc_bench.suites import SUITE_NAMES, builtin_catalog


def test_presets():
    ideal, normal, congested = preset("ideal"), preset("normal"), preset("congested")
    assert (ideal.profile.one_way_latency_s, ideal.profile.loss_rate, ideal.runs) == (0.0, 0.0, 100)
    assert (normal.profile.one_way_latency_s, normal.profile.loss_rate) == (0.100, 0.015)
    assert (congested.profile.one_way_latency_s, congested.profile.loss_rate) == (0.200, 0.025)
    for spec in (ideal, normal, congested):
        assert spec.file_bytes == MB2 == 2_097_152
        assert spec.suites == SUITE_NAMES


def test_unknown_preset():
    with pytest.raises(ScenarioError, match="ideal, normal, congested"):
        preset("nosuch")


def test_file_size_sweep():
    specs = sweep_file_size()
    sizes = [s.file_bytes for s in specs]
    assert sizes[:3] == [244, 488, 976]
    assert sizes[-1] == 244 * 2**18 == 63_963_136
    assert all(s.profile == NetworkProfile(one_way_latency_s=0.2, loss_rate=0.025) for s in specs)
    assert [s.file_bytes for s in sweep_file_size(2000)] == [244, 488, 976, 1952]
    with pytest.raises(ScenarioError):
        sweep_file_size(100)


def test_full_file_size_sweep_reaches_16gb():
    assert sweep("file-size", max_bytes=16 * 2**30)[-1].file_bytes == 244 * 2**26 == 16_374_562_816


def test_latency_sweep():
    specs = sweep_latency()
    assert len(specs) == 9
    assert specs[2].profile.one_way_latency_s == pytest.approx(0.100)
    assert [round(s.profile.one_way_latency_s * 1000) for s in specs] == list(range(0, 401, 50))
    assert all(s.profile.loss_rate == 0.025 and s.file_bytes == MB2 for s in specs)


def test_loss_sweep():
    specs = sweep_loss()
    assert len(specs) == 11
    assert specs[5].profile.loss_rate == pytest.approx(0.025)
    assert [s.profile.loss_rate for s in specs] == pytest.approx([k * 0.005 for k in range(11)])
    assert all(s.profile.one_way_latency_s == 0.2 and s.file_bytes == MB2 for s in specs)


@pytest.mark.parametrize("kind", ["file-size", "latency", "loss"])
def test_sweeps_vary_one_field(kind):
    specs = sweep(kind, max_bytes=10_000)
    first = specs[0]
    for spec in specs[1:]:
        if kind == "file-size":
            assert replace(spec, file_bytes=first.file_bytes) == first
        elif kind == "latency":
            assert replace(spec, profile=replace(spec.profile, one_way_latency_s=0.0)) == replace(
                first, profile=replace(first.profile, one_way_latency_s=0.0)
            )
        else:
            assert replace(spec, profile=replace(spec.profile, loss_rate=0.0)) == replace(
                first, profile=replace(first.profile, loss_rate=0.0)
            )


def test_unknown_sweep():
    with pytest.raises(ScenarioError, match="file-size, latency, loss"):
        sweep("bandwidth")


def test_seeds_distinct_within_scenario():
    spec = replace(preset("congested"), runs=5000)
    seeds = [run_seed(spec, i) for i in range(spec.runs)]
    assert len(set(seeds)) == len(seeds)


def test_execute_ideal_zero_handshake():
    res = execute(replace(preset("ideal"), runs=5))
    for suite in SUITE_NAMES:
        assert len(res.samples[suite]) == 5
        assert all(s.handshake_time_s < 1e-9 for s in res.samples[suite])


def test_execute_reproducible_and_worker_independent():
    spec = replace(preset("normal"), runs=6, file_bytes=200_000)
    assert execute(spec, workers=1) == execute(spec, workers=4) == execute(spec, workers=1)


def test_execute_counts_and_order():
    spec = replace(preset("congested"), runs=3, file_bytes=10_000)
    res = execute(spec)
    assert list(res.samples) == list(SUITE_NAMES)
    for suite in SUITE_NAMES:
        assert [s.seed for s in res.samples[suite]] == [run_seed(spec, i) for i in range(3)]
        assert all(s.suite_name == suite for s in res.samples[suite])


def test_execute_unknown_suite_before_running():
    spec = ScenarioSpec(name="x", profile=NetworkProfile(), suites=("classical", "nope"), runs=1)
    with pytest.raises(ScenarioError, match="nope"):
        execute(spec)


def test_execute_records_failures():
    from qsc_bench.transport import TransportParams

    spec = ScenarioSpec(
        name="harsh",
        profile=NetworkProfile(one_way_latency_s=0.01, loss_rate=0.9),
        suites=("classical",),
        runs=20,
        file_bytes=5000,
        transport=TransportParams(max_retries=1),
    )
    res = execute(spec)
    assert len(res.samples["classical"]) == 20
    assert res.excluded("classical") > 0
    assert len(res.valid("classical")) + res.excluded("classical") == 20


def test_spec_validation():
    with pytest.raises(ScenarioError):
        ScenarioSpec(name="x", profile=NetworkProfile(), runs=0)
    with pytest.raises(ScenarioError):
        ScenarioSpec(name="x", profile=NetworkProfile(), suites=())


def _write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return p


def test_load_preset_with_name(tmp_path):
    spec = load_scenario(_write(tmp_path, {"name": "mine", "preset": "normal"}))
    assert spec == replace(preset("normal"), name="mine")


def test_load_runs_override(tmp_path):
    assert load_scenario(_write(tmp_path, {"preset": "ideal", "runs": 5})).runs == 5


def test_load_full_custom(tmp_path):
    doc = {
        "name": "lab",
        "latency_ms": 80,
        "loss_pct": 1.0,
        "bandwidth_Bps": 1_250_000,
        "mtu_bytes": 9000,
        "file_bytes": 4096,
        "runs": 3,
        "base_seed": 17,
        "suites": ["classical", "kyber_falcon"],
        "transport": {"initial_cwnd_segments": 4, "piggyback_handshake_acks": False},
        "loss_on_acks": False,
    }
    spec = load_scenario(_write(tmp_path, doc))
    assert spec.profile == NetworkProfile(0.08, 0.01, 1_250_000.0, 9000, False)
    assert spec.suites == ("classical", "kyber_falcon")
    assert spec.transport.initial_cwnd_segments == 4 and not spec.transport.piggyback_handshake_acks
    assert (spec.file_bytes, spec.runs, spec.base_seed) == (4096, 3, 17)


def test_load_latency_is_rtt(tmp_path):
    spec = load_scenario(_write(tmp_path, {"latency_ms": 100, "latency_is_rtt": True}))
    assert spec.profile.one_way_latency_s == pytest.approx(0.05)
    spec = load_scenario(_write(tmp_path, {"preset": "congested"}), latency_is_rtt=True)
    assert spec.profile.one_way_latency_s == pytest.approx(0.1)


def test_load_defaults(tmp_path):
    spec = load_scenario(_write(tmp_path, {}))
    assert spec.profile.bandwidth_Bps == math.inf and spec.runs == 100 and spec.file_bytes == MB2


@pytest.mark.parametrize(
    "doc, match",
    [
        ({"loss_rate": 1.5}, r"\[0, 1\)"),
        ({"loss_pct": 150}, r"\[0, 100\)"),
        ({"latency_ms": -5}, "latency_ms"),
        ({"suites": ["classical", "rsa"]}, "rsa"),
        ({"runs": 0}, "runs"),
        ({"runs": "ten"}, "runs"),
        ({"colour": "red"}, "unknown field"),
        ({"preset": "stormy"}, "valid presets"),
        ({"transport": {"warp": 9}}, "unknown transport"),
        ({"transport": {"max_retries": 0}}, "max_retries"),
        ({"bandwidth_Bps": 0}, "bandwidth_Bps"),
    ],
)
def test_load_rejects(tmp_path, doc, match):
    with pytest.raises(ScenarioError, match=match):
        load_scenario(_write(tmp_path, doc))


def test_load_parse_error_line(tmp_path):
    with pytest.raises(ScenarioError, match="line 3"):
        load_scenario(_write(tmp_path, '{\n "name": "x",\n "runs": ,\n}'))


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_scenario(tmp_path / "absent.json")


def test_committed_example_scenario():
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "scenarios" / "example.json"
    spec = load_scenario(path)
    assert spec.runs >= 1 and set(spec.suites) <= set(SUITE_NAMES)


def test_overridden_catalog_is_used():
    from qsc_bench.suites import apply_override

    cat = builtin_catalog()
    cat[0] = apply_override(cat[0], {"signature_bytes": 30_000})
    spec = replace(preset("normal"), runs=2, suites=("classical",), file_bytes=0)
    slow = execute(spec, cat)
    fast = execute(spec)
    assert slow.samples["classical"][0].handshake_time_s >= fast.samples["classical"][0].handshake_time_s
