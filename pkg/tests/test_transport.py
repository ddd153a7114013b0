import json
import math
import os
import statistics
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from oracles import lossless_transfer_time
from qsc_bench._accel import ENV_FLAG
from qsc_bench.netlink import DeterministicRng, NetworkProfile
from qsc_bench.transport import TransferFailed, TransportParams, deliver_stream, rto_for_attempt

P = TransportParams()


def test_empty_payload():
    t = deliver_stream(0, 0.0, NetworkProfile(one_way_latency_s=0.1), P, DeterministicRng(1))
    assert (t.completion_time_s, t.segments_sent, t.retransmissions, t.bytes_delivered) == (0.0, 0, 0, 0)


def test_one_segment_one_rtt():
    t = deliver_stream(1000, 0.0, NetworkProfile(one_way_latency_s=0.1), P, DeterministicRng(1))
    assert t.completion_time_s == pytest.approx(0.200, abs=1e-12)
    assert t.delivered_time_s == pytest.approx(0.100, abs=1e-12)
    assert (t.segments_sent, t.retransmissions, t.bytes_delivered) == (1, 0, 1000)


def test_start_time_offsets_only():
    p = NetworkProfile(one_way_latency_s=0.1, loss_rate=0.2)
    a = deliver_stream(50_000, 0.0, p, P, DeterministicRng(4))
    b = deliver_stream(50_000, 10.0, p, P, DeterministicRng(4))
    assert a.segments_sent == b.segments_sent
    assert a.completion_time_s == pytest.approx(b.completion_time_s, abs=1e-9)


@pytest.mark.parametrize("payload", [1, 1460, 1461, 14_600, 14_601, 100_000, 2_097_152, 10 * 2**20])
@pytest.mark.parametrize("latency", [0.0, 0.05, 0.2])
def test_lossless_matches_closed_form(payload, latency):
    expected, n = lossless_transfer_time(payload, latency)
    t = deliver_stream(payload, 0.0, NetworkProfile(one_way_latency_s=latency), P, DeterministicRng(0))
    assert abs(t.completion_time_s - expected) <= 1e-9
    assert t.segments_sent == n and t.retransmissions == 0
    assert t.bytes_delivered == payload


@pytest.mark.parametrize("payload", [1, 3000, 500_000, 2_097_152])
@pytest.mark.parametrize("bw", [125_000.0, 12_500_000.0])
def test_lossless_with_bandwidth_matches_closed_form(payload, bw):
    expected, _ = lossless_transfer_time(payload, 0.1, bandwidth=bw)
    t = deliver_stream(payload, 0.0, NetworkProfile(one_way_latency_s=0.1, bandwidth_Bps=bw), P, DeterministicRng(0))
    assert abs(t.completion_time_s - expected) <= 1e-9


def test_two_mib_is_1437_segments():
    expected, n = lossless_transfer_time(2_097_152, 0.1)
    t = deliver_stream(2_097_152, 0.0, NetworkProfile(one_way_latency_s=0.1), P, DeterministicRng(0))
    assert n == t.segments_sent == 1437
    assert abs(t.completion_time_s - expected) <= 1e-9


@given(
    payload=st.integers(0, 3_000_000),
    latency=st.floats(0, 0.5),
    cwnd0=st.integers(1, 20),
    cap=st.integers(1, 128),
    mtu=st.integers(100, 9000),
)
@settings(max_examples=60, deadline=None)
def test_lossless_closed_form_property(payload, latency, cwnd0, cap, mtu):
    params = TransportParams(initial_cwnd_segments=cwnd0, cwnd_cap_segments=max(cap, cwnd0))
    expected, n = lossless_transfer_time(payload, latency, mtu=mtu, cwnd0=cwnd0, cap=max(cap, cwnd0))
    t = deliver_stream(payload, 0.0, NetworkProfile(one_way_latency_s=latency, mtu_bytes=mtu), params, DeterministicRng(0))
    assert abs(t.completion_time_s - expected) <= 1e-9
    assert t.segments_sent == n


def test_rto_examples():
    assert rto_for_attempt(P, 0.2, 0) == pytest.approx(0.4)
    assert rto_for_attempt(P, 0.2, 2) == pytest.approx(1.6)
    assert rto_for_attempt(P, 0.05, 0) == pytest.approx(0.2)
    assert rto_for_attempt(P, None, 0) == pytest.approx(1.0)
    assert rto_for_attempt(P, 0.2, 20) == 60.0
    with pytest.raises(ValueError):
        rto_for_attempt(P, -1.0, 0)


def _mean_sent(loss, runs, loss_on_acks):
    p = NetworkProfile(one_way_latency_s=0.05, loss_rate=loss, loss_on_acks=loss_on_acks)
    sent = []
    for seed in range(runs):
        try:
            sent.append(deliver_stream(1000, 0.0, p, P, DeterministicRng(seed)).segments_sent)
        except TransferFailed as exc:
            sent.append(exc.trace.segments_sent)
    return statistics.fmean(sent)


def test_stop_and_wait_data_loss():
    # Geometric number of sends: 1 / (1 - p).
    assert _mean_sent(0.5, 2000, loss_on_acks=False) == pytest.approx(2.0, rel=0.05)


def test_stop_and_wait_both_directions():
    # A send succeeds only if data and ACK both survive: 1 / (1 - p)^2.
    assert _mean_sent(0.3, 4000, loss_on_acks=True) == pytest.approx(1 / 0.49, rel=0.05)


def test_retransmissions_conservation():
    p = NetworkProfile(one_way_latency_s=0.02, loss_rate=0.05)
    for seed in range(50):
        t = deliver_stream(200_000, 0.0, p, P, DeterministicRng(seed))
        assert t.retransmissions == t.segments_sent - 137 >= 0
        assert t.bytes_delivered == 200_000
        assert 0 <= t.delivered_time_s <= t.completion_time_s


def test_deterministic():
    p = NetworkProfile(one_way_latency_s=0.1, loss_rate=0.04)
    a = deliver_stream(300_000, 0.0, p, P, DeterministicRng(11))
    b = deliver_stream(300_000, 0.0, p, P, DeterministicRng(11))
    assert a == b


def test_advances_rng():
    rng = DeterministicRng(1)
    deliver_stream(3000, 0.0, NetworkProfile(), P, rng)
    ref = DeterministicRng(1)
    for _ in range(2 * 3):  # three segments, two draws each
        ref.next_u64()
    assert rng.state == ref.state


def test_failure_carries_partial_trace():
    params = TransportParams(max_retries=1)
    p = NetworkProfile(one_way_latency_s=0.01, loss_rate=0.95)
    with pytest.raises(TransferFailed) as info:
        for seed in range(100):
            deliver_stream(5000, 0.0, p, params, DeterministicRng(seed))
    tr = info.value.trace
    assert tr.segments_sent >= 2
    assert tr.bytes_delivered < 5000


def test_mean_completion_nondecreasing_in_loss():
    payload = 50_000
    means = []
    for k in range(10):
        loss = k * 0.005
        p = NetworkProfile(one_way_latency_s=0.05, loss_rate=loss)
        times = [deliver_stream(payload, 0.0, p, P, DeterministicRng(s)).completion_time_s for s in range(500)]
        means.append((loss, statistics.fmean(times), statistics.stdev(times) / math.sqrt(len(times))))
    for (_, m0, se0), (_, m1, _) in zip(means, means[1:]):
        assert m1 >= m0 - se0


def test_delayed_ack_lossless():
    params = TransportParams(delayed_ack=True, delayed_ack_timeout_s=0.04)
    p = NetworkProfile(one_way_latency_s=0.1)
    # one segment: ACK held for the timer
    t = deliver_stream(1000, 0.0, p, params, DeterministicRng(0))
    assert t.completion_time_s == pytest.approx(0.24)
    # two segments: ACK on the second arrival, no timer
    t = deliver_stream(2000, 0.0, p, params, DeterministicRng(0))
    assert t.completion_time_s == pytest.approx(0.2)


_PARITY_SCRIPT = """
import json
from qsc_bench._accel import JIT_ENABLED
from qsc_bench.netlink import DeterministicRng, NetworkProfile
from qsc_bench.transport import TransportParams, TransferFailed, deliver_stream
out = {"jit": JIT_ENABLED, "traces": []}
for seed in (0, 7, 2**63 + 1):
    for loss, bw in ((0.03, 1e6), (0.2, float("inf"))):
        rng = DeterministicRng(seed)
        p = NetworkProfile(one_way_latency_s=0.1, loss_rate=loss, bandwidth_Bps=bw)
        try:
            t = deliver_stream(250_000, 0.0, p, TransportParams(delayed_ack=seed == 7), rng)
            out["traces"].append([t.completion_time_s.hex(), t.delivered_time_s.hex(), t.segments_sent, rng.state])
        except TransferFailed as exc:
            out["traces"].append(["failed", exc.trace.segments_sent, rng.state])
print(json.dumps(out))
"""


def _run_parity(disable_jit):
    env = dict(os.environ)
    env.pop(ENV_FLAG, None)
    if disable_jit:
        env[ENV_FLAG] = "1"
    proc = subprocess.run([sys.executable, "-c", _PARITY_SCRIPT], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def test_compiled_and_fallback_paths_agree_bitwise():
    fast = _run_parity(disable_jit=False)
    slow = _run_parity(disable_jit=True)
    assert fast["jit"] is True and slow["jit"] is False
    assert fast["traces"] == slow["traces"]
