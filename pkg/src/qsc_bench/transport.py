"""Reliable byte stream over a lossy link: segmentation, cumulative ACKs, RTO backoff, AIMD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .netlink import HEADER_BYTES, DeterministicRng, NetworkProfile

RTO_MAX_S = 60.0


@dataclass(frozen=True)
class TransportParams:
    initial_cwnd_segments: int = 10
    cwnd_cap_segments: int = 64
    rto_initial_s: float = 1.0
    rto_min_s: float = 0.2
    rto_backoff_factor: float = 2.0
    rto_max_s: float = RTO_MAX_S
    max_retries: int = 15
    ack_bytes: int = 40
    delayed_ack: bool = False
    delayed_ack_timeout_s: float = 0.04
    # Session-level: a handshake flight's last ACK rides on the peer's next flight.
    piggyback_handshake_acks: bool = True

    def __post_init__(self) -> None:
        for name in ("initial_cwnd_segments", "cwnd_cap_segments", "max_retries"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)!r}")
        for name in ("rto_initial_s", "rto_min_s", "rto_backoff_factor", "rto_max_s", "ack_bytes"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.delayed_ack_timeout_s < 0:
            raise ValueError("delayed_ack_timeout_s must be >= 0")


@dataclass(frozen=True)
class TransferTrace:
    completion_time_s: float
    segments_sent: int
    retransmissions: int
    bytes_delivered: int
    delivered_time_s: float = 0.0  # last byte in order at the receiver; <= completion


class TransferFailed(RuntimeError):
    def __init__(self, message: str, trace: TransferTrace) -> None:
        super().__init__(message)
        self.trace = trace


def rto_for_attempt(params: TransportParams, srtt_s: float | None, attempt: int) -> float:
    """Retransmission timeout for the `attempt`-th retry (0 = first send).

    Without an RTT sample the base is ``rto_initial_s``.
    """
    if srtt_s is not None and srtt_s < 0:
        raise ValueError("srtt_s must be >= 0")
    return _kernels.rto_kernel(
        -1.0 if srtt_s is None else float(srtt_s),
        int(attempt),
        params.rto_initial_s,
        params.rto_min_s,
        params.rto_backoff_factor,
        params.rto_max_s,
    )


def deliver_stream(
    payload_bytes: int,
    start_time_s: float,
    profile: NetworkProfile,
    params: TransportParams,
    rng: DeterministicRng,
) -> TransferTrace:
    """Move `payload_bytes` from sender to receiver starting at `start_time_s`.

    Returned durations are relative to `start_time_s`. `rng` is advanced in
    place. Raises TransferFailed if a segment exhausts ``max_retries``.
    """
    if payload_bytes < 0:
        raise ValueError("payload_bytes must be >= 0")
    with np.errstate(over="ignore"):
        status, end, delivered, sent, nbytes, state = _kernels.deliver_kernel(
            int(payload_bytes),
            int(profile.payload_per_segment_bytes),
            HEADER_BYTES,
            float(start_time_s),
            float(profile.one_way_latency_s),
            float(profile.loss_rate),
            float(profile.ack_loss_rate),
            float(profile.bandwidth_Bps),
            float(params.ack_bytes),
            int(params.initial_cwnd_segments),
            int(params.cwnd_cap_segments),
            float(params.rto_initial_s),
            float(params.rto_min_s),
            float(params.rto_backoff_factor),
            float(params.rto_max_s),
            int(params.max_retries),
            bool(params.delayed_ack),
            float(params.delayed_ack_timeout_s),
            np.uint64(rng.state),
        )
    rng.state = int(state)
    n_min = -(-int(payload_bytes) // profile.payload_per_segment_bytes)
    trace = TransferTrace(
        completion_time_s=float(end) - start_time_s,
        segments_sent=int(sent),
        retransmissions=max(0, int(sent) - n_min),
        bytes_delivered=int(nbytes),
        delivered_time_s=(float(delivered) - start_time_s) if delivered >= 0 else float(end) - start_time_s,
    )
    if status != _kernels.OK:
        raise TransferFailed(
            f"segment exceeded max_retries={params.max_retries} after {int(sent)} transmissions", trace
        )
    return trace
