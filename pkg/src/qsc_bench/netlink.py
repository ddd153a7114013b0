"""One impaired network path: propagation delay, i.i.d. packet loss, bandwidth, MTU."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

HEADER_BYTES = 40  # IPv4 + TCP, no options
DEFAULT_MTU = 1500

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class LinkContractError(ValueError):
    """A caller broke a link precondition (e.g. a packet larger than the MTU)."""


@dataclass(frozen=True)
class NetworkProfile:
    """Link impairments. `bandwidth_Bps` of ``math.inf`` means unlimited.

    Loss applies to both directions unless `loss_on_acks` is False.
    """

    one_way_latency_s: float = 0.0
    loss_rate: float = 0.0
    bandwidth_Bps: float = math.inf
    mtu_bytes: int = DEFAULT_MTU
    loss_on_acks: bool = True

    def __post_init__(self) -> None:
        if not (self.one_way_latency_s >= 0 and math.isfinite(self.one_way_latency_s)):
            raise ValueError(f"one_way_latency_s must be a finite value >= 0, got {self.one_way_latency_s!r}")
        if not (0.0 <= self.loss_rate < 1.0):
            raise ValueError(f"loss_rate must be in [0, 1), got {self.loss_rate!r}")
        if not self.bandwidth_Bps > 0:
            raise ValueError(f"bandwidth_Bps must be > 0 (inf for unlimited), got {self.bandwidth_Bps!r}")
        if self.mtu_bytes - HEADER_BYTES <= 0:
            raise ValueError(f"mtu_bytes must exceed the {HEADER_BYTES}-byte header, got {self.mtu_bytes!r}")

    @property
    def payload_per_segment_bytes(self) -> int:
        return self.mtu_bytes - HEADER_BYTES

    @property
    def ack_loss_rate(self) -> float:
        return self.loss_rate if self.loss_on_acks else 0.0

    @property
    def rtt_s(self) -> float:
        return 2.0 * self.one_way_latency_s


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary labelled parts (blake2b, not ``hash``)."""
    text = "\x1f".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


class DeterministicRng:
    """SplitMix64 generator.

    The algorithm is fixed: state += 0x9E3779B97F4A7C15, then the standard
    SplitMix64 finalizer; uniforms take the top 53 bits. The compiled
    transport kernel runs the same recurrence on ``state``, so a stream can
    be handed to it and resumed afterwards.
    """

    __slots__ = ("seed", "state")

    def __init__(self, seed: int) -> None:
        self.seed = seed & _MASK64
        self.state = self.seed

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def fork(self, label: object) -> DeterministicRng:
        """Independent child stream keyed on this stream's seed, not its position."""
        return DeterministicRng(derive_seed(self.seed, label))

    def __repr__(self) -> str:
        return f"DeterministicRng(seed={self.seed:#018x}, state={self.state:#018x})"


@dataclass(frozen=True)
class DeliveryOutcome:
    delivered: bool
    arrival_time_s: float | None = None


def transmit(size_bytes: int, send_time_s: float, profile: NetworkProfile, rng: DeterministicRng) -> DeliveryOutcome:
    """Send one packet. Consumes exactly one draw from `rng`."""
    if size_bytes > profile.mtu_bytes:
        raise LinkContractError(
            f"packet of {size_bytes} bytes exceeds MTU {profile.mtu_bytes}; segment it first"
        )
    if size_bytes < 0 or send_time_s < 0:
        raise LinkContractError("size_bytes and send_time_s must be >= 0")
    if rng.uniform() < profile.loss_rate:
        return DeliveryOutcome(False)
    return DeliveryOutcome(True, send_time_s + profile.one_way_latency_s + size_bytes / profile.bandwidth_Bps)


def segment_count(payload_bytes: int, profile: NetworkProfile) -> int:
    if payload_bytes < 0:
        raise ValueError("payload_bytes must be >= 0")
    return -(-payload_bytes // profile.payload_per_segment_bytes)
