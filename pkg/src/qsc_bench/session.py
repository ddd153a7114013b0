"""TLS-1.3-shaped handshake plus file download, timed on the simulation clock."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .netlink import DeterministicRng, NetworkProfile
from .suites import CryptoProvider, CryptoSuite, MockProvider, flight_sizes
from .transport import TransferFailed, TransferTrace, TransportParams, deliver_stream

REQUEST_BYTES = 512
RECORD_OVERHEAD_PCT = 1  # TLS record framing on the response body, rounded up

# Stream labels forked off the run seed. Position-keyed (never suite-keyed) so
# every suite sees the same loss draws for the same flight in the same run.
FLIGHT_CLIENT_HELLO = 0
FLIGHT_SERVER = 1
FLIGHT_CLIENT_FINISHED = 2
FLIGHT_REQUEST = 3
FLIGHT_RESPONSE = 4


class HandshakeFailed(RuntimeError):
    def __init__(self, message: str, elapsed_s: float, flights: list[TransferTrace]) -> None:
        super().__init__(message)
        self.elapsed_s = elapsed_s
        self.flights = flights


class SessionFailed(RuntimeError):
    def __init__(self, message: str, sample: TimingSample) -> None:
        super().__init__(message)
        self.sample = sample


@dataclass(frozen=True)
class HandshakeTrace:
    handshake_time_s: float
    flights: list[TransferTrace] = field(default_factory=list)
    crypto_time_s: float = 0.0


@dataclass(frozen=True)
class TimingSample:
    """One measured run. Times are whole nanoseconds so CSV output is lossless."""

    suite_name: str
    handshake_time_s: float
    total_download_time_s: float
    file_bytes: int
    transfer_rate_Bps: float
    seed: int
    valid: bool = True


def quantize_ns(seconds: float) -> float:
    return round(seconds, 9)


def response_bytes(file_bytes: int) -> int:
    return file_bytes + -(-file_bytes * RECORD_OVERHEAD_PCT // 100)


def _flight(size: int, profile, params, rng, piggyback: bool) -> tuple[float, TransferTrace]:
    trace = deliver_stream(size, 0.0, profile, params, rng)
    return (trace.delivered_time_s if piggyback else trace.completion_time_s), trace


def run_handshake(
    suite: CryptoSuite,
    profile: NetworkProfile,
    params: TransportParams,
    rng: DeterministicRng,
    provider: CryptoProvider | None = None,
) -> HandshakeTrace:
    """Time one full (non-resumed) handshake, from the first ClientHello byte.

    Three flights: ClientHello, the server flight (ServerHello through
    Finished) and the client Finished. With ``params.piggyback_handshake_acks``
    the first two flights end when the peer has every byte, since the peer's
    reply carries the ACK; the client Finished always waits for its ACK.
    Crypto costs are added serially and never overlap network time.
    """
    provider = provider or MockProvider()
    sizes = flight_sizes(suite)
    seed = rng.seed
    piggyback = params.piggyback_handshake_acks
    flights: list[TransferTrace] = []
    crypto = 0.0
    elapsed = 0.0

    def charge(*kinds: str) -> None:
        nonlocal crypto, elapsed
        for kind in kinds:
            blob = provider.op("sign", suite, seed).blob if kind == "verify" else None
            cost = provider.op(kind, suite, seed, blob).elapsed_s
            crypto += cost
            elapsed += cost

    plan = (
        (("keygen",), sizes.client_hello, FLIGHT_CLIENT_HELLO, piggyback),
        (("encap", "sign", "keygen"), sizes.server_flight, FLIGHT_SERVER, piggyback),
        (("decap", "verify", "verify"), sizes.client_finished, FLIGHT_CLIENT_FINISHED, False),
    )
    for kinds, size, position, ack_rides in plan:
        charge(*kinds)
        try:
            duration, trace = _flight(size, profile, params, rng.fork(position), ack_rides)
        except TransferFailed as exc:
            flights.append(exc.trace)
            raise HandshakeFailed(
                f"handshake flight {position} failed: {exc}", elapsed + exc.trace.completion_time_s, flights
            ) from exc
        flights.append(trace)
        elapsed += duration
    return HandshakeTrace(handshake_time_s=elapsed, flights=flights, crypto_time_s=crypto)


def run_session(
    suite: CryptoSuite,
    profile: NetworkProfile,
    file_bytes: int,
    params: TransportParams,
    seed: int,
    provider: CryptoProvider | None = None,
) -> TimingSample:
    """Handshake, a fixed-size request, then the response body.

    TCP connection setup happens before the clock starts and is charged to
    neither metric. Raises SessionFailed carrying an invalid partial sample.
    """
    if file_bytes < 0:
        raise ValueError("file_bytes must be >= 0")
    rng = DeterministicRng(seed)
    elapsed = 0.0
    handshake = math.nan
    try:
        hs = run_handshake(suite, profile, params, rng, provider)
        handshake = elapsed = hs.handshake_time_s
        req = deliver_stream(REQUEST_BYTES, 0.0, profile, params, rng.fork(FLIGHT_REQUEST))
        elapsed += req.delivered_time_s if params.piggyback_handshake_acks else req.completion_time_s
        body = deliver_stream(response_bytes(file_bytes), 0.0, profile, params, rng.fork(FLIGHT_RESPONSE))
        elapsed += body.completion_time_s
    except (HandshakeFailed, TransferFailed) as exc:
        if isinstance(exc, HandshakeFailed):
            elapsed = exc.elapsed_s
        else:
            elapsed += exc.trace.completion_time_s
        partial = TimingSample(
            suite.name,
            quantize_ns(handshake if not math.isnan(handshake) else elapsed),
            quantize_ns(elapsed),
            file_bytes,
            0.0,
            seed,
            valid=False,
        )
        raise SessionFailed(str(exc), partial) from exc

    total = quantize_ns(elapsed)
    return TimingSample(
        suite_name=suite.name,
        handshake_time_s=quantize_ns(handshake),
        total_download_time_s=total,
        file_bytes=file_bytes,
        transfer_rate_Bps=file_bytes / total if total > 0 else 0.0,
        seed=seed,
    )
