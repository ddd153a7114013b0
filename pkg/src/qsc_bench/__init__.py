"""Deterministic TLS handshake and download benchmark for classical vs hybrid post-quantum suites."""

from ._accel import JIT_ENABLED
from .metrics import ComparisonReport, StatsSummary, compare, percent_delta, summarize, transfer_rate
from .netlink import DeterministicRng, NetworkProfile, segment_count, transmit
from .runner import RunResults, ScenarioSpec, execute, load_scenario, preset, sweep_file_size, sweep_latency, sweep_loss
from .session import HandshakeTrace, TimingSample, run_handshake, run_session
from .suites import CostModel, CryptoSuite, KemParams, SigParams, builtin_catalog, flight_sizes, mock_provider_op
from .transport import TransferFailed, TransferTrace, TransportParams, deliver_stream, rto_for_attempt

__version__ = "0.1.0"
