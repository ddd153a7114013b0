"""Cipher-suite catalog, TLS 1.3 flight sizing and a deterministic mock crypto provider.

Nothing here performs real cryptography. A suite is a bundle of artifact sizes
(key shares, public keys, signatures) plus an optional per-operation cost model
that the session engine charges to the simulation clock.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Protocol

# Record framing constants. Representative, not measured; override per call.
FIXED_HELLO_OVERHEAD = 256
FIXED_FINISHED_BYTES = 52
CERT_OVERHEAD_BYTES = 500

# P-384 uncompressed point: 0x04 || X || Y = 1 + 48 + 48.
P384_SHARE_BYTES = 97
P384_SECRET_BYTES = 48

OP_KINDS = ("keygen", "encap", "decap", "sign", "verify")


class SuiteError(ValueError):
    """Invalid suite definition or override."""


def _check_nonneg(owner: str, **values: float) -> None:
    for key, value in values.items():
        if value < 0:
            raise SuiteError(f"{owner}.{key} must be >= 0, got {value!r}")


@dataclass(frozen=True)
class KemParams:
    name: str
    client_share_bytes: int
    server_share_bytes: int
    shared_secret_bytes: int

    def __post_init__(self) -> None:
        if not self.name:
            raise SuiteError("KEM name must be non-empty")
        _check_nonneg(
            f"kem[{self.name}]",
            client_share_bytes=self.client_share_bytes,
            server_share_bytes=self.server_share_bytes,
            shared_secret_bytes=self.shared_secret_bytes,
        )


@dataclass(frozen=True)
class SigParams:
    name: str
    public_key_bytes: int
    signature_bytes: int

    def __post_init__(self) -> None:
        if not self.name:
            raise SuiteError("signature name must be non-empty")
        _check_nonneg(
            f"sig[{self.name}]",
            public_key_bytes=self.public_key_bytes,
            signature_bytes=self.signature_bytes,
        )


@dataclass(frozen=True)
class CostModel:
    """Seconds charged to the simulation clock per primitive call."""

    keygen_s: float = 0.0
    encap_s: float = 0.0
    decap_s: float = 0.0
    sign_s: float = 0.0
    verify_s: float = 0.0

    def __post_init__(self) -> None:
        _check_nonneg("cost", **{f.name: getattr(self, f.name) for f in fields(self)})

    def for_kind(self, kind: str) -> float:
        if kind not in OP_KINDS:
            raise SuiteError(f"unknown operation kind {kind!r}; expected one of {', '.join(OP_KINDS)}")
        return getattr(self, f"{kind}_s")


@dataclass(frozen=True)
class CryptoSuite:
    name: str
    kem: KemParams
    sig: SigParams
    cost: CostModel = field(default_factory=CostModel)
    cert_overhead_bytes: int = CERT_OVERHEAD_BYTES

    def __post_init__(self) -> None:
        if not self.name:
            raise SuiteError("suite name must be non-empty")
        _check_nonneg(f"suite[{self.name}]", cert_overhead_bytes=self.cert_overhead_bytes)


# --- catalog ---------------------------------------------------------------
#
# Sizes are the round-3 NIST submission parameter sets, matching the
# liboqs/OQS-OpenSSL algorithm names (p384_kyber768, dilithium3, falcon512,
# sphincssha2128fsimple). Later FIPS versions differ in places:
#   ML-KEM-768   pk 1184, ct 1088 (unchanged)
#   ML-DSA-65    pk 1952, sig 3309 (round-3 dilithium3 sig is 3293)
#   SLH-DSA-SHA2-128f  pk 32, sig 17088 (unchanged)

X25519 = KemParams("x25519", client_share_bytes=32, server_share_bytes=32, shared_secret_bytes=32)  # RFC 7748
ED25519 = SigParams("ed25519", public_key_bytes=32, signature_bytes=64)  # RFC 8032

# Kyber768 round 3: pk 1184, ct 1088, ss 32. Hybrid shares concatenate the
# classical P-384 point with the Kyber component; secrets concatenate too.
P384_KYBER768 = KemParams(
    "p384_kyber768",
    client_share_bytes=P384_SHARE_BYTES + 1184,
    server_share_bytes=P384_SHARE_BYTES + 1088,
    shared_secret_bytes=P384_SECRET_BYTES + 32,
)

DILITHIUM3 = SigParams("dilithium3", public_key_bytes=1952, signature_bytes=3293)  # round 3, level 3
FALCON512 = SigParams("falcon512", public_key_bytes=897, signature_bytes=666)  # padded (fixed-length) encoding
SPHINCS_SHA2_128F = SigParams("sphincssha2128fsimple", public_key_bytes=32, signature_bytes=17088)

SUITE_NAMES = ("classical", "kyber_dilithium", "kyber_falcon", "kyber_sphincs")


def builtin_catalog() -> list[CryptoSuite]:
    """The four suites under test, classical baseline first."""
    return [
        CryptoSuite("classical", X25519, ED25519),
        CryptoSuite("kyber_dilithium", P384_KYBER768, DILITHIUM3),
        CryptoSuite("kyber_falcon", P384_KYBER768, FALCON512),
        CryptoSuite("kyber_sphincs", P384_KYBER768, SPHINCS_SHA2_128F),
    ]


def catalog_by_name(suites: list[CryptoSuite] | None = None) -> dict[str, CryptoSuite]:
    suites = builtin_catalog() if suites is None else suites
    by_name: dict[str, CryptoSuite] = {}
    for suite in suites:
        if suite.name in by_name:
            raise SuiteError(f"duplicate suite name {suite.name!r}")
        by_name[suite.name] = suite
    return by_name


# --- flight sizing ---------------------------------------------------------


@dataclass(frozen=True)
class FlightSizes:
    """Byte counts of the three handshake flights, with the server flight itemized."""

    client_hello: int
    server_hello: int
    certificate: int
    certificate_verify: int
    server_finished: int
    client_finished: int

    @property
    def server_flight(self) -> int:
        return self.server_hello + self.certificate + self.certificate_verify + self.server_finished

    @property
    def total(self) -> int:
        return self.client_hello + self.server_flight + self.client_finished

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.client_hello, self.server_flight, self.client_finished)


def flight_sizes(
    suite: CryptoSuite,
    hello_overhead: int = FIXED_HELLO_OVERHEAD,
    finished_bytes: int = FIXED_FINISHED_BYTES,
) -> FlightSizes:
    """Size the ClientHello, server flight and client Finished for `suite`.

    The certificate is a single self-signed leaf: fixed overhead, the subject
    public key and one issuer signature. CertificateVerify carries a second
    signature, so each signature byte appears twice in the server flight.
    """
    return FlightSizes(
        client_hello=hello_overhead + suite.kem.client_share_bytes,
        server_hello=hello_overhead + suite.kem.server_share_bytes,
        certificate=suite.cert_overhead_bytes + suite.sig.public_key_bytes + suite.sig.signature_bytes,
        certificate_verify=suite.sig.signature_bytes,
        server_finished=finished_bytes,
        client_finished=finished_bytes,
    )


# --- crypto providers ------------------------------------------------------


@dataclass(frozen=True)
class OpResult:
    blob: bytes
    elapsed_s: float
    ok: bool = True


class CryptoProvider(Protocol):
    def op(self, kind: str, suite: CryptoSuite, seed: int, blob: bytes | None = None) -> OpResult: ...


def _artifact_size(kind: str, suite: CryptoSuite) -> int:
    return {
        "keygen": suite.kem.client_share_bytes,
        "encap": suite.kem.server_share_bytes,
        "decap": suite.kem.shared_secret_bytes,
        "sign": suite.sig.signature_bytes,
        "verify": 1,
    }[kind]


def _expand(kind: str, suite_name: str, seed: int, size: int) -> bytes:
    tag = f"qsc-bench/mock/{kind}/{suite_name}/{seed & 0xFFFFFFFFFFFFFFFF}".encode()
    return hashlib.shake_256(tag).digest(size)


def mock_provider_op(kind: str, suite: CryptoSuite, seed: int, blob: bytes | None = None) -> OpResult:
    """Deterministic stand-in for a primitive call.

    Returns a blob of the artifact size the suite declares for `kind`, derived
    only from (kind, suite name, seed). `verify` accepts exactly the blob that
    `sign` produces for the same suite and seed; its result blob is one byte.
    """
    if kind not in OP_KINDS:
        raise SuiteError(f"unknown operation kind {kind!r}; expected one of {', '.join(OP_KINDS)}")
    cost = suite.cost.for_kind(kind)
    if kind == "verify":
        expected = _expand("sign", suite.name, seed, suite.sig.signature_bytes)
        ok = blob is not None and blob == expected
        return OpResult(b"\x01" if ok else b"\x00", cost, ok)
    return OpResult(_expand(kind, suite.name, seed, _artifact_size(kind, suite)), cost)


class MockProvider:
    def op(self, kind: str, suite: CryptoSuite, seed: int, blob: bytes | None = None) -> OpResult:
        return mock_provider_op(kind, suite, seed, blob)


# --- overrides -------------------------------------------------------------

_KEM_FIELDS = {"client_share_bytes", "server_share_bytes", "shared_secret_bytes"}
_SIG_FIELDS = {"public_key_bytes", "signature_bytes"}
_COST_FIELDS = {"keygen_s", "encap_s", "decap_s", "sign_s", "verify_s"}
OVERRIDE_FIELDS = _KEM_FIELDS | _SIG_FIELDS | _COST_FIELDS | {"cert_overhead_bytes"}


def apply_override(suite: CryptoSuite, changes: dict[str, float]) -> CryptoSuite:
    unknown = set(changes) - OVERRIDE_FIELDS
    if unknown:
        raise SuiteError(
            f"suite {suite.name!r}: unknown override field(s) {sorted(unknown)}; allowed: {sorted(OVERRIDE_FIELDS)}"
        )
    kem = replace(suite.kem, **{k: int(v) for k, v in changes.items() if k in _KEM_FIELDS})
    sig = replace(suite.sig, **{k: int(v) for k, v in changes.items() if k in _SIG_FIELDS})
    cost = replace(suite.cost, **{k: float(v) for k, v in changes.items() if k in _COST_FIELDS})
    cert = int(changes.get("cert_overhead_bytes", suite.cert_overhead_bytes))
    return replace(suite, kem=kem, sig=sig, cost=cost, cert_overhead_bytes=cert)


def load_suite_overrides(path: str | Path, suites: list[CryptoSuite] | None = None) -> list[CryptoSuite]:
    """Apply a JSON override file to the catalog.

    Schema: ``{"suites": {"<suite name>": {"<field>": value, ...}, ...}}``.
    Fields not mentioned keep their catalog values.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SuiteError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("suites"), dict):
        raise SuiteError(f"{path}: expected an object with a 'suites' mapping")
    by_name = catalog_by_name(suites)
    for name, changes in doc["suites"].items():
        if name not in by_name:
            raise SuiteError(f"{path}: unknown suite {name!r}; known: {', '.join(by_name)}")
        if not isinstance(changes, dict):
            raise SuiteError(f"{path}: suites.{name} must be an object")
        by_name[name] = apply_override(by_name[name], changes)
    return list(by_name.values())
