"""Key material types and keyed derivation procedures for the wg-IoT protocol.

All values are fixed-width byte strings packed MSB-first.  Every derivation
goes through a pluggable PRF backend; "first N bits" of a PRF output always
means the most significant N bits (a byte-string prefix).
"""

from __future__ import annotations

import hmac
import hashlib
from dataclasses import dataclass


class CryptoError(Exception):
    pass


class ChallengeLength(CryptoError):
    """Challenge passed to authorization_signature has an unsupported length."""


class BadLength(CryptoError):
    """Packed value has the wrong byte length."""


class CounterOverflow(CryptoError):
    """RMC counter would wrap past 128 bits."""


U64_MAX = 2**64 - 1
U128_MAX = 2**128 - 1

# Domain-separation tags for the PRF backend.
TAG_AUTH_SIGNATURE = 0x01
TAG_SD_GENERATION = 0x02
TAG_AUTHZ_SIGNATURE = 0x03
TAG_SESSION_KEY = 0x04


def _check_bytes(name: str, value: bytes, length: int) -> None:
    if not isinstance(value, bytes) or len(value) != length:
        raise BadLength(f"{name} must be exactly {length} bytes")


def _check_u64(name: str, value: int) -> None:
    if not 0 <= value <= U64_MAX:
        raise BadLength(f"{name} must fit in 64 bits")


# ---------------------------------------------------------------------------
# Domain types


@dataclass(frozen=True)
class WgieRecord:
    """Per-subscriber root material: 256-bit key plus ESN and ICD_IN."""

    key: bytes  # 32 bytes
    esn: int  # 64-bit equipment serial number of the access point
    icd_in: int  # 64-bit device identification number

    def __post_init__(self):
        _check_bytes("key", self.key, 32)
        _check_u64("esn", self.esn)
        _check_u64("icd_in", self.icd_in)


@dataclass(frozen=True)
class SdPair:
    """128-bit service data: sd1 authenticates, sd2 feeds the session key."""

    sd1: bytes  # 8 bytes
    sd2: bytes  # 8 bytes

    def __post_init__(self):
        _check_bytes("sd1", self.sd1, 8)
        _check_bytes("sd2", self.sd2, 8)

    @property
    def packed(self) -> bytes:
        return self.sd1 + self.sd2

    @classmethod
    def from_packed(cls, raw: bytes) -> "SdPair":
        _check_bytes("sd", raw, 16)
        return cls(raw[:8], raw[8:])


@dataclass(frozen=True)
class ScAuthKey:
    """128-bit permanent device authentication key.  Never leaves the device."""

    bits: bytes

    def __post_init__(self):
        _check_bytes("sc_auth_k", self.bits, 16)


@dataclass(frozen=True)
class Aac:
    bits: bytes  # 128-bit authentication value

    def __post_init__(self):
        _check_bytes("aac", self.bits, 16)


@dataclass(frozen=True)
class Mpc:
    bits: bytes  # 128-bit network-issued presence value

    def __post_init__(self):
        _check_bytes("mpc", self.bits, 16)


@dataclass(frozen=True)
class Rmc:
    """128-bit unsigned update counter.  Wraparound is an error."""

    counter: int

    def __post_init__(self):
        if not 0 <= self.counter <= U128_MAX:
            raise CounterOverflow("rmc out of 128-bit range")

    def incremented(self) -> "Rmc":
        if self.counter == U128_MAX:
            raise CounterOverflow("rmc would wrap")
        return Rmc(self.counter + 1)

    @property
    def packed(self) -> bytes:
        return self.counter.to_bytes(16, "big")

    @classmethod
    def from_packed(cls, raw: bytes) -> "Rmc":
        _check_bytes("rmc", raw, 16)
        return cls(int.from_bytes(raw, "big"))


@dataclass(frozen=True)
class Guid:
    """384-bit AAC∥MPC∥RMC credential presented by the device."""

    aac: Aac
    mpc: Mpc
    rmc: Rmc


@dataclass(frozen=True)
class ToMap:
    bits: bytes  # 256-bit device-generated challenge nonce

    def __post_init__(self):
        _check_bytes("to_map", self.bits, 32)


@dataclass(frozen=True)
class Wmap:
    bits: bytes  # 64-bit network-generated challenge nonce

    def __post_init__(self):
        _check_bytes("wmap", self.bits, 8)


@dataclass(frozen=True)
class AuthSignMap:
    bits: bytes  # 128-bit authorization signature

    def __post_init__(self):
        _check_bytes("auth_sign_map", self.bits, 16)


@dataclass(frozen=True)
class SessionKey:
    bits: bytes  # 128-bit confidentiality key

    def __post_init__(self):
        _check_bytes("session_key", self.bits, 16)


# ---------------------------------------------------------------------------
# PRF backends


class PrfBackend:
    """Deterministic keyed PRF: evaluate(key, domain_tag, message) -> 32 bytes.

    Backend identity is fixed per deployment and recorded in simulation
    traces so independent runs can be compared bit for bit.
    """

    name: str

    def evaluate(self, key: bytes, domain_tag: int, message: bytes) -> bytes:
        raise NotImplementedError


class HmacSha256Backend(PrfBackend):
    """Reference backend: HMAC-SHA256(key, tag_byte ∥ message)."""

    name = "hmac-sha256"

    def evaluate(self, key: bytes, domain_tag: int, message: bytes) -> bytes:
        return hmac.new(key, bytes([domain_tag]) + message, hashlib.sha256).digest()


class Trunc16Backend(PrfBackend):
    """Test-only backend with 16 bits of effective output.

    The first two bytes of the reference PRF are repeated to fill 32 bytes,
    so random forgeries succeed with probability 2^-16.  Used by the
    statistical forgery tests; never a deployment choice.
    """

    name = "trunc16"

    def evaluate(self, key: bytes, domain_tag: int, message: bytes) -> bytes:
        head = hmac.new(key, bytes([domain_tag]) + message, hashlib.sha256).digest()[:2]
        return head * 16


DEFAULT_BACKEND = HmacSha256Backend()

BACKENDS = {b.name: b for b in (DEFAULT_BACKEND, Trunc16Backend())}


class UnknownBackend(CryptoError):
    pass


def get_backend(name: str) -> PrfBackend:
    try:
        return BACKENDS[name]
    except KeyError:
        raise UnknownBackend(name) from None


# ---------------------------------------------------------------------------
# Derivations


def authenticate_signature(
    sd: SdPair, esn: int, icd_in: int, k: ScAuthKey, backend: PrfBackend = DEFAULT_BACKEND
) -> Aac:
    """Derive the 128-bit AAC from the service data and device identifiers."""
    _check_u64("esn", esn)
    _check_u64("icd_in", icd_in)
    msg = sd.packed + esn.to_bytes(8, "big") + icd_in.to_bytes(8, "big")
    return Aac(backend.evaluate(k.bits, TAG_AUTH_SIGNATURE, msg)[:16])


def sd_generation(
    aac: Aac, esn: int, k: ScAuthKey, backend: PrfBackend = DEFAULT_BACKEND
) -> SdPair:
    """Derive a fresh 128-bit service-data pair during the update-value flow."""
    _check_u64("esn", esn)
    out = backend.evaluate(k.bits, TAG_SD_GENERATION, aac.bits + esn.to_bytes(8, "big"))[:16]
    return SdPair(out[:8], out[8:])


def authorization_signature(
    sd: SdPair,
    challenge: bytes,
    esn: int,
    icd_in: int,
    backend: PrfBackend = DEFAULT_BACKEND,
) -> AuthSignMap:
    """Sign a challenge with the service data, yielding the AUTH_SIGN_MAP.

    The challenge is either a packed TO_MAP (32 bytes) or the 10-byte
    unique-challenge composite.
    """
    if len(challenge) not in (32, 10):
        raise ChallengeLength(f"challenge must be 32 or 10 bytes, got {len(challenge)}")
    _check_u64("esn", esn)
    _check_u64("icd_in", icd_in)
    msg = challenge + esn.to_bytes(8, "big") + icd_in.to_bytes(8, "big")
    return AuthSignMap(backend.evaluate(sd.packed, TAG_AUTHZ_SIGNATURE, msg)[:16])


def derive_session_key(sd: SdPair, backend: PrfBackend = DEFAULT_BACKEND) -> SessionKey:
    """Derive the 128-bit confidentiality key from the privacy half (sd2 only)."""
    return SessionKey(backend.evaluate(sd.sd2, TAG_SESSION_KEY, b"")[:16])


# ---------------------------------------------------------------------------
# GUID and challenge composition


def compose_guid(aac: Aac, mpc: Mpc, rmc: Rmc) -> bytes:
    """Pack AAC∥MPC∥RMC into the 48-byte GUID, MSB-first."""
    return aac.bits + mpc.bits + rmc.packed


def decompose_guid(packed: bytes) -> Guid:
    if len(packed) != 48:
        raise BadLength(f"guid must be 48 bytes, got {len(packed)}")
    return Guid(Aac(packed[:16]), Mpc(packed[16:32]), Rmc.from_packed(packed[32:]))


def compose_unique_challenge(wmap: Wmap, wbrac_id: int) -> bytes:
    """Build the 10-byte unique-challenge composite: WMAP ∥ low 16 bits of the
    network identifier."""
    _check_u64("wbrac_id", wbrac_id)
    return wmap.bits + (wbrac_id & 0xFFFF).to_bytes(2, "big")


# ---------------------------------------------------------------------------
# Nonce generation (all randomness flows from the harness's seeded generator)


def gen_to_map(rng) -> ToMap:
    return ToMap(rng.draw_bytes(32))


def gen_wmap(rng) -> Wmap:
    return Wmap(rng.draw_bytes(8))


def gen_update_rand(rng) -> bytes:
    return rng.draw_bytes(16)


# ---------------------------------------------------------------------------
# Conformance vector file: `tag hex(key) hex(message) hex(output)` per line.

_VECTOR_INPUTS = [
    (TAG_AUTH_SIGNATURE, bytes(16), bytes(32)),
    (TAG_AUTH_SIGNATURE, bytes(16), bytes([0x80]) + bytes(31)),
    (TAG_SD_GENERATION, bytes(16), bytes(24)),
    (TAG_AUTHZ_SIGNATURE, bytes(16), bytes(48)),
    (TAG_SESSION_KEY, bytes(8), b""),
    (TAG_AUTH_SIGNATURE, bytes(range(16)), bytes(range(32))),
    (TAG_SD_GENERATION, b"\xff" * 16, b"\xa5" * 24),
    (TAG_AUTHZ_SIGNATURE, b"\x5a" * 16, bytes(range(26))),
    (TAG_SESSION_KEY, b"\x01" * 8, b""),
]


def generate_vectors(backend: PrfBackend) -> str:
    """Render the conformance vectors for a backend as line-oriented text."""
    lines = [f"# wgiot prf vectors backend={backend.name}"]
    for tag, key, msg in _VECTOR_INPUTS:
        out = backend.evaluate(key, tag, msg)
        lines.append(f"{tag:#04x} {key.hex()} {msg.hex() or '-'} {out.hex()}")
    return "\n".join(lines) + "\n"


def parse_vectors(text: str) -> list[tuple[int, bytes, bytes, bytes]]:
    vectors = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tag_s, key_s, msg_s, out_s = line.split()
        msg = b"" if msg_s == "-" else bytes.fromhex(msg_s)
        vectors.append((int(tag_s, 16), bytes.fromhex(key_s), msg, bytes.fromhex(out_s)))
    return vectors
