"""Binary wire codec for every wg-IoT protocol frame.

Layout: tag (1 byte) ∥ payload length (2 bytes, MSB-first) ∥ payload.
Payload fields are packed MSB-first in declaration order.  Decoding is
strict: unknown tags, length mismatches, and trailing bytes are errors.
"""

from __future__ import annotations

from dataclasses import dataclass


class WireError(Exception):
    pass


class UnknownTag(WireError):
    pass


class LengthMismatch(WireError):
    pass


class Truncated(WireError):
    pass


# Field kinds: "u64" (8-byte big-endian int), "u8" (1-byte int),
# ("bytes", n) (fixed-length byte string).


class WireMessage:
    TAG = None
    FIELDS = ()


@dataclass(frozen=True)
class SecureActivation(WireMessage):
    icd_in: int
    TAG = 0x01
    FIELDS = (("icd_in", "u64"),)


@dataclass(frozen=True)
class AccessParameterMessage(WireMessage):
    """Periodic network broadcast carrying the current MPC."""

    mpc: bytes
    TAG = 0x02
    FIELDS = (("mpc", ("bytes", 16)),)


@dataclass(frozen=True)
class ParameterUpdateOrder(WireMessage):
    """Increments the receiver's RMC; no payload."""

    TAG = 0x03


@dataclass(frozen=True)
class AuthRequest(WireMessage):
    icd_in: int
    esn: int
    guid: bytes
    TAG = 0x04
    FIELDS = (("icd_in", "u64"), ("esn", "u64"), ("guid", ("bytes", 48)))


@dataclass(frozen=True)
class AuthAccept(WireMessage):
    TAG = 0x05


@dataclass(frozen=True)
class UpdateMessage(WireMessage):
    """WBRAC → access point: start an update for icd_in using this value."""

    icd_in: int
    rand: bytes
    TAG = 0x06
    FIELDS = (("icd_in", "u64"), ("rand", ("bytes", 16)))


@dataclass(frozen=True)
class UpdateOrder(WireMessage):
    rand: bytes
    TAG = 0x07
    FIELDS = (("rand", ("bytes", 16)),)


@dataclass(frozen=True)
class MobileAccessChallengeOrder(WireMessage):
    to_map: bytes
    TAG = 0x08
    FIELDS = (("to_map", ("bytes", 32)),)


@dataclass(frozen=True)
class ChallengeAck(WireMessage):
    TAG = 0x09


@dataclass(frozen=True)
class MapChallengeForward(WireMessage):
    icd_in: int
    to_map: bytes
    TAG = 0x0A
    FIELDS = (("icd_in", "u64"), ("to_map", ("bytes", 32)))


@dataclass(frozen=True)
class MapChallengeResponse(WireMessage):
    auth_sign_map: bytes
    TAG = 0x0B
    FIELDS = (("auth_sign_map", ("bytes", 16)),)


@dataclass(frozen=True)
class MapChallengeResponseOrder(WireMessage):
    auth_sign_map: bytes
    TAG = 0x0C
    FIELDS = (("auth_sign_map", ("bytes", 16)),)


@dataclass(frozen=True)
class UpdateRejection(WireMessage):
    TAG = 0x0D


@dataclass(frozen=True)
class UpdateConfirmation(WireMessage):
    TAG = 0x0E


@dataclass(frozen=True)
class AuthenticationChallenge(WireMessage):
    wmap: bytes
    TAG = 0x0F
    FIELDS = (("wmap", ("bytes", 8)),)


@dataclass(frozen=True)
class AuthChallengeAnswer(WireMessage):
    auth_sign_map: bytes
    TAG = 0x10
    FIELDS = (("auth_sign_map", ("bytes", 16)),)


@dataclass(frozen=True)
class AccessDenied(WireMessage):
    reason: int
    TAG = 0x11
    FIELDS = (("reason", "u8"),)


@dataclass(frozen=True)
class UpdateRequest(WireMessage):
    """Access point → WBRAC: ask for an update-value run for icd_in."""

    icd_in: int
    TAG = 0x12
    FIELDS = (("icd_in", "u64"),)


@dataclass(frozen=True)
class MapProvision(WireMessage):
    """WBRAC → access point: refreshed verification material for one device.

    Carries the expected AAC plus a precomputed unique-challenge pair, since
    only the WBRAC holds the secrets needed to derive them.
    """

    icd_in: int
    expected_aac: bytes
    wmap: bytes
    challenge_sign: bytes
    TAG = 0x13
    FIELDS = (
        ("icd_in", "u64"),
        ("expected_aac", ("bytes", 16)),
        ("wmap", ("bytes", 8)),
        ("challenge_sign", ("bytes", 16)),
    )


MESSAGE_TYPES = (
    SecureActivation,
    AccessParameterMessage,
    ParameterUpdateOrder,
    AuthRequest,
    AuthAccept,
    UpdateMessage,
    UpdateOrder,
    MobileAccessChallengeOrder,
    ChallengeAck,
    MapChallengeForward,
    MapChallengeResponse,
    MapChallengeResponseOrder,
    UpdateRejection,
    UpdateConfirmation,
    AuthenticationChallenge,
    AuthChallengeAnswer,
    AccessDenied,
    UpdateRequest,
    MapProvision,
)

_BY_TAG = {cls.TAG: cls for cls in MESSAGE_TYPES}


def _field_size(kind) -> int:
    if kind == "u64":
        return 8
    if kind == "u8":
        return 1
    return kind[1]


def payload_size(cls) -> int:
    return sum(_field_size(kind) for _, kind in cls.FIELDS)


def encode_payload(msg: WireMessage) -> bytes:
    parts = []
    for name, kind in type(msg).FIELDS:
        value = getattr(msg, name)
        if kind == "u64":
            parts.append(value.to_bytes(8, "big"))
        elif kind == "u8":
            parts.append(value.to_bytes(1, "big"))
        else:
            size = kind[1]
            if len(value) != size:
                raise WireError(f"{name} must be {size} bytes, got {len(value)}")
            parts.append(value)
    return b"".join(parts)


def encode(msg: WireMessage) -> bytes:
    payload = encode_payload(msg)
    return bytes([type(msg).TAG]) + len(payload).to_bytes(2, "big") + payload


def decode(raw: bytes) -> WireMessage:
    if len(raw) < 3:
        raise Truncated(f"frame shorter than 3-byte header ({len(raw)} bytes)")
    tag = raw[0]
    declared = int.from_bytes(raw[1:3], "big")
    payload = raw[3:]
    cls = _BY_TAG.get(tag)
    if cls is None:
        raise UnknownTag(f"tag {tag:#04x}")
    expected = payload_size(cls)
    if declared != expected:
        raise LengthMismatch(
            f"{cls.__name__}: declared {declared}, layout requires {expected}"
        )
    if len(payload) < declared:
        raise Truncated(f"{cls.__name__}: payload {len(payload)} < declared {declared}")
    if len(payload) > declared:
        raise LengthMismatch(f"{cls.__name__}: {len(payload) - declared} trailing bytes")
    values = {}
    offset = 0
    for name, kind in cls.FIELDS:
        size = _field_size(kind)
        chunk = payload[offset : offset + size]
        offset += size
        values[name] = chunk if isinstance(kind, tuple) else int.from_bytes(chunk, "big")
    return cls(**values)


def tag_name(msg_or_tag) -> str:
    tag = msg_or_tag if isinstance(msg_or_tag, int) else type(msg_or_tag).TAG
    cls = _BY_TAG.get(tag)
    return cls.__name__ if cls else f"tag_{tag:#04x}"


def tag_by_name(name: str) -> int:
    for cls in MESSAGE_TYPES:
        if cls.__name__ == name:
            return cls.TAG
    raise UnknownTag(name)
