"""
Binary framing shared by every transport.

frame   := length (u32 BE) | header | label | payload
header  := opcode (u16) | exercise-id (u64) | session-id (u64) | sender (u16) | label length (u32)
payload := zero or more 16-byte little-endian field elements

The length prefix counts everything after itself.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Tuple

from api.errors import ProtocolError
from mpc.field import ELEMENT_BYTES

MANAGER_ID = 0

_LENGTH = struct.Struct(">I")
_HEADER = struct.Struct(">HQQHI")


class MessageType(IntEnum):
    EXERCISE = 1
    FINISHED = 2
    NACK = 3
    SHUTDOWN = 4
    JRSZ_DEAL = 10
    SHARE_DIST = 11
    REVEAL_TO = 12
    MUL_RESHARE = 13


PROTOCOL_MESSAGES = frozenset({
    MessageType.JRSZ_DEAL,
    MessageType.SHARE_DIST,
    MessageType.REVEAL_TO,
    MessageType.MUL_RESHARE,
})


@dataclass(frozen=True)
class Message:
    opcode: MessageType
    exercise_id: int
    session_id: int
    sender: int
    label: str = ""
    payload: Tuple[int, ...] = ()


class Outgoing(NamedTuple):
    recipient: int
    message: Message


def encode(message: Message) -> bytes:
    label = message.label.encode("utf-8")
    header = _HEADER.pack(int(message.opcode), message.exercise_id, message.session_id,
                          message.sender, len(label))
    body = b"".join(value.to_bytes(ELEMENT_BYTES, "little") for value in message.payload)
    frame = header + label + body
    return _LENGTH.pack(len(frame)) + frame


def decode(frame: bytes) -> Message:
    if len(frame) < _LENGTH.size + _HEADER.size:
        raise ProtocolError(f"Truncated frame of {len(frame)} bytes")
    (length,) = _LENGTH.unpack_from(frame, 0)
    if length != len(frame) - _LENGTH.size:
        raise ProtocolError(f"Frame length prefix {length} does not match {len(frame) - _LENGTH.size}")
    opcode, exercise_id, session_id, sender, label_length = _HEADER.unpack_from(frame, _LENGTH.size)
    offset = _LENGTH.size + _HEADER.size
    label = frame[offset:offset + label_length].decode("utf-8")
    offset += label_length
    body = frame[offset:]
    if len(body) % ELEMENT_BYTES:
        raise ProtocolError("Payload is not a whole number of field elements")
    payload = tuple(int.from_bytes(body[i:i + ELEMENT_BYTES], "little")
                    for i in range(0, len(body), ELEMENT_BYTES))
    try:
        message_type = MessageType(opcode)
    except ValueError as e:
        raise ProtocolError(f"Unknown message opcode {opcode}") from e
    return Message(message_type, exercise_id, session_id, sender, label, payload)


def frame_size(label: str, elements: int) -> int:
    """Length of an encoded frame, prefix included."""
    return _LENGTH.size + _HEADER.size + len(label.encode("utf-8")) + elements * ELEMENT_BYTES
