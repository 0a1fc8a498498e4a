"""Intra- and inter-cluster packet formats.

Wire layout (all fields big-endian)::

    IntraPacket  src:u16  cls_id:u16  ch_id:u16  seq:u16  payload:44 octets   = 52 octets
    InterPacket  cls_id:u16  ch_id:u16  trg_sink_id:u16  IntraPacket * N      = 6 + 52 N octets

Node ids pack the position quantized to 8 bits per axis: ``x`` in the high
octet and ``y`` in the low octet.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

from .topology import ID_GRID, Point, quantize_axis

INTRA_OCTETS = 52
INTER_HEADER_OCTETS = 6
PAYLOAD_OCTETS = INTRA_OCTETS - 8

_INTRA = struct.Struct(f">HHHH{PAYLOAD_OCTETS}s")
_INTER_HEADER = struct.Struct(">HHH")


class PacketError(ValueError):
    pass


def intra_packet_bits() -> int:
    return 8 * INTRA_OCTETS


def inter_packet_bits(member_count: int) -> int:
    return 8 * INTER_HEADER_OCTETS + intra_packet_bits() * member_count


def encode_node_id(p: Sequence[float], area_side: float) -> int:
    x, y = p[0], p[1]
    if not (0 <= x <= area_side and 0 <= y <= area_side):
        raise PacketError(f"point {tuple(p)} outside the {area_side} m area")
    return (quantize_axis(x, area_side) << 8) | quantize_axis(y, area_side)


def decode_node_id(node_id: int, area_side: float) -> Point:
    if not 0 <= node_id <= 0xFFFF:
        raise PacketError(f"node id {node_id} does not fit 16 bits")
    cell = area_side / ID_GRID
    return Point(((node_id >> 8) + 0.5) * cell, ((node_id & 0xFF) + 0.5) * cell)


def _check_u16(**fields: int) -> None:
    for name, v in fields.items():
        if not 0 <= v <= 0xFFFF:
            raise PacketError(f"{name}={v} does not fit 16 bits")


@dataclass(frozen=True)
class IntraPacket:
    src: int
    cls_id: int
    ch_id: int
    seq: int
    payload: bytes = field(default=bytes(PAYLOAD_OCTETS))

    def __post_init__(self):
        _check_u16(src=self.src, cls_id=self.cls_id, ch_id=self.ch_id, seq=self.seq)
        if len(self.payload) != PAYLOAD_OCTETS:
            raise PacketError(f"payload must be {PAYLOAD_OCTETS} octets, got {len(self.payload)}")

    def serialize(self) -> bytes:
        return _INTRA.pack(self.src, self.cls_id, self.ch_id, self.seq, self.payload)

    @classmethod
    def deserialize(cls, data: bytes) -> "IntraPacket":
        if len(data) != INTRA_OCTETS:
            raise PacketError(f"intra packet must be {INTRA_OCTETS} octets, got {len(data)}")
        return cls(*_INTRA.unpack(data))


@dataclass(frozen=True)
class InterPacket:
    cls_id: int
    ch_id: int
    trg_sink_id: int
    members: tuple[IntraPacket, ...] = ()

    def __post_init__(self):
        _check_u16(cls_id=self.cls_id, ch_id=self.ch_id, trg_sink_id=self.trg_sink_id)
        object.__setattr__(self, "members", tuple(self.members))

    @property
    def bits(self) -> int:
        return inter_packet_bits(len(self.members))

    def serialize(self) -> bytes:
        head = _INTER_HEADER.pack(self.cls_id, self.ch_id, self.trg_sink_id)
        return head + b"".join(m.serialize() for m in self.members)

    @classmethod
    def deserialize(cls, data: bytes) -> "InterPacket":
        if len(data) < INTER_HEADER_OCTETS:
            raise PacketError(f"truncated inter packet: {len(data)} octets")
        body = len(data) - INTER_HEADER_OCTETS
        if body % INTRA_OCTETS:
            raise PacketError(
                f"inter packet length {len(data)} is not {INTER_HEADER_OCTETS} + {INTRA_OCTETS}*N"
            )
        cls_id, ch_id, sink_id = _INTER_HEADER.unpack_from(data)
        members = tuple(
            IntraPacket.deserialize(data[off : off + INTRA_OCTETS])
            for off in range(INTER_HEADER_OCTETS, len(data), INTRA_OCTETS)
        )
        return cls(cls_id, ch_id, sink_id, members)
