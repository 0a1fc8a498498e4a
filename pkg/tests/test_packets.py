from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from clusterwsn.packets import (
    InterPacket,
    IntraPacket,
    PacketError,
    decode_node_id,
    encode_node_id,
    inter_packet_bits,
    intra_packet_bits,
)

DATA = Path(__file__).parent / "data"

u16 = st.integers(0, 0xFFFF)
intra = st.builds(IntraPacket, u16, u16, u16, u16, st.binary(min_size=44, max_size=44))
inter = st.builds(InterPacket, u16, u16, u16, st.lists(intra, max_size=12).map(tuple))


def test_intra_length():
    assert intra_packet_bits() == 416 == 8 * 52
    assert len(IntraPacket(1, 2, 3, 4).serialize()) == 52


@pytest.mark.parametrize("n, bits", [(0, 48), (1, 464), (10, 4208)])
def test_inter_length_examples(n, bits):
    assert inter_packet_bits(n) == bits


def test_inter_length_law():
    member = IntraPacket(0, 0, 0, 0)
    for n in range(501):
        assert inter_packet_bits(n) == 48 + 416 * n
    for n in (0, 1, 2, 3, 17, 500):
        pkt = InterPacket(1, 2, 3, (member,) * n)
        assert 8 * len(pkt.serialize()) == inter_packet_bits(n) == pkt.bits


def test_three_members_is_162_octets():
    pkt = InterPacket(7, 0x0102, 0x8000, tuple(IntraPacket(i, 7, 0x0102, 1) for i in range(3)))
    assert len(pkt.serialize()) == 162


@pytest.mark.parametrize("length", [0, 5, 57, 161, 163])
def test_bad_inter_lengths(length):
    with pytest.raises(PacketError):
        InterPacket.deserialize(bytes(length))


@pytest.mark.parametrize("length", [0, 51, 53])
def test_bad_intra_lengths(length):
    with pytest.raises(PacketError):
        IntraPacket.deserialize(bytes(length))


def test_field_range_checks():
    with pytest.raises(PacketError):
        IntraPacket(0x10000, 0, 0, 0)
    with pytest.raises(PacketError):
        IntraPacket(0, 0, 0, 0, payload=b"x")
    with pytest.raises(PacketError):
        InterPacket(-1, 0, 0)


@given(intra)
def test_intra_round_trip(pkt):
    assert IntraPacket.deserialize(pkt.serialize()) == pkt


@given(inter)
def test_inter_round_trip(pkt):
    data = pkt.serialize()
    assert InterPacket.deserialize(data) == pkt
    assert 8 * len(data) == inter_packet_bits(len(pkt.members))


def test_node_id_examples():
    assert encode_node_id((0, 0), 500) == 0x0000
    assert encode_node_id((250, 250), 500) == 0x8080
    assert encode_node_id((500, 500), 500) == 0xFFFF
    assert encode_node_id((499.9, 0.0), 500) == 0xFF00


def test_node_id_outside_area():
    with pytest.raises(PacketError):
        encode_node_id((-0.1, 3), 500)
    with pytest.raises(PacketError):
        encode_node_id((3, 500.1), 500)


@given(st.floats(0, 500), st.floats(0, 500))
def test_node_id_quantization_bound(x, y):
    dx, dy = decode_node_id(encode_node_id((x, y), 500), 500)
    assert abs(dx - x) <= 500 / 256 and abs(dy - y) <= 500 / 256


def _read_hex(name):
    return bytes.fromhex("".join((DATA / name).read_text().split()))


def test_golden_intra_vector():
    # src 0x8080, cls 3, ch 0x1234, seq 7, zero payload
    raw = _read_hex("golden_intra.hex")
    assert raw[:8] == bytes([0x80, 0x80, 0x00, 0x03, 0x12, 0x34, 0x00, 0x07])
    pkt = IntraPacket(0x8080, 3, 0x1234, 7)
    assert pkt.serialize() == raw
    assert IntraPacket.deserialize(raw) == pkt


def test_golden_inter_vector():
    raw = _read_hex("golden_inter.hex")
    members = (IntraPacket(0x0A14, 5, 0x3C3C, 258), IntraPacket(0x3C3C, 5, 0x3C3C, 258))
    pkt = InterPacket(5, 0x3C3C, 0x8000, members)
    assert raw[:6] == bytes([0x00, 0x05, 0x3C, 0x3C, 0x80, 0x00])
    assert raw[6:14] == bytes([0x0A, 0x14, 0x00, 0x05, 0x3C, 0x3C, 0x01, 0x02])
    assert pkt.serialize() == raw
    assert InterPacket.deserialize(raw) == pkt
