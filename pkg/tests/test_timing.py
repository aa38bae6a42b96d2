"""Slot duration arithmetic against hand-computed values."""

import pytest
from hypothesis import given, strategies as st

from ecasim import DEFAULT_TIMING, EMPTY, Collision, ConfigError, Success, TimingTable
from ecasim.engine import slot_duration

# defaults, one 12000-bit payload, worked out by hand:
#   34 (difs) + 20 (phy) + 12000/54 + 16 (sifs) + 20 (phy) + 112/24
HAND_SUCCESS_US = 316.88888888888886
# eight aggregated payloads: 90 + 96000/54 + 112/24
HAND_BATCH8_US = 1872.4444444444443


def test_success_exchange_matches_hand_arithmetic():
    got = DEFAULT_TIMING.exchange_us(12000)
    assert got == pytest.approx(HAND_SUCCESS_US, rel=1e-12)


def test_aggregated_exchange_matches_hand_arithmetic():
    got = DEFAULT_TIMING.exchange_us(8 * 12000)
    assert got == pytest.approx(HAND_BATCH8_US, rel=1e-12)


def test_slot_duration_dispatch():
    t = DEFAULT_TIMING
    assert slot_duration(EMPTY, t) == 9.0
    assert slot_duration(Success(0, 1), t, 12000) == t.exchange_us(12000)
    # a collision holds the channel as long as the largest frame involved
    assert slot_duration(Collision((0, 1)), t, 24000) == t.exchange_us(24000)


def test_empty_slot_is_cheapest():
    assert DEFAULT_TIMING.slot_empty < DEFAULT_TIMING.exchange_us(1)


@given(a=st.integers(min_value=1, max_value=10**6),
       extra=st.integers(min_value=1, max_value=10**6))
def test_exchange_grows_with_payload(a, extra):
    t = DEFAULT_TIMING
    assert t.exchange_us(a + extra) > t.exchange_us(a)


@given(bits=st.integers(min_value=1, max_value=10**7))
def test_exchange_decomposes_into_overhead_plus_airtime(bits):
    t = DEFAULT_TIMING
    overhead = t.exchange_us(0)
    assert t.exchange_us(bits) == pytest.approx(
        overhead + bits / t.data_rate, rel=1e-12)


@pytest.mark.parametrize("field", ["slot_empty", "sifs", "difs", "phy_header",
                                   "data_rate", "ack_rate", "ack_bits",
                                   "payload_bits"])
def test_non_positive_timing_rejected(field):
    table = TimingTable(**{field: 0})
    with pytest.raises(ConfigError):
        table.validate()
