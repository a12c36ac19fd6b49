import pytest

from src.models.queries import AmatQuery
from src.services.amat_service import amat_curve, amat_unloaded, channel_floor_ns, transfer_sizes_between


def amat(t_act, size, **kwargs):
    return amat_unloaded(AmatQuery(t_act_ns=t_act, transfer_bytes=size, **kwargs))


def test_scm_to_dram_ratio_at_two_and_a_half_kilobytes():
    ratio = amat(60, 2624) / amat(14, 2624)
    assert ratio == pytest.approx(183 / 137)
    assert ratio == pytest.approx(1.33, abs=0.02)


def test_dram_knee_near_one_kilobyte():
    floor = channel_floor_ns()
    assert floor == 3.0
    assert amat(14, 1024) == pytest.approx(3.875)
    assert amat(14, 1024) <= 1.3 * floor
    assert amat(14, 64) == pytest.approx(17.0)
    assert amat(14, 64) > 5 * floor


def test_large_transfers_approach_the_channel_floor():
    assert amat(60, 8192) == pytest.approx(444 / 128)
    values = [amat(60, size) for size in transfer_sizes_between(64, 8192)]
    assert all(later < earlier for earlier, later in zip(values, values[1:]))
    assert values[-1] > channel_floor_ns()


def test_restoration_is_amortized_too():
    assert amat(60, 1024, t_wr_ns=150) == pytest.approx((60 + 150 + 48) / 16)


def test_explicit_burst_time():
    assert amat(14, 128, burst_ns=2.0) == pytest.approx((14 + 4) / 2)


def test_rejects_partial_blocks():
    with pytest.raises(ValueError):
        AmatQuery(t_act_ns=14, transfer_bytes=100)
    with pytest.raises(ValueError):
        AmatQuery(t_act_ns=14, transfer_bytes=32)
    with pytest.raises(ValueError):
        transfer_sizes_between(4096, 1024)


def test_curve_is_long_form():
    frame = amat_curve([14, 60], [64, 1024, 8192])
    assert list(frame.columns) == ["t_act", "transfer_bytes", "amat_ns"]
    assert len(frame) == 6
    dram = frame[frame["t_act"] == 14].set_index("transfer_bytes")["amat_ns"]
    assert dram[1024] == pytest.approx(3.875)
