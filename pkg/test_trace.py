import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.models.errors import TraceFormatError
from src.models.trace import Op, SyntheticTraceSpec, Trace, TraceFormat, TraceRecord
from src.services.trace_service import (
    BINARY_MAGIC, TEXT_HEADER, ZipfPageSampler, format_for_path, generate_trace, load_trace,
    read_trace, save_trace, trace_footprint, write_trace,
)
from src.services.zipf_service import generalized_harmonic


def small_spec(**overrides):
    values = dict(n_pages=512, zipf_alpha=0.9, read_fraction=0.8, footprint_mean=8,
                  burst_contiguity=0.7, n_records=5000, seed=7)
    values.update(overrides)
    return SyntheticTraceSpec(**values)


def test_generator_is_deterministic():
    assert generate_trace(small_spec()) == generate_trace(small_spec())
    assert generate_trace(small_spec()) != generate_trace(small_spec(seed=8))


def test_generated_records_are_valid():
    spec = small_spec()
    trace = generate_trace(spec)
    assert len(trace) == spec.n_records
    assert np.all(trace.address % 64 == 0)
    assert trace.address.max() < spec.n_pages * 4096
    assert np.all(np.diff(trace.seq) > 0)
    assert trace.read_fraction == pytest.approx(0.8, abs=0.03)
    trace.validate()


def test_full_touch_visits_cover_whole_pages():
    trace = generate_trace(small_spec(footprint_mean=64, n_records=64 * 50))
    for start in range(0, len(trace), 64):
        pages = set((trace.address[start:start + 64] // 4096).tolist())
        offsets = set((trace.address[start:start + 64] % 4096).tolist())
        assert len(pages) == 1
        assert len(offsets) == 64


def test_arrivals_are_non_decreasing():
    trace = generate_trace(small_spec(inter_arrival_ns=40.0))
    assert trace.arrival is not None
    assert trace.arrival[0] == 0.0
    assert np.all(np.diff(trace.arrival) >= 0)


def test_zipf_sampler_prefers_low_ranks():
    rng = np.random.default_rng(3)
    ranks = ZipfPageSampler(1000, 1.0, rng).sample(20000)
    assert ranks.min() >= 0 and ranks.max() < 1000
    counts = np.bincount(ranks, minlength=1000)
    assert counts[0] > counts[9] > counts[99]


def test_zipf_sampler_large_population():
    rng = np.random.default_rng(5)
    ranks = ZipfPageSampler(1 << 26, 0.9, rng).sample(10000)
    assert ranks.min() >= 0 and ranks.max() < 1 << 26
    assert np.mean(ranks < 1000) > 0.05


def chi_squared(observed, expected):
    return float(np.sum((observed - expected) ** 2 / expected))


def test_read_fraction_holds_at_scale():
    for read_fraction in (0.5, 0.85):
        trace = generate_trace(small_spec(read_fraction=read_fraction, n_records=100000, seed=12))
        assert trace.read_fraction == pytest.approx(read_fraction, abs=0.02)


def test_page_popularity_follows_zipf():
    # one record per visit, so page counts are visit counts
    n_pages, alpha, n = 64, 0.9, 100000
    trace = generate_trace(small_spec(n_pages=n_pages, zipf_alpha=alpha, footprint_mean=1, n_records=n))
    observed = np.bincount(trace.address // 4096, minlength=n_pages)
    weights = np.arange(1, n_pages + 1, dtype=np.float64) ** -alpha
    expected = n * weights / weights.sum()
    # 63 degrees of freedom: mean 63, sd about 11
    assert chi_squared(observed, expected) < 130


def test_rejection_sampler_follows_zipf():
    n_pages, n = 1 << 26, 100000
    ranks = ZipfPageSampler(n_pages, 1.0, np.random.default_rng(8)).sample(n)
    head = 20
    observed = np.append(np.bincount(ranks[ranks < head], minlength=head), np.count_nonzero(ranks >= head))
    p_head = 1.0 / np.arange(1, head + 1) / generalized_harmonic(n_pages, 1.0)
    expected = n * np.append(p_head, 1.0 - p_head.sum())
    assert chi_squared(observed, expected) < 50


def test_zero_alpha_is_uniform():
    n_pages, n = 32, 64000
    trace = generate_trace(small_spec(n_pages=n_pages, zipf_alpha=0.0, footprint_mean=1, n_records=n))
    observed = np.bincount(trace.address // 4096, minlength=n_pages)
    assert chi_squared(observed, np.full(n_pages, n / n_pages)) < 70
    assert observed.min() > 0.9 * n / n_pages


def test_footprint_counts_distinct_pages():
    trace = Trace([0, 1, 2, 3], [False] * 4, [0, 64, 4096, 3 * 4096])
    assert trace_footprint(trace) == 3 * 4096
    assert trace_footprint(Trace.empty()) == 0


def test_text_round_trip_with_arrivals():
    trace = generate_trace(small_spec(n_records=300, inter_arrival_ns=12.5))
    sink = io.BytesIO()
    write_trace(trace, sink, TraceFormat.TEXT)
    assert sink.getvalue().startswith(TEXT_HEADER.encode())
    assert read_trace(sink.getvalue(), TraceFormat.TEXT) == trace


def test_binary_drops_arrivals():
    trace = generate_trace(small_spec(n_records=300, inter_arrival_ns=12.5))
    sink = io.BytesIO()
    written = write_trace(trace, sink, TraceFormat.BINARY)
    assert written == len(BINARY_MAGIC) + 17 * 300
    loaded = read_trace(sink.getvalue(), TraceFormat.BINARY)
    assert loaded == trace.without_arrivals()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(min_value=0, max_value=1 << 40)), max_size=50))
def test_text_format_preserves_records(rows):
    trace = Trace(range(len(rows)), [w for w, _ in rows], [a * 64 for _, a in rows])
    sink = io.BytesIO()
    write_trace(trace, sink)
    assert read_trace(sink.getvalue()) == trace


def test_from_records_and_indexing():
    records = [TraceRecord(seq=0, op=Op.READ, address=128), TraceRecord(seq=5, op=Op.WRITE, address=4096)]
    trace = Trace.from_records(records)
    assert list(trace) == records
    assert trace[1].op == Op.WRITE
    assert len(trace[:1]) == 1


def test_record_rejects_misaligned_address():
    with pytest.raises(ValueError):
        TraceRecord(seq=0, op=Op.READ, address=100)


def test_missing_header():
    with pytest.raises(TraceFormatError) as err:
        read_trace(b"0,R,0x0\n")
    assert err.value.offset == 0


def test_bad_op_reports_record_and_offset():
    data = f"{TEXT_HEADER}\n0,R,0x0\n1,X,0x40\n".encode()
    with pytest.raises(TraceFormatError) as err:
        read_trace(data)
    assert err.value.record == 1
    assert err.value.offset == len(TEXT_HEADER) + 1 + len("0,R,0x0\n")


def test_misaligned_and_non_increasing_records():
    with pytest.raises(TraceFormatError):
        read_trace(f"{TEXT_HEADER}\n0,R,0x41\n".encode())
    with pytest.raises(TraceFormatError) as err:
        read_trace(f"{TEXT_HEADER}\n3,R,0x40\n3,W,0x80\n".encode())
    assert err.value.record == 1


def test_mixed_arrival_columns_rejected():
    with pytest.raises(TraceFormatError):
        read_trace(f"{TEXT_HEADER}\n0,R,0x40,1.0\n1,W,0x80\n".encode())


def test_truncated_binary():
    trace = Trace([0, 1], [False, True], [0, 64])
    sink = io.BytesIO()
    write_trace(trace, sink, TraceFormat.BINARY)
    with pytest.raises(TraceFormatError) as err:
        read_trace(sink.getvalue()[:-3], TraceFormat.BINARY)
    assert err.value.record == 1
    with pytest.raises(TraceFormatError):
        read_trace(b"NOTMAGIC" + sink.getvalue()[8:], TraceFormat.BINARY)


def test_save_and_load_by_suffix(tmp_path):
    trace = generate_trace(small_spec(n_records=200))
    assert format_for_path(tmp_path / "t.bin") == TraceFormat.BINARY
    assert format_for_path(tmp_path / "t.csv") == TraceFormat.TEXT
    for name in ("t.bin", "t.txt"):
        save_trace(trace, tmp_path / name)
        assert load_trace(tmp_path / name) == trace


def test_columns_are_read_only():
    trace = Trace([0], [False], [64])
    with pytest.raises(ValueError):
        trace.address[0] = 128
