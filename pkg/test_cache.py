import io
from collections import Counter, OrderedDict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.models.cache import BacksideEvent, BacksideKind, CacheConfig
from src.models.errors import ConfigurationError
from src.models.trace import SyntheticTraceSpec, Trace
from src.services.cache_service import (
    CacheSimulator, cache_capacity_for, read_backside_events, region_density_profile, run_cache,
    simulate_cache, write_backside_events,
)
from src.services.locality_service import lru_sim_oracle
from src.services.trace_service import generate_trace


def touch_trace(footprint_mean, n_pages=4096, n_records=20480, seed=1):
    return generate_trace(SyntheticTraceSpec(
        n_pages=n_pages, zipf_alpha=0.0, read_fraction=1.0, footprint_mean=footprint_mean,
        burst_contiguity=1.0, n_records=n_records, seed=seed))


def test_config_geometry():
    config = CacheConfig(capacity_bytes=64 * 1024, block_bytes=1024, ways=4)
    assert config.n_sets == 16
    assert config.n_blocks == 64
    assert config.subblocks == 16
    with pytest.raises(ValueError):
        CacheConfig(capacity_bytes=4096, block_bytes=96)
    with pytest.raises(ConfigurationError):
        CacheSimulator(CacheConfig(capacity_bytes=4096, block_bytes=2048, ways=4))
    with pytest.raises(ConfigurationError):
        CacheSimulator(CacheConfig(capacity_bytes=3 * 4096, block_bytes=2048, ways=4))


def test_hits_misses_and_dirty_writeback_order():
    # one set, two ways
    config = CacheConfig(capacity_bytes=2048, block_bytes=1024, ways=2)
    trace = Trace(range(6), [True] + [False] * 5, [0, 1024, 2048, 0, 1024, 1088])
    stats, events = simulate_cache(trace, config)
    assert (stats.hits, stats.misses, stats.writebacks) == (1, 5, 1)
    F, B = BacksideKind.FILL_READ, BacksideKind.WRITEBACK
    assert [e.kind for e in events] == [F, F, B, F, F, F]
    # the dirty victim leaves before its replacement is filled
    assert events[2] == BacksideEvent(B, 0, 1024, 2)
    assert events[3] == BacksideEvent(F, 2048, 1024, 2)
    assert stats.bytes_read_from_device == 5 * 1024
    assert stats.bytes_written_to_device == 1024


def test_fully_associative_cache_matches_oracle():
    trace = generate_trace(SyntheticTraceSpec(
        n_pages=300, zipf_alpha=0.8, read_fraction=0.7, footprint_mean=4, burst_contiguity=0.5,
        n_records=8000, seed=4))
    for n_lines in (4, 16, 64):
        config = CacheConfig(capacity_bytes=n_lines * 1024, block_bytes=1024, ways=n_lines)
        stats, _ = simulate_cache(trace, config)
        assert stats.misses == lru_sim_oracle(trace, 1024, n_lines * 1024)


def reference_lru(accesses, config):
    """Dirty writebacks (address, cause) and touched-count histogram of a plain LRU model"""
    sets = {}
    writebacks = []
    histogram = Counter()
    for seq, (is_write, address) in enumerate(accesses):
        block = address // config.block_bytes
        sub = (address % config.block_bytes) // 64
        lines = sets.setdefault(block % config.n_sets, OrderedDict())
        if block in lines:
            lines.move_to_end(block)
        elif len(lines) == config.ways:
            victim, (dirty, touched) = lines.popitem(last=False)
            histogram[len(touched)] += 1
            if dirty:
                writebacks.append((victim * config.block_bytes, seq))
        dirty, touched = lines.get(block, (False, set()))
        lines[block] = (dirty or is_write, touched | {sub})
    for lines in sets.values():
        for _, touched in lines.values():
            histogram[len(touched)] += 1
    return writebacks, dict(histogram)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(0, 11), st.integers(0, 15)), min_size=1, max_size=200))
def test_writeback_exactly_when_victim_is_dirty(accesses):
    config = CacheConfig(capacity_bytes=4096, block_bytes=1024, ways=4)
    pairs = [(w, block * 1024 + sub * 64) for w, block, sub in accesses]
    trace = Trace(range(len(pairs)), [w for w, _ in pairs], [a for _, a in pairs])
    stats, events = simulate_cache(trace, config)
    expected, _ = reference_lru(pairs, config)
    assert [(e.address, e.cause_seq) for e in events if e.kind == BacksideKind.WRITEBACK] == expected
    assert stats.writebacks == len(expected)


def test_density_histogram_matches_reference_model():
    trace = generate_trace(SyntheticTraceSpec(
        n_pages=512, zipf_alpha=0.9, read_fraction=0.7, footprint_mean=12, burst_contiguity=0.6,
        n_records=6000, seed=9))
    config = CacheConfig(capacity_bytes=32 * 1024, block_bytes=2048, ways=4)
    stats, _ = simulate_cache(trace, config)
    _, histogram = reference_lru(list(zip(trace.is_write.tolist(), trace.address.tolist())), config)
    assert stats.density_histogram == histogram
    touched = sum(count * n for count, n in histogram.items())
    assert stats.mean_density == pytest.approx(touched / sum(histogram.values()) / config.subblocks)


def test_direct_mapped_cache_is_one_line_per_set():
    trace = generate_trace(SyntheticTraceSpec(
        n_pages=300, zipf_alpha=0.8, read_fraction=0.7, footprint_mean=4, burst_contiguity=0.5,
        n_records=8000, seed=4))
    config = CacheConfig(capacity_bytes=16 * 1024, block_bytes=1024, ways=1)
    stats, _ = simulate_cache(trace, config)
    sets = (trace.address // 1024) % config.n_sets
    expected = 0
    for index in range(config.n_sets):
        mask = sets == index
        if mask.any():
            subset = Trace(trace.seq[mask], trace.is_write[mask], trace.address[mask])
            expected += lru_sim_oracle(subset, 1024, 1024)
    assert stats.misses == expected


def test_full_touch_density_is_one():
    pages = 2048
    trace = Trace(range(pages * 64), [False] * (pages * 64), [i * 64 for i in range(pages * 64)])
    frame = region_density_profile(trace, 1 / 32)
    assert frame["mean_density"].tolist() == pytest.approx([1.0] * 5)
    assert (frame["samples"] > 0).all()


def test_generated_full_touch_density_is_one():
    frame = region_density_profile(touch_trace(64), 1 / 32)
    assert frame["mean_density"].tolist() == pytest.approx([1.0] * 5)


def test_single_touch_density():
    pages = 4096
    trace = Trace(range(pages), [False] * pages, [i * 4096 for i in range(pages)])
    frame = region_density_profile(trace, 1 / 32)
    for size, density in zip(frame["region_size"], frame["mean_density"]):
        assert density == pytest.approx(64 / size)


def test_density_histogram_counts_touched_subblocks():
    config = CacheConfig(capacity_bytes=4096, block_bytes=1024, ways=4)
    trace = Trace(range(4), [False] * 4, [0, 64, 128, 1024])
    stats, _ = simulate_cache(trace, config)
    assert stats.density_histogram == {1: 1, 3: 1}
    assert stats.mean_density == pytest.approx(4 / 32)
    assert stats.density_fractions() == {1 / 16: 1, 3 / 16: 1}


def test_warmup_excluded_from_stats():
    config = CacheConfig(capacity_bytes=4096, block_bytes=1024, ways=4, warmup_fraction=0.5)
    trace = Trace(range(4), [False] * 4, [0, 1024, 0, 2048])
    run = run_cache(trace, config)
    assert run.stats.accesses == 2
    assert (run.stats.hits, run.stats.misses) == (1, 1)
    assert run.hit_mask.tolist() == [True, True, True, False]
    assert [e.address for e in run.events] == [2048]


def test_capacity_rounds_to_whole_sets():
    assert cache_capacity_for(1 << 20, 1 / 32, 1024, 4) == 32 * 1024
    assert cache_capacity_for(100 * 4096, 1 / 32, 1024, 4) == 12 * 1024
    assert cache_capacity_for(4096, 1 / 32, 1024, 4) == 4096


def test_region_sizes_are_checked():
    with pytest.raises(ConfigurationError):
        region_density_profile(touch_trace(8, n_records=1000), 1 / 32, [128])


def test_backside_event_file(tmp_path):
    events = [BacksideEvent(BacksideKind.FILL_READ, 4096, 1024, 3),
              BacksideEvent(BacksideKind.WRITEBACK, 0, 1024, 9)]
    sink = io.BytesIO()
    write_backside_events(events, sink)
    assert read_backside_events(io.BytesIO(sink.getvalue())) == events


def test_hit_mask_matches_counts():
    trace = touch_trace(16, n_records=4000, seed=2)
    config = CacheConfig(capacity_bytes=64 * 1024, block_bytes=2048, ways=4)
    run = run_cache(trace, config)
    assert int(np.count_nonzero(run.hit_mask)) == run.stats.hits
    assert run.stats.fills == run.stats.misses
