import logging
from collections import OrderedDict
from typing import BinaryIO, Dict, Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np
import pandas as pd

from src.models.cache import BacksideEvent, BacksideKind, CacheConfig, CacheStats
from src.models.errors import ConfigurationError, TraceFormatError
from src.models.trace import REQUEST_BYTES, Trace
from src.services.trace_service import TEXT_HEADER, trace_footprint

logger = logging.getLogger(__name__)

REGION_SIZES = (256, 512, 1024, 2048, 4096)
STATS_COLUMNS = ["capacity", "block", "ways", "accesses", "hits", "misses", "writebacks", "mean_density"]


class CacheRun(NamedTuple):
    stats: CacheStats
    events: List[BacksideEvent]
    # per trace record; warmup records are reported as hits
    hit_mask: np.ndarray


class CacheSimulator:
    """Set-associative write-back cache with per-block 64B touch bitmaps"""

    def __init__(self, config: CacheConfig):
        config.check_geometry()
        self.config = config
        self.block_bytes = config.block_bytes
        self.ways = config.ways
        self.n_sets = config.n_sets
        # set index -> block number -> [dirty, touched bitmap]
        self.sets: Dict[int, "OrderedDict[int, list]"] = {}
        self.events: List[BacksideEvent] = []
        self.density_histogram: Dict[int, int] = {}
        self.recording = True
        self.hits = 0
        self.misses = 0
        self.writebacks = 0

    def access(self, seq: int, is_write: bool, address: int) -> bool:
        block = address // self.block_bytes
        bit = 1 << ((address % self.block_bytes) // REQUEST_BYTES)
        lines = self.sets.setdefault(block % self.n_sets, OrderedDict())

        entry = lines.get(block)
        if entry is not None:
            lines.move_to_end(block)
            entry[0] = entry[0] or is_write
            entry[1] |= bit
            if self.recording:
                self.hits += 1
            return True

        if len(lines) >= self.ways:
            victim, (dirty, bitmap) = lines.popitem(last=False)
            if self.recording:
                self._record_density(bitmap)
                if dirty:
                    self.writebacks += 1
                    self.events.append(BacksideEvent(
                        BacksideKind.WRITEBACK, victim * self.block_bytes, self.block_bytes, seq))

        lines[block] = [is_write, bit]
        if self.recording:
            self.misses += 1
            self.events.append(BacksideEvent(
                BacksideKind.FILL_READ, block * self.block_bytes, self.block_bytes, seq))
        return False

    def _record_density(self, bitmap: int) -> None:
        touched = bitmap.bit_count()
        self.density_histogram[touched] = self.density_histogram.get(touched, 0) + 1

    def flush(self) -> None:
        """Sample the density of every resident block; no writebacks are emitted"""
        for lines in self.sets.values():
            for _, bitmap in lines.values():
                self._record_density(bitmap)

    def resident_blocks(self) -> int:
        return sum(len(lines) for lines in self.sets.values())

    @property
    def stats(self) -> CacheStats:
        return CacheStats(
            block_bytes=self.block_bytes,
            accesses=self.hits + self.misses,
            hits=self.hits,
            misses=self.misses,
            writebacks=self.writebacks,
            fills=self.misses,
            density_histogram=dict(sorted(self.density_histogram.items())),
            bytes_read_from_device=self.misses * self.block_bytes,
            bytes_written_to_device=self.writebacks * self.block_bytes,
        )


def run_cache(trace: Trace, config: CacheConfig, flush: bool = True) -> CacheRun:
    simulator = CacheSimulator(config)
    warmup = int(len(trace) * config.warmup_fraction)
    hit_mask = np.ones(len(trace), dtype=bool)

    simulator.recording = warmup == 0
    seqs = trace.seq.tolist()
    writes = trace.is_write.tolist()
    addresses = trace.address.tolist()
    access = simulator.access
    for i in range(len(trace)):
        if i == warmup:
            simulator.recording = True
        hit_mask[i] = access(seqs[i], writes[i], addresses[i]) or i < warmup

    if flush:
        simulator.flush()
    stats = simulator.stats
    logger.debug(f"Cache {config.capacity_bytes}B/{config.block_bytes}B/{config.ways}-way: "
                 f"{stats.accesses} accesses, miss ratio {stats.miss_ratio:.4f}, "
                 f"{stats.writebacks} writebacks")
    return CacheRun(stats, simulator.events, hit_mask)


def simulate_cache(trace: Trace, config: CacheConfig) -> Tuple[CacheStats, List[BacksideEvent]]:
    run = run_cache(trace, config)
    return run.stats, run.events


def cache_capacity_for(footprint_bytes: int, fraction: float, block_bytes: int, ways: int) -> int:
    """fraction x footprint rounded down to whole sets, at least one set"""
    set_bytes = block_bytes * ways
    capacity = int(footprint_bytes * fraction) // set_bytes * set_bytes
    if capacity < set_bytes:
        logger.warning(f"Cache of {fraction:.4f} x {footprint_bytes}B is smaller than one set; "
                       f"using {set_bytes}B")
        capacity = set_bytes
    return capacity


def region_density_profile(trace: Trace, cache_fraction: float,
                           region_sizes: Sequence[int] = REGION_SIZES,
                           ways: int = 4) -> pd.DataFrame:
    """Mean region density per cache block size at a fixed cache fraction"""
    for size in region_sizes:
        if size not in REGION_SIZES:
            raise ConfigurationError(f"region size {size} is not one of {REGION_SIZES}", key="region_sizes")
    footprint = trace_footprint(trace)
    rows = []
    for size in region_sizes:
        capacity = cache_capacity_for(footprint, cache_fraction, size, ways)
        stats, _ = simulate_cache(trace, CacheConfig(capacity_bytes=capacity, block_bytes=size, ways=ways))
        rows.append({
            "region_size": size,
            "mean_density": stats.mean_density,
            "samples": stats.density_samples,
            "capacity_bytes": capacity,
        })
    return pd.DataFrame(rows, columns=["region_size", "mean_density", "samples", "capacity_bytes"])


def stats_frame(runs: Iterable[Tuple[CacheConfig, CacheStats]]) -> pd.DataFrame:
    rows = [{
        "capacity": config.capacity_bytes,
        "block": config.block_bytes,
        "ways": config.ways,
        "accesses": stats.accesses,
        "hits": stats.hits,
        "misses": stats.misses,
        "writebacks": stats.writebacks,
        "mean_density": stats.mean_density,
    } for config, stats in runs]
    return pd.DataFrame(rows, columns=STATS_COLUMNS)


def write_backside_events(events: Iterable[BacksideEvent], sink: BinaryIO) -> int:
    """Trace text layout with F/B ops and a trailing size column"""
    lines = [TEXT_HEADER]
    for event in events:
        lines.append(f"{event.cause_seq},{event.kind.value},0x{event.address:x},{event.size_bytes}")
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    sink.write(payload)
    return len(payload)


def read_backside_events(source: BinaryIO) -> List[BacksideEvent]:
    lines = source.read().decode("utf-8").splitlines()
    if not lines or lines[0] != TEXT_HEADER:
        raise TraceFormatError(f"missing '{TEXT_HEADER}' header", offset=0)
    events = []
    for record, line in enumerate(lines[1:]):
        try:
            seq, op, address, size = line.split(",")
            events.append(BacksideEvent(BacksideKind(op), int(address, 16), int(size), int(seq)))
        except ValueError as e:
            raise TraceFormatError(f"bad back-side event {line!r}: {e}", record=record) from None
    return events
