import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.models.cache import BacksideEvent, BacksideKind, CacheConfig
from src.models.device import DeviceConfig, DeviceGeometry, MemoryRequest, TimingParams
from src.models.errors import ConfigurationError
from src.models.hierarchy import DirectRunStats, HierarchyStats
from src.models.trace import REQUEST_BYTES, Op, Trace
from src.services.cache_service import CacheRun, cache_capacity_for, run_cache
from src.services.memdev_service import MemoryDevice, planar_dram, scm_device
from src.services.trace_service import trace_footprint

logger = logging.getLogger(__name__)

DEFAULT_COMPUTE_NS = 50.0
DEFAULT_HIT_SERVICE_NS = 10.0
SENSITIVITY_BLOCKS = (64, 128, 256, 512, 1024, 2048, 4096)
BASELINE_BLOCK = 1024


def access_times(trace: Trace, compute_ns_per_access: float) -> np.ndarray:
    """Arrival offsets when the trace has them, otherwise one access per compute interval"""
    if trace.arrival is not None:
        return trace.arrival
    return np.arange(len(trace), dtype=np.float64) * compute_ns_per_access


def perf_proxy(compute_ns_per_access: float, amat_ns: float, baseline_amat_ns: float) -> float:
    return (compute_ns_per_access + baseline_amat_ns) / (compute_ns_per_access + amat_ns)


def backside_requests(trace: Trace, events: Sequence[BacksideEvent],
                      compute_ns_per_access: float) -> List[MemoryRequest]:
    """Fills become block reads and writebacks block writes, timed at their causing access"""
    if not events:
        return []
    times = access_times(trace, compute_ns_per_access)
    seqs = np.fromiter((e.cause_seq for e in events), dtype=np.int64, count=len(events))
    at = times[np.searchsorted(trace.seq, seqs)].tolist()
    return [
        MemoryRequest(t, Op.READ if e.kind == BacksideKind.FILL_READ else Op.WRITE, e.address, e.size_bytes)
        for t, e in zip(at, events)
    ]


def _cache_device_requests(trace: Trace, config: CacheConfig, run: CacheRun, times: np.ndarray,
                           row_buffer_bytes: int) -> Tuple[List[MemoryRequest], List[int]]:
    """Request stream seen by the cache's own DRAM and the positions of demand reads in it.

    Hits access 64B at the block's frame; a miss writes the filled block and,
    when the victim is dirty, first reads the victim out. Blocks larger than
    the row buffer move as row-sized pieces.
    """
    block = config.block_bytes
    n_sets, ways = config.n_sets, config.ways

    def frame(address: int) -> int:
        number = address // block
        return ((number % n_sets) * ways + (number // n_sets) % ways) * block

    piece = min(block, row_buffer_bytes)
    by_seq: Dict[int, List[BacksideEvent]] = {}
    for event in run.events:
        by_seq.setdefault(event.cause_seq, []).append(event)

    requests: List[MemoryRequest] = []
    demand_reads: List[int] = []
    seqs = trace.seq.tolist()
    writes = trace.is_write.tolist()
    addresses = trace.address.tolist()
    hits = run.hit_mask.tolist()
    for i, t in enumerate(times.tolist()):
        address = addresses[i]
        if hits[i]:
            if not writes[i]:
                demand_reads.append(len(requests))
            requests.append(MemoryRequest(t, Op.WRITE if writes[i] else Op.READ,
                                          frame(address) + address % block, REQUEST_BYTES))
            continue
        for event in by_seq.get(seqs[i], ()):
            kind = Op.READ if event.kind == BacksideKind.WRITEBACK else Op.WRITE
            base = frame(event.address)
            for offset in range(0, block, piece):
                requests.append(MemoryRequest(t, kind, base + offset, piece))
    return requests, demand_reads


def simulate_hierarchy(trace: Trace, cache_cfg: CacheConfig, geometry: DeviceGeometry,
                       timing: TimingParams,
                       compute_ns_per_access: float = DEFAULT_COMPUTE_NS,
                       hit_service_ns: float = DEFAULT_HIT_SERVICE_NS,
                       baseline: Optional[HierarchyStats] = None,
                       cache_run: Optional[CacheRun] = None,
                       cache_device: Optional[DeviceConfig] = None) -> HierarchyStats:
    """Cache in front of one backing channel.

    end_to_end_amat = tag lookup + hit service + miss ratio x mean fill latency.
    With cache_device set, the hit service time is measured on that device
    instead of the constant hit_service_ns.
    """
    if compute_ns_per_access <= 0:
        raise ConfigurationError(f"must be positive, got {compute_ns_per_access}", key="compute_ns_per_access")
    if cache_cfg.block_bytes > geometry.row_buffer_bytes:
        raise ConfigurationError(
            f"cache block {cache_cfg.block_bytes}B exceeds the backing row buffer "
            f"({geometry.row_buffer_bytes}B)", key="block_bytes")

    run = cache_run or run_cache(trace, cache_cfg)
    requests = backside_requests(trace, run.events, compute_ns_per_access)
    device = MemoryDevice(geometry, timing).run(requests).stats
    fill_latency = device.mean_read_latency_ns

    cache_device_stats = None
    service = hit_service_ns
    if cache_device is not None:
        times = access_times(trace, compute_ns_per_access)
        cache_requests, demand_reads = _cache_device_requests(
            trace, cache_cfg, run, times, cache_device.row_buffer)
        cache_result = MemoryDevice(cache_device.geometry, cache_device.timing).run(cache_requests, record=True)
        cache_device_stats = cache_result.stats
        if demand_reads:
            latency = {c.index: c.latency_ns for c in cache_result.completions if c.kind == Op.READ}
            service = float(np.mean([latency[i] for i in demand_reads]))

    hit_latency = cache_cfg.tag_lookup_ns + service
    amat = hit_latency + run.stats.miss_ratio * fill_latency
    stats = HierarchyStats(
        cache=run.stats,
        device=device,
        cache_device=cache_device_stats,
        hit_latency_ns=hit_latency,
        fill_latency_ns=fill_latency,
        end_to_end_amat_ns=amat,
        compute_ns_per_access=compute_ns_per_access,
        perf_proxy=1.0 if baseline is None else perf_proxy(
            compute_ns_per_access, amat, baseline.end_to_end_amat_ns),
    )
    logger.debug(f"Hierarchy run: miss ratio {run.stats.miss_ratio:.4f}, fill {fill_latency:.1f}ns, "
                 f"end-to-end {amat:.2f}ns, proxy {stats.perf_proxy:.3f}")
    return stats


def simulate_direct(trace: Trace, geometry: DeviceGeometry, timing: TimingParams,
                    compute_ns_per_access: float = DEFAULT_COMPUTE_NS) -> DirectRunStats:
    """64B trace served by the device with no cache in front"""
    times = access_times(trace, compute_ns_per_access).tolist()
    requests = [
        MemoryRequest(t, Op.WRITE if w else Op.READ, a, REQUEST_BYTES)
        for t, w, a in zip(times, trace.is_write.tolist(), trace.address.tolist())
    ]
    device = MemoryDevice(geometry, timing).run(requests).stats
    logger.info(f"Direct run: row hit ratio {device.row_hit_ratio:.3f} "
                f"({device.access_row_hit_ratio:.3f} of all accesses), "
                f"{device.mean_bytes_per_activation:.0f}B per activation")
    return DirectRunStats(
        device=device,
        accesses=len(trace),
        row_hit_ratio=device.row_hit_ratio,
        access_row_hit_ratio=device.access_row_hit_ratio,
        mean_bytes_per_activation=device.mean_bytes_per_activation,
        mean_latency_ns=device.loaded_amat_ns,
    )


def cache_config_for(trace: Trace, cache_fraction: float, block_bytes: int, ways: int = 4,
                     tag_lookup_ns: float = 20.0) -> CacheConfig:
    capacity = cache_capacity_for(trace_footprint(trace), cache_fraction, block_bytes, ways)
    return CacheConfig(capacity_bytes=capacity, block_bytes=block_bytes, ways=ways,
                       tag_lookup_ns=tag_lookup_ns)


def default_backings() -> Dict[str, Callable[[int], DeviceConfig]]:
    return {
        "planar_dram": lambda block: planar_dram(),
        "scm": lambda block: scm_device(60, 150, max(256, block)),
    }


def block_size_sensitivity(trace: Trace, block_sizes: Sequence[int] = SENSITIVITY_BLOCKS,
                           backings: Optional[Dict[str, Callable[[int], DeviceConfig]]] = None,
                           cache_fraction: float = 1 / 32,
                           compute_ns_per_access: float = DEFAULT_COMPUTE_NS,
                           hit_service_ns: float = DEFAULT_HIT_SERVICE_NS) -> pd.DataFrame:
    """Proxy per (backing, block size), relative to planar DRAM backing with 1KB blocks"""
    backings = backings or default_backings()
    runs: Dict[int, Tuple[CacheConfig, CacheRun]] = {}
    for block in sorted(set(block_sizes) | {BASELINE_BLOCK}):
        config = cache_config_for(trace, cache_fraction, block)
        runs[block] = (config, run_cache(trace, config))

    def run(device: DeviceConfig, block: int, baseline=None) -> HierarchyStats:
        config, cache_run = runs[block]
        return simulate_hierarchy(trace, config, device.geometry, device.timing,
                                  compute_ns_per_access, hit_service_ns, baseline, cache_run)

    baseline = run(planar_dram(), BASELINE_BLOCK)
    rows = []
    for name, factory in backings.items():
        for block in block_sizes:
            stats = run(factory(block), block, baseline)
            rows.append({
                "backing": name,
                "block_bytes": block,
                "miss_ratio": stats.miss_ratio,
                "fill_latency_ns": stats.fill_latency_ns,
                "end_to_end_amat_ns": stats.end_to_end_amat_ns,
                "perf_proxy": stats.perf_proxy,
            })
    return pd.DataFrame(rows, columns=["backing", "block_bytes", "miss_ratio", "fill_latency_ns",
                                       "end_to_end_amat_ns", "perf_proxy"])
