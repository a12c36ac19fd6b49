import logging
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.models.cache import is_power_of_two
from src.models.errors import ConfigurationError
from src.models.locality import MissCurve
from src.models.trace import REQUEST_BYTES, Trace
from src.services.trace_service import trace_footprint

logger = logging.getLogger(__name__)

MAX_CURVE_BLOCK = 4096
DEFAULT_CAPACITY_FRACTIONS = (0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.06, 0.12)
CURVE_COLUMNS = ["block_bytes", "capacity_bytes", "capacity_fraction", "miss_ratio"]


def _check_inputs(trace: Trace, block_bytes: int, capacities: Sequence[int]) -> None:
    if len(trace) == 0:
        raise ConfigurationError("trace is empty", key="trace")
    if not is_power_of_two(block_bytes) or not REQUEST_BYTES <= block_bytes <= MAX_CURVE_BLOCK:
        raise ConfigurationError(
            f"must be a power of two in {REQUEST_BYTES}..{MAX_CURVE_BLOCK}, got {block_bytes}",
            key="block_bytes")
    if list(capacities) != sorted(capacities):
        raise ConfigurationError("capacities must be sorted ascending", key="capacities")
    for capacity in capacities:
        if capacity < block_bytes:
            raise ConfigurationError(
                f"capacity {capacity}B is smaller than one {block_bytes}B block", key="capacities")


def stack_distances(blocks: np.ndarray) -> np.ndarray:
    """LRU stack distance of every access, -1 for first touches.

    The distance is the number of distinct blocks referenced since the
    previous access to the same block. A Fenwick tree over access times
    marks the most recent access of every block, so each query is a prefix
    count.
    """
    n = len(blocks)
    tree = [0] * (n + 1)
    last: Dict[int, int] = {}
    distances = np.full(n, -1, dtype=np.int64)
    marked = 0

    for t, block in enumerate(blocks.tolist()):
        previous = last.get(block)
        if previous is not None:
            # marked positions at or before previous
            i = previous + 1
            before = 0
            while i > 0:
                before += tree[i]
                i -= i & -i
            distances[t] = marked - before
            i = previous + 1
            while i <= n:
                tree[i] -= 1
                i += i & -i
            marked -= 1
        i = t + 1
        while i <= n:
            tree[i] += 1
            i += i & -i
        marked += 1
        last[block] = t

    return distances


def _misses_from_distances(distances: np.ndarray, lines: Sequence[int]) -> List[int]:
    cold = int(np.count_nonzero(distances < 0))
    warm = np.sort(distances[distances >= 0])
    return [cold + int(warm.size - np.searchsorted(warm, n_lines, side="left")) for n_lines in lines]


def miss_ratio_curve(trace: Trace, block_bytes: int, capacities: Sequence[int]) -> MissCurve:
    """Fully-associative LRU miss ratio at every capacity from one pass"""
    _check_inputs(trace, block_bytes, capacities)
    blocks = trace.address // block_bytes
    distances = stack_distances(blocks)
    misses = _misses_from_distances(distances, [c // block_bytes for c in capacities])
    accesses = len(trace)
    curve = MissCurve(
        block_bytes=block_bytes,
        points=[(int(c), m / accesses) for c, m in zip(capacities, misses)],
        misses=misses,
        accesses=accesses,
        distinct_blocks=int(np.unique(blocks).size),
        footprint_bytes=trace_footprint(trace),
    )
    logger.debug(f"Miss curve at {block_bytes}B blocks: {len(capacities)} capacities, "
                 f"{curve.distinct_blocks} distinct blocks")
    return curve


def lru_sim_oracle(trace: Trace, block_bytes: int, capacity_bytes: int) -> int:
    """Brute-force fully-associative LRU miss count at one capacity"""
    _check_inputs(trace, block_bytes, [capacity_bytes])
    n_lines = capacity_bytes // block_bytes
    resident: "OrderedDict[int, None]" = OrderedDict()
    misses = 0
    for block in (trace.address // block_bytes).tolist():
        if block in resident:
            resident.move_to_end(block)
            continue
        misses += 1
        resident[block] = None
        if len(resident) > n_lines:
            resident.popitem(last=False)
    return misses


def default_capacity_grid(trace: Trace, block_bytes: int = MAX_CURVE_BLOCK,
                          fractions: Sequence[float] = DEFAULT_CAPACITY_FRACTIONS) -> List[int]:
    """Capacities at fixed fractions of the touched footprint, rounded down to whole blocks"""
    footprint = trace_footprint(trace)
    grid = []
    for fraction in sorted(fractions):
        capacity = int(footprint * fraction) // block_bytes * block_bytes
        grid.append(max(capacity, block_bytes))
    return grid


def _curve_task(args):
    trace, block_bytes, capacities = args
    return miss_ratio_curve(trace, block_bytes, capacities)


def miss_ratio_curves(trace: Trace, block_sizes: Sequence[int],
                      capacities: Optional[Sequence[int]] = None,
                      jobs: int = 1) -> Dict[int, MissCurve]:
    """Curves for several block sizes, computed in parallel and keyed by block size"""
    if capacities is None:
        capacities = default_capacity_grid(trace, max(block_sizes))
    tasks = [(trace, block, list(capacities)) for block in block_sizes]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            curves = list(pool.map(_curve_task, tasks))
    else:
        curves = [_curve_task(task) for task in tasks]
    return {curve.block_bytes: curve for curve in curves}


def curves_frame(curves: Dict[int, MissCurve]) -> pd.DataFrame:
    rows = []
    for block_bytes in sorted(curves):
        curve = curves[block_bytes]
        footprint = curve.footprint_bytes or 1
        for capacity, ratio in curve.points:
            rows.append({
                "block_bytes": block_bytes,
                "capacity_bytes": capacity,
                "capacity_fraction": capacity / footprint,
                "miss_ratio": ratio,
            })
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)
