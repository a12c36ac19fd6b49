import logging
from typing import Optional, Sequence

import pandas as pd

from src.models.device import burst_time_ns
from src.models.queries import AmatQuery
from src.models.trace import REQUEST_BYTES

logger = logging.getLogger(__name__)

AMAT_COLUMNS = ["t_act", "transfer_bytes", "amat_ns"]
DEFAULT_TRANSFER_SIZES = (64, 128, 256, 512, 1024, 2048, 4096, 8192)


def amat_unloaded(q: AmatQuery) -> float:
    """Per-64B access time when one activation (and restoration) is amortized over T bytes.

    AMAT(T) = (t_act + t_wr + n * t_b) / n with n = T / 64.
    """
    t_b = q.burst_ns if q.burst_ns is not None else burst_time_ns(q.data_rate_mts)
    n = q.bursts
    return (q.t_act_ns + q.t_wr_ns + n * t_b) / n


def amat_curve(t_acts: Sequence[float], transfer_sizes: Sequence[int] = DEFAULT_TRANSFER_SIZES,
               data_rate_mts: float = 2666, t_wr_ns: float = 0.0,
               burst_ns: Optional[float] = None) -> pd.DataFrame:
    """Long-form table of amat_unloaded over the (t_act, T) grid"""
    rows = []
    for t_act in t_acts:
        for size in transfer_sizes:
            q = AmatQuery(t_act_ns=t_act, t_wr_ns=t_wr_ns, transfer_bytes=size,
                          data_rate_mts=data_rate_mts, burst_ns=burst_ns)
            rows.append({"t_act": t_act, "transfer_bytes": size, "amat_ns": amat_unloaded(q)})
    logger.debug(f"AMAT curve over {len(t_acts)} activation latencies and {len(transfer_sizes)} sizes")
    return pd.DataFrame(rows, columns=AMAT_COLUMNS)


def channel_floor_ns(data_rate_mts: float = 2666) -> float:
    return burst_time_ns(data_rate_mts)


def transfer_sizes_between(low: int, high: int) -> list:
    """Powers of two from low to high inclusive"""
    if low < REQUEST_BYTES or low > high:
        raise ValueError(f"bad transfer size range {low}..{high}")
    sizes = []
    size = low
    while size <= high:
        sizes.append(size)
        size *= 2
    return sizes
