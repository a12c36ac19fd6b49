from typing import Optional

from pydantic import BaseModel, Field

from src.models.cache import CacheStats
from src.models.device import DeviceStats


class HierarchyStats(BaseModel):
    """End-to-end result of a cache + backing-device run"""

    cache: CacheStats
    device: DeviceStats
    cache_device: Optional[DeviceStats] = None
    hit_latency_ns: float
    fill_latency_ns: float = 0.0
    end_to_end_amat_ns: float
    compute_ns_per_access: float = 50.0
    perf_proxy: float = Field(default=1.0, gt=0)

    @property
    def miss_ratio(self) -> float:
        return self.cache.miss_ratio

    def relative_to(self, baseline: "HierarchyStats") -> float:
        """Performance proxy of this run against a baseline run"""
        compute = self.compute_ns_per_access
        return (compute + baseline.end_to_end_amat_ns) / (compute + self.end_to_end_amat_ns)


class DirectRunStats(BaseModel):
    """64B trace served straight from the device, no cache in front"""

    device: DeviceStats
    accesses: int
    row_hit_ratio: float
    access_row_hit_ratio: float = 0.0
    mean_bytes_per_activation: float
    mean_latency_ns: float
