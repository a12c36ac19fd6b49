from enum import Enum
from typing import Dict, NamedTuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.errors import ConfigurationError
from src.models.trace import REQUEST_BYTES


def is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


class CacheConfig(BaseModel):
    """Set-associative page cache: LRU replacement, write-back, write-allocate"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    capacity_bytes: int = Field(gt=0)
    block_bytes: int = 2048
    ways: int = Field(default=4, ge=1)
    tag_lookup_ns: float = Field(default=20.0, ge=0)
    policy: str = "LRU"
    write_policy: str = "write-back+write-allocate"
    warmup_fraction: float = Field(default=0.0, ge=0, lt=1)

    @field_validator("block_bytes")
    @classmethod
    def _block(cls, value: int) -> int:
        if value < REQUEST_BYTES or not is_power_of_two(value):
            raise ValueError(f"block_bytes must be a power of two >= {REQUEST_BYTES}, got {value}")
        return value

    @field_validator("policy")
    @classmethod
    def _policy(cls, value: str) -> str:
        if value.upper() != "LRU":
            raise ValueError(f"only LRU replacement is supported, got {value}")
        return "LRU"

    @field_validator("write_policy")
    @classmethod
    def _write_policy(cls, value: str) -> str:
        if value != "write-back+write-allocate":
            raise ValueError(f"only write-back+write-allocate is supported, got {value}")
        return value

    def check_geometry(self) -> None:
        if self.block_bytes > self.capacity_bytes // self.ways:
            raise ConfigurationError(
                f"block of {self.block_bytes}B does not fit a {self.ways}-way cache of "
                f"{self.capacity_bytes}B", key="block_bytes")
        if self.capacity_bytes % (self.block_bytes * self.ways):
            raise ConfigurationError(
                f"capacity {self.capacity_bytes}B is not a multiple of block x ways "
                f"({self.block_bytes * self.ways}B)", key="capacity_bytes")

    @property
    def n_sets(self) -> int:
        return self.capacity_bytes // (self.block_bytes * self.ways)

    @property
    def n_blocks(self) -> int:
        return self.capacity_bytes // self.block_bytes

    @property
    def subblocks(self) -> int:
        return self.block_bytes // REQUEST_BYTES


class CacheStats(BaseModel):
    block_bytes: int
    accesses: int = 0
    hits: int = 0
    misses: int = 0
    writebacks: int = 0
    fills: int = 0
    # touched 64B sub-blocks per block lifetime -> number of blocks
    density_histogram: Dict[int, int] = Field(default_factory=dict)
    bytes_read_from_device: int = 0
    bytes_written_to_device: int = 0

    @property
    def miss_ratio(self) -> float:
        return self.misses / self.accesses if self.accesses else 0.0

    @property
    def density_samples(self) -> int:
        return sum(self.density_histogram.values())

    @property
    def mean_density(self) -> float:
        samples = self.density_samples
        if not samples:
            return 0.0
        subblocks = self.block_bytes // REQUEST_BYTES
        touched = sum(count * blocks for count, blocks in self.density_histogram.items())
        return touched / (samples * subblocks)

    def density_fractions(self) -> Dict[float, int]:
        subblocks = self.block_bytes // REQUEST_BYTES
        return {count / subblocks: blocks for count, blocks in sorted(self.density_histogram.items())}


class BacksideKind(str, Enum):
    FILL_READ = "F"
    WRITEBACK = "B"


class BacksideEvent(NamedTuple):
    kind: BacksideKind
    address: int
    size_bytes: int
    cause_seq: int
