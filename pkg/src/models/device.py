import json
from enum import Enum
from typing import Any, Dict, NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models.trace import REQUEST_BYTES, Op

GIB = 1 << 30


def burst_time_ns(data_rate_mts: float, bus_bytes: int = 8) -> float:
    """Time to move one 64B block across the channel, rounded to 0.01ns.

    DDR4-2666 gives 64 / (2666e6 * 8) s = 3.0007ns, which rounds to 3.0.
    """
    return round(REQUEST_BYTES / (data_rate_mts * bus_bytes) * 1000.0, 2)


class TimingParams(BaseModel):
    """DDR timing vector in ns.

    For SCM devices t_RCD is the read (activation) latency and t_WR the
    write (restoration) latency.
    """
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    t_CAS: float = Field(alias="tCAS", ge=0)
    t_RCD: float = Field(alias="tRCD", ge=0)
    t_RP: float = Field(alias="tRP", ge=0)
    t_RAS: float = Field(alias="tRAS", ge=0)
    t_RC: float = Field(alias="tRC", ge=0)
    t_WR: float = Field(alias="tWR", ge=0)
    t_WTR: float = Field(default=6, alias="tWTR", ge=0)
    t_RTP: float = Field(default=3, alias="tRTP", ge=0)
    t_RRDpre: float = Field(default=3, alias="tRRDpre", ge=0)
    t_RRDact: float = Field(default=3, alias="tRRDact", ge=0)
    data_rate_mts: float = Field(default=2666, alias="data_rate", gt=0)
    bus_bytes: int = Field(default=8, gt=0)
    burst_ns: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _row_cycle(self) -> "TimingParams":
        if self.t_RC < self.t_RCD:
            raise ValueError(f"tRC ({self.t_RC}) must not be shorter than tRCD ({self.t_RCD})")
        return self

    @property
    def t_b(self) -> float:
        """Burst time of one 64B transfer"""
        if self.burst_ns is not None:
            return self.burst_ns
        return burst_time_ns(self.data_rate_mts, self.bus_bytes)

    @classmethod
    def ddr4_dram(cls) -> "TimingParams":
        """Planar and stacked DRAM: 14-14-14-24-38, tWR 9, tWTR 6, tRTP 3, tRRD 3"""
        return cls(t_CAS=14, t_RCD=14, t_RP=14, t_RAS=24, t_RC=38, t_WR=9,
                   t_WTR=6, t_RTP=3, t_RRDpre=3, t_RRDact=3)

    @classmethod
    def scm(cls, t_read: float, t_write: float, **overrides) -> "TimingParams":
        """SCM on a DDR4-2666 interface: 14-t_read-14-24-t_read, tRRDpre/act 2/11.

        tRC never drops below tRAS + tRP, so SCM at DRAM latencies keeps
        the DRAM row cycle.
        """
        values = dict(t_CAS=14, t_RCD=t_read, t_RP=14, t_RAS=24, t_RC=max(t_read, 24 + 14),
                      t_WR=t_write, t_WTR=6, t_RTP=3, t_RRDpre=2, t_RRDact=11)
        values.update(overrides)
        return cls(**values)

    def with_latencies(self, t_read: float, t_write: float) -> "TimingParams":
        return self.model_copy(update={"t_RCD": t_read, "t_WR": t_write,
                                       "t_RC": max(t_read, self.t_RAS + self.t_RP)})


class DeviceGeometry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    ranks: int = Field(default=2, ge=1)
    banks_per_rank: int = Field(default=8, ge=1)
    row_buffer_bytes: int = Field(default=8192, alias="row_buffer")
    capacity_bytes: int = Field(default=32 * GIB, alias="capacity", gt=0)
    queue_depth: int = Field(default=64, ge=1)

    @field_validator("row_buffer_bytes")
    @classmethod
    def _row_buffer(cls, value: int) -> int:
        if value < 256 or value > 8192 or value & (value - 1):
            raise ValueError(f"row buffer must be a power of two in 256..8192, got {value}")
        return value

    @property
    def banks(self) -> int:
        return self.ranks * self.banks_per_rank

    @property
    def bursts_per_row(self) -> int:
        return self.row_buffer_bytes // REQUEST_BYTES

    def locate(self, address: int):
        """Page-based interleaving, row:bank:rank:column from most to least significant"""
        chunk = address // self.row_buffer_bytes
        rank = chunk % self.ranks
        bank = (chunk // self.ranks) % self.banks_per_rank
        row = chunk // self.banks
        return rank, bank, row

    @classmethod
    def planar_dram(cls) -> "DeviceGeometry":
        return cls(ranks=2, banks_per_rank=8, row_buffer_bytes=8192)

    @classmethod
    def stacked_dram(cls) -> "DeviceGeometry":
        # 512 banks behind 256B rows
        return cls(ranks=8, banks_per_rank=64, row_buffer_bytes=256)

    @classmethod
    def scm(cls, row_buffer_bytes: int) -> "DeviceGeometry":
        return cls(ranks=2, banks_per_rank=8, row_buffer_bytes=row_buffer_bytes)


class DeviceConfig(BaseModel):
    """JSON device description: geometry fields at top level plus a timing object"""
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    ranks: int = 2
    banks_per_rank: int = 8
    row_buffer: int = 8192
    capacity: int = 32 * GIB
    queue_depth: int = 64
    timing: TimingParams

    @property
    def geometry(self) -> DeviceGeometry:
        return DeviceGeometry(ranks=self.ranks, banks_per_rank=self.banks_per_rank,
                              row_buffer_bytes=self.row_buffer, capacity_bytes=self.capacity,
                              queue_depth=self.queue_depth)

    @classmethod
    def build(cls, geometry: DeviceGeometry, timing: TimingParams) -> "DeviceConfig":
        return cls(ranks=geometry.ranks, banks_per_rank=geometry.banks_per_rank,
                   row_buffer=geometry.row_buffer_bytes, capacity=geometry.capacity_bytes,
                   queue_depth=geometry.queue_depth, timing=timing)

    @classmethod
    def from_json(cls, text: str) -> "DeviceConfig":
        config = cls.model_validate(json.loads(text))
        # surface geometry errors now rather than at simulation time
        config.geometry
        return config

    def to_json(self) -> str:
        data: Dict[str, Any] = self.model_dump(exclude={"timing"})
        data["timing"] = self.timing.model_dump(by_alias=True, exclude_none=True)
        return json.dumps(data, indent=2)


class RowState(str, Enum):
    CLOSED = "closed"
    OPEN_CLEAN = "open_clean"
    OPEN_DIRTY = "open_dirty"


class BankState(BaseModel):
    model_config = ConfigDict(frozen=True)

    state: RowState = RowState.CLOSED
    row: Optional[int] = None

    @classmethod
    def closed(cls) -> "BankState":
        return cls()

    @classmethod
    def open_clean(cls, row: int) -> "BankState":
        return cls(state=RowState.OPEN_CLEAN, row=row)

    @classmethod
    def open_dirty(cls, row: int) -> "BankState":
        return cls(state=RowState.OPEN_DIRTY, row=row)


class MemoryRequest(NamedTuple):
    arrival_ns: float
    kind: Op
    address: int
    size_bytes: int = REQUEST_BYTES


class RequestCompletion(NamedTuple):
    index: int
    kind: Op
    address: int
    size_bytes: int
    arrival_ns: float
    issue_ns: float
    finish_ns: float
    row_hit: bool

    @property
    def latency_ns(self) -> float:
        return self.finish_ns - self.arrival_ns


class DeviceStats(BaseModel):
    served_requests: int = 0
    reads: int = 0
    writes: int = 0
    # mean read latency per 64B-equivalent (write acceptance latency when there are no reads)
    loaded_amat_ns: float = 0.0
    write_amat_ns: float = 0.0
    mean_read_latency_ns: float = 0.0
    row_hits: int = 0
    row_conflicts: int = 0
    activations: int = 0
    restorations: int = 0
    drains: int = 0
    # hits over row hits plus conflicts; cold opens are not counted
    row_hit_ratio: float = Field(default=0.0, ge=0, le=1)
    # hits over every row access, cold opens included
    access_row_hit_ratio: float = Field(default=0.0, ge=0, le=1)
    mean_bytes_per_activation: float = 0.0
    read_queue_occupancy_mean: float = 0.0
    write_queue_occupancy_mean: float = 0.0
    busy_time_ns: float = 0.0
    burst_time_ns: float = 0.0
    span_ns: float = 0.0
