from collections.abc import Sequence
from enum import Enum
from typing import Iterable, Iterator, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.errors import TraceFormatError

REQUEST_BYTES = 64
PAGE_BYTES = 4096
SUBBLOCKS_PER_PAGE = PAGE_BYTES // REQUEST_BYTES


class Op(str, Enum):
    READ = "R"
    WRITE = "W"


class TraceFormat(str, Enum):
    TEXT = "text"
    BINARY = "binary"


class TraceRecord(BaseModel):
    """One 64B request leaving the last-level cache"""
    model_config = ConfigDict(frozen=True)

    seq: int = Field(ge=0)
    op: Op
    address: int = Field(ge=0)
    arrival_offset_ns: Optional[float] = Field(default=None, ge=0)

    @field_validator("address")
    @classmethod
    def _aligned(cls, value: int) -> int:
        if value % REQUEST_BYTES:
            raise ValueError(f"address 0x{value:x} is not {REQUEST_BYTES}B aligned")
        return value


class SyntheticTraceSpec(BaseModel):
    """Parameters of the Zipf page-popularity trace generator"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    n_pages: int = Field(ge=1)
    zipf_alpha: float = Field(ge=0)
    read_fraction: float = Field(ge=0, le=1)
    footprint_mean: float = Field(ge=1, le=SUBBLOCKS_PER_PAGE)
    burst_contiguity: float = Field(ge=0, le=1)
    n_records: int = Field(ge=0)
    seed: int = 0
    inter_arrival_ns: Optional[float] = Field(default=None, gt=0)


class Trace(Sequence):
    """Immutable columnar trace.

    Columns are numpy arrays so the simulators can work on whole traces
    without materializing a TraceRecord per request; indexing and iteration
    still yield TraceRecord values.
    """

    __slots__ = ("seq", "is_write", "address", "arrival")

    def __init__(
        self,
        seq: Union[np.ndarray, Iterable[int]],
        is_write: Union[np.ndarray, Iterable[bool]],
        address: Union[np.ndarray, Iterable[int]],
        arrival: Optional[Union[np.ndarray, Iterable[float]]] = None,
        validate: bool = True,
    ):
        self.seq = np.array(seq, dtype=np.int64)
        self.is_write = np.array(is_write, dtype=bool)
        self.address = np.array(address, dtype=np.int64)
        self.arrival = None if arrival is None else np.array(arrival, dtype=np.float64)

        lengths = {len(self.seq), len(self.is_write), len(self.address)}
        if self.arrival is not None:
            lengths.add(len(self.arrival))
        if len(lengths) != 1:
            raise TraceFormatError(f"trace columns have different lengths: {sorted(lengths)}")

        for column in (self.seq, self.is_write, self.address, self.arrival):
            if column is not None:
                column.setflags(write=False)

        if validate:
            self.validate()

    @classmethod
    def from_records(cls, records: Iterable[TraceRecord]) -> "Trace":
        records = list(records)
        arrivals = [r.arrival_offset_ns for r in records]
        has_arrival = any(a is not None for a in arrivals)
        if has_arrival and any(a is None for a in arrivals):
            raise TraceFormatError("arrival_offset_ns must be present on every record or on none")
        return cls(
            seq=[r.seq for r in records],
            is_write=[r.op == Op.WRITE for r in records],
            address=[r.address for r in records],
            arrival=arrivals if has_arrival else None,
        )

    @classmethod
    def empty(cls) -> "Trace":
        return cls([], [], [])

    def validate(self) -> None:
        """Check the record invariants, reporting the first offending record"""
        if len(self) == 0:
            return
        if self.seq[0] < 0:
            raise TraceFormatError("negative seq", record=0)

        bad = np.flatnonzero(self.address % REQUEST_BYTES)
        if bad.size:
            i = int(bad[0])
            raise TraceFormatError(
                f"address 0x{int(self.address[i]):x} is not {REQUEST_BYTES}B aligned", record=i)
        bad = np.flatnonzero(self.address < 0)
        if bad.size:
            raise TraceFormatError("negative address", record=int(bad[0]))

        bad = np.flatnonzero(np.diff(self.seq) <= 0)
        if bad.size:
            raise TraceFormatError("seq values must strictly increase", record=int(bad[0]) + 1)

        if self.arrival is not None:
            if np.any(self.arrival < 0):
                raise TraceFormatError("negative arrival offset",
                                       record=int(np.flatnonzero(self.arrival < 0)[0]))
            bad = np.flatnonzero(np.diff(self.arrival) < 0)
            if bad.size:
                raise TraceFormatError("arrival offsets must be non-decreasing", record=int(bad[0]) + 1)

    def __len__(self) -> int:
        return len(self.seq)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Trace(
                self.seq[index], self.is_write[index], self.address[index],
                None if self.arrival is None else self.arrival[index],
                validate=False,
            )
        return TraceRecord(
            seq=int(self.seq[index]),
            op=Op.WRITE if self.is_write[index] else Op.READ,
            address=int(self.address[index]),
            arrival_offset_ns=None if self.arrival is None else float(self.arrival[index]),
        )

    def __iter__(self) -> Iterator[TraceRecord]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        if (self.arrival is None) != (other.arrival is None):
            return False
        same = (
            np.array_equal(self.seq, other.seq)
            and np.array_equal(self.is_write, other.is_write)
            and np.array_equal(self.address, other.address)
        )
        if same and self.arrival is not None:
            same = np.array_equal(self.arrival, other.arrival)
        return bool(same)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Trace(records={len(self)}, writes={int(self.is_write.sum())})"

    @property
    def read_fraction(self) -> float:
        if len(self) == 0:
            return 0.0
        return 1.0 - float(self.is_write.mean())

    def without_arrivals(self) -> "Trace":
        return Trace(self.seq, self.is_write, self.address, None, validate=False)
