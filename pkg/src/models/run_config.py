"""Per-subcommand parameter records.

JSON configs and command-line options are merged into one of these records
before anything runs; unknown keys and missing input files are rejected up
front.
"""
import os
from fractions import Fraction
from typing import Any, Dict, List, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.models.errors import ConfigurationError
from src.models.trace import TraceFormat

RunConfigT = TypeVar("RunConfigT", bound="RunConfig")


def parse_fraction(value: Union[str, float, int]) -> float:
    """'1/32', '0.03125' or 0.03125 -> 0.03125"""
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a fraction: {value!r}") from None
    return float(value)


def _existing(path: str) -> str:
    if not os.path.isfile(os.path.expanduser(path)):
        raise ValueError(f"file not found: {path}")
    return path


def _writable(path: Optional[str]) -> Optional[str]:
    if path is None or path == "-":
        return path
    directory = os.path.dirname(os.path.abspath(os.path.expanduser(path)))
    if not os.path.isdir(directory):
        raise ValueError(f"output directory does not exist: {directory}")
    return path


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out: Optional[str] = None
    json_output: bool = False

    @field_validator("out")
    @classmethod
    def _out(cls, value: Optional[str]) -> Optional[str]:
        return _writable(value)


class GenTraceConfig(RunConfig):
    workload: Optional[str] = None
    n_pages: Optional[int] = None
    zipf_alpha: Optional[float] = None
    read_fraction: Optional[float] = None
    footprint_mean: Optional[float] = None
    burst_contiguity: Optional[float] = None
    n_records: Optional[int] = None
    inter_arrival_ns: Optional[float] = None
    seed: Optional[int] = None
    format: Optional[TraceFormat] = None

    def spec_fields(self) -> Dict[str, Any]:
        """Generator fields given explicitly"""
        return self.model_dump(
            exclude_none=True,
            exclude={"workload", "format", "out", "json_output"},
        )


class MissCurveConfig(RunConfig):
    trace: str
    block_sizes: List[int] = Field(default_factory=lambda: [4096])
    capacities: Optional[List[int]] = None
    jobs: int = Field(default=1, ge=1)

    @field_validator("trace")
    @classmethod
    def _trace(cls, value: str) -> str:
        return _existing(value)


class DensityConfig(RunConfig):
    trace: str
    cache_fraction: float = Field(default=1 / 32, gt=0, le=1)
    region_sizes: List[int] = Field(default_factory=lambda: [256, 512, 1024, 2048, 4096])
    ways: int = Field(default=4, ge=1)

    @field_validator("trace")
    @classmethod
    def _trace(cls, value: str) -> str:
        return _existing(value)

    @field_validator("cache_fraction", mode="before")
    @classmethod
    def _fraction(cls, value: Any) -> float:
        return parse_fraction(value)


class AmatConfig(RunConfig):
    t_act: List[float] = Field(min_length=1)
    sizes: List[int] = Field(default_factory=lambda: [64, 128, 256, 512, 1024, 2048, 4096, 8192])
    data_rate: float = Field(default=2666, gt=0)
    t_wr: float = Field(default=0.0, ge=0)


class SimulateConfig(RunConfig):
    trace: str
    device: str = "planar_dram"
    cache_fraction: float = Field(default=1 / 32, gt=0, le=0.2)
    block_bytes: Optional[int] = None
    ways: int = Field(default=4, ge=1)
    direct: bool = False
    cache_device: Optional[str] = None
    compute_ns: Optional[float] = Field(default=None, gt=0)

    @field_validator("trace")
    @classmethod
    def _trace(cls, value: str) -> str:
        return _existing(value)

    @field_validator("device", "cache_device")
    @classmethod
    def _device(cls, value: Optional[str]) -> Optional[str]:
        # preset names are checked when the device is built
        if value is not None and value.lower().endswith(".json"):
            return _existing(value)
        return value

    @field_validator("cache_fraction", mode="before")
    @classmethod
    def _fraction(cls, value: Any) -> float:
        return parse_fraction(value)


class ExploreConfig(RunConfig):
    workloads: Optional[List[str]] = None
    traces: Optional[List[str]] = None
    n_records: Optional[int] = Field(default=None, ge=1)
    t_reads: Optional[List[float]] = None
    t_writes: Optional[List[float]] = None
    row_buffers: Optional[List[int]] = None
    cache_fraction: float = Field(default=1 / 32, gt=0, le=0.2)
    target_margin: Optional[float] = Field(default=None, ge=0, lt=1)
    jobs: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None
    db: Optional[str] = None
    label: Optional[str] = None
    frontier_out: Optional[str] = None

    @field_validator("cache_fraction", mode="before")
    @classmethod
    def _fraction(cls, value: Any) -> float:
        return parse_fraction(value)

    @field_validator("traces")
    @classmethod
    def _traces(cls, value: Optional[List[str]]) -> Optional[List[str]]:
        if value is not None:
            for path in value:
                _existing(path)
        return value

    @field_validator("frontier_out")
    @classmethod
    def _frontier_out(cls, value: Optional[str]) -> Optional[str]:
        return _writable(value)


class CostConfig(RunConfig):
    table: str = "default"
    specs: List[str] = Field(min_length=1)
    perf: Optional[List[float]] = None

    @field_validator("table")
    @classmethod
    def _table(cls, value: str) -> str:
        return value if value == "default" else _existing(value)


class ZipfConfig(RunConfig):
    alpha: List[float] = Field(min_length=1)
    n: List[int] = Field(min_length=1)
    coverage: float = Field(gt=0, lt=1)


class PcmStudyConfig(RunConfig):
    workloads: Optional[List[str]] = None
    traces: Optional[List[str]] = None
    n_records: Optional[int] = Field(default=None, ge=1)
    cache_fraction: float = Field(default=1 / 32, gt=0, le=0.2)
    tlc_fractions: List[float] = Field(default_factory=lambda: [1 / 32, 1 / 16, 1 / 8])
    table: str = "default"
    perf_geomeans: Optional[Dict[str, float]] = None
    target_margin: Optional[float] = Field(default=None, ge=0, lt=1)
    jobs: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = None

    @field_validator("cache_fraction", mode="before")
    @classmethod
    def _fraction(cls, value: Any) -> float:
        return parse_fraction(value)

    @field_validator("tlc_fractions", mode="before")
    @classmethod
    def _tlc(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            return [parse_fraction(v) for v in value]
        return value

    @field_validator("traces")
    @classmethod
    def _traces(cls, value: Optional[List[str]]) -> Optional[List[str]]:
        if value is not None:
            for path in value:
                _existing(path)
        return value

    @field_validator("table")
    @classmethod
    def _table(cls, value: str) -> str:
        return value if value == "default" else _existing(value)


def parse_run_config(cls: Type[RunConfigT], data: Dict[str, Any]) -> RunConfigT:
    """Build a record, turning the first validation problem into a ConfigurationError"""
    try:
        return cls(**data)
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or cls.__name__
        message = error["msg"].removeprefix("Value error, ")
        if error["type"] == "extra_forbidden":
            message = "unknown key"
        raise ConfigurationError(message, key=key) from None
