from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DESIGN_ROW_BUFFERS = (512, 1024, 2048, 4096)
DRAM_T_READ_NS = 14.0
DRAM_T_WRITE_NS = 9.0


class DesignPoint(BaseModel):
    """One SCM configuration: row buffer size, read (activation) and write (restoration) latency"""
    model_config = ConfigDict(frozen=True)

    row_buffer_bytes: int
    t_read_ns: float = Field(ge=DRAM_T_READ_NS)
    t_write_ns: float = Field(ge=DRAM_T_WRITE_NS)

    @field_validator("row_buffer_bytes")
    @classmethod
    def _row_buffer(cls, value: int) -> int:
        if value not in DESIGN_ROW_BUFFERS:
            raise ValueError(f"row buffer must be one of {DESIGN_ROW_BUFFERS}, got {value}")
        return value

    @model_validator(mode="after")
    def _write_not_faster(self) -> "DesignPoint":
        # the DRAM reference restores faster than it activates
        dram = (self.t_read_ns, self.t_write_ns) == (DRAM_T_READ_NS, DRAM_T_WRITE_NS)
        if self.t_write_ns < self.t_read_ns and not dram:
            raise ValueError(f"write latency {self.t_write_ns:g}ns is below read latency {self.t_read_ns:g}ns")
        return self

    def dominates(self, other: "DesignPoint") -> bool:
        """Same row buffer and no slower in either latency"""
        return (self.row_buffer_bytes == other.row_buffer_bytes
                and self.t_read_ns <= other.t_read_ns
                and self.t_write_ns <= other.t_write_ns)

    def label(self) -> str:
        return f"rb{self.row_buffer_bytes}/r{self.t_read_ns:g}/w{self.t_write_ns:g}"


class PointResult(BaseModel):
    point: DesignPoint
    ratios: Dict[str, float]
    feasible: bool


class FeasibilityReport(BaseModel):
    baseline: str
    target_margin: float = Field(default=0.10, ge=0, lt=1)
    cache_fraction: float
    workloads: List[str]
    results: List[PointResult]

    @model_validator(mode="after")
    def _conjunction(self) -> "FeasibilityReport":
        threshold = 1.0 - self.target_margin
        for result in self.results:
            expected = all(ratio >= threshold for ratio in result.ratios.values())
            if result.feasible != expected:
                raise ValueError(f"feasible flag of {result.point.label()} disagrees with its ratios")
        return self

    @property
    def threshold(self) -> float:
        return 1.0 - self.target_margin

    def feasible_points(self) -> List[DesignPoint]:
        return [r.point for r in self.results if r.feasible]

    def result_for(self, point: DesignPoint) -> Optional[PointResult]:
        for result in self.results:
            if result.point == point:
                return result
        return None

    def to_frame(self) -> pd.DataFrame:
        """One row per (workload, point)"""
        rows = []
        for result in self.results:
            for workload in self.workloads:
                ratio = result.ratios[workload]
                rows.append({
                    "workload": workload,
                    "row_buffer": result.point.row_buffer_bytes,
                    "t_read_ns": result.point.t_read_ns,
                    "t_write_ns": result.point.t_write_ns,
                    "ratio": ratio,
                    "workload_feasible": ratio >= self.threshold,
                    "feasible": result.feasible,
                })
        return pd.DataFrame(rows, columns=["workload", "row_buffer", "t_read_ns", "t_write_ns",
                                           "ratio", "workload_feasible", "feasible"])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, baseline: str, cache_fraction: float,
                   target_margin: float = 0.10) -> "FeasibilityReport":
        workloads = list(dict.fromkeys(frame["workload"]))
        threshold = 1.0 - target_margin
        results = []
        keys = ["row_buffer", "t_read_ns", "t_write_ns"]
        for (rb, t_read, t_write), group in frame.groupby(keys, sort=False):
            ratios = {str(row.workload): float(row.ratio) for row in group.itertuples()}
            results.append(PointResult(
                point=DesignPoint(row_buffer_bytes=int(rb), t_read_ns=float(t_read),
                                  t_write_ns=float(t_write)),
                ratios=ratios,
                feasible=all(r >= threshold for r in ratios.values()),
            ))
        return cls(baseline=baseline, target_margin=target_margin, cache_fraction=cache_fraction,
                   workloads=workloads, results=results)


class PcmConfiguration(BaseModel):
    """A commercially offered PCM point: technology name, cost class and timing"""
    model_config = ConfigDict(frozen=True)

    name: str
    technology: str
    point: DesignPoint


class CaseStudyRow(BaseModel):
    configuration: str
    technology: str
    cache_fraction: float
    ratios: Dict[str, float]
    perf_geomean: float
    feasible: bool
    cache_cost: float
    total_cost: float
    perf_per_cost: float
