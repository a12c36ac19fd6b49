"""Design-space sweeps over SCM backing memories.

A design point fixes the SCM row buffer size, read latency and write latency.
Every point is compared with a DRAM-backed baseline with a page cache of the
same capacity fraction and 1KB blocks; a point is feasible when its proxy
stays within the target margin of the baseline on every workload.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.models.cost import CostTable, HierarchySpec
from src.models.design import (
    DESIGN_ROW_BUFFERS, DRAM_T_READ_NS, DRAM_T_WRITE_NS, CaseStudyRow, DesignPoint, FeasibilityReport,
    PcmConfiguration, PointResult,
)
from src.models.device import DeviceConfig
from src.models.errors import ConfigurationError
from src.models.trace import Trace
from src.services.cache_service import run_cache
from src.services.cost_service import cost_row, round_half_up
from src.services.hierarchy_service import (
    BASELINE_BLOCK, DEFAULT_COMPUTE_NS, DEFAULT_HIT_SERVICE_NS, cache_config_for, perf_proxy,
    simulate_direct, simulate_hierarchy,
)
from src.services.memdev_service import PCM_TIMINGS, planar_dram, scm_device, stacked_dram

logger = logging.getLogger(__name__)

DEFAULT_T_READ = (60, 125, 250, 500, 1000)
DEFAULT_T_WRITE = (150, 250, 500, 1000, 2000, 4000)
BASELINE_LABEL = "planar DRAM backing, 1KB-block page cache"
FRONTIER_COLUMNS = ["row_buffer", "t_read_ns", "max_t_write_ns"]
CASE_STUDY_COLUMNS = ["configuration", "technology", "cache_fraction", "perf_geomean", "min_ratio",
                      "feasible", "cache_cost", "total_cost", "perf_per_cost"]
TIER_COLUMNS = ["cache_technology", "cache_fraction", "perf_geomean", "min_ratio", "feasible",
                "total_cost", "perf_per_cost"]

PCM_CONFIGURATIONS = (
    PcmConfiguration(name="SLC", technology="slc", point=DesignPoint(
        row_buffer_bytes=PCM_TIMINGS["slc"][2], t_read_ns=PCM_TIMINGS["slc"][0],
        t_write_ns=PCM_TIMINGS["slc"][1])),
    PcmConfiguration(name="MLC_lat", technology="mlc", point=DesignPoint(
        row_buffer_bytes=PCM_TIMINGS["mlc_lat"][2], t_read_ns=PCM_TIMINGS["mlc_lat"][0],
        t_write_ns=PCM_TIMINGS["mlc_lat"][1])),
    PcmConfiguration(name="MLC_BW", technology="mlc", point=DesignPoint(
        row_buffer_bytes=PCM_TIMINGS["mlc_bw"][2], t_read_ns=PCM_TIMINGS["mlc_bw"][0],
        t_write_ns=PCM_TIMINGS["mlc_bw"][1])),
)
TLC_CONFIGURATION = PcmConfiguration(name="TLC", technology="tlc", point=DesignPoint(
    row_buffer_bytes=PCM_TIMINGS["tlc"][2], t_read_ns=PCM_TIMINGS["tlc"][0],
    t_write_ns=PCM_TIMINGS["tlc"][1]))

# Backing used when comparing cache tiers: MLC_BW PCM, whose 1KB row buffer matches the cache block
TIER_BACKING = PCM_TIMINGS["mlc_bw"]


class HierarchyParams(NamedTuple):
    cache_fraction: float
    compute_ns: float
    hit_service_ns: float
    ways: int
    tag_lookup_ns: float


class _BaselineTask(NamedTuple):
    workload: str
    trace: Trace
    params: HierarchyParams


class _RowBufferTask(NamedTuple):
    workload: str
    trace: Trace
    row_buffer: int
    latencies: Tuple[Tuple[float, float], ...]
    params: HierarchyParams


def _baseline_amat(task: _BaselineTask) -> float:
    p = task.params
    config = cache_config_for(task.trace, p.cache_fraction, BASELINE_BLOCK, p.ways, p.tag_lookup_ns)
    device = planar_dram()
    stats = simulate_hierarchy(task.trace, config, device.geometry, device.timing,
                               p.compute_ns, p.hit_service_ns)
    logger.debug(f"Baseline for {task.workload}: {stats.end_to_end_amat_ns:.2f}ns")
    return stats.end_to_end_amat_ns


def _row_buffer_amats(task: _RowBufferTask) -> List[float]:
    """End-to-end AMAT of every (t_read, t_write) pair at one row buffer; the cache run is shared"""
    p = task.params
    config = cache_config_for(task.trace, p.cache_fraction, task.row_buffer, p.ways, p.tag_lookup_ns)
    run = run_cache(task.trace, config)
    amats = []
    for t_read, t_write in task.latencies:
        device = scm_device(t_read, t_write, task.row_buffer)
        stats = simulate_hierarchy(task.trace, config, device.geometry, device.timing,
                                   p.compute_ns, p.hit_service_ns, cache_run=run)
        logger.debug(f"{task.workload} rb{task.row_buffer}/r{t_read:g}/w{t_write:g}: "
                     f"{stats.end_to_end_amat_ns:.2f}ns")
        amats.append(stats.end_to_end_amat_ns)
    return amats


def _run_tasks(function, tasks: list, jobs: int) -> list:
    """Results in task order whatever the completion order"""
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            return list(pool.map(function, tasks))
    return [function(task) for task in tasks]


def default_grid(t_reads: Sequence[float] = DEFAULT_T_READ,
                 t_writes: Sequence[float] = DEFAULT_T_WRITE,
                 row_buffers: Sequence[int] = DESIGN_ROW_BUFFERS) -> List[DesignPoint]:
    """Cartesian grid, skipping writes faster than reads except the DRAM reference"""
    return [
        DesignPoint(row_buffer_bytes=rb, t_read_ns=r, t_write_ns=w)
        for rb in row_buffers
        for r in t_reads
        for w in t_writes
        if w >= r or (r, w) == (DRAM_T_READ_NS, DRAM_T_WRITE_NS)
    ]


def geomean(values: Iterable[float]) -> float:
    values = np.asarray(list(values), dtype=np.float64)
    if values.size == 0:
        raise ValueError("geomean of nothing")
    return float(np.exp(np.mean(np.log(values))))


class DesignSpaceExplorer:
    """Runs feasibility sweeps for a fixed set of workload traces"""

    def __init__(self, workloads: Dict[str, Trace], cache_fraction: float = 1 / 32,
                 target_margin: float = 0.10, compute_ns: float = DEFAULT_COMPUTE_NS,
                 hit_service_ns: float = DEFAULT_HIT_SERVICE_NS, ways: int = 4,
                 tag_lookup_ns: float = 20.0, jobs: int = 1):
        if not workloads:
            raise ConfigurationError("at least one workload is required", key="workloads")
        for name, trace in workloads.items():
            if len(trace) == 0:
                raise ConfigurationError(f"workload {name!r} has an empty trace", key="workloads")
        if not 0 < cache_fraction <= 0.2:
            raise ConfigurationError(f"must be in (0, 0.2], got {cache_fraction}", key="cache_fraction")
        if not 0 <= target_margin < 1:
            raise ConfigurationError(f"must be in [0, 1), got {target_margin}", key="target_margin")
        if jobs < 1:
            raise ConfigurationError(f"must be >= 1, got {jobs}", key="jobs")

        self.workloads = dict(workloads)
        self.target_margin = target_margin
        self.jobs = jobs
        self.params = HierarchyParams(cache_fraction, compute_ns, hit_service_ns, ways, tag_lookup_ns)
        self._baselines: Optional[Dict[str, float]] = None

    @property
    def cache_fraction(self) -> float:
        return self.params.cache_fraction

    def baselines(self) -> Dict[str, float]:
        """End-to-end AMAT of the baseline hierarchy per workload"""
        if self._baselines is None:
            tasks = [_BaselineTask(name, trace, self.params) for name, trace in self.workloads.items()]
            amats = _run_tasks(_baseline_amat, tasks, self.jobs)
            self._baselines = dict(zip(self.workloads, amats))
        return self._baselines

    def sweep(self, grid: Sequence[DesignPoint]) -> FeasibilityReport:
        if not grid:
            raise ConfigurationError("design grid is empty", key="grid")
        points = list(dict.fromkeys(grid))
        baselines = self.baselines()
        logger.info(f"Sweeping {len(points)} design points over {len(self.workloads)} workloads "
                    f"(cache fraction {self.cache_fraction:g}, {self.jobs} jobs)")

        by_row_buffer: Dict[int, List[DesignPoint]] = {}
        for point in points:
            by_row_buffer.setdefault(point.row_buffer_bytes, []).append(point)

        tasks = []
        for name, trace in self.workloads.items():
            for rb, group in by_row_buffer.items():
                latencies = tuple((p.t_read_ns, p.t_write_ns) for p in group)
                tasks.append(_RowBufferTask(name, trace, rb, latencies, self.params))
        outputs = _run_tasks(_row_buffer_amats, tasks, self.jobs)
        compute = self.params.compute_ns

        ratios: Dict[DesignPoint, Dict[str, float]] = {point: {} for point in points}
        for task, values in zip(tasks, outputs):
            for point, amat in zip(by_row_buffer[task.row_buffer], values):
                ratios[point][task.workload] = perf_proxy(compute, amat, baselines[task.workload])

        threshold = 1.0 - self.target_margin
        results = [
            PointResult(point=point, ratios=ratios[point],
                        feasible=all(r >= threshold for r in ratios[point].values()))
            for point in points
        ]
        report = FeasibilityReport(
            baseline=BASELINE_LABEL,
            target_margin=self.target_margin,
            cache_fraction=self.cache_fraction,
            workloads=list(self.workloads),
            results=results,
        )
        logger.info(f"Sweep done: {len(report.feasible_points())}/{len(points)} points feasible")
        return report


def sweep(workloads: Dict[str, Trace], grid: Sequence[DesignPoint], cache_fraction: float = 1 / 32,
          target_margin: float = 0.10, jobs: int = 1, **params) -> FeasibilityReport:
    return DesignSpaceExplorer(workloads, cache_fraction, target_margin, jobs=jobs, **params).sweep(grid)


def frontier(report: FeasibilityReport) -> pd.DataFrame:
    """Largest feasible write latency per (row buffer, read latency)"""
    best: Dict[Tuple[int, float], float] = {}
    for result in report.results:
        if not result.feasible:
            continue
        p = result.point
        key = (p.row_buffer_bytes, p.t_read_ns)
        best[key] = max(best.get(key, p.t_write_ns), p.t_write_ns)
    rows = [{"row_buffer": rb, "t_read_ns": r, "max_t_write_ns": w} for (rb, r), w in sorted(best.items())]
    return pd.DataFrame(rows, columns=FRONTIER_COLUMNS)


def dominance_violations(report: FeasibilityReport) -> List[Tuple[DesignPoint, DesignPoint]]:
    """(feasible, infeasible) pairs where the infeasible point dominates the feasible one"""
    feasible = report.feasible_points()
    violations = []
    for result in report.results:
        if result.feasible:
            continue
        for point in feasible:
            if result.point.dominates(point):
                violations.append((point, result.point))
    return violations


def _fraction_label(fraction: float) -> str:
    return f"{int(fraction * 100)}%"


def _direct_latencies(workloads: Dict[str, Trace], compute_ns: float) -> Dict[str, float]:
    device = planar_dram()
    return {
        name: simulate_direct(trace, device.geometry, device.timing, compute_ns).mean_latency_ns
        for name, trace in workloads.items()
    }


def pcm_case_study(workloads: Dict[str, Trace], cost_table: Optional[CostTable] = None,
                   cache_fraction: float = 1 / 32,
                   tlc_fractions: Sequence[float] = (1 / 32, 1 / 16, 1 / 8),
                   target_margin: float = 0.10,
                   perf_geomeans: Optional[Dict[str, float]] = None,
                   jobs: int = 1, **params) -> List[CaseStudyRow]:
    """Offered PCM parts behind a page cache, with cost and perf/cost.

    Ratios are against the DRAM-backed cache hierarchy; perf_geomean is the
    geometric mean of the proxy against planar DRAM without a cache, unless
    perf_geomeans supplies a value for the configuration label.
    """
    table = cost_table or CostTable.default()
    overrides = perf_geomeans or {}
    explorer = DesignSpaceExplorer(workloads, cache_fraction, target_margin, jobs=jobs, **params)
    compute = explorer.params.compute_ns
    baselines = explorer.baselines()
    direct = _direct_latencies(explorer.workloads, compute)
    threshold = 1.0 - target_margin
    rows: List[CaseStudyRow] = []

    def add(label: str, technology: str, spec: HierarchySpec, amats: Dict[str, float]) -> None:
        ratios = {name: perf_proxy(compute, amats[name], baselines[name]) for name in amats}
        measured = geomean(perf_proxy(compute, amats[name], direct[name]) for name in amats)
        perf = overrides.get(label, measured)
        costs = cost_row(label, spec, perf, table)
        rows.append(CaseStudyRow(
            configuration=label,
            technology=technology,
            cache_fraction=spec.cache_fraction,
            ratios=ratios,
            perf_geomean=perf,
            feasible=all(r >= threshold for r in ratios.values()),
            cache_cost=costs.cache_cost,
            total_cost=costs.total_cost,
            perf_per_cost=costs.perf_per_cost,
        ))
        logger.info(f"{label}: perf {perf:.3f}, total cost {costs.total_cost:.3f}, "
                    f"perf/cost {costs.perf_per_cost:.3f}")

    add("Planar DRAM", "planar_dram", HierarchySpec(main_technology="planar_dram"), direct)
    add(f"DRAM + 3D$ ({_fraction_label(cache_fraction)})", "planar_dram",
        HierarchySpec(main_technology="planar_dram", cache_fraction=cache_fraction), baselines)

    configurations = [(c, cache_fraction) for c in PCM_CONFIGURATIONS]
    configurations += [(TLC_CONFIGURATION, f) for f in tlc_fractions]
    for configuration, fraction in configurations:
        p = configuration.point
        params = explorer.params._replace(cache_fraction=fraction)
        tasks = [
            _RowBufferTask(name, trace, p.row_buffer_bytes, ((p.t_read_ns, p.t_write_ns),), params)
            for name, trace in explorer.workloads.items()
        ]
        amats = {task.workload: values[0]
                 for task, values in zip(tasks, _run_tasks(_row_buffer_amats, tasks, jobs))}
        add(f"{configuration.name} ({_fraction_label(fraction)})", configuration.technology,
            HierarchySpec(main_technology=configuration.technology, cache_fraction=fraction), amats)
    return rows


def case_study_frame(rows: Sequence[CaseStudyRow], rounded: bool = True) -> pd.DataFrame:
    records = []
    for row in rows:
        record = row.model_dump(exclude={"ratios"})
        record["min_ratio"] = min(row.ratios.values())
        if rounded:
            for column in ("perf_geomean", "min_ratio", "cache_cost", "total_cost", "perf_per_cost"):
                record[column] = round_half_up(record[column])
        records.append(record)
    return pd.DataFrame(records, columns=CASE_STUDY_COLUMNS)


def cache_tier_study(workloads: Dict[str, Trace], fractions: Sequence[float] = (1 / 32, 1 / 8),
                     cost_table: Optional[CostTable] = None, target_margin: float = 0.10,
                     compute_ns: float = DEFAULT_COMPUTE_NS, ways: int = 4,
                     tag_lookup_ns: float = 20.0) -> pd.DataFrame:
    """Stacked versus planar DRAM as the cache in front of PCM.

    Hit service comes from simulating the cache's own device. Ratios and
    perf_geomean are both against planar DRAM with no cache in front.
    """
    if not workloads:
        raise ConfigurationError("at least one workload is required", key="workloads")
    table = cost_table or CostTable.default()
    backing = scm_device(*TIER_BACKING)
    direct = _direct_latencies(workloads, compute_ns)
    threshold = 1.0 - target_margin

    def amat(trace: Trace, fraction: float, main: DeviceConfig, cache_device: DeviceConfig) -> float:
        config = cache_config_for(trace, fraction, BASELINE_BLOCK, ways, tag_lookup_ns)
        return simulate_hierarchy(trace, config, main.geometry, main.timing, compute_ns,
                                  cache_device=cache_device).end_to_end_amat_ns

    rows = []
    for fraction in fractions:
        for technology, cache_device in (("stacked_dram", stacked_dram()), ("planar_dram", planar_dram())):
            amats = {name: amat(trace, fraction, backing, cache_device) for name, trace in workloads.items()}
            ratios = [perf_proxy(compute_ns, amats[n], direct[n]) for n in workloads]
            perf = geomean(ratios)
            costs = cost_row(technology, HierarchySpec(main_technology="mlc", cache_fraction=fraction,
                                                       cache_technology=technology), perf, table)
            rows.append({
                "cache_technology": technology,
                "cache_fraction": fraction,
                "perf_geomean": perf,
                "min_ratio": min(ratios),
                "feasible": all(r >= threshold for r in ratios),
                "total_cost": costs.total_cost,
                "perf_per_cost": costs.perf_per_cost,
            })
            logger.info(f"{technology} cache at {_fraction_label(fraction)}: perf {perf:.3f}, "
                        f"min ratio {min(ratios):.3f}")
    return pd.DataFrame(rows, columns=TIER_COLUMNS)


def latency_bound(report: FeasibilityReport, row_buffer: int) -> float:
    """Largest feasible write latency at a row buffer over all read latencies; 0 when none"""
    bounds = [r.point.t_write_ns for r in report.results
              if r.feasible and r.point.row_buffer_bytes == row_buffer]
    return max(bounds) if bounds else 0.0

