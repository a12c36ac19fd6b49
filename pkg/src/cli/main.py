import functools
import json
import logging
import os
from decimal import Decimal, InvalidOperation
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import pandas as pd
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from ..config.manager import ConfigManager, configure_logging
from ..models.cost import CostTable
from ..models.design import DESIGN_ROW_BUFFERS, FeasibilityReport
from ..models.errors import ConfigurationError
from ..models.run_config import (
    AmatConfig, CostConfig, DensityConfig, ExploreConfig, GenTraceConfig, MissCurveConfig,
    PcmStudyConfig, SimulateConfig, ZipfConfig, parse_fraction, parse_run_config,
)
from ..models.trace import SyntheticTraceSpec, Trace
from ..services.amat_service import amat_curve
from ..services.cache_service import region_density_profile
from ..services.cost_service import cost_report, parse_hierarchy_spec
from ..services.explorer_service import (
    DEFAULT_T_READ, DEFAULT_T_WRITE, DesignSpaceExplorer, case_study_frame, default_grid, frontier,
    pcm_case_study,
)
from ..services.hierarchy_service import BASELINE_BLOCK, cache_config_for, simulate_direct, simulate_hierarchy
from ..services.locality_service import curves_frame, miss_ratio_curves
from ..services.memdev_service import load_device_config
from ..services.result_store import ResultStore
from ..services.trace_service import generate_trace, load_trace, save_trace
from ..services.zipf_service import hot_fraction_table

logger = logging.getLogger(__name__)

console = Console(stderr=True)
config_manager = ConfigManager()

PREVIEW_ROWS = 20


def handle_errors(f: Callable) -> Callable:
    """Exit 2 on configuration problems, 1 on any other failure"""
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except click.ClickException:
            raise
        except ConfigurationError as e:
            console.print(f"[bold red]Configuration error: {escape(str(e))}[/bold red]")
            raise SystemExit(2)
        except Exception as e:
            logger.error(f"{type(e).__name__}: {e}")
            logger.debug("Traceback", exc_info=True)
            console.print(f"[bold red]Error: {escape(str(e))}[/bold red]")
            raise SystemExit(1)
    return wrapper


def split_list(text: Optional[str], convert: Callable[[str], Any]) -> Optional[List[Any]]:
    if text is None:
        return None
    items = [item.strip() for item in text.split(",") if item.strip()]
    try:
        return [convert(item) for item in items]
    except ValueError as e:
        raise click.BadParameter(f"{text!r}: {e}")


def parse_count(text: str) -> int:
    """'5e9' -> 5000000000"""
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise ValueError(f"not a number: {text!r}") from None
    if value != value.to_integral_value():
        raise ValueError(f"not a whole number: {text!r}")
    return int(value)


def parse_sizes(text: Optional[str]) -> Optional[List[int]]:
    """'64..8192' expands to the powers of two in between; otherwise a comma list"""
    if text is None:
        return None
    if ".." in text:
        low, high = (parse_count(part) for part in text.split("..", 1))
        if low < 1 or low > high:
            raise click.BadParameter(f"bad size range {text!r}")
        sizes = []
        size = low
        while size <= high:
            sizes.append(size)
            size *= 2
        return sizes
    return split_list(text, parse_count)


def load_json_config(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    with open(path, "r") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path} is not valid JSON: {e}", key="config") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} must hold a JSON object", key="config")
    return data


def _given(value: Any) -> bool:
    if value is None or value is False:
        return False
    return not (isinstance(value, (list, tuple)) and len(value) == 0)


def merge_config(cls, config_path: Optional[str], **options):
    """JSON config first, then every option given on the command line"""
    data = load_json_config(config_path)
    data.update({key: value for key, value in options.items() if _given(value)})
    return parse_run_config(cls, data)


def preview(frame: pd.DataFrame, title: str):
    table = Table(title=title, show_header=True, header_style="bold magenta")
    for column in frame.columns:
        table.add_column(str(column))
    for row in frame.head(PREVIEW_ROWS).itertuples(index=False):
        table.add_row(*(f"{value:.4g}" if isinstance(value, float) else str(value) for value in row))
    if len(frame) > PREVIEW_ROWS:
        table.caption = f"{len(frame) - PREVIEW_ROWS} more rows"
    console.print(table)


def emit(frame: pd.DataFrame, out: Optional[str], as_json: bool, title: str):
    """CSV to a file or stdout; --json mirrors it as a JSON array"""
    records = frame.to_json(orient="records", indent=2)
    if out and out != "-":
        with open(out, "w") as f:
            f.write(frame.to_csv(index=False))
        console.print(f"[green]Wrote {len(frame)} rows to {escape(out)}[/green]")
        if as_json:
            json_path = os.path.splitext(out)[0] + ".json"
            with open(json_path, "w") as f:
                f.write(records)
            console.print(f"[green]Wrote {escape(json_path)}[/green]")
        return
    click.echo(records + "\n" if as_json else frame.to_csv(index=False), nl=False)
    if console.is_terminal:
        preview(frame, title)


def synthetic_spec(data: Dict[str, Any]) -> SyntheticTraceSpec:
    try:
        return SyntheticTraceSpec(**data)
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"])
        raise ConfigurationError(error["msg"], key=key) from None


def workload_traces(names: Optional[Sequence[str]], traces: Optional[Sequence[str]],
                    n_records: Optional[int], seed: Optional[int]) -> Dict[str, Trace]:
    """Shipped synthetic workloads by name plus traces from files"""
    shipped = config_manager.get('workloads', {})
    if not names and not traces:
        names = list(shipped)
    workloads: Dict[str, Trace] = {}
    for index, name in enumerate(names or ()):
        if name not in shipped:
            raise ConfigurationError(f"unknown workload {name!r}; shipped: {sorted(shipped)}", key="workloads")
        data = shipped[name].model_dump()
        if n_records is not None:
            data["n_records"] = n_records
        if seed is not None:
            data["seed"] = seed + index
        workloads[name] = generate_trace(synthetic_spec(data))
    for path in traces or ():
        name = os.path.splitext(os.path.basename(path))[0]
        workloads[name] = load_trace(path)
    return workloads


def load_cost_table(source: str) -> CostTable:
    if source == "default":
        return CostTable.default()
    with open(source, "r") as f:
        try:
            return CostTable.from_json(f.read())
        except (ValueError, ValidationError) as e:
            raise ConfigurationError(f"{source}: {e}", key="table") from None


@click.group()
@click.option('--env-file', help='Path to a .env file with SCMX_* settings')
@click.option('--log-level', type=click.Choice(['error', 'info', 'debug'], case_sensitive=False),
              help='Overrides SCMX_LOG')
@click.pass_context
def cli(ctx, env_file, log_level):
    """scmx - SCM memory hierarchy simulator and design-space explorer"""
    global config_manager
    if env_file:
        config_manager = ConfigManager(env_file)
    problems = config_manager.validate()
    if log_level is None and any(p.startswith('app.log_level') for p in problems):
        log_level = 'info'
    configure_logging(log_level or config_manager.get('app.log_level'))
    if problems:
        console.print("[bold red]Invalid configuration:[/bold red]")
        for problem in problems:
            console.print(f"- {escape(problem)}")
        ctx.exit(2)


@cli.command()
def setup():
    """Write a .env file with the default settings"""
    config_manager.create_env_file()
    console.print(f"[bold green]Wrote {escape(config_manager.env_file)}[/bold green]")


@cli.command('gen-trace')
@click.option('--workload', help='Start from a shipped workload spec')
@click.option('--n-pages', type=int)
@click.option('--alpha', type=float, help='Zipf exponent of page popularity')
@click.option('--read-fraction', type=float)
@click.option('--footprint-mean', type=float, help='Mean 64B sub-blocks touched per page visit')
@click.option('--contiguity', type=float, help='Probability a visit extends its current run')
@click.option('--records', type=int)
@click.option('--inter-arrival', type=float, help='Mean inter-arrival time (ns); omit for no arrivals')
@click.option('--seed', type=int)
@click.option('--format', 'trace_format', type=click.Choice(['text', 'binary']))
@click.option('--out', help='Trace file to write')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def gen_trace(workload, n_pages, alpha, read_fraction, footprint_mean, contiguity, records,
              inter_arrival, seed, trace_format, out, config_path):
    """Generate a synthetic Zipf page-popularity trace"""
    cfg = merge_config(GenTraceConfig, config_path, workload=workload, n_pages=n_pages, zipf_alpha=alpha,
                       read_fraction=read_fraction, footprint_mean=footprint_mean,
                       burst_contiguity=contiguity, n_records=records, inter_arrival_ns=inter_arrival,
                       seed=seed, format=trace_format, out=out)
    if not cfg.out or cfg.out == "-":
        raise ConfigurationError("a trace file to write is required", key="out")

    data: Dict[str, Any] = {}
    if cfg.workload:
        shipped = config_manager.get('workloads', {})
        if cfg.workload not in shipped:
            raise ConfigurationError(f"unknown workload {cfg.workload!r}; shipped: {sorted(shipped)}",
                                     key="workload")
        data.update(shipped[cfg.workload].model_dump())
    data.update(cfg.spec_fields())
    spec = synthetic_spec(data)

    trace = generate_trace(spec)
    size = save_trace(trace, cfg.out, cfg.format)
    console.print(f"[green]Wrote {len(trace)} records ({size} bytes) to {escape(cfg.out)}[/green]")


@cli.command('miss-curve')
@click.option('--trace', 'trace_path', help='Trace file')
@click.option('--blocks', help="Block sizes, e.g. '64..4096' or '1024,4096'")
@click.option('--capacities', help='Cache capacities in bytes (default: 0.1%..12% of the footprint)')
@click.option('--jobs', type=int, help='Block sizes processed in parallel')
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def miss_curve(trace_path, blocks, capacities, jobs, out, as_json, config_path):
    """Miss ratio versus capacity per block size"""
    cfg = merge_config(MissCurveConfig, config_path, trace=trace_path, block_sizes=parse_sizes(blocks),
                       capacities=split_list(capacities, parse_count), jobs=jobs, out=out,
                       json_output=as_json)
    trace = load_trace(cfg.trace)
    curves = miss_ratio_curves(trace, cfg.block_sizes, cfg.capacities, jobs=cfg.jobs)
    emit(curves_frame(curves), cfg.out, cfg.json_output, "Miss ratio curves")


@cli.command()
@click.option('--trace', 'trace_path', help='Trace file')
@click.option('--cache-fraction', help="Cache capacity as a share of the footprint, e.g. '1/32'")
@click.option('--regions', help="Region sizes, e.g. '256..4096'")
@click.option('--ways', type=int)
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def density(trace_path, cache_fraction, regions, ways, out, as_json, config_path):
    """Mean share of each evicted region that was touched"""
    cfg = merge_config(DensityConfig, config_path, trace=trace_path, cache_fraction=cache_fraction,
                       region_sizes=parse_sizes(regions), ways=ways, out=out, json_output=as_json)
    trace = load_trace(cfg.trace)
    frame = region_density_profile(trace, cfg.cache_fraction, cfg.region_sizes, cfg.ways)
    emit(frame, cfg.out, cfg.json_output, "Region density")


@cli.command()
@click.option('--t-act', help="Activation latencies in ns, e.g. '14,60'")
@click.option('--sizes', help="Transfer sizes, e.g. '64..8192'")
@click.option('--data-rate', type=float, help='Channel data rate in MT/s')
@click.option('--t-wr', type=float, help='Restoration latency added per activation (ns)')
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def amat(t_act, sizes, data_rate, t_wr, out, as_json, config_path):
    """Unloaded per-64B access time versus transfer size"""
    cfg = merge_config(AmatConfig, config_path, t_act=split_list(t_act, float), sizes=parse_sizes(sizes),
                       data_rate=data_rate, t_wr=t_wr, out=out, json_output=as_json)
    try:
        frame = amat_curve(cfg.t_act, cfg.sizes, cfg.data_rate, cfg.t_wr)
    except ValidationError as e:
        raise ConfigurationError(e.errors()[0]["msg"], key="sizes") from None
    emit(frame, cfg.out, cfg.json_output, "AMAT")


@cli.command()
@click.option('--trace', 'trace_path', help='Trace file')
@click.option('--device', help='Backing device: preset name or JSON description')
@click.option('--cache-fraction', help="Cache capacity as a share of the footprint, e.g. '1/32'")
@click.option('--block', 'block_bytes', type=int, help='Cache block size (default: backing row buffer, 1KB for DRAM)')
@click.option('--ways', type=int)
@click.option('--direct', is_flag=True, help='No cache: send the 64B trace straight to the device')
@click.option('--cache-device', help="Simulate the cache's own device (preset name or JSON)")
@click.option('--compute-ns', type=float, help='Compute time between accesses')
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def simulate(trace_path, device, cache_fraction, block_bytes, ways, direct, cache_device, compute_ns,
             out, as_json, config_path):
    """Run one trace through a cache and backing device"""
    cfg = merge_config(SimulateConfig, config_path, trace=trace_path, device=device,
                       cache_fraction=cache_fraction, block_bytes=block_bytes, ways=ways, direct=direct,
                       cache_device=cache_device, compute_ns=compute_ns, out=out, json_output=as_json)
    backing = load_device_config(cfg.device)
    cache_device_cfg = load_device_config(cfg.cache_device) if cfg.cache_device else None
    compute = cfg.compute_ns or config_manager.get('hierarchy.compute_ns_per_access')
    trace = load_trace(cfg.trace)

    if cfg.direct:
        stats = simulate_direct(trace, backing.geometry, backing.timing, compute)
        row = {
            "device": cfg.device,
            "accesses": stats.accesses,
            "row_hit_ratio": stats.row_hit_ratio,
            "access_row_hit_ratio": stats.access_row_hit_ratio,
            "mean_bytes_per_activation": stats.mean_bytes_per_activation,
            "mean_latency_ns": stats.mean_latency_ns,
            "write_amat_ns": stats.device.write_amat_ns,
            "activations": stats.device.activations,
        }
    else:
        block = cfg.block_bytes or (backing.row_buffer if backing.row_buffer <= 4096 else BASELINE_BLOCK)
        cache_cfg = cache_config_for(trace, cfg.cache_fraction, block, cfg.ways,
                                     config_manager.get('cache.tag_lookup_ns'))
        stats = simulate_hierarchy(trace, cache_cfg, backing.geometry, backing.timing, compute,
                                   config_manager.get('hierarchy.hit_service_ns'),
                                   cache_device=cache_device_cfg)
        row = {
            "device": cfg.device,
            "cache_capacity_bytes": cache_cfg.capacity_bytes,
            "block_bytes": block,
            "accesses": stats.cache.accesses,
            "miss_ratio": stats.miss_ratio,
            "writebacks": stats.cache.writebacks,
            "mean_density": stats.cache.mean_density,
            "hit_latency_ns": stats.hit_latency_ns,
            "fill_latency_ns": stats.fill_latency_ns,
            "end_to_end_amat_ns": stats.end_to_end_amat_ns,
            "device_row_hit_ratio": stats.device.row_hit_ratio,
            "device_bytes_per_activation": stats.device.mean_bytes_per_activation,
        }
    emit(pd.DataFrame([row]), cfg.out, cfg.json_output, "Simulation")


@cli.command()
@click.option('--workloads', help='Shipped workload names, comma separated (default: all)')
@click.option('--trace', 'traces', multiple=True, help='Additional trace file (repeatable)')
@click.option('--records', type=int, help='Records per generated workload trace')
@click.option('--t-read', 't_reads', help='Read latencies (ns), comma separated')
@click.option('--t-write', 't_writes', help='Write latencies (ns), comma separated')
@click.option('--row-buffers', help="Row buffer sizes, e.g. '512..4096'")
@click.option('--cache-fraction', help="Cache capacity as a share of the footprint, e.g. '1/32'")
@click.option('--target-margin', type=float, help='Allowed slowdown against the baseline')
@click.option('--jobs', type=int, help='Parallel simulations (default: SCMX_JOBS)')
@click.option('--seed', type=int, help='Seed for the generated workload traces')
@click.option('--db', help='Store the sweep in this SQLite result database')
@click.option('--label', help='Label for the stored sweep')
@click.option('--frontier-out', help='Also write the frontier CSV here')
@click.option('--out', help='Full report CSV (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def explore(workloads, traces, records, t_reads, t_writes, row_buffers, cache_fraction, target_margin,
            jobs, seed, db, label, frontier_out, out, as_json, config_path):
    """Sweep row buffer size, read and write latency against the DRAM baseline"""
    cfg = merge_config(ExploreConfig, config_path, workloads=split_list(workloads, str), traces=list(traces),
                       n_records=records, t_reads=split_list(t_reads, float),
                       t_writes=split_list(t_writes, float), row_buffers=parse_sizes(row_buffers),
                       cache_fraction=cache_fraction, target_margin=target_margin, jobs=jobs, seed=seed,
                       db=db, label=label, frontier_out=frontier_out, out=out, json_output=as_json)
    try:
        grid = default_grid(cfg.t_reads or DEFAULT_T_READ, cfg.t_writes or DEFAULT_T_WRITE,
                            cfg.row_buffers or DESIGN_ROW_BUFFERS)
    except ValidationError as e:
        error = e.errors()[0]
        raise ConfigurationError(error["msg"], key=".".join(str(p) for p in error["loc"])) from None

    with Progress(SpinnerColumn(), TextColumn("{task.description}"), console=console, transient=True) as progress:
        task = progress.add_task("Generating workload traces...", total=None)
        traces_by_name = workload_traces(cfg.workloads, cfg.traces, cfg.n_records, cfg.seed)
        progress.update(task, description=f"Sweeping {len(grid)} points over {len(traces_by_name)} workloads...")
        explorer = DesignSpaceExplorer(
            traces_by_name,
            cache_fraction=cfg.cache_fraction,
            target_margin=cfg.target_margin if cfg.target_margin is not None
            else config_manager.get('explorer.target_margin'),
            compute_ns=config_manager.get('hierarchy.compute_ns_per_access'),
            hit_service_ns=config_manager.get('hierarchy.hit_service_ns'),
            tag_lookup_ns=config_manager.get('cache.tag_lookup_ns'),
            jobs=cfg.jobs or config_manager.get('app.jobs'),
        )
        report = explorer.sweep(grid)

    if cfg.db:
        run_id = ResultStore(cfg.db).save_report(report, label=cfg.label, seed=cfg.seed)
        console.print(f"[green]Stored sweep as run {run_id} in {escape(cfg.db)}[/green]")
    if cfg.frontier_out:
        emit(frontier(report), cfg.frontier_out, cfg.json_output, "Frontier")
    emit(report.to_frame(), cfg.out, cfg.json_output, "Feasibility report")


@cli.command('frontier')
@click.option('--db', help='Result database holding stored sweeps (default: SCMX_RESULTS_DB)')
@click.option('--run-id', type=int, help='Stored sweep to use (default: latest)')
@click.option('--report', 'report_path', type=click.Path(exists=True, dir_okay=False),
              help='Full report CSV written by explore')
@click.option('--cache-fraction', default='1/32', help='Cache fraction the report CSV was swept at')
@click.option('--target-margin', type=float, help='Allowed slowdown (default: SCMX_TARGET_MARGIN)')
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@handle_errors
def frontier_command(db, run_id, report_path, cache_fraction, target_margin, out, as_json):
    """Recompute the frontier of a stored sweep or a report CSV"""
    if db and report_path:
        raise click.UsageError("give at most one of --db or --report")
    if not report_path:
        report = ResultStore(db or config_manager.get('app.results_db')).load_report(run_id)
    else:
        margin = target_margin if target_margin is not None else config_manager.get('explorer.target_margin')
        try:
            fraction = parse_fraction(cache_fraction)
        except ValueError as e:
            raise ConfigurationError(str(e), key="cache_fraction") from None
        report = FeasibilityReport.from_frame(pd.read_csv(report_path), baseline=f"report {report_path}",
                                              cache_fraction=fraction, target_margin=margin)
    emit(frontier(report), out, as_json, "Frontier")


@cli.command()
@click.option('--db', help='Result database (default: SCMX_RESULTS_DB)')
@handle_errors
def runs(db):
    """List stored sweeps"""
    stored = ResultStore(db or config_manager.get('app.results_db')).list_runs()
    table = Table(show_header=True, header_style="bold magenta")
    for column in ("ID", "Label", "Fraction", "Margin", "Seed", "Points", "Created"):
        table.add_column(column)
    for run in stored:
        table.add_row(str(run['id']), run['label'] or "", f"{run['cache_fraction']:g}",
                      f"{run['target_margin']:g}", str(run['seed']), str(run['points']),
                      run['createdAt'] or "")
    console.print(table)


@cli.command()
@click.option('--table', 'table_source', help="'default' or a JSON file of cost per bit")
@click.option('--spec', 'specs', multiple=True, help="technology[:fraction[:cache_technology]], e.g. 'mlc:1/32'")
@click.option('--perf', help='Performance geomean per spec, comma separated (default 1.0)')
@click.option('--raw', is_flag=True, help='Do not round to two decimals')
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def cost(table_source, specs, perf, raw, out, as_json, config_path):
    """Memory cost and perf/cost of hierarchies, relative to planar DRAM"""
    cfg = merge_config(CostConfig, config_path, table=table_source, specs=list(specs),
                       perf=split_list(perf, float), out=out, json_output=as_json)
    perfs = cfg.perf or [1.0] * len(cfg.specs)
    if len(perfs) != len(cfg.specs):
        raise ConfigurationError(f"{len(perfs)} values for {len(cfg.specs)} specs", key="perf")
    table = load_cost_table(cfg.table)
    entries = [(text, parse_hierarchy_spec(text), value) for text, value in zip(cfg.specs, perfs)]
    emit(cost_report(entries, table, rounded=not raw), cfg.out, cfg.json_output, "Cost")


@cli.command()
@click.option('--alpha', help='Zipf exponents, comma separated')
@click.option('--n', 'n_items', help="Item counts, e.g. '5e7,5e9'")
@click.option('--coverage', type=float, help='Share of accesses the hot set must absorb')
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def zipf(alpha, n_items, coverage, out, as_json, config_path):
    """Share of items needed to cover a share of Zipf accesses"""
    cfg = merge_config(ZipfConfig, config_path, alpha=split_list(alpha, float),
                       n=split_list(n_items, parse_count), coverage=coverage, out=out, json_output=as_json)
    emit(hot_fraction_table(cfg.alpha, cfg.n, cfg.coverage), cfg.out, cfg.json_output, "Hot fraction")


@cli.command('pcm-study')
@click.option('--workloads', help='Shipped workload names, comma separated (default: all)')
@click.option('--trace', 'traces', multiple=True, help='Additional trace file (repeatable)')
@click.option('--records', type=int, help='Records per generated workload trace')
@click.option('--cache-fraction', help="Cache fraction of the PCM configurations, e.g. '1/32'")
@click.option('--tlc-fractions', help="Cache fractions tried with TLC, e.g. '1/32,1/16,1/8'")
@click.option('--table', 'table_source', help="'default' or a JSON file of cost per bit")
@click.option('--perf-geomean', 'perf_geomeans', multiple=True,
              help="Use this performance for a configuration: 'LABEL=VALUE' (repeatable)")
@click.option('--target-margin', type=float)
@click.option('--jobs', type=int)
@click.option('--seed', type=int)
@click.option('--raw', is_flag=True, help='Do not round to two decimals')
@click.option('--out', help='CSV output (default stdout)')
@click.option('--json', 'as_json', is_flag=True, help='Also emit JSON')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False))
@handle_errors
def pcm_study(workloads, traces, records, cache_fraction, tlc_fractions, table_source, perf_geomeans,
              target_margin, jobs, seed, raw, out, as_json, config_path):
    """Offered PCM configurations: feasibility, cost and perf/cost"""
    overrides = {}
    for item in perf_geomeans:
        label, sep, value = item.rpartition("=")
        try:
            overrides[label.strip()] = float(value)
        except ValueError:
            sep = ""
        if not sep or not label.strip():
            raise click.BadParameter(f"expected LABEL=VALUE, got {item!r}", param_hint="--perf-geomean")
    cfg = merge_config(PcmStudyConfig, config_path, workloads=split_list(workloads, str), traces=list(traces),
                       n_records=records, cache_fraction=cache_fraction,
                       tlc_fractions=split_list(tlc_fractions, str), table=table_source,
                       perf_geomeans=overrides or None, target_margin=target_margin, jobs=jobs, seed=seed,
                       out=out, json_output=as_json)
    table = load_cost_table(cfg.table)
    with Progress(SpinnerColumn(), TextColumn("{task.description}"), console=console, transient=True) as progress:
        progress.add_task("Simulating PCM configurations...", total=None)
        traces_by_name = workload_traces(cfg.workloads, cfg.traces, cfg.n_records, cfg.seed)
        rows = pcm_case_study(
            traces_by_name, table,
            cache_fraction=cfg.cache_fraction,
            tlc_fractions=cfg.tlc_fractions,
            target_margin=cfg.target_margin if cfg.target_margin is not None
            else config_manager.get('explorer.target_margin'),
            perf_geomeans=cfg.perf_geomeans,
            jobs=cfg.jobs or config_manager.get('app.jobs'),
            compute_ns=config_manager.get('hierarchy.compute_ns_per_access'),
            hit_service_ns=config_manager.get('hierarchy.hit_service_ns'),
            tag_lookup_ns=config_manager.get('cache.tag_lookup_ns'),
        )
    emit(case_study_frame(rows, rounded=not raw), cfg.out, cfg.json_output, "PCM case study")


def run(argv: Optional[List[str]] = None) -> int:
    """Entry point returning the exit code"""
    try:
        code = cli.main(args=argv, prog_name="scmx", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        console.print("[bold red]Aborted[/bold red]")
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    return code if isinstance(code, int) else 0


if __name__ == '__main__':
    cli()
