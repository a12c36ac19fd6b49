import logging
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, List, Optional, Tuple

import pandas as pd
from pydantic import ValidationError

from src.models.cost import CostReportRow, CostTable, HierarchySpec
from src.models.errors import ConfigurationError

logger = logging.getLogger(__name__)

BASELINE_TECHNOLOGY = "planar_dram"
REPORT_COLUMNS = ["configuration", "perf_geomean", "cache_cost", "total_cost", "perf_per_cost"]


def _cost_of(technology: str, table: CostTable, key: str) -> float:
    try:
        return table.costs[technology.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown technology {technology!r}; known: {sorted(table.costs)}", key=key) from None


def cache_cost(spec: HierarchySpec, table: CostTable) -> float:
    """Cache capacity cost relative to a planar-DRAM main memory of the same size"""
    baseline = _cost_of(BASELINE_TECHNOLOGY, table, "table")
    return spec.cache_fraction * _cost_of(spec.cache_technology, table, "cache_technology") / baseline


def hierarchy_cost(spec: HierarchySpec, table: CostTable) -> float:
    """(main + fraction x cache) cost per bit, planar DRAM alone = 1.0"""
    baseline = _cost_of(BASELINE_TECHNOLOGY, table, "table")
    main = _cost_of(spec.main_technology, table, "main_technology")
    return main / baseline + cache_cost(spec, table)


def perf_per_cost(perf_geomean: float, cost: float) -> float:
    if cost <= 0:
        raise ConfigurationError(f"cost must be positive, got {cost}", key="cost")
    return perf_geomean / cost


def round_half_up(value: float, places: int = 2) -> float:
    """Table rounding: 1.125 -> 1.13"""
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def cost_row(label: str, spec: HierarchySpec, perf_geomean: float, table: CostTable) -> CostReportRow:
    total = hierarchy_cost(spec, table)
    return CostReportRow(
        configuration=label,
        perf_geomean=perf_geomean,
        cache_cost=cache_cost(spec, table),
        total_cost=total,
        perf_per_cost=perf_per_cost(perf_geomean, total),
        cache_fraction=spec.cache_fraction,
        main_technology=spec.main_technology,
    )


def cost_report(entries: Iterable[Tuple[str, HierarchySpec, float]],
                table: Optional[CostTable] = None, rounded: bool = True) -> pd.DataFrame:
    """Configuration, perf geomean, cache cost, total cost and perf/cost per hierarchy"""
    table = table or CostTable.default()
    rows: List[dict] = []
    for label, spec, perf in entries:
        row = cost_row(label, spec, perf, table).model_dump(include=set(REPORT_COLUMNS))
        if rounded:
            for column in ("perf_geomean", "cache_cost", "total_cost", "perf_per_cost"):
                row[column] = round_half_up(row[column])
        rows.append(row)
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def parse_hierarchy_spec(text: str) -> HierarchySpec:
    """'mlc:1/32' or 'tlc:0.125:stacked_dram' -> HierarchySpec"""
    parts = [part.strip() for part in text.split(":")]
    if not parts[0] or len(parts) > 3:
        raise ConfigurationError(f"expected technology[:fraction[:cache_technology]], got {text!r}", key="spec")
    values = {"main_technology": parts[0]}
    if len(parts) > 1:
        values["cache_fraction"] = parts[1]
    if len(parts) > 2:
        values["cache_technology"] = parts[2]
    try:
        return HierarchySpec(**values)
    except ValidationError as e:
        error = e.errors()[0]
        message = error["msg"].removeprefix("Value error, ")
        raise ConfigurationError(f"{text!r}: {message}", key="spec") from None
