import json
from fractions import Fraction
from typing import Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_COST_PER_BIT = {
    "planar_dram": 1.00,
    "stacked_dram": 7.00,
    "slc": 1.00,
    "mlc": 0.50,
    "tlc": 0.25,
}


class CostTable(BaseModel):
    """Cost per bit of each memory technology relative to planar DRAM"""
    model_config = ConfigDict(frozen=True)

    costs: Dict[str, float] = Field(default_factory=lambda: dict(DEFAULT_COST_PER_BIT))

    @field_validator("costs")
    @classmethod
    def _positive(cls, value: Dict[str, float]) -> Dict[str, float]:
        for name, cost in value.items():
            if cost <= 0:
                raise ValueError(f"cost of {name} must be positive, got {cost}")
        return {name.lower(): float(cost) for name, cost in value.items()}

    @classmethod
    def default(cls) -> "CostTable":
        return cls()

    @classmethod
    def from_json(cls, text: str) -> "CostTable":
        data = json.loads(text)
        if isinstance(data, dict) and "costs" in data:
            data = data["costs"]
        return cls(costs=data)

    def to_json(self) -> str:
        return json.dumps(self.costs, indent=2)

    def __contains__(self, technology: str) -> bool:
        return technology.lower() in self.costs


class HierarchySpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    main_technology: str
    cache_fraction: float = Field(default=0.0, ge=0, le=0.2)
    cache_technology: str = "stacked_dram"

    @field_validator("cache_fraction", mode="before")
    @classmethod
    def _rational(cls, value: Union[str, float]) -> float:
        if isinstance(value, str):
            try:
                return float(Fraction(value.strip()))
            except (ValueError, ZeroDivisionError):
                raise ValueError(f"not a fraction: {value!r}") from None
        return value

    @field_validator("main_technology", "cache_technology")
    @classmethod
    def _lower(cls, value: str) -> str:
        return value.strip().lower()


class CostReportRow(BaseModel):
    configuration: str
    perf_geomean: float
    cache_cost: float
    total_cost: float
    perf_per_cost: float
    cache_fraction: float = 0.0
    main_technology: Optional[str] = None
