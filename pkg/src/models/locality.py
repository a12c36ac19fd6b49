from typing import List, Tuple

from pydantic import BaseModel, Field, model_validator


class MissCurve(BaseModel):
    """Fully-associative LRU miss ratios of one trace at one block size"""

    block_bytes: int
    points: List[Tuple[int, float]]
    misses: List[int] = Field(default_factory=list)
    accesses: int
    distinct_blocks: int
    footprint_bytes: int = 0

    @model_validator(mode="after")
    def _inclusion(self) -> "MissCurve":
        ratios = [ratio for _, ratio in self.points]
        if any(later > earlier for earlier, later in zip(ratios, ratios[1:])):
            raise ValueError("miss ratio must be non-increasing in capacity")
        return self

    @property
    def capacities(self) -> List[int]:
        return [capacity for capacity, _ in self.points]

    @property
    def miss_ratios(self) -> List[float]:
        return [ratio for _, ratio in self.points]

    @property
    def compulsory_ratio(self) -> float:
        return self.distinct_blocks / self.accesses if self.accesses else 0.0
