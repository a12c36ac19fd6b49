from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.models.trace import REQUEST_BYTES


class AmatQuery(BaseModel):
    """One point of the closed-form amortized access-time model"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    t_act_ns: float = Field(ge=0)
    t_wr_ns: float = Field(default=0.0, ge=0)
    transfer_bytes: int = Field(ge=REQUEST_BYTES)
    data_rate_mts: float = Field(default=2666, gt=0)
    burst_ns: Optional[float] = Field(default=None, gt=0)

    @field_validator("transfer_bytes")
    @classmethod
    def _whole_blocks(cls, value: int) -> int:
        if value % REQUEST_BYTES:
            raise ValueError(f"transfer size must be a multiple of {REQUEST_BYTES}B, got {value}")
        return value

    @property
    def bursts(self) -> int:
        return self.transfer_bytes // REQUEST_BYTES


class HotFractionQuery(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    alpha: float = Field(ge=0)
    n_items: int = Field(ge=1)
    coverage: float = Field(gt=0, lt=1)
