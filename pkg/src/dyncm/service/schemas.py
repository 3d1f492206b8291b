"""Request and response models of the HTTP service."""
from __future__ import annotations

import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


def finite_or_none(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


class GraphSpec(BaseModel):
    """Either an explicit degree list or a generator model."""

    degrees: Optional[list[int]] = None
    mode: Optional[Literal["R", "R*"]] = None
    model: Optional[Literal["regular", "bivalued", "powerlaw"]] = None
    n: Optional[int] = None
    d: Optional[int] = None
    d1: Optional[int] = None
    d2: Optional[int] = None
    frac1: Optional[float] = None
    gamma: Optional[float] = None
    seed: int = 0

    @model_validator(mode="after")
    def _one_source(self):
        if (self.degrees is None) == (self.model is None):
            raise ValueError("give exactly one of 'degrees' or 'model'")
        if self.model is not None and self.n is None:
            raise ValueError("a generator model needs n")
        return self


class CheckItem(BaseModel):
    name: str
    value: Optional[float]
    status: Literal["pass", "warn", "fail"]
    note: str


class CheckResponse(BaseModel):
    mode: str
    n: int
    ell: int
    statistics: dict
    checks: list[CheckItem]
    text: str


class SimulateRequest(BaseModel):
    graph: GraphSpec
    t: int = Field(ge=0)
    k: Optional[int] = Field(default=None, ge=0)
    alpha: Optional[float] = Field(default=None, ge=0)
    x: Optional[int] = None
    seed: int = 0
    record_trace: bool = False

    @model_validator(mode="after")
    def _rate(self):
        if self.k is not None and self.alpha is not None:
            raise ValueError("give k or alpha, not both")
        return self


class SimulateResponse(BaseModel):
    ell: int
    k: int
    x0: int
    trajectory: list[int]
    tau: Optional[int]
    self_avoiding: bool
    configuration: str
    text: str
    trace: Optional[str] = None


class ProfileRequest(BaseModel):
    model: Literal["regular", "bivalued", "powerlaw"] = "bivalued"
    n: int = 10_000
    d: Optional[int] = None
    d1: Optional[int] = 3
    d2: Optional[int] = 4
    frac1: Optional[float] = 0.5
    gamma: Optional[float] = None
    regime: Literal["supercritical", "critical", "subcritical"] = "supercritical"
    beta: Optional[float] = None
    alpha: Optional[float] = None
    c_grid: list[float | str] = [0.5, 1.0, 1.5, 2.0]
    N: int = Field(default=10_000, ge=0)
    B: int = Field(default=20, ge=20)
    seed: int = 0
    out: Optional[str] = None
    workers: int = Field(default=1, ge=1)
    fresh: bool = False


class ProfileRowModel(BaseModel):
    regime: str
    n: int
    ell: int
    alpha: float
    k: int
    c: float
    t: int
    N: int
    tv_raw: Optional[float]
    tv_debiased: Optional[float]
    stderr: Optional[float]
    p_tau_gt: Optional[float]
    sa_rate: Optional[float]
    theory: Optional[float]
    lower: Optional[float]
    upper: Optional[float]
    seed: int
    wall: float
    tv_unclamped: Optional[float]
    low_confidence: bool


class ProfileResponse(BaseModel):
    rows: list[ProfileRowModel]
    csv: str


class JobStatus(BaseModel):
    id: str
    status: Literal["pending", "running", "done", "failed"]
    error: Optional[str] = None
    result: Optional[ProfileResponse] = None


class ExactCheck(BaseModel):
    name: str
    passed: bool
    detail: str


class ExactResponse(BaseModel):
    ok: bool
    checks: list[ExactCheck]
    text: str


class ResetLawRequest(BaseModel):
    degrees: list[int] = [3, 3, 2]
    k: int = 2
    t: int = 2
    path: Optional[list[int]] = None
    configuration: Optional[str] = None


class ResetLawEntry(BaseModel):
    T: list[int]
    p: float


class ResetLawResponse(BaseModel):
    ell: int
    k: int
    t: int
    path: list[int]
    configuration: str
    law: list[ResetLawEntry]
    total: float
