"""Request models for the HTTP service.

Documents (fields, sections, complexes, representations, gluing data) travel
as plain JSON objects in the shapes produced by the serialize module; the
handlers validate them on decode. The models here only type the options.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

Matrix = list[list[object]]


class GenerateRequest(BaseModel):
    name: str
    seed: int = 0


class AnalyzeRequest(BaseModel):
    field: dict
    rank_tol: float = 1e-9
    continuity_budget: float | None = None
    seed: int = 0
    edge_variation: bool = True


class ExtractRequest(BaseModel):
    field: dict
    rank_tol: float = 1e-9


class BundleRequest(BaseModel):
    """Options shared by the chern, trivialize, and factor endpoints."""

    field: dict
    rank_tol: float = 1e-9
    rho: float = 0.1
    margin: float = 0.5235987755982988  # pi/6


class SynthesizeRequest(BaseModel):
    section: dict
    zero_tol: float = 1e-12


class ApproximateRequest(BaseModel):
    field: dict
    n_stages: int | None = None
    rank_tol: float = 1e-9
    seed: int = 0
    include_factors: bool = False


class VerdictRequest(BaseModel):
    field: dict
    rank_tol: float = 1e-9
    seed: int = 0


class TelescopeBuildRequest(BaseModel):
    depth: int
    tail: list[int] | None = None
    far_size: int = 6
    kind: str = "lean"


class TelescopeDecideRequest(BaseModel):
    gluing: dict
    bound: int = Field(default=10**6, ge=1)


class TelescopeDemoRequest(BaseModel):
    depth: int = 4
    bound: int = Field(default=10**6, ge=1)
    seed: int = 0


class HaagerupRequest(BaseModel):
    rep: dict
    rank_tol: float = 1e-9
    iters: int = 80
    seed: int = 0


class RecoverRequest(BaseModel):
    a: Matrix
    b: Matrix
    c: Matrix
    d: Matrix
    eps: float
    norm_tol: float = 1e-9


class CohomologyRequest(BaseModel):
    complex: dict


class ExperimentRequest(BaseModel):
    dim: int = 3
    target_length: int = 2
    trials: int = 20
    steps: int = 6
    seed: int = 0
