from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ConfigDict

from gridcontext.grid import ScalarField
from schemas.analysis_schema import DeltaAnalysis
from schemas.params_schema import ModelParams


class EnergyReport(BaseModel):
    """Energía J_{eps,delta}(w) con las cantidades de control de la identidad de Nehari"""
    value: float = Field(..., description="J_{eps,delta}(w)")
    norm_sq: float = Field(..., description="||w||_eps^2")
    residual_identity_gap: float = Field(..., description="|norm_sq - int f(w) w| / norm_sq")
    is_constant: bool = Field(..., description="sup - inf < 1e-8 sup")

    model_config = ConfigDict(frozen=True)


class SpikeSeed(BaseModel):
    """Descriptor del iterado inicial de Newton"""
    kind: Literal["spike", "constant"] = Field("spike", description="Ground state trasplantado o nivel constante")
    point: Optional[Tuple[float, ...]] = Field(None, description="Centro del pico; None = esquina del origen")
    perturbation: float = Field(0.0, description="Amplitud relativa de la perturbación coseno del nivel constante")

    model_config = ConfigDict(frozen=True)


class RankedCandidate(BaseModel):
    field: ScalarField
    report: EnergyReport
    location: Tuple[float, ...]

    model_config = ConfigDict(arbitrary_types_allowed=True)


class CandidateRanking(BaseModel):
    ranked: List[RankedCandidate]
    inconsistent: bool = Field(False, description="Se eligió la constante habiendo un candidato no constante con energía en la escala I_delta eps^N")

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def selected(self) -> RankedCandidate:
        return self.ranked[0]


class NonlocalSolution(BaseModel):
    """Estado estacionario completo: delta_eps, w, v, u y residuos de las restricciones"""
    params: ModelParams
    eps: float
    delta_eps: float
    analysis: DeltaAnalysis
    w: ScalarField
    v: ScalarField
    u: ScalarField
    constraint_residual: float
    mass_residual: float
    platform: float
    hypothesis_holds: bool
    bisection_steps: int = 0
    other_roots: List[float] = Field(default_factory=list)

    model_config = ConfigDict(arbitrary_types_allowed=True)


class SpikeLocation(BaseModel):
    point: Tuple[float, ...]
    index: Tuple[int, ...]
    value: float
    boundary_class: Literal["interior", "edge", "corner"]


class SpikeReport(BaseModel):
    locations: List[SpikeLocation]
    primary: SpikeLocation
    boundary_class: Literal["interior", "edge", "corner"]
    anchor: Tuple[float, ...] = Field(..., description="Punto de frontera más cercano al pico primario (o el mismo centro si es interior)")
    platform: Optional[float] = None
    superlevel_diameter: Optional[float] = None
    decay_mu: Optional[float] = None
    profile_error: Optional[float] = None
    eta: Optional[float] = None

    @property
    def count(self) -> int:
        return len(self.locations)


class SimState(BaseModel):
    t: float
    u: ScalarField
    v: ScalarField
    mass0: float
    dt_last: float = 0.0

    model_config = ConfigDict(arbitrary_types_allowed=True)


class TrajectorySummary(BaseModel):
    final: SimState
    steps: int
    steady: bool
    times: np.ndarray
    mass: np.ndarray
    u_max: np.ndarray
    u_min: np.ndarray
    v_max: np.ndarray
    v_min: np.ndarray
    snapshots: List[SimState] = Field(default_factory=list)

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def max_mass_drift(self) -> float:
        return float(np.max(np.abs(self.mass - self.final.mass0)) / self.final.mass0)


class MigrationTrack(BaseModel):
    """Trayectoria del pico principal a lo largo de los snapshots"""
    times: List[float]
    points: List[Tuple[float, ...]]
    target_corner: Tuple[float, ...] = Field(..., description="Esquina más cercana a la posición final")
    distances: List[float]
    transient_end: int = Field(..., description="Primer índice a partir del cual la distancia no crece")

    @property
    def approaches(self) -> bool:
        return self.distances[-1] <= self.distances[self.transient_end]
