from typing import List, Literal, Optional

from pydantic import BaseModel, Field, ConfigDict, field_validator, model_validator

from schemas.params_schema import ModelParams

Mode = Literal["analyze-delta", "ground-state", "solve-steady", "simulate", "reproduce", "sweep-epsilon"]
PresetName = Literal["fig1", "fig2", "fig3", "fig4a", "fig4b", "fig5"]


class StrictModel(BaseModel):
    """Las claves desconocidas se rechazan"""
    model_config = ConfigDict(extra="forbid")


class GridSpec(StrictModel):
    dim: Literal[1, 2] = Field(2, description="Dimensión de la malla")
    nx: int = Field(128, ge=8, description="Celdas en x")
    ny: Optional[int] = Field(None, ge=8, description="Celdas en y (por defecto igual a nx en 2D)")
    lx: float = Field(1.0, gt=0, description="Longitud en x")
    ly: float = Field(1.0, gt=0, description="Longitud en y")

    def build(self):
        from gridcontext.grid import Grid
        if self.dim == 1:
            return Grid.interval(self.nx, self.lx)
        return Grid.rectangle(self.nx, self.ny or self.nx, self.lx, self.ly)

    @property
    def volume(self) -> float:
        return self.lx if self.dim == 1 else self.lx * self.ly


class SchemeConfig(StrictModel):
    dt_max: float = Field(0.05, gt=0, description="Cota superior del paso de tiempo")
    cfl_safety: float = Field(0.5, gt=0, le=1, description="Factor de seguridad CFL en (0, 1]")
    steady_tol: float = Field(1e-6, gt=0, description="Umbral de cambio relativo por unidad de tiempo")
    t_end: float = Field(100.0, gt=0, description="Horizonte de integración")
    snapshot_times: List[float] = Field(default_factory=list, description="Tiempos de snapshot")
    stop_at_steady: bool = Field(True, description="Detener al detectar estado estacionario")

    @field_validator("snapshot_times")
    @classmethod
    def sorted_times(cls, v: List[float]) -> List[float]:
        if any(t < 0 for t in v):
            raise ValueError("snapshot times must be nonnegative")
        return sorted(set(v))


class CosineTerm(StrictModel):
    """amp cos(kx pi (x - sx)) cos(ky pi (y - sy))"""
    amp: float
    kx: float = 0.0
    ky: float = 0.0
    sx: float = 0.0
    sy: float = 0.0


class InitialDataSpec(StrictModel):
    constant: float = Field(..., description="Nivel constante")
    terms: List[CosineTerm] = Field(default_factory=list, description="Términos coseno")


class SteadySpec(StrictModel):
    delta: Optional[float] = Field(None, gt=0, description="delta para analyze-delta / ground-state")
    eps_list: List[float] = Field(default_factory=list, description="Valores de eps (decrecientes) para sweep-epsilon")
    cells_per_eps: Optional[float] = Field(None, gt=0, description="Refinamiento de malla por eps en los barridos")
    scan_points: int = Field(0, ge=0, description="Puntos del barrido previo de delta")
    radius: Optional[float] = Field(None, gt=0, description="R_max del disparo radial")

    @field_validator("eps_list")
    @classmethod
    def decreasing(cls, v: List[float]) -> List[float]:
        if any(e <= 0 for e in v):
            raise ValueError("eps values must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("eps_list must be strictly decreasing")
        return v


class RunConfig(StrictModel):
    mode: Mode
    params: Optional[ModelParams] = None
    grid: GridSpec = Field(default_factory=GridSpec)
    scheme: SchemeConfig = Field(default_factory=SchemeConfig)
    initial_u: Optional[InitialDataSpec] = None
    initial_v: Optional[InitialDataSpec] = None
    steady: SteadySpec = Field(default_factory=SteadySpec)
    out: Optional[str] = Field(None, description="Directorio de salida")
    preset: Optional[PresetName] = None

    @model_validator(mode="after")
    def check_mode(self):
        if self.mode == "reproduce":
            if self.preset is None:
                raise ValueError("reproduce mode requires a preset name (fig1..fig5)")
            return self
        if self.params is None:
            raise ValueError(f"mode {self.mode} requires a [params] section")
        if self.mode == "simulate" and (self.initial_u is None or self.initial_v is None):
            raise ValueError("simulate mode requires [initial.u] and [initial.v] sections")
        if self.mode in ("analyze-delta", "ground-state") and self.steady.delta is None:
            raise ValueError(f"mode {self.mode} requires delta in the [steady] section")
        if self.mode == "sweep-epsilon" and not self.steady.eps_list:
            raise ValueError("sweep-epsilon mode requires eps_list in the [steady] section")
        return self
