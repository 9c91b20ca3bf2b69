import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field, ConfigDict


class RootPair(BaseModel):
    """Raíces t1 <= t2 de R_delta(t) = -t + m(t+c)^p/delta"""
    t1: float
    t2: float
    double: bool = Field(False, description="True si delta coincide con delta0 (raíz doble)")

    model_config = ConfigDict(frozen=True)


class DeltaAnalysis(BaseModel):
    """
    Estructura escalar de la reacción a un delta dado y coeficientes de la
    no linealidad transformada f_delta.
    """
    m: float = Field(..., gt=0)
    p: float = Field(..., gt=1)
    c: float = Field(..., ge=0, description="Constante de saturación (0 en los análisis sintéticos)")
    delta: float = Field(..., gt=0, description="Normalizador no local")
    delta0: float = Field(..., description="Umbral de existencia")
    t1: float
    t2: float
    t_star: float
    c_delta: float = Field(..., ge=0, description="Coeficiente lineal, en [0, 1)")
    t_delta: float = Field(..., ge=0, description="Desplazamiento (t1+c)*delta^(-1/(p-1))")
    synthetic: bool = Field(False, description="Análisis construido a mano (sin delta físico)")

    model_config = ConfigDict(frozen=True)

    @property
    def is_threshold(self) -> bool:
        return self.c_delta == 0.0

    @property
    def scale(self) -> float:
        """delta^(1/(p-1)), factor entre w y v - t1"""
        if math.isinf(self.delta):
            return math.inf
        return self.delta ** (1.0 / (self.p - 1.0))


class RadialProfile(BaseModel):
    """Ground state radial muestreado con su ajuste de decaimiento y sus integrales"""
    dim: int = Field(..., ge=1)
    analysis: DeltaAnalysis
    r_samples: np.ndarray
    w_samples: np.ndarray
    dw_samples: Optional[np.ndarray] = None
    w0: float
    r_trusted: float = Field(..., description="Radio hasta el cual la trayectoria de disparo es confiable")
    tail_amplitude: float = Field(..., description="C en la cola C e^{-sqrt(c) r} r^{(1-N)/2}")
    mu: float = 0.0
    decay_constant: float = 0.0
    mass: float = 0.0
    energy: float = 0.0

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @property
    def r_max(self) -> float:
        return float(self.r_samples[-1])

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        """w(r) por interpolación monótona, con la cola exponencial más allá de R_max"""
        from scipy.interpolate import PchipInterpolator

        r = np.asarray(r, dtype=float)
        inside = PchipInterpolator(self.r_samples, self.w_samples, extrapolate=False)
        out = np.empty_like(r)
        mask = r <= self.r_max
        out[mask] = inside(r[mask])
        far = ~mask
        if np.any(far):
            k = math.sqrt(self.analysis.c_delta)
            rf = r[far]
            out[far] = self.tail_amplitude * np.exp(-k * rf) * rf ** ((1 - self.dim) / 2.0)
        return out
