import math
from typing import Literal

from pydantic import BaseModel, Field, ConfigDict


class ModelParams(BaseModel):
    """
    Parámetros físicos del sistema de Keller-Segel con sensibilidad
    logarítmica saturada, más las cantidades derivadas eps, p y m.
    """
    d1: float = Field(..., gt=0, description="Difusión de las células")
    d2: float = Field(..., gt=0, description="Difusión del químico")
    chi: float = Field(..., gt=0, description="Coeficiente quimiotáctico")
    alpha: float = Field(..., gt=0, description="Tasa de decaimiento del químico")
    beta: float = Field(..., gt=0, description="Tasa de producción del químico")
    c: float = Field(..., gt=0, description="Constante de saturación de la sensibilidad")
    M: float = Field(..., gt=0, description="Masa total de células")
    dim: Literal[1, 2, 3] = Field(1, description="Dimensión espacial N")
    volume: float = Field(1.0, gt=0, description="Volumen |Omega| del dominio")

    model_config = ConfigDict(frozen=True, extra="forbid")

    @property
    def eps(self) -> float:
        return math.sqrt(self.d2 / self.alpha)

    @property
    def p(self) -> float:
        return self.chi / self.d1

    @property
    def m(self) -> float:
        return self.beta * self.M / self.alpha

    @property
    def is_subcritical(self) -> bool:
        if self.p <= 1:
            return False
        if self.dim >= 3:
            return self.p < (self.dim + 2) / (self.dim - 2)
        return True

    @property
    def mass_bound(self) -> float:
        """Cota alpha*c*|Omega|/(beta*(p-1)) de la hipótesis sobre M; infinita si p <= 1"""
        if self.p <= 1:
            return math.inf
        return self.alpha * self.c * self.volume / (self.beta * (self.p - 1))

    @property
    def hypothesis_holds(self) -> bool:
        return self.M <= self.mass_bound

    @property
    def mean_level(self) -> float:
        """Promedio beta*M/(alpha*|Omega|), altura límite de la plataforma"""
        return self.beta * self.M / (self.alpha * self.volume)

    @classmethod
    def from_reduced(cls, p: float, c: float, m: float, eps: float = 1.0,
                     volume: float = 1.0, dim: int = 1) -> "ModelParams":
        """Construye parámetros con d1 = alpha = beta = 1, de modo que chi = p, M = m y d2 = eps^2"""
        return cls(d1=1.0, d2=eps * eps, chi=p, alpha=1.0, beta=1.0, c=c, M=m,
                   dim=dim, volume=volume)

    def derived_summary(self) -> dict:
        return {
            "eps": self.eps,
            "p": self.p,
            "m": self.m,
            "mass_bound": self.mass_bound,
            "hypothesis_holds": self.hypothesis_holds,
            "subcritical": self.is_subcritical,
        }
