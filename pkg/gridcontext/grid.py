"""
Malla uniforme centrada en celdas para intervalos y rectángulos con
condición de Neumann homogénea.

Los valores se guardan con forma (nx,) en 1D y (ny, nx) en 2D (fila = y),
que al aplanarse da el orden row-major con x como índice rápido.
"""
import logging
from functools import cached_property
from typing import Literal, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from utils.errors import InvalidParameterError

logger = logging.getLogger("grid")


class Domain(BaseModel):
    dim: Literal[1, 2] = Field(..., description="Dimensión del dominio")
    lengths: Tuple[float, ...] = Field(..., description="Longitudes de los lados")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_lengths(self):
        if len(self.lengths) != self.dim:
            raise ValueError(f"expected {self.dim} side lengths, got {len(self.lengths)}")
        if any(L <= 0 for L in self.lengths):
            raise ValueError("side lengths must be positive")
        return self

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def corners(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([[0.0], [self.lengths[0]]])
        Lx, Ly = self.lengths
        return np.array([[0.0, 0.0], [Lx, 0.0], [0.0, Ly], [Lx, Ly]])


class Grid(BaseModel):
    domain: Domain
    nx: int = Field(..., ge=8, description="Celdas en x")
    ny: Optional[int] = Field(None, ge=8, description="Celdas en y (None en 1D)")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_axes(self):
        if self.domain.dim == 1 and self.ny is not None:
            raise ValueError("ny must be absent for a 1D grid")
        if self.domain.dim == 2 and self.ny is None:
            raise ValueError("ny is required for a 2D grid")
        return self

    @classmethod
    def interval(cls, nx: int, length: float = 1.0) -> "Grid":
        return cls(domain=Domain(dim=1, lengths=(length,)), nx=nx)

    @classmethod
    def rectangle(cls, nx: int, ny: int, lx: float = 1.0, ly: float = 1.0) -> "Grid":
        return cls(domain=Domain(dim=2, lengths=(lx, ly)), nx=nx, ny=ny)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.nx,) if self.dim == 1 else (self.ny, self.nx)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h(self) -> Tuple[float, ...]:
        """Anchos de celda en el orden (hx,) o (hx, hy)"""
        if self.dim == 1:
            return (self.domain.lengths[0] / self.nx,)
        return (self.domain.lengths[0] / self.nx, self.domain.lengths[1] / self.ny)

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return self.domain.volume

    def axis_centers(self, axis: int) -> np.ndarray:
        """Centros de celda a lo largo del eje físico (0 = x, 1 = y)"""
        n = self.nx if axis == 0 else self.ny
        h = self.h[axis]
        return (np.arange(n) + 0.5) * h

    def mesh(self) -> Tuple[np.ndarray, ...]:
        """Coordenadas de los centros con la forma de los valores"""
        if self.dim == 1:
            return (self.axis_centers(0),)
        X, Y = np.meshgrid(self.axis_centers(0), self.axis_centers(1), indexing="xy")
        return (X, Y)

    def points(self) -> np.ndarray:
        """Centros de celda como arreglo (size, dim) en orden row-major"""
        return np.column_stack([c.ravel() for c in self.mesh()])

    def distance_to(self, point) -> np.ndarray:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        coords = self.mesh()
        d2 = sum((c - point[k]) ** 2 for k, c in enumerate(coords))
        return np.sqrt(d2)

    def array_axis(self, axis: int) -> int:
        """Eje del arreglo de valores que corresponde al eje físico"""
        if self.dim == 1:
            return 0
        return 1 if axis == 0 else 0

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Laplaciano de Neumann de 3/5 puntos como matriz dispersa (simétrica, semidefinida negativa)"""
        def one_dim(n, h):
            main = np.full(n, -2.0)
            main[0] = main[-1] = -1.0
            off = np.ones(n - 1)
            return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)

        hx = self.h[0]
        Lx = one_dim(self.nx, hx)
        if self.dim == 1:
            return Lx.tocsr()
        Ly = one_dim(self.ny, self.h[1])
        L = sp.kron(sp.identity(self.ny), Lx) + sp.kron(Ly, sp.identity(self.nx))
        return L.tocsr()


class ScalarField(BaseModel):
    """Función de malla: un valor escalar por celda"""
    grid: Grid
    values: np.ndarray
    name: str = "f"

    model_config = ConfigDict(arbitrary_types_allowed=True)

    @field_validator("values", mode="before")
    @classmethod
    def as_float_array(cls, v):
        return np.asarray(v, dtype=float)

    @model_validator(mode="after")
    def check_values(self):
        if self.values.shape != self.grid.shape:
            if self.values.size == self.grid.size:
                self.values = self.values.reshape(self.grid.shape)
            else:
                raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        return self

    @classmethod
    def constant(cls, grid: Grid, value: float, name: str = "f") -> "ScalarField":
        return cls(grid=grid, values=np.full(grid.shape, float(value)), name=name)

    def with_values(self, values: np.ndarray, name: Optional[str] = None) -> "ScalarField":
        return ScalarField(grid=self.grid, values=values, name=name or self.name)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _neumann_face_gradients(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Gradientes en todas las caras del eje, con flujo nulo en las caras de frontera"""
    ax = grid.array_axis(axis)
    pad = [(0, 0)] * values.ndim
    pad[ax] = (1, 1)
    padded = np.pad(values, pad, mode="edge")
    return np.diff(padded, axis=ax) / grid.h[axis]


def interior_face_gradients(values: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    return np.diff(values, axis=grid.array_axis(axis)) / grid.h[axis]


def laplacian_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    out = np.zeros_like(values, dtype=float)
    for axis in range(grid.dim):
        g = _neumann_face_gradients(values, grid, axis)
        out += np.diff(g, axis=grid.array_axis(axis)) / grid.h[axis]
    return out


def laplacian_neumann(f: ScalarField) -> ScalarField:
    return f.with_values(laplacian_values(f.values, f.grid))


def integrate_values(values: np.ndarray, grid: Grid) -> float:
    # np.sum usa reducción por pares en orden fijo
    return float(np.sum(values) * grid.cell_volume)


def integrate(f: ScalarField) -> float:
    """Regla del punto medio"""
    return integrate_values(f.values, f.grid)


def gradient_inner(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    """Cuadratura en caras de int grad(a).grad(b); par de la suma por partes con laplacian_values"""
    total = 0.0
    for axis in range(grid.dim):
        ga = interior_face_gradients(a, grid, axis)
        gb = interior_face_gradients(b, grid, axis)
        total += float(np.sum(ga * gb))
    return total * grid.cell_volume


def h1_eps_norm_sq(values: np.ndarray, grid: Grid, eps: float, c_delta: float) -> float:
    return eps * eps * gradient_inner(values, values, grid) + c_delta * integrate_values(values * values, grid)


def h1_eps_norm(f: ScalarField, eps: float, c_delta: float) -> float:
    if c_delta <= 0:
        raise InvalidParameterError(f"h1_eps_norm requires c_delta > 0, got {c_delta}")
    if eps <= 0:
        raise InvalidParameterError(f"h1_eps_norm requires eps > 0, got {eps}")
    return float(np.sqrt(h1_eps_norm_sq(f.values, f.grid, eps, c_delta)))


def boundary_class_of(grid: Grid, index: Tuple[int, ...]) -> str:
    """Clasifica una celda como interior, edge o corner según cuántas caras de frontera toca"""
    if grid.dim == 1:
        (i,) = index
        return "edge" if i in (0, grid.nx - 1) else "interior"
    j, i = index
    touches = int(i in (0, grid.nx - 1)) + int(j in (0, grid.ny - 1))
    return ("interior", "edge", "corner")[touches]


def cell_center(grid: Grid, index: Tuple[int, ...]) -> Tuple[float, ...]:
    if grid.dim == 1:
        return (float((index[0] + 0.5) * grid.h[0]),)
    j, i = index
    return (float((i + 0.5) * grid.h[0]), float((j + 0.5) * grid.h[1]))
