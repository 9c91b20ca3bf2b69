"""
Flujo de Scharfetter-Gummel para d1 (grad u - u grad psi) en caras de la
malla, con flujo nulo en las caras de frontera.

Con B(x) = x/(e^x - 1) = 1/exprel(x), el flujo en la cara entre las celdas
i (abajo) y j (arriba) es (d1/h) [B(dpsi) u_j - B(-dpsi) u_i], que se anula
exactamente cuando u es proporcional a e^psi.
"""
from typing import List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import exprel

from gridcontext.grid import Grid


def bernoulli(x: np.ndarray) -> np.ndarray:
    return 1.0 / exprel(x)


def _face_pairs(grid: Grid, axis: int) -> Tuple[np.ndarray, np.ndarray]:
    """Índices aplanados (abajo, arriba) de cada cara interior del eje"""
    idx = np.arange(grid.size).reshape(grid.shape)
    ax = grid.array_axis(axis)
    n = idx.shape[ax]
    lo = np.take(idx, np.arange(n - 1), axis=ax).ravel()
    hi = np.take(idx, np.arange(1, n), axis=ax).ravel()
    return lo, hi


def face_psi_jumps(psi: np.ndarray, grid: Grid) -> List[np.ndarray]:
    flat = psi.ravel()
    out = []
    for axis in range(grid.dim):
        lo, hi = _face_pairs(grid, axis)
        out.append(flat[hi] - flat[lo])
    return out


def sg_divergence(u: np.ndarray, psi: np.ndarray, grid: Grid, d1: float) -> np.ndarray:
    """div del flujo SG evaluado sobre u"""
    uf, out = u.ravel(), np.zeros(grid.size)
    for axis, dpsi in enumerate(face_psi_jumps(psi, grid)):
        lo, hi = _face_pairs(grid, axis)
        h = grid.h[axis]
        flux = d1 / h * (bernoulli(dpsi) * uf[hi] - bernoulli(-dpsi) * uf[lo])
        np.add.at(out, lo, flux / h)
        np.add.at(out, hi, -flux / h)
    return out.reshape(grid.shape)


def sg_operator(psi: np.ndarray, grid: Grid, d1: float) -> sp.csr_matrix:
    """
    Matriz A con A u = sg_divergence(u). Fuera de la diagonal es no negativa
    y cada columna suma cero.
    """
    rows, cols, vals = [], [], []
    for axis, dpsi in enumerate(face_psi_jumps(psi, grid)):
        lo, hi = _face_pairs(grid, axis)
        coef = d1 / grid.h[axis] ** 2
        b_up = coef * bernoulli(dpsi)
        b_down = coef * bernoulli(-dpsi)
        rows += [lo, lo, hi, hi]
        cols += [hi, lo, hi, lo]
        vals += [b_up, -b_down, -b_up, b_down]
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(grid.size, grid.size))
    return A.tocsr()
