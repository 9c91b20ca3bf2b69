"""
Salida de imágenes PPM (P6) para campos 2D: un píxel por celda, mapa de
colores fijo de 256 entradas y normalización min-max por imagen. Los límites
de la normalización se guardan en un archivo .txt al lado de la imagen.
"""
import logging
import os
from typing import Tuple

import numpy as np

from gridcontext.grid import ScalarField
from utils.errors import NonfiniteStateError

logger = logging.getLogger("image_utils")

# anclas del mapa tipo viridis (RGB)
_ANCHORS = np.array([
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
], dtype=float)


def _build_colormap() -> np.ndarray:
    pos = np.linspace(0.0, 1.0, len(_ANCHORS))
    x = np.linspace(0.0, 1.0, 256)
    table = np.column_stack([np.interp(x, pos, _ANCHORS[:, k]) for k in range(3)])
    return np.rint(table).astype(np.uint8)


COLORMAP = _build_colormap()


def to_indices(values: np.ndarray) -> Tuple[np.ndarray, float, float]:
    """Índices 0..255 de la normalización min-max; un campo constante va al índice 0"""
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi > lo:
        scaled = (values - lo) / (hi - lo)
    else:
        scaled = np.zeros_like(values)
    idx = np.clip(np.floor(scaled * 255.0 + 0.5), 0, 255).astype(np.uint8)
    return idx, lo, hi


def ppm_bytes(values: np.ndarray) -> Tuple[bytes, float, float]:
    """Imagen P6 de un arreglo (ny, nx) o (nx,); la fila y = 0 queda abajo"""
    arr = np.atleast_2d(values)
    idx, lo, hi = to_indices(arr)
    rgb = COLORMAP[idx[::-1]]
    height, width = arr.shape
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + rgb.tobytes(), lo, hi


def emit_image(f: ScalarField, path: str) -> str:
    if not np.all(np.isfinite(f.values)):
        raise NonfiniteStateError(f"field '{f.name}' has non-finite values; image not written")
    data, lo, hi = ppm_bytes(f.values)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)
    sidecar = os.path.splitext(path)[0] + ".txt"
    with open(sidecar, "w", encoding="utf-8") as fh:
        fh.write(f"name={f.name}\nmin={lo!r}\nmax={hi!r}\n")
    logger.debug(f"Imagen {path} escrita (min={lo:.6g}, max={hi:.6g})")
    return path
