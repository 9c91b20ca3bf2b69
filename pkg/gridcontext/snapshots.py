"""
Lectura y escritura de snapshots CSV.

Formato: una línea de cabecera
    # nx=<int> ny=<int> Lx=<float> Ly=<float> t=<float> name=<str>
seguida de un valor por línea (row-major, 17 dígitos significativos).
En 1D se escribe ny=0 y Ly=0.
"""
import logging
import os
from typing import Dict, Iterable, Tuple

import numpy as np

from gridcontext.grid import Grid, ScalarField
from utils.errors import ConfigParseError

logger = logging.getLogger("snapshots")

FLOAT_FMT = "%.17g"


def field_header(grid: Grid, t: float, name: str) -> str:
    ny = grid.ny if grid.dim == 2 else 0
    Lx = grid.domain.lengths[0]
    Ly = grid.domain.lengths[1] if grid.dim == 2 else 0.0
    return f"nx={grid.nx} ny={ny} Lx={Lx!r} Ly={Ly!r} t={float(t)!r} name={name}"


def parse_header(line: str) -> Dict[str, str]:
    tokens = line.lstrip("#").split()
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ConfigParseError(f"malformed snapshot header token '{tok}'", line=1)
        key, value = tok.split("=", 1)
        out[key] = value
    return out


def write_field_csv(f: ScalarField, path: str, t: float = 0.0, name: str = None) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    header = field_header(f.grid, t, name or f.name)
    np.savetxt(path, f.flat, fmt=FLOAT_FMT, header=header, comments="# ")
    logger.debug(f"Snapshot escrito en {path}")
    return path


def read_field_csv(path: str) -> Tuple[ScalarField, float]:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
    meta = parse_header(first)
    nx, ny = int(meta["nx"]), int(meta["ny"])
    if ny == 0:
        grid = Grid.interval(nx, float(meta["Lx"]))
    else:
        grid = Grid.rectangle(nx, ny, float(meta["Lx"]), float(meta["Ly"]))
    values = np.loadtxt(path, comments="#", ndmin=1)
    field = ScalarField(grid=grid, values=values.reshape(grid.shape), name=meta.get("name", "f"))
    return field, float(meta["t"])


def write_columns_csv(path: str, columns: Iterable[np.ndarray], header: str) -> str:
    """CSV de varias columnas (perfiles radiales, trazas de masa) con la misma convención de cabecera"""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=header, comments="# ")
    return path


def write_manifest(path: str, entries: Dict[str, object]) -> str:
    """Manifiesto de texto plano key=value, en el orden de inserción"""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={format_value(value)}\n")
    return path


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def read_manifest(path: str) -> Dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, value = line.split("=", 1)
            out[key] = value
    return out
