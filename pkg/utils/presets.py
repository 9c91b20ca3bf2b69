"""
Experimentos predefinidos (fig1..fig5) sobre el cuadrado unitario con malla
128 x 128. Todos tienen masa inicial int u0 = 3.
"""
import logging
from typing import Dict, List, Optional, Tuple

from schemas.config_schema import CosineTerm, GridSpec, InitialDataSpec, RunConfig, SchemeConfig
from schemas.params_schema import ModelParams
from utils.errors import ConfigValidationError

logger = logging.getLogger("presets")

Term = Tuple[float, float, float, float, float]

_BASE = {"d1": 1.0, "d2": 0.01, "chi": 3.0, "alpha": 1.0, "beta": 1.0}

_U_FIG1: List[Term] = [(-1.0, 1, 1, 0.0, 0.0)]
_V_FIG1: List[Term] = [(1.0, 1, 1, 0.25, 0.25), (1.0, 1, 1, 0.5, 0.5)]
_U_FIG4: List[Term] = [(-1.0, 1, 1, 0.0, 0.0), (-1.0, 1, 1, 1.0, 1.0)]

PRESETS: Dict[str, dict] = {
    "fig1": {
        "params": {**_BASE, "c": 0.1},
        "u": _U_FIG1, "v": _V_FIG1,
        "t_end": 1000.0, "dt_max": 0.05,
        "snapshots": [0.0, 10.0, 50.0, 100.0, 300.0, 1000.0],
        "expect": "single boundary spike at the corner (0, 0)",
    },
    "fig2": {
        "params": {**_BASE, "c": 5.0},
        "u": _U_FIG1, "v": _V_FIG1,
        "t_end": 500.0, "dt_max": 0.05,
        "snapshots": [0.0, 10.0, 50.0, 100.0, 500.0],
        "expect": "single boundary spike at (0, 0) on a low platform",
    },
    "fig3": {
        "params": {**_BASE, "c": 10.0},
        "u": [(1.0, 2, 2, 0.0, 0.0)], "v": [(-1.0, 2, 2, 0.0, 0.0)],
        "t_end": 50.0, "dt_max": 0.05,
        "snapshots": [0.0, 1.0, 5.0, 20.0, 50.0],
        "expect": "convergence to the constant state (3, 3)",
    },
    "fig4a": {
        "params": {**_BASE, "chi": 5.0, "c": 1.0},
        "u": _U_FIG4, "v": [(1.0, 1, 1, 0.5, 0.5)],
        "t_end": 500.0, "dt_max": 0.05,
        "snapshots": [0.0, 10.0, 50.0, 100.0, 500.0],
        "expect": "single interior spike at (1/2, 1/2)",
    },
    "fig4b": {
        "params": {**_BASE, "chi": 5.0, "c": 1.0},
        "u": _U_FIG4, "v": [(1.0, 1, 1, 0.0, 0.0), (1.0, 1, 1, 1.0, 1.0)],
        "t_end": 500.0, "dt_max": 0.05,
        "snapshots": [0.0, 10.0, 50.0, 100.0, 500.0],
        "expect": "double boundary spike at (0, 0) and (1, 1)",
    },
    "fig5": {
        "params": {**_BASE, "d2": 0.001, "c": 1.0},
        "u": [(0.1, 1, 1, 0.0, 0.0)], "v": [(1.0, 2, 2, 0.0, 0.0)],
        "t_end": 1000.0, "dt_max": 0.05,
        "snapshots": [0.0, 50.0, 100.0, 200.0, 300.0, 500.0, 1000.0],
        "expect": "five metastable spikes (corners and center) collapsing to one at the center",
    },
}

# fig4 designa el par de la izquierda
ALIASES = {"fig4": "fig4a"}


def _initial(terms: List[Term]) -> InitialDataSpec:
    return InitialDataSpec(constant=3.0, terms=[CosineTerm(amp=a, kx=kx, ky=ky, sx=sx, sy=sy)
                                               for a, kx, ky, sx, sy in terms])


def preset_names() -> List[str]:
    return sorted(PRESETS)


def preset_config(name: str, out: Optional[str] = None, nx: int = 128,
                  t_end: Optional[float] = None) -> RunConfig:
    """RunConfig de un experimento predefinido; nx y t_end permiten versiones reducidas"""
    from utils.config_parser import initial_mass

    key = ALIASES.get(name, name)
    if key not in PRESETS:
        raise ConfigValidationError(f"unknown preset '{name}'; expected one of {', '.join(preset_names())}")
    spec = PRESETS[key]
    grid = GridSpec(dim=2, nx=nx, ny=nx)
    u0 = _initial(spec["u"])
    horizon = spec["t_end"] if t_end is None else t_end
    params = ModelParams(**spec["params"], M=initial_mass(u0, grid), dim=2, volume=grid.volume)
    scheme = SchemeConfig(dt_max=spec["dt_max"], t_end=horizon,
                          snapshot_times=[t for t in spec["snapshots"] if t < horizon] + [horizon])
    logger.info(f"Preset {key}: c={params.c}, chi={params.chi}, d2={params.d2}, M={params.M!r}, malla {nx}x{nx}")
    return RunConfig(mode="reproduce", preset=key, params=params, grid=grid, scheme=scheme,
                     initial_u=u0, initial_v=_initial(spec["v"]), out=out)


def preset_expectation(name: str) -> str:
    return PRESETS[ALIASES.get(name, name)]["expect"]
