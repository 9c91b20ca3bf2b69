"""
Diagnósticos de la estructura de picos sobre campos calculados: posición y
clase de frontera del pico, altura de plataforma, diámetro de conjuntos de
nivel superior, comparación con el ground state reescalado y seguimiento de
la migración hacia las esquinas.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from gridcontext.grid import ScalarField, boundary_class_of, cell_center, integrate_values
from schemas.analysis_schema import RadialProfile
from schemas.params_schema import ModelParams
from schemas.report_schema import MigrationTrack, SimState, SpikeLocation, SpikeReport
from utils.errors import EpsilonTooLargeError, InvalidParameterError, ResolutionError

logger = logging.getLogger("diagnostics")

REL_HEIGHT = 0.1
FAR_FIELD_RADII = 10.0
FAR_FIELD_MIN_FRACTION = 0.1
ETA_FRACTION = 0.1


def _strict_maxima(values: np.ndarray) -> np.ndarray:
    """Máscara de máximos locales estrictos sobre la vecindad de 4 (2 en 1D)"""
    padded = np.pad(values, 1, mode="constant", constant_values=-np.inf)
    if values.ndim == 1:
        center = padded[1:-1]
        return (center > padded[:-2]) & (center > padded[2:])
    center = padded[1:-1, 1:-1]
    return ((center > padded[:-2, 1:-1]) & (center > padded[2:, 1:-1])
            & (center > padded[1:-1, :-2]) & (center > padded[1:-1, 2:]))


def _anchor(f: ScalarField, index: Tuple[int, ...]) -> Tuple[float, ...]:
    """Proyecta el centro de la celda sobre las caras de frontera que toca"""
    grid = f.grid
    point = list(cell_center(grid, index))
    # orden físico (x, y) frente al orden del arreglo (j, i)
    phys = index if grid.dim == 1 else (index[1], index[0])
    counts = (grid.nx,) if grid.dim == 1 else (grid.nx, grid.ny)
    for axis, (k, n) in enumerate(zip(phys, counts)):
        if k == 0:
            point[axis] = 0.0
        elif k == n - 1:
            point[axis] = float(grid.domain.lengths[axis])
    return tuple(point)


def _location(f: ScalarField, index: Tuple[int, ...]) -> SpikeLocation:
    return SpikeLocation(point=cell_center(f.grid, index), index=index,
                         value=float(f.values[index]), boundary_class=boundary_class_of(f.grid, index))


def locate_spikes(f: ScalarField, rel_height: float = REL_HEIGHT) -> SpikeReport:
    """
    Máximos locales estrictos de f. Solo cuentan los que sobresalen al menos
    rel_height * (max - min) sobre el mínimo, para no contar rizos del fondo.
    Sin máximos estrictos (campo constante) se informa el máximo global.
    """
    values = f.values
    lo, hi = float(np.min(values)), float(np.max(values))
    mask = _strict_maxima(values) & (values >= lo + rel_height * (hi - lo))
    indices = [tuple(int(k) for k in idx) for idx in np.argwhere(mask)]
    if not indices:
        indices = [tuple(int(k) for k in np.unravel_index(int(np.argmax(values)), values.shape))]
    locations = sorted((_location(f, idx) for idx in indices), key=lambda s: (-s.value, s.index))
    primary = locations[0]
    return SpikeReport(locations=locations, primary=primary, boundary_class=primary.boundary_class,
                       anchor=_anchor(f, primary.index))


def platform_height(v: ScalarField, report: SpikeReport, eps: float) -> float:
    """Mediana espacial de v lejos del pico (distancia > 10 eps)"""
    if eps <= 0:
        raise InvalidParameterError(f"platform_height requires eps > 0, got {eps}")
    far = v.grid.distance_to(report.primary.point) > FAR_FIELD_RADII * eps
    fraction = float(np.mean(far))
    if fraction < FAR_FIELD_MIN_FRACTION:
        raise EpsilonTooLargeError(f"eps={eps} too large for platform estimate: only {fraction:.1%} "
                                   f"of the cells lie farther than {FAR_FIELD_RADII:g} eps from the spike")
    return float(np.median(v.values[far]))


def superlevel_diameter(w: ScalarField, eta: Optional[float] = None) -> Tuple[float, bool]:
    """
    Diámetro del conjunto de centros {w > eta}. Devuelve (diámetro, vacío).
    eta por defecto: w_max / 10.
    """
    if eta is None:
        eta = ETA_FRACTION * w.sup
    pts = w.grid.points()[w.flat > eta]
    if len(pts) == 0:
        return 0.0, True
    if len(pts) == 1:
        return 0.0, False
    if w.grid.dim == 1:
        return float(pts[:, 0].max() - pts[:, 0].min()), False
    try:
        hull = ConvexHull(pts)
        return float(np.max(pdist(pts[hull.vertices]))), False
    except QhullError:
        # puntos alineados: los extremos lexicográficos dan el diámetro
        order = np.lexsort(pts.T[::-1])
        return float(np.linalg.norm(pts[order[-1]] - pts[order[0]])), False


def profile_match(w: ScalarField, profile: RadialProfile, P, eps: float) -> float:
    """sup |w(x) - w_delta(|x - P| / eps)| / w_delta(0)"""
    if eps <= 0:
        raise InvalidParameterError(f"profile_match requires eps > 0, got {eps}")
    r = w.grid.distance_to(P) / eps
    model = profile.evaluate(r.ravel()).reshape(w.grid.shape)
    return float(np.max(np.abs(w.values - model)) / profile.w0)


def _normal_line(w: ScalarField, report: SpikeReport) -> np.ndarray:
    """Índices planos de las celdas sobre la normal interior que pasa por el pico"""
    grid = w.grid
    idx = report.primary.index
    if grid.dim == 1:
        (i,) = idx
        cells = np.arange(i, grid.nx) if i < grid.nx // 2 else np.arange(i, -1, -1)
        return cells
    j, i = idx
    di = 1 if i < grid.nx // 2 else -1
    dj = 1 if j < grid.ny // 2 else -1
    if report.boundary_class == "corner":
        n = min(grid.nx, grid.ny)
        steps = np.arange(n)
        jj, ii = j + dj * steps, i + di * steps
    elif i in (0, grid.nx - 1):
        ii = np.arange(i, grid.nx) if di > 0 else np.arange(i, -1, -1)
        jj = np.full_like(ii, j)
    else:
        # borde horizontal o pico interior: se recorre en y
        jj = np.arange(j, grid.ny) if dj > 0 else np.arange(j, -1, -1)
        ii = np.full_like(jj, i)
    keep = (ii >= 0) & (ii < grid.nx) & (jj >= 0) & (jj < grid.ny)
    return np.ravel_multi_index((jj[keep], ii[keep]), grid.shape)


def normal_decay_fit(w: ScalarField, report: SpikeReport, eps: float,
                     window: Tuple[float, float] = (2.0, 8.0)) -> float:
    """
    Tasa de decaimiento mu (en unidades de eps) de w a lo largo de la normal
    interior: ajuste lineal de log(w (r/eps)^{(N-1)/2}) frente a r/eps.
    """
    cells = _normal_line(w, report)
    pts = w.grid.points()[cells]
    s = np.linalg.norm(pts - np.asarray(report.anchor), axis=1) / eps
    vals = w.flat[cells]
    floor = 1e-12 * w.sup
    sel = (s >= window[0]) & (s <= window[1]) & (vals > floor)
    if np.count_nonzero(sel) < 3:
        raise ResolutionError(f"decay fit needs at least 3 cells with r/eps in {window}; "
                              f"found {np.count_nonzero(sel)}")
    N = w.grid.dim
    y = np.log(vals[sel] * s[sel] ** ((N - 1) / 2.0))
    slope, _ = np.polyfit(s[sel], y, 1)
    return float(-slope)


def mean_bound_holds(v: ScalarField, params: ModelParams) -> bool:
    """max v > beta M / (alpha |Omega|), alcanzado en una celda de frontera"""
    mean = params.beta * params.M / (params.alpha * v.grid.volume)
    index = tuple(int(k) for k in np.unravel_index(int(np.argmax(v.values)), v.grid.shape))
    on_boundary = boundary_class_of(v.grid, index) != "interior"
    mean_check = integrate_values(v.values, v.grid) / v.grid.volume
    if not math.isclose(mean_check, mean, rel_tol=1e-6):
        logger.debug(f"La media de v ({mean_check:.6g}) no coincide con beta M/(alpha |Omega|) = {mean:.6g}")
    return bool(float(np.max(v.values)) > mean and on_boundary)


def _fields(snapshots: Sequence[Union[ScalarField, SimState]]) -> Tuple[List[float], List[ScalarField]]:
    times, fields = [], []
    for k, snap in enumerate(snapshots):
        if isinstance(snap, SimState):
            times.append(snap.t)
            fields.append(snap.u)
        else:
            times.append(float(k))
            fields.append(snap)
    return times, fields


def corner_migration_track(snapshots: Sequence[Union[ScalarField, SimState]]) -> MigrationTrack:
    if len(snapshots) < 2:
        raise InvalidParameterError("corner_migration_track needs at least 2 snapshots")
    times, fields = _fields(snapshots)
    grid = fields[0].grid
    key = (grid.shape, grid.domain.lengths)
    if any((f.grid.shape, f.grid.domain.lengths) != key for f in fields[1:]):
        raise InvalidParameterError("all snapshots must share the same grid")

    points = [locate_spikes(f).primary.point for f in fields]
    corners = grid.domain.corners
    final = np.asarray(points[-1])
    target = corners[int(np.argmin(np.linalg.norm(corners - final, axis=1)))]
    distances = [float(np.linalg.norm(np.asarray(p) - target)) for p in points]

    transient_end = len(distances) - 1
    while transient_end > 0 and distances[transient_end - 1] >= distances[transient_end]:
        transient_end -= 1
    logger.info(f"Migración hacia {tuple(target)}: distancia {distances[0]:.4g} -> {distances[-1]:.4g}, "
                f"monótona desde el snapshot {transient_end}")
    return MigrationTrack(times=times, points=points, target_corner=tuple(float(x) for x in target),
                          distances=distances, transient_end=transient_end)


def spike_count_series(snapshots: Sequence[Union[ScalarField, SimState]],
                       rel_height: float = REL_HEIGHT) -> List[Tuple[float, int]]:
    times, fields = _fields(snapshots)
    return [(t, locate_spikes(f, rel_height).count) for t, f in zip(times, fields)]


def spike_report_entries(report: SpikeReport, prefix: str = "spike") -> Dict[str, object]:
    """Bloque key=value para anexar al manifiesto de una ejecución"""
    entries: Dict[str, object] = {
        f"{prefix}_count": report.count,
        f"{prefix}_primary": report.primary.point,
        f"{prefix}_primary_value": report.primary.value,
        f"{prefix}_boundary_class": report.boundary_class,
        f"{prefix}_anchor": report.anchor,
        f"{prefix}_locations": ";".join(",".join(repr(x) for x in loc.point) for loc in report.locations),
    }
    for key in ("platform", "superlevel_diameter", "decay_mu", "profile_error", "eta"):
        value = getattr(report, key)
        if value is not None:
            entries[f"{prefix}_{key}"] = value
    return entries


def full_report(w: ScalarField, eps: float, v: Optional[ScalarField] = None,
                profile: Optional[RadialProfile] = None, eta: Optional[float] = None) -> SpikeReport:
    """SpikeReport completo de un estado estacionario: pico, plataforma, diámetro, decaimiento y perfil"""
    report = locate_spikes(w)
    eta = ETA_FRACTION * w.sup if eta is None else eta
    diameter, empty = superlevel_diameter(w, eta)
    if empty:
        logger.warning(f"Conjunto de nivel {{w > {eta:.4g}}} vacío")
    updates = {"eta": eta, "superlevel_diameter": diameter}
    if v is not None:
        try:
            updates["platform"] = platform_height(v, report, eps)
        except EpsilonTooLargeError as exc:
            logger.warning(exc.detail)
    try:
        updates["decay_mu"] = normal_decay_fit(w, report, eps)
    except ResolutionError as exc:
        logger.warning(exc.detail)
    if profile is not None:
        updates["profile_error"] = profile_match(w, profile, report.anchor, eps)
    return report.model_copy(update=updates)
