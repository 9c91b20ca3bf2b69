"""
Soluciones de menor energía del problema a delta fijo

    eps^2 Lap w - c_delta w + f_delta(w) = 0  en Omega,  dw/dn = 0,

con la energía discreta J(w) = 1/2 ||w||_eps^2 - int F_delta(w). El
residuo discreto es exactamente -grad J / vol_celda, porque el laplaciano
y la cuadratura en caras cumplen suma por partes.
"""
import logging
import math
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse.linalg import minres, spsolve

from gridcontext.grid import (Grid, ScalarField, cell_center, h1_eps_norm_sq,
                              integrate_values, laplacian_values)
from schemas.analysis_schema import DeltaAnalysis, RadialProfile
from schemas.report_schema import CandidateRanking, EnergyReport, RankedCandidate, SpikeSeed
from solvers.ground_state import shoot_ground_state
from solvers.scalar_analysis import F_delta, constant_level, f_delta, f_delta_prime, theta_bound
from utils.errors import InvalidParameterError, NonconvergenceError, ResolutionError
from utils.settings import KRYLOV_RTOL, NEWTON_MAX_ITER

logger = logging.getLogger("least_energy")

RESIDUAL_RTOL = 1e-10
STAGNATION_LIMIT = 20
CONSTANT_RTOL = 1e-8
TIE_RTOL = 1e-9
CONE_CELLS_PER_EPS = 8

PROFILE_CACHE_SIZE = 32
SPIKE_ENERGY_FACTOR = 1.0


@lru_cache(maxsize=PROFILE_CACHE_SIZE)
def ground_profile(analysis: DeltaAnalysis, N: int) -> RadialProfile:
    """Ground state de analysis en dimensión N, compartido entre llamadas: no mutarlo"""
    return shoot_ground_state(analysis, N)


def spike_energy_scale(eps: float, analysis: DeltaAnalysis, N: int) -> float:
    """Escala SPIKE_ENERGY_FACTOR * I_delta * eps^N de la energía de un pico de frontera"""
    return SPIKE_ENERGY_FACTOR * ground_profile(analysis, N).energy * eps ** N


def is_constant_values(values: np.ndarray) -> bool:
    sup = float(np.max(values))
    return (sup - float(np.min(values))) < CONSTANT_RTOL * abs(sup)


def residual_values(values: np.ndarray, grid: Grid, eps: float, analysis: DeltaAnalysis) -> np.ndarray:
    return eps * eps * laplacian_values(values, grid) - analysis.c_delta * values + f_delta(analysis, values)


def energy_value(values: np.ndarray, grid: Grid, eps: float, analysis: DeltaAnalysis) -> float:
    norm_sq = h1_eps_norm_sq(values, grid, eps, analysis.c_delta)
    return 0.5 * norm_sq - integrate_values(F_delta(analysis, values), grid)


def energy_gradient(w: ScalarField, eps: float, analysis: DeltaAnalysis) -> np.ndarray:
    """Gradiente de J respecto de los valores de celda"""
    return -residual_values(w.values, w.grid, eps, analysis) * w.grid.cell_volume


def energy(w: ScalarField, eps: float, analysis: DeltaAnalysis) -> EnergyReport:
    grid = w.grid
    norm_sq = h1_eps_norm_sq(w.values, grid, eps, analysis.c_delta)
    value = 0.5 * norm_sq - integrate_values(F_delta(analysis, w.values), grid)
    nehari = integrate_values(f_delta(analysis, w.values) * w.values, grid)
    gap = abs(norm_sq - nehari) / norm_sq if norm_sq > 0 else 0.0
    return EnergyReport(value=value, norm_sq=norm_sq, residual_identity_gap=gap,
                        is_constant=is_constant_values(w.values))


def residual_identity_check(w: ScalarField, eps: float, analysis: DeltaAnalysis) -> float:
    """|‖w‖² - int f(w) w| / ‖w‖²; se anula sobre soluciones"""
    return energy(w, eps, analysis).residual_identity_gap


def nehari_scale(w: ScalarField, eps: float, analysis: DeltaAnalysis) -> float:
    """
    Único t > 0 que maximiza J(t w): raíz de g(t) = t ||w||^2 - int f(t w) w.
    """
    values = w.values
    if not np.any(values > 0):
        raise InvalidParameterError("nehari_scale requires a field with positive values")
    grid = w.grid
    norm_sq = h1_eps_norm_sq(values, grid, eps, analysis.c_delta)

    def g(t):
        return t * norm_sq - integrate_values(f_delta(analysis, t * values) * values, grid)

    def dg(t):
        return norm_sq - integrate_values(f_delta_prime(analysis, t * values) * values * values, grid)

    lo, hi = 1.0, 1.0
    while g(hi) > 0:
        hi *= 2.0
    while g(lo) < 0:
        lo *= 0.5
    t = brentq(g, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps) if lo < hi else lo
    for _ in range(5):
        if abs(g(t)) <= 1e-10 * norm_sq:
            break
        t -= g(t) / dg(t)
    return float(t)


def transplant_spike(grid: Grid, eps: float, profile: RadialProfile, point=None) -> np.ndarray:
    """w(x) = w_delta(|x - P| / eps); por defecto P es la esquina del origen"""
    if point is None:
        point = (0.0,) * grid.dim
    r = grid.distance_to(point) / eps
    return profile.evaluate(r.ravel()).reshape(grid.shape)


def _initial_values(eps: float, analysis: DeltaAnalysis, grid: Grid,
                    init: Union[SpikeSeed, ScalarField, None]) -> np.ndarray:
    if isinstance(init, ScalarField):
        return init.values.astype(float).copy()
    seed = init or SpikeSeed()
    if seed.kind == "constant":
        level = constant_level(analysis)
        coords = grid.mesh()
        bump = np.ones(grid.shape)
        for k, x in enumerate(coords):
            bump = bump * np.cos(math.pi * x / grid.domain.lengths[k])
        return level * (1.0 + seed.perturbation * bump)
    profile = ground_profile(analysis, grid.dim)
    return transplant_spike(grid, eps, profile, seed.point)


def _solve_linear(jac: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    n = rhs.size
    sol, info = minres(jac, rhs, rtol=KRYLOV_RTOL, maxiter=10 * n)
    if info != 0 or not np.all(np.isfinite(sol)):
        logger.warning(f"MINRES no convergió (info={info}); se usa el solver directo")
        sol = spsolve(jac.tocsc(), rhs)
    return sol


def solve_local(eps: float, analysis: DeltaAnalysis, grid: Grid,
                init: Union[SpikeSeed, ScalarField, None] = None,
                max_iter: Optional[int] = None) -> ScalarField:
    """
    Newton amortiguado para el problema a delta fijo. La búsqueda lineal
    reduce a la mitad el paso hasta que baja la norma 2 del residuo.
    """
    if eps <= 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    if analysis.c_delta <= 0:
        raise InvalidParameterError("solve_local is undefined at delta = delta0 (c_delta = 0)")
    max_iter = max_iter or NEWTON_MAX_ITER

    c = analysis.c_delta
    shape = grid.shape
    lap = (eps * eps) * grid.laplacian_matrix
    w = _initial_values(eps, analysis, grid, init).ravel()
    scale0 = float(np.max(np.abs(w)))

    def residual(x):
        return residual_values(x.reshape(shape), grid, eps, analysis).ravel()

    R = residual(w)
    res_norm = float(np.linalg.norm(R))
    stagnant = 0
    for it in range(max_iter):
        sup_w = float(np.max(np.abs(w)))
        if sup_w < 1e-12 * max(scale0, 1.0):
            raise NonconvergenceError("Newton iterate collapsed to the trivial solution",
                                      last_iterate=w.reshape(shape))
        if float(np.max(np.abs(R))) <= RESIDUAL_RTOL * c * sup_w:
            logger.info(f"Newton convergió en {it} iteraciones (eps={eps:.4g}, c_delta={c:.6g})")
            return ScalarField(grid=grid, values=w.reshape(shape), name="w")

        jac = (lap + sp.diags(f_delta_prime(analysis, w) - c)).tocsr()
        step = _solve_linear(jac, -R)

        lam = 1.0
        best = None
        while lam >= 1.0 / 1024:
            trial = w + lam * step
            R_trial = residual(trial)
            n_trial = float(np.linalg.norm(R_trial))
            if best is None or n_trial < best[2]:
                best = (trial, R_trial, n_trial)
            if n_trial < (1.0 - 1e-4 * lam) * res_norm:
                break
            lam *= 0.5
        trial, R_trial, n_trial = best
        if n_trial < res_norm:
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= STAGNATION_LIMIT:
                raise NonconvergenceError(
                    f"Newton stagnated for {STAGNATION_LIMIT} damped steps at |R|={res_norm:.3e}",
                    last_iterate=w.reshape(shape))
        w, R, res_norm = trial, R_trial, n_trial
        logger.debug(f"Newton it={it} lambda={lam:.4g} |R|_2={res_norm:.3e}")

    raise NonconvergenceError(f"Newton did not converge in {max_iter} iterations",
                              last_iterate=w.reshape(shape))


def spike_location(w: ScalarField) -> Tuple[float, ...]:
    index = np.unravel_index(int(np.argmax(w.values)), w.grid.shape)
    return cell_center(w.grid, tuple(int(i) for i in index))


def rank_candidates(candidates: Sequence[ScalarField], eps: float,
                    analysis: DeltaAnalysis) -> CandidateRanking:
    if not candidates:
        raise InvalidParameterError("least-energy selection needs at least one candidate")
    ranked = [RankedCandidate(field=w, report=energy(w, eps, analysis), location=spike_location(w))
              for w in candidates]
    best = min(rc.report.value for rc in ranked)
    tol = TIE_RTOL * max(abs(best), 1e-300)

    # empates relativos se deciden por la posición del pico
    def order(rc):
        if rc.report.value - best <= tol:
            return (0, rc.location, rc.report.value)
        return (1, (), rc.report.value)

    ranked.sort(key=order)

    # sólo cuenta un pico cuya energía está en la escala eps^N
    inconsistent = False
    spikes = [rc for rc in ranked if not rc.report.is_constant]
    if ranked[0].report.is_constant and spikes:
        scale = spike_energy_scale(eps, analysis, ranked[0].field.grid.dim)
        inconsistent = any(rc.report.value <= scale for rc in spikes)
    if inconsistent:
        logger.warning(f"La constante tiene menor energía que los picos a eps={eps}")
    return CandidateRanking(ranked=ranked, inconsistent=inconsistent)


def least_energy_select(candidates: Sequence[ScalarField], eps: float,
                        analysis: DeltaAnalysis) -> ScalarField:
    return rank_candidates(candidates, eps, analysis).selected.field


def cone_function(grid: Grid, eps: float, point=None) -> np.ndarray:
    """e(x) = eps^{-N} (1 - |x - P|/eps)_+"""
    if point is None:
        point = (0.0,) * grid.dim
    r = grid.distance_to(point)
    return eps ** (-grid.dim) * np.maximum(1.0 - r / eps, 0.0)


def cone_test_energy(eps: float, analysis: DeltaAnalysis, grid: Grid, point=None) -> float:
    """sup_{t >= 0} J(t e) para el cono e centrado en la esquina"""
    if eps / grid.h_min < CONE_CELLS_PER_EPS:
        raise ResolutionError(f"cone of radius {eps} needs at least {CONE_CELLS_PER_EPS} cells per radius; "
                              f"h={grid.h_min}")
    e = cone_function(grid, eps, point)
    field = ScalarField(grid=grid, values=e, name="cone")
    t_guess = nehari_scale(field, eps, analysis)

    phi = lambda t: energy_value(t * e, grid, eps, analysis)
    res = minimize_scalar(lambda t: -phi(t), bounds=(0.0, 2.0 * t_guess), method="bounded",
                          options={"xatol": 1e-10 * t_guess})
    t = float(res.x)
    norm_sq = h1_eps_norm_sq(e, grid, eps, analysis.c_delta)
    # pulido de Newton sobre dJ/dt
    for _ in range(5):
        g = t * norm_sq - integrate_values(f_delta(analysis, t * e) * e, grid)
        dg = norm_sq - integrate_values(f_delta_prime(analysis, t * e) * e * e, grid)
        if dg >= 0 or abs(g) <= 1e-12 * norm_sq * max(t, 1.0):
            break
        t -= g / dg
    sup = phi(t)
    logger.info(f"Cono eps={eps:.4g}: t*={t:.6g}, sup J = {sup:.6e}")
    return float(sup)


def constant_energy_bound(analysis: DeltaAnalysis, grid: Grid) -> float:
    """(1/2 - theta) c_delta wbar^2 |Omega|: cota inferior de la energía de la rama constante"""
    wbar = constant_level(analysis)
    theta = theta_bound(analysis, np.logspace(-3, 3, 200) * max(wbar, 1e-12))
    return (0.5 - theta) * analysis.c_delta * wbar * wbar * grid.volume


def corner_candidates(eps: float, analysis: DeltaAnalysis, grid: Grid,
                      include_constant: bool = True) -> List[ScalarField]:
    """Un pico por esquina más la solución constante"""
    out = []
    for corner in grid.domain.corners:
        try:
            out.append(solve_local(eps, analysis, grid, SpikeSeed(point=tuple(corner))))
        except NonconvergenceError as exc:
            logger.warning(f"Candidato en la esquina {tuple(corner)} descartado: {exc.detail}")
    if include_constant:
        out.append(ScalarField.constant(grid, constant_level(analysis), name="w"))
    return out
