"""
Capa escalar: raíces de R_delta(t) = -t + m(t+c)^p/delta, umbral delta0,
y la no linealidad transformada f_delta con su primitiva F_delta.

Todas las funciones son puras. f_delta, F_delta y su derivada aceptan
escalares o arreglos de numpy.
"""
import logging
import math
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq, root_scalar
from scipy.special import binom

from schemas.analysis_schema import DeltaAnalysis, RootPair
from schemas.params_schema import ModelParams
from utils.errors import InvalidParameterError, NonexistenceError, SolverError

logger = logging.getLogger("scalar_analysis")

ArrayLike = Union[float, np.ndarray]

ROOT_RTOL = 1e-12
THRESHOLD_RTOL = 1e-10
SERIES_CUTOFF = 1e-3


def _check_p(p: float):
    if p <= 1:
        raise InvalidParameterError(f"p = chi/d1 must exceed 1, got p={p}")


def delta_lower_bound(params: ModelParams) -> float:
    """delta0 = m p (p c/(p-1))^(p-1)"""
    p, c, m = params.p, params.c, params.m
    _check_p(p)
    return m * p * (p * c / (p - 1.0)) ** (p - 1.0)


def critical_point(params: ModelParams, delta: float) -> float:
    p, c, m = params.p, params.c, params.m
    _check_p(p)
    return (delta / (m * p)) ** (1.0 / (p - 1.0)) - c


def reaction(params: ModelParams, delta: float, t: ArrayLike) -> ArrayLike:
    """R_delta(t)"""
    return -t + params.m * (np.asarray(t) + params.c) ** params.p / delta


def _reaction_prime(params: ModelParams, delta: float, t: float) -> float:
    return -1.0 + params.m * params.p * (t + params.c) ** (params.p - 1.0) / delta


def _polished_root(params: ModelParams, delta: float, lo: float, hi: float) -> float:
    R = lambda t: float(reaction(params, delta, t))
    coarse = root_scalar(R, bracket=[lo, hi], method="bisect",
                         xtol=np.finfo(float).tiny, rtol=1e-8, maxiter=2000)
    guess = coarse.root
    try:
        fine = root_scalar(R, x0=guess, fprime=lambda t: _reaction_prime(params, delta, t),
                           method="newton", xtol=np.finfo(float).tiny, rtol=ROOT_RTOL, maxiter=50)
        root = fine.root if fine.converged and lo <= fine.root <= hi else guess
    except (RuntimeError, ZeroDivisionError, OverflowError):
        root = guess
    # Newton puede salir del intervalo cerca de raíces casi dobles
    if not (lo <= root <= hi):
        root = brentq(R, lo, hi, xtol=np.finfo(float).tiny, rtol=4 * np.finfo(float).eps)
    return root


def solve_roots(params: ModelParams, delta: float) -> Optional[RootPair]:
    """
    Raíces positivas de R_delta. Devuelve None si delta < delta0 y una raíz
    doble c/(p-1) cuando delta coincide con delta0.
    """
    if delta <= 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    delta0 = delta_lower_bound(params)
    if abs(delta - delta0) <= THRESHOLD_RTOL * delta0:
        t = params.c / (params.p - 1.0)
        return RootPair(t1=t, t2=t, double=True)
    if delta < delta0:
        return None

    t_star = critical_point(params, delta)
    t_upper = (delta / params.m) ** (1.0 / (params.p - 1.0))
    t1 = _polished_root(params, delta, 0.0, t_star)
    t2 = _polished_root(params, delta, t_star, t_upper)
    return RootPair(t1=t1, t2=t2)


def analyze_delta(params: ModelParams, delta: float) -> DeltaAnalysis:
    delta0 = delta_lower_bound(params)
    roots = solve_roots(params, delta)
    if roots is None:
        raise NonexistenceError(f"delta={delta} is below the existence threshold delta0={delta0}")

    p, c, m = params.p, params.c, params.m
    t1, t2 = roots.t1, roots.t2
    if roots.double:
        # el caso degenerado usa delta0 exacto para que c_delta sea 0
        delta = delta0
        c_delta = 0.0
        t_star = t1
    else:
        t_star = critical_point(params, delta)
        c_from_delta = 1.0 - (m * p / delta) * (t1 + c) ** (p - 1.0)
        c_delta = 1.0 - p * t1 / (t1 + c)
        if abs(c_from_delta - c_delta) > 1e-10:
            raise SolverError(f"c_delta cross-check failed at delta={delta}: "
                              f"{c_from_delta} vs {c_delta}")
    t_delta = (t1 + c) * delta ** (-1.0 / (p - 1.0))
    return DeltaAnalysis(m=m, p=p, c=c, delta=delta, delta0=delta0, t1=t1, t2=t2,
                         t_star=t_star, c_delta=c_delta, t_delta=t_delta)


def synthetic_analysis(m: float, p: float, c_delta: float, t_delta: float = 0.0) -> DeltaAnalysis:
    """
    Análisis sin delta físico, con c_delta y t_delta elegidos a mano.
    Con t_delta = 0 es el límite delta -> infinito: f(w) = m w^p.
    """
    _check_p(p)
    if not 0 < c_delta:
        raise InvalidParameterError(f"c_delta must be positive, got {c_delta}")
    return DeltaAnalysis(m=m, p=p, c=0.0, delta=math.inf, delta0=math.nan,
                         t1=0.0, t2=math.inf, t_star=math.inf,
                         c_delta=c_delta, t_delta=t_delta, synthetic=True)


def power_law_analysis(m: float, p: float, c_delta: float = 1.0) -> DeltaAnalysis:
    return synthetic_analysis(m, p, c_delta, 0.0)


def _series(x: np.ndarray, q: float, start: int, stop: int) -> np.ndarray:
    """sum_{k=start}^{stop} C(q,k) x^k"""
    out = np.zeros_like(x)
    for k in range(stop, start - 1, -1):
        out = out * x + binom(q, k)
    return out * x ** start


def _scalar_out(x, out):
    return float(out) if np.ndim(x) == 0 else out


def f_delta(analysis: DeltaAnalysis, w: ArrayLike) -> ArrayLike:
    """
    f(w) = m((w+t)^p - p t^(p-1) w - t^p), truncada a 0 para w < 0.
    Se evalúa como m t^p g(w/t) para no perder cifras cuando w << t.
    """
    m, p, t = analysis.m, analysis.p, analysis.t_delta
    wp = np.maximum(np.asarray(w, dtype=float), 0.0)
    if p == 2.0:
        out = m * wp * wp
    elif t == 0.0:
        out = m * wp ** p
    else:
        x = wp / t
        small = x < SERIES_CUTOFF
        g = np.where(small, _series(np.where(small, x, 0.0), p, 2, 7),
                     np.expm1(p * np.log1p(x)) - p * x)
        out = m * t ** p * g
    return _scalar_out(w, out)


def F_delta(analysis: DeltaAnalysis, w: ArrayLike) -> ArrayLike:
    """Primitiva de f_delta con F(0) = 0 (y F = 0 para w < 0)"""
    m, p, t = analysis.m, analysis.p, analysis.t_delta
    wp = np.maximum(np.asarray(w, dtype=float), 0.0)
    q = p + 1.0
    if p == 2.0:
        out = m * wp ** 3 / 3.0
    elif t == 0.0:
        out = m * wp ** q / q
    else:
        x = wp / t
        small = x < SERIES_CUTOFF
        direct = np.expm1(q * np.log1p(x)) - q * x - 0.5 * q * p * x * x
        G = np.where(small, _series(np.where(small, x, 0.0), q, 3, 8), direct)
        out = m * t ** q * G / q
    return _scalar_out(w, out)


def f_delta_prime(analysis: DeltaAnalysis, w: ArrayLike) -> ArrayLike:
    m, p, t = analysis.m, analysis.p, analysis.t_delta
    wp = np.maximum(np.asarray(w, dtype=float), 0.0)
    if p == 2.0:
        out = 2.0 * m * wp
    elif t == 0.0:
        out = m * p * wp ** (p - 1.0)
    else:
        out = m * p * t ** (p - 1.0) * np.expm1((p - 1.0) * np.log1p(wp / t))
    return _scalar_out(w, out)


def theta_bound(analysis: DeltaAnalysis, t_grid) -> float:
    """max sobre la muestra de F(t)/(f(t) t); debe quedar por debajo de 1/2"""
    t = np.asarray(t_grid, dtype=float)
    t = t[t > 0]
    if t.size == 0:
        raise InvalidParameterError("theta_bound needs at least one positive sample")
    ratio = F_delta(analysis, t) / (f_delta(analysis, t) * t)
    return float(np.max(ratio))


def growth_envelope_check(analysis: DeltaAnalysis, t_grid) -> Tuple[float, float]:
    """Testigo (a1, a2) de f(t) <= a1 + a2 t^p con a2 = 2m"""
    t = np.asarray(t_grid, dtype=float)
    t = t[t >= 0]
    a2 = 2.0 * analysis.m
    excess = f_delta(analysis, t) - a2 * t ** analysis.p
    a1 = float(max(0.0, np.max(excess))) if t.size else 0.0
    return a1, a2


def root_sensitivity(params: ModelParams, delta: float) -> Tuple[float, float]:
    """(dt1/ddelta, dt2/ddelta) por derivación implícita de R_delta(t) = 0"""
    roots = solve_roots(params, delta)
    if roots is None or roots.double:
        raise NonexistenceError(f"root sensitivity undefined at delta={delta}")
    p, c, m = params.p, params.c, params.m

    def slope(t):
        return t / (m * p * (t + c) ** (p - 1.0) - delta)

    return slope(roots.t1), slope(roots.t2)


def constant_level(analysis: DeltaAnalysis) -> float:
    """Solución constante positiva w de c_delta w = f_delta(w)"""
    if analysis.c_delta <= 0:
        raise InvalidParameterError("the constant level needs c_delta > 0")
    if not analysis.synthetic:
        return (analysis.t2 - analysis.t1) / analysis.scale
    m, p, c = analysis.m, analysis.p, analysis.c_delta
    if analysis.t_delta == 0.0:
        return (c / m) ** (1.0 / (p - 1.0))
    phi = lambda s: f_delta(analysis, s) / s - c
    scale = max((c / m) ** (1.0 / (p - 1.0)), analysis.t_delta)
    lo, hi = 1e-9 * scale, scale
    while phi(hi) < 0:
        hi *= 2.0
    return brentq(phi, lo, hi, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps)


def delta_for_first_root(params: ModelParams, target_t1: float) -> float:
    """
    delta con t1(delta) = target_t1. Sobre la rama inferior R_delta(t1) = 0
    se invierte en forma cerrada: delta = m (t1+c)^p / t1.
    """
    if target_t1 <= 0:
        raise InvalidParameterError(f"target t1 must be positive, got {target_t1}")
    if target_t1 >= params.c / (params.p - 1.0):
        raise NonexistenceError(f"t1={target_t1} is not on the lower branch (needs t1 < c/(p-1))")
    return params.m * (target_t1 + params.c) ** params.p / target_t1
