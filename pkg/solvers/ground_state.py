"""
Ground state radial en R^N por disparo:

    w'' + (N-1)/r w' - c_delta w + f_delta(w) = 0,  w'(0) = 0,  w -> 0.

El valor de disparo s = w(0) se acota por multisección vectorizada: cada
barrido integra varias trayectorias a la vez con RK4 de paso fijo y las
clasifica como "overshoot" (cruza cero, s demasiado grande) o "undershoot"
(w' > 0 antes de llegar a cero, s demasiado pequeño).
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import quad, simpson
from scipy.special import gamma

from schemas.analysis_schema import DeltaAnalysis, RadialProfile
from solvers.scalar_analysis import F_delta, constant_level, f_delta
from utils.errors import InvalidParameterError, ShootingFailureError, SolverError

logger = logging.getLogger("ground_state")

SHOOT_RTOL = 1e-13
TRUST_RTOL = 1e-4
SWEEP_POINTS = 15
MAX_SWEEPS = 60

OVERSHOOT = 1
UNDERSHOOT = -1


def sphere_area(N: int) -> float:
    """omega_{N-1} = 2 pi^{N/2} / Gamma(N/2); vale 2 en N = 1"""
    return 2.0 * math.pi ** (N / 2.0) / gamma(N / 2.0)


def _rhs(analysis: DeltaAnalysis, N: int, r: float, w: np.ndarray, v: np.ndarray):
    dv = analysis.c_delta * w - f_delta(analysis, w)
    if N > 1:
        dv = dv - (N - 1) / r * v
    return v, dv


def _rk4(analysis, N, r, h, w, v):
    k1w, k1v = _rhs(analysis, N, r, w, v)
    k2w, k2v = _rhs(analysis, N, r + 0.5 * h, w + 0.5 * h * k1w, v + 0.5 * h * k1v)
    k3w, k3v = _rhs(analysis, N, r + 0.5 * h, w + 0.5 * h * k2w, v + 0.5 * h * k2v)
    k4w, k4v = _rhs(analysis, N, r + h, w + h * k3w, v + h * k3v)
    w_new = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
    v_new = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return w_new, v_new


def _integrate(analysis: DeltaAnalysis, N: int, s_values, h: float, n_steps: int,
               keep_history: bool = False):
    """
    Integra las trayectorias de disparo de s_values.
    Devuelve (status, historia); status = +1 overshoot, -1 undershoot.
    Las trayectorias ya clasificadas quedan congeladas.
    """
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    c = analysis.c_delta
    k = math.sqrt(c)
    status = np.zeros(s.size, dtype=int)

    if N == 1:
        r = 0.0
        w = s.copy()
        v = np.zeros_like(s)
    else:
        # arranque en serie para evitar la singularidad de (N-1)/r
        r = h
        curv = (c * s - f_delta(analysis, s)) / N
        w = s + 0.5 * curv * h * h
        v = curv * h

    history = [(0.0, s.copy(), np.zeros_like(s))] if keep_history else None
    if keep_history and N > 1:
        history.append((r, w.copy(), v.copy()))

    step = 0 if N == 1 else 1
    while step < n_steps:
        active = status == 0
        if not np.any(active):
            break
        w_new, v_new = _rk4(analysis, N, r, h, w[active], v[active])
        w[active] = w_new
        v[active] = v_new
        r += h
        step += 1
        crossed = active & (w < 0)
        turned = active & ~crossed & (v > 0)
        status[crossed] = OVERSHOOT
        status[turned] = UNDERSHOOT
        if keep_history:
            history.append((r, w.copy(), v.copy()))

    pending = status == 0
    if np.any(pending):
        # a R_max queda una componente creciente B e^{kr}; su signo decide
        growth = v + (k + (N - 1) / (2.0 * max(r, h))) * w
        status[pending & (growth > 0)] = UNDERSHOOT
        status[pending & (growth <= 0)] = OVERSHOOT
    return status, history


def _bracket(analysis: DeltaAnalysis, N: int, h: float, n_steps: int) -> Tuple[float, float]:
    z = constant_level(analysis)
    lo = z * (1.0 + 1e-6)
    status, _ = _integrate(analysis, N, [lo], h, n_steps)
    if status[0] != UNDERSHOOT:
        raise ShootingFailureError(f"shooting from s={lo} just above the constant level did not undershoot")
    hi = 2.0 * z
    while True:
        status, _ = _integrate(analysis, N, [hi], h, n_steps)
        if status[0] == OVERSHOOT:
            return lo, hi
        lo = hi
        hi *= 2.0
        if hi > 1e3 * z:
            raise ShootingFailureError(f"no overshooting shot found below 1e3 times the scale {z}")


def _multisection(analysis, N, lo, hi, h, n_steps) -> Tuple[float, float]:
    for sweep in range(MAX_SWEEPS):
        if hi - lo <= SHOOT_RTOL * hi:
            break
        s = np.linspace(lo, hi, SWEEP_POINTS + 2)[1:-1]
        status, _ = _integrate(analysis, N, s, h, n_steps)
        over = np.flatnonzero(status == OVERSHOOT)
        if over.size == 0:
            lo = s[-1]
        else:
            j = over[0]
            hi = s[j]
            if j > 0:
                lo = s[j - 1]
        logger.debug(f"Barrido {sweep}: s en [{lo!r}, {hi!r}]")
    return lo, hi


def shoot_ground_state(analysis: DeltaAnalysis, N: int = 1, R_max: Optional[float] = None,
                       step_scale: float = 1.0) -> RadialProfile:
    c = analysis.c_delta
    if c <= 0:
        raise InvalidParameterError("the ground state needs c_delta > 0")
    if N < 1:
        raise InvalidParameterError(f"dimension must be >= 1, got {N}")
    k = math.sqrt(c)
    if R_max is None:
        R_max = 40.0 / k
    if R_max < 20.0 / k:
        raise InvalidParameterError(f"R_max={R_max} is below 20/sqrt(c_delta)={20.0 / k}")

    n_steps = int(math.ceil(R_max * k / (0.01 * step_scale)))
    h = R_max / n_steps

    lo, hi = _bracket(analysis, N, h, n_steps)
    lo, hi = _multisection(analysis, N, lo, hi, h, n_steps)
    s_mid = 0.5 * (lo + hi)
    logger.info(f"Ground state N={N}, c_delta={c:.6g}: w(0) = {s_mid!r}")

    _, history = _integrate(analysis, N, [lo, s_mid, hi], h, n_steps, keep_history=True)
    r_hist = np.array([rec[0] for rec in history])
    w_hist = np.array([rec[1] for rec in history])
    v_hist = np.array([rec[2] for rec in history])

    spread = np.abs(w_hist[:, 2] - w_hist[:, 0])
    w_mid = w_hist[:, 1]
    ok = (spread <= TRUST_RTOL * np.abs(w_mid)) & (w_mid > 0) & (v_hist[:, 1] <= 0)
    bad = np.flatnonzero(~ok)
    last = (bad[0] - 1) if bad.size else len(r_hist) - 1
    if last < 2:
        raise ShootingFailureError("the shooting trajectory could not be trusted beyond the origin")

    r_trusted = float(r_hist[last])
    r = np.arange(n_steps + 1) * h
    w = np.empty_like(r)
    dw = np.empty_like(r)
    w[: last + 1] = w_mid[: last + 1]
    dw[: last + 1] = v_hist[: last + 1, 1]
    amplitude = float(w_mid[last] * math.exp(k * r_trusted) * r_trusted ** ((N - 1) / 2.0))
    tail_r = r[last + 1:]
    if tail_r.size:
        w[last + 1:] = _tail(amplitude, k, N, tail_r)
        dw[last + 1:] = w[last + 1:] * (-k - (N - 1) / (2.0 * tail_r))

    profile = RadialProfile(dim=N, analysis=analysis, r_samples=r, w_samples=w, w0=float(w[0]),
                            r_trusted=r_trusted, tail_amplitude=amplitude, dw_samples=dw)
    return finalize_profile(profile)


def _tail(amplitude: float, k: float, N: int, r: np.ndarray) -> np.ndarray:
    return amplitude * np.exp(-k * r) * r ** ((1 - N) / 2.0)


def profile_from_samples(analysis: DeltaAnalysis, N: int, r: np.ndarray, w: np.ndarray,
                         dw: Optional[np.ndarray] = None) -> RadialProfile:
    """Perfil a partir de muestras dadas (todas confiables); la cola se empalma en el último radio"""
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    k = math.sqrt(analysis.c_delta)
    amplitude = float(w[-1] * math.exp(k * r[-1]) * r[-1] ** ((N - 1) / 2.0))
    if dw is None:
        dw = np.gradient(w, r, edge_order=2)
    profile = RadialProfile(dim=N, analysis=analysis, r_samples=r, w_samples=w, w0=float(w[0]),
                            r_trusted=float(r[-1]), tail_amplitude=amplitude,
                            dw_samples=np.asarray(dw, dtype=float))
    return profile


def finalize_profile(profile: RadialProfile) -> RadialProfile:
    C, mu = decay_rate_fit(profile)
    profile.decay_constant = C
    profile.mu = mu
    profile.mass = ground_state_mass(profile)
    profile.energy = ground_state_energy(profile)
    return profile


def decay_rate_fit(profile: RadialProfile) -> Tuple[float, float]:
    """
    Pendiente por mínimos cuadrados de log(w r^{(N-1)/2}) en la ventana de
    cola [max(1, 5/sqrt(c)), r_trusted]. C es el menor testigo de
    w <= C e^{-mu r} sobre las muestras con r > 1.
    """
    N = profile.dim
    k = math.sqrt(profile.analysis.c_delta)
    r, w = profile.r_samples, profile.w_samples
    window = (r >= max(1.0, 5.0 / k)) & (r <= profile.r_trusted) & (w > 1e-12 * profile.w0)
    if np.count_nonzero(window) < 20:
        raise SolverError("fewer than 20 tail samples available for the decay fit")
    rw = r[window]
    y = np.log(w[window] * rw ** ((N - 1) / 2.0))
    slope, _ = np.polyfit(rw, y, 1)
    mu = -float(slope)
    far = r > 1.0
    C = float(np.max(w[far] * np.exp(mu * r[far])))
    return C, mu


def _radial_integral(profile: RadialProfile, values: np.ndarray, tail_integrand) -> float:
    N = profile.dim
    r = profile.r_samples
    weight = sphere_area(N) * r ** (N - 1)
    inner = simpson(values * weight, x=r)
    outer, _ = quad(lambda s: tail_integrand(s) * sphere_area(N) * s ** (N - 1),
                    profile.r_max, np.inf, epsabs=1e-15, limit=200)
    return float(inner + outer)


def _tail_funcs(profile: RadialProfile):
    """
    Cola C e^{-mu r} r^{(1-N)/2} más allá de R_max. Usa la tasa mu ajustada
    por decay_rate_fit una vez finalizado el perfil y sqrt(c_delta) antes;
    la amplitud se empalma con la última muestra.
    """
    N = profile.dim
    k = profile.mu if profile.mu > 0 else math.sqrt(profile.analysis.c_delta)
    r_end = profile.r_max
    A = float(profile.w_samples[-1]) * math.exp(k * r_end) * r_end ** ((N - 1) / 2.0)
    w = lambda s: A * math.exp(-k * s) * s ** ((1 - N) / 2.0)
    dw = lambda s: w(s) * (-k - (N - 1) / (2.0 * s))
    return w, dw


def _dw(profile: RadialProfile) -> np.ndarray:
    dw = profile.dw_samples
    if dw is None:
        dw = np.gradient(profile.w_samples, profile.r_samples, edge_order=2)
    return dw


def ground_state_norm_sq(profile: RadialProfile) -> float:
    """int (|w'|^2 + c_delta w^2) sobre R^N"""
    c = profile.analysis.c_delta
    w, dw = profile.w_samples, _dw(profile)
    tw, tdw = _tail_funcs(profile)
    return _radial_integral(profile, dw * dw + c * w * w, lambda s: tdw(s) ** 2 + c * tw(s) ** 2)


def ground_state_nehari_product(profile: RadialProfile) -> float:
    """int f_delta(w) w sobre R^N"""
    a = profile.analysis
    w = profile.w_samples
    tw, _ = _tail_funcs(profile)
    return _radial_integral(profile, f_delta(a, w) * w, lambda s: f_delta(a, tw(s)) * tw(s))


def ground_state_energy(profile: RadialProfile) -> float:
    a = profile.analysis
    w = profile.w_samples
    tw, _ = _tail_funcs(profile)
    potential = _radial_integral(profile, F_delta(a, w), lambda s: F_delta(a, tw(s)))
    return 0.5 * ground_state_norm_sq(profile) - potential


def ground_state_mass(profile: RadialProfile) -> float:
    tw, _ = _tail_funcs(profile)
    return _radial_integral(profile, profile.w_samples, tw)
