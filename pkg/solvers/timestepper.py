"""
Integrador en el tiempo del sistema de Keller-Segel con sensibilidad
ln(v + c):

    u_t = div(d1 grad u - chi u grad ln(v + c))
    v_t = d2 Lap v - alpha v + beta u

con flujo nulo en la frontera. Cada paso:
  * v semi-implícito: difusión y decaimiento implícitos, beta u explícito (CG).
  * u linealmente implícito con el flujo de Scharfetter-Gummel congelado en
    v^n. La matriz I - dt A es una M-matriz con columnas que suman uno, así que
    conserva la masa y la positividad de u.
"""
import logging
import math
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, spsolve

from gridcontext.fluxes import face_psi_jumps, sg_operator
from gridcontext.grid import Grid, ScalarField, integrate_values
from schemas.config_schema import InitialDataSpec, SchemeConfig
from schemas.params_schema import ModelParams
from schemas.report_schema import SimState, TrajectorySummary
from utils.errors import NonfiniteStateError, StiffnessError

logger = logging.getLogger("timestepper")

MIN_DT = 1e-12
CG_RTOL = 1e-10


def initial_field(spec: InitialDataSpec, grid: Grid, name: str) -> ScalarField:
    """constante + sum amp cos(kx pi (x - sx)) cos(ky pi (y - sy))"""
    coords = grid.mesh()
    values = np.full(grid.shape, float(spec.constant))
    for term in spec.terms:
        part = term.amp * np.cos(term.kx * math.pi * (coords[0] - term.sx))
        if grid.dim == 2:
            part = part * np.cos(term.ky * math.pi * (coords[1] - term.sy))
        values = values + part
    return ScalarField(grid=grid, values=values, name=name)


def initial_state(u0: ScalarField, v0: ScalarField) -> SimState:
    if np.any(u0.values < 0) or np.any(v0.values < 0):
        raise NonfiniteStateError("initial data must be nonnegative")
    return SimState(t=0.0, u=u0, v=v0, mass0=integrate_values(u0.values, u0.grid))


def _psi(v: np.ndarray, params: ModelParams) -> np.ndarray:
    return params.p * np.log(v + params.c)


def stable_dt(state: SimState, params: ModelParams, config: SchemeConfig) -> float:
    """min(dt_max, cfl_safety h / max |chi grad ln(v+c)|)"""
    grid = state.u.grid
    psi = _psi(state.v.values, params)
    speed = 0.0
    for axis, dpsi in enumerate(face_psi_jumps(psi, grid)):
        if dpsi.size:
            speed = max(speed, params.d1 * float(np.max(np.abs(dpsi))) / grid.h[axis])
    dt = config.dt_max
    if speed > 0:
        dt = min(dt, config.cfl_safety * grid.h_min / speed)
    return dt


def _v_operator(grid: Grid, params: ModelParams, dt: float) -> sp.csr_matrix:
    n = grid.size
    return (sp.identity(n, format="csr") * (1.0 + params.alpha * dt)
            - (dt * params.d2) * grid.laplacian_matrix).tocsr()


def step(state: SimState, params: ModelParams, config: SchemeConfig,
         t_stop: Optional[float] = None) -> SimState:
    """Avanza un paso; t_stop recorta el paso para caer exactamente en un snapshot"""
    grid = state.u.grid
    dt = stable_dt(state, params, config)
    if dt < MIN_DT:
        raise StiffnessError(f"time step {dt:.3e} fell below {MIN_DT} at t={state.t}")
    if t_stop is not None:
        dt = min(dt, t_stop - state.t)

    u = state.u.flat
    v = state.v.flat

    rhs_v = v + dt * params.beta * u
    v_new, info = cg(_v_operator(grid, params, dt), rhs_v, x0=v, rtol=CG_RTOL, maxiter=10 * grid.size)
    if info != 0:
        logger.warning(f"CG no convergió en la ecuación de v (info={info}); se usa el solver directo")
        v_new = spsolve(_v_operator(grid, params, dt).tocsc(), rhs_v)

    A = sg_operator(_psi(state.v.values, params), grid, params.d1)
    system = (sp.identity(grid.size, format="csr") - dt * A).tocsc()
    u_new = spsolve(system, u)

    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        raise NonfiniteStateError(f"non-finite values after the step at t={state.t}, dt={dt}")
    # M-matriz: solo pueden aparecer negativos de redondeo
    u_new = np.maximum(u_new, 0.0) if np.min(u_new) > -1e-14 * np.max(u_new) else u_new
    if np.min(u_new) < 0:
        raise NonfiniteStateError(f"u became negative ({np.min(u_new):.3e}) at t={state.t}")

    return SimState(t=state.t + dt,
                    u=state.u.with_values(u_new.reshape(grid.shape)),
                    v=state.v.with_values(v_new.reshape(grid.shape)),
                    mass0=state.mass0, dt_last=dt)


def steady_detect(prev: SimState, nxt: SimState, config: SchemeConfig) -> bool:
    dt = nxt.t - prev.t
    if dt <= 0:
        return True
    du = np.max(np.abs(nxt.u.values - prev.u.values)) / max(np.max(np.abs(nxt.u.values)), 1e-300)
    dv = np.max(np.abs(nxt.v.values - prev.v.values)) / max(np.max(np.abs(nxt.v.values)), 1e-300)
    return bool(max(du, dv) / dt < config.steady_tol)


def run(state0: SimState, params: ModelParams, config: SchemeConfig,
        log_every: int = 500) -> TrajectorySummary:
    """Integra hasta t_end o hasta el estado estacionario, guardando snapshots y trazas"""
    pending: List[float] = [t for t in config.snapshot_times if t <= config.t_end]
    snapshots: List[SimState] = []
    if pending and pending[0] <= state0.t:
        snapshots.append(state0)
        pending = pending[1:]

    times, mass = [state0.t], [state0.mass0]
    u_max, u_min = [float(np.max(state0.u.values))], [float(np.min(state0.u.values))]
    v_max, v_min = [float(np.max(state0.v.values))], [float(np.min(state0.v.values))]

    state = state0
    steady = False
    n = 0
    while state.t < config.t_end - 1e-12:
        target = min(pending[0], config.t_end) if pending else config.t_end
        new = step(state, params, config, t_stop=target)
        n += 1
        grid = new.u.grid
        times.append(new.t)
        mass.append(integrate_values(new.u.values, grid))
        u_max.append(float(np.max(new.u.values)))
        u_min.append(float(np.min(new.u.values)))
        v_max.append(float(np.max(new.v.values)))
        v_min.append(float(np.min(new.v.values)))

        if pending and new.t >= pending[0] - 1e-12:
            snapshots.append(new)
            logger.info(f"Snapshot t={new.t:.6g} (max u={u_max[-1]:.6g})")
            pending = pending[1:]
        if n % log_every == 0:
            drift = abs(mass[-1] - state0.mass0) / state0.mass0
            logger.info(f"Paso {n}: t={new.t:.6g}, dt={new.dt_last:.3e}, deriva de masa={drift:.2e}")

        steady = steady_detect(state, new, config)
        state = new
        if steady and config.stop_at_steady:
            logger.info(f"Estado estacionario detectado en t={state.t:.6g} tras {n} pasos")
            break

    if not snapshots or snapshots[-1].t < state.t:
        snapshots.append(state)
    return TrajectorySummary(final=state, steps=n, steady=steady, times=np.array(times), mass=np.array(mass),
                             u_max=np.array(u_max), u_min=np.array(u_min),
                             v_max=np.array(v_max), v_min=np.array(v_min), snapshots=snapshots)
