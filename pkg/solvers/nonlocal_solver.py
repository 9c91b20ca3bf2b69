"""
Lazo externo no local: busca delta_eps tal que la solución de menor
energía a delta fijo cumpla int_Omega v = m, con v = delta^{1/(p-1)} w + t1,
y reconstruye (u, v) del estado estacionario completo.
"""
import logging
import math
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from gridcontext.fluxes import sg_divergence
from gridcontext.grid import Grid, ScalarField, integrate_values, laplacian_values
from gridcontext.snapshots import write_field_csv, write_manifest
from schemas.analysis_schema import DeltaAnalysis
from schemas.params_schema import ModelParams
from schemas.report_schema import NonlocalSolution, SpikeSeed
from solvers import least_energy
from solvers.scalar_analysis import (analyze_delta, delta_for_first_root, delta_lower_bound,
                                     solve_roots)
from utils.errors import (EpsilonTooLargeError, InvalidParameterError, NonconvergenceError,
                          SolverError)
from utils.settings import CODE_VERSION

logger = logging.getLogger("nonlocal_solver")

CONSTRAINT_RTOL = 1e-9
MAX_BISECTIONS = 200


class RhoEvaluation(BaseModel):
    """rho(delta) con la solución elegida a ese delta"""
    delta: float
    rho: float
    analysis: Optional[DeltaAnalysis] = None
    w: Optional[ScalarField] = None
    is_constant: bool = False

    model_config = {"arbitrary_types_allowed": True}


class SweepRow(BaseModel):
    eps: float
    delta_eps: float
    platform: float
    nx: int


class PlatformSweep(BaseModel):
    rows: List[SweepRow]
    target: float = Field(..., description="beta M / (alpha |Omega|)")
    extrapolated: Optional[float] = Field(None, description="Extrapolación de Richardson de primer orden en eps")

    @property
    def errors(self) -> List[float]:
        return [abs(r.platform - self.target) for r in self.rows]


def _check_volume(params: ModelParams, grid: Grid):
    if not math.isclose(params.volume, grid.volume, rel_tol=1e-12):
        logger.warning(f"params.volume={params.volume} difiere del volumen de la malla {grid.volume}; "
                       "se usa el de la malla")


def _rho_from_w(w: ScalarField, analysis: DeltaAnalysis) -> float:
    return analysis.scale * integrate_values(w.values, w.grid) + analysis.t1 * w.grid.volume


def rho_at_threshold(params: ModelParams, grid: Grid) -> float:
    """Rama constante en delta0: v = c/(p-1), sin resolver la EDP"""
    return params.c / (params.p - 1.0) * grid.volume


def evaluate_rho(eps: float, params: ModelParams, delta: float, grid: Grid,
                 warm: Optional[ScalarField] = None) -> RhoEvaluation:
    """
    Evalúa rho(delta). Sin arranque en caliente usa el conjunto de candidatos
    de esquina más la constante; con arranque en caliente, el iterado previo
    más la constante, y vuelve a sembrar un pico si el previo cae en la rama constante.
    """
    delta0 = delta_lower_bound(params)
    if delta < delta0 * (1.0 - 1e-10):
        raise InvalidParameterError(f"rho is defined for delta >= delta0={delta0}, got {delta}")
    if delta <= delta0 * (1.0 + 1e-10):
        return RhoEvaluation(delta=delta, rho=rho_at_threshold(params, grid), is_constant=True)

    analysis = analyze_delta(params, delta)
    if warm is None:
        candidates = least_energy.corner_candidates(eps, analysis, grid)
    else:
        spike = None
        try:
            spike = least_energy.solve_local(eps, analysis, grid, warm)
        except NonconvergenceError as exc:
            logger.info(f"Arranque en caliente falló en delta={delta!r}: {exc.detail}")
        if spike is None or least_energy.is_constant_values(spike.values):
            logger.info(f"Re-sembrando un pico en delta={delta!r}")
            spike = least_energy.solve_local(eps, analysis, grid, SpikeSeed())
        candidates = [spike, ScalarField.constant(grid, least_energy.constant_level(analysis), name="w")]

    ranking = least_energy.rank_candidates(candidates, eps, analysis)
    chosen = ranking.selected
    rho_value = _rho_from_w(chosen.field, analysis)
    logger.debug(f"rho({delta!r}) = {rho_value!r} (constante={chosen.report.is_constant})")
    return RhoEvaluation(delta=delta, rho=rho_value, analysis=analysis, w=chosen.field,
                         is_constant=chosen.report.is_constant)


def rho(eps: float, params: ModelParams, delta: float, grid: Grid) -> float:
    return evaluate_rho(eps, params, delta, grid).rho


def upper_bracket(params: ModelParams, grid: Grid) -> float:
    """delta1 con t1(delta1) |Omega| = m/2"""
    target = params.m / (2.0 * grid.volume)
    delta1 = delta_for_first_root(params, target)
    roots = solve_roots(params, delta1)
    if roots is None or abs(roots.t1 - target) > 1e-10 * max(target, 1.0):
        raise SolverError(f"upper bracket check failed: t1({delta1}) != {target}")
    return delta1


def _bisect(eps, params, grid, lo: float, hi: float, h_lo: float, warm: Optional[ScalarField]):
    m = params.m
    best = None
    for step in range(1, MAX_BISECTIONS + 1):
        mid = 0.5 * (lo + hi)
        ev = evaluate_rho(eps, params, mid, grid, warm=warm)
        h_mid = ev.rho - m
        if not ev.is_constant:
            warm = ev.w
        best = (ev, step)
        logger.debug(f"Bisección {step}: delta={mid!r}, h={h_mid:.3e}")
        if abs(h_mid) <= CONSTRAINT_RTOL * m:
            return best
        if (h_mid > 0) == (h_lo > 0):
            lo, h_lo = mid, h_mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            raise SolverError(f"delta bracket collapsed at {mid!r} with |h|={abs(h_mid):.3e}")
    raise SolverError(f"delta bisection did not reach |h| <= {CONSTRAINT_RTOL}*m in {MAX_BISECTIONS} steps")


def scan_brackets(eps: float, params: ModelParams, grid: Grid, n: int = 16) -> List[Tuple[float, float]]:
    """Intervalos de (delta0, delta1] donde rho(delta) - m cambia de signo"""
    delta0 = delta_lower_bound(params)
    delta1 = upper_bracket(params, grid)
    deltas = np.linspace(delta0, delta1, n + 1)
    values = []
    warm = None
    for d in deltas:
        ev = evaluate_rho(eps, params, float(d), grid, warm=warm)
        if ev.w is not None and not ev.is_constant:
            warm = ev.w
        values.append(ev.rho - params.m)
    out = []
    for k in range(n):
        if (values[k] > 0) != (values[k + 1] > 0):
            out.append((float(deltas[k]), float(deltas[k + 1])))
    return out


def reconstruct_u(v: ScalarField, params: ModelParams) -> ScalarField:
    """u = M (v+c)^p / int (v+c)^p"""
    shifted = v.values + params.c
    if np.any(shifted <= 0):
        raise InvalidParameterError("reconstruct_u requires v > -c everywhere")
    density = shifted ** params.p
    return v.with_values(params.M * density / integrate_values(density, v.grid), name="u")


def full_system_residual(solution: NonlocalSolution) -> Tuple[float, float]:
    """Residuos en norma infinito de las dos ecuaciones estacionarias para (u, v)"""
    params = solution.params
    grid = solution.v.grid
    u, v = solution.u.values, solution.v.values
    psi = params.p * np.log(v + params.c)
    res_u = sg_divergence(u, psi, grid, params.d1)
    d2 = solution.eps ** 2 * params.alpha
    res_v = d2 * laplacian_values(v, grid) - params.alpha * v + params.beta * u
    return float(np.max(np.abs(res_u))), float(np.max(np.abs(res_v)))


def _assemble(eps: float, params: ModelParams, ev: RhoEvaluation, steps: int,
              other_roots: Sequence[float]) -> NonlocalSolution:
    analysis = ev.analysis
    w = ev.w
    v = w.with_values(analysis.scale * w.values + analysis.t1, name="v")
    u = reconstruct_u(v, params)
    grid = w.grid
    mass_term = integrate_values((v.values + params.c) ** params.p, grid)
    constraint = abs(mass_term - ev.delta) / ev.delta
    mass_res = abs(integrate_values(v.values, grid) - params.m) / params.m
    if params.c / (params.p - 1.0) <= analysis.t1:
        logger.warning(f"Plataforma t1={analysis.t1} fuera de (0, c/(p-1))")
    return NonlocalSolution(params=params, eps=eps, delta_eps=ev.delta, analysis=analysis, w=w, v=v, u=u,
                            constraint_residual=constraint, mass_residual=mass_res,
                            platform=analysis.t1, hypothesis_holds=params.hypothesis_holds,
                            bisection_steps=steps, other_roots=list(other_roots))


def solve_nonlocal(eps: float, params: ModelParams, grid: Grid, scan_points: int = 0) -> NonlocalSolution:
    """
    Bisección sobre h(delta) = rho(delta) - m en (delta0, delta1]. Con
    scan_points > 0 se barre primero el intervalo y se resuelven todos los
    cambios de signo; el primero es la solución principal.
    """
    _check_volume(params, grid)
    if not params.hypothesis_holds:
        logger.warning(f"M={params.M} supera la cota {params.mass_bound:.6g}: fuera de las hipótesis del teorema")

    delta0 = delta_lower_bound(params)
    delta1 = upper_bracket(params, grid)
    h_lo = rho_at_threshold(params, grid) - params.m
    logger.info(f"Intervalo de delta: [{delta0!r}, {delta1!r}], h(delta0) = {h_lo:.6g}")

    intervals = [(delta0, delta1)]
    if scan_points > 0:
        intervals = scan_brackets(eps, params, grid, scan_points) or intervals

    roots = []
    for lo, hi in intervals:
        start = evaluate_rho(eps, params, hi, grid)
        h_hi = start.rho - params.m
        h_lo_k = (rho_at_threshold(params, grid) - params.m) if lo == delta0 \
            else evaluate_rho(eps, params, lo, grid).rho - params.m
        if (h_hi > 0) == (h_lo_k > 0):
            raise EpsilonTooLargeError(
                f"rho(delta) - m keeps its sign on [{lo!r}, {hi!r}] (h={h_lo_k:.4g}, {h_hi:.4g}); "
                f"eps={eps} is too large")
        if abs(h_hi) <= CONSTRAINT_RTOL * params.m:
            roots.append((start, 0))
            continue
        roots.append(_bisect(eps, params, grid, lo, hi, h_lo_k, None if start.is_constant else start.w))

    (ev, steps), extra = roots[0], [r[0].delta for r in roots[1:]]
    if extra:
        logger.warning(f"Se encontraron {len(roots)} valores de delta_eps: {[ev.delta] + extra}")
    solution = _assemble(eps, params, ev, steps, extra)
    logger.info(f"delta_eps={solution.delta_eps!r}, plataforma={solution.platform:.6g}, "
                f"residuo de masa={solution.mass_residual:.2e}")
    return solution


def _grid_for(eps: float, grid: Optional[Grid], cells_per_eps: Optional[float]) -> Grid:
    if cells_per_eps is None:
        if grid is None:
            raise InvalidParameterError("platform_limit_sweep needs a grid or cells_per_eps")
        return grid
    base = grid or Grid.interval(8)
    lengths = base.domain.lengths
    nx = max(8, int(math.ceil(lengths[0] * cells_per_eps / eps)))
    if base.dim == 1:
        return Grid.interval(nx, lengths[0])
    ny = max(8, int(math.ceil(lengths[1] * cells_per_eps / eps)))
    return Grid.rectangle(nx, ny, lengths[0], lengths[1])


def platform_limit_sweep(params: ModelParams, grid: Optional[Grid], eps_list: Sequence[float],
                         cells_per_eps: Optional[float] = None) -> PlatformSweep:
    eps_list = list(eps_list)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise InvalidParameterError("eps_list must be strictly decreasing")
    rows = []
    for eps in eps_list:
        g = _grid_for(eps, grid, cells_per_eps)
        sol = solve_nonlocal(eps, params, g)
        rows.append(SweepRow(eps=eps, delta_eps=sol.delta_eps, platform=sol.platform, nx=g.nx))
    volume = _grid_for(eps_list[0], grid, cells_per_eps).volume
    target = params.beta * params.M / (params.alpha * volume)
    extrapolated = None
    if len(rows) >= 2:
        a, b = rows[-2], rows[-1]
        # error de primer orden en eps
        extrapolated = (a.eps * b.platform - b.eps * a.platform) / (a.eps - b.eps)
    return PlatformSweep(rows=rows, target=target, extrapolated=extrapolated)


def export_solution(solution: NonlocalSolution, out_dir: str, extra: Optional[dict] = None) -> List[str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = [
        write_field_csv(solution.u, os.path.join(out_dir, "u.csv"), name="u"),
        write_field_csv(solution.v, os.path.join(out_dir, "v.csv"), name="v"),
        write_field_csv(solution.w, os.path.join(out_dir, "w.csv"), name="w"),
    ]
    res_u, res_v = full_system_residual(solution)
    params = solution.params
    entries = {
        "version": CODE_VERSION,
        "eps": solution.eps,
        "d1": params.d1, "d2": params.d2, "chi": params.chi, "alpha": params.alpha,
        "beta": params.beta, "c": params.c, "M": params.M,
        "p": params.p, "m": params.m,
        "delta0": solution.analysis.delta0,
        "delta_eps": solution.delta_eps,
        "platform": solution.platform,
        "c_delta": solution.analysis.c_delta,
        "constraint_residual": solution.constraint_residual,
        "mass_residual": solution.mass_residual,
        "residual_u_inf": res_u,
        "residual_v_inf": res_v,
        "hypothesis_holds": solution.hypothesis_holds,
        "hypothesis_note": "within the mass hypothesis M <= alpha c |Omega| / (beta (p-1))" if solution.hypothesis_holds
        else "outside the mass hypothesis M <= alpha c |Omega| / (beta (p-1))",
        "other_delta_roots": solution.other_roots or "none",
        "determinism": "deterministic; no random seeds are used",
    }
    if extra:
        entries.update(extra)
    paths.append(write_manifest(os.path.join(out_dir, "manifest.txt"), entries))
    return paths
