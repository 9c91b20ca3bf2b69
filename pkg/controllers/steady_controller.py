import logging
import os

from schemas.base_schemas import ResultBase
from schemas.config_schema import RunConfig
from schemas.report_schema import NonlocalSolution
from solvers import diagnostics
from solvers.least_energy import ground_profile
from solvers.nonlocal_solver import export_solution, solve_nonlocal
from utils.image_utils import emit_image
from utils.settings import resolve_out_dir

logger = logging.getLogger("steady_controller")


def handle(config: RunConfig) -> ResultBase[NonlocalSolution]:
    """
    Modo solve-steady: estado estacionario del problema no local con
    eps = sqrt(d2/alpha), más el reporte del pico.

    Raises:
        EpsilonTooLargeError: si rho(delta) - m no cambia de signo en el intervalo
        NonconvergenceError: si Newton no converge en algún delta
    """
    params = config.params
    grid = config.grid.build()
    eps = params.eps
    solution = solve_nonlocal(eps, params, grid, scan_points=config.steady.scan_points)

    profile = ground_profile(solution.analysis, grid.dim)
    report = diagnostics.full_report(solution.w, eps, v=solution.v, profile=profile)
    extra = diagnostics.spike_report_entries(report)
    extra["mean_bound_holds"] = diagnostics.mean_bound_holds(solution.v, params)
    extra["platform_t1"] = solution.platform
    extra["nx"] = grid.nx
    if grid.dim == 2:
        extra["ny"] = grid.ny

    out_dir = resolve_out_dir(config.out, "solve-steady")
    artifacts = export_solution(solution, out_dir, extra=extra)
    if grid.dim == 2:
        for field in (solution.u, solution.v):
            artifacts.append(emit_image(field, os.path.join(out_dir, f"{field.name}.ppm")))

    logger.info(f"Pico {report.boundary_class} en {report.primary.point}, plataforma {solution.platform:.6g}")
    return ResultBase[NonlocalSolution](data=solution, artifacts=artifacts,
                                        message=f"Estado estacionario con delta_eps = {solution.delta_eps:.10g}")
