import logging
import os

import numpy as np

from gridcontext.snapshots import write_manifest
from schemas.analysis_schema import DeltaAnalysis
from schemas.base_schemas import ResultBase
from schemas.config_schema import RunConfig
from solvers.scalar_analysis import (analyze_delta, constant_level, growth_envelope_check,
                                     root_sensitivity, theta_bound)
from utils.settings import CODE_VERSION, resolve_out_dir

logger = logging.getLogger("delta_controller")


def handle(config: RunConfig) -> ResultBase[DeltaAnalysis]:
    """
    Modo analyze-delta: estructura escalar de la reacción al delta pedido.

    Escribe un manifiesto con delta0, las raíces t1 <= t* <= t2, c_delta,
    t_delta, el nivel constante, la cota theta de Ambrosetti-Rabinowitz y las
    derivadas de las raíces respecto de delta.

    Raises:
        NonexistenceError: si delta < delta0
    """
    params = config.params
    delta = config.steady.delta
    analysis = analyze_delta(params, delta)
    out_dir = resolve_out_dir(config.out, "analyze-delta")

    wbar = constant_level(analysis) if analysis.c_delta > 0 else 0.0
    probe = np.logspace(-4, 4, 400) * max(wbar, 1e-3)
    dt1, dt2 = root_sensitivity(params, delta) if not analysis.is_threshold else (float("nan"), float("nan"))
    a1, a2 = growth_envelope_check(analysis, probe)

    entries = {
        "version": CODE_VERSION,
        "mode": config.mode,
        "m": params.m, "p": params.p, "c": params.c,
        "delta": analysis.delta,
        "delta0": analysis.delta0,
        "t1": analysis.t1, "t_star": analysis.t_star, "t2": analysis.t2,
        "c_delta": analysis.c_delta,
        "t_delta": analysis.t_delta,
        "constant_level": wbar,
        "theta_bound": theta_bound(analysis, probe),
        "growth_a1": a1, "growth_a2": a2,
        "dt1_ddelta": dt1, "dt2_ddelta": dt2,
        "hypothesis_holds": params.hypothesis_holds,
    }
    path = write_manifest(os.path.join(out_dir, "manifest.txt"), entries)
    logger.info(f"delta={delta!r}: t1={analysis.t1:.6g}, t2={analysis.t2:.6g}, c_delta={analysis.c_delta:.6g}")
    return ResultBase[DeltaAnalysis](data=analysis, message="Análisis de delta completado", artifacts=[path])
