import logging
import os

from gridcontext.snapshots import write_columns_csv, write_manifest
from schemas.base_schemas import ResultBase
from schemas.config_schema import RunConfig
from solvers.nonlocal_solver import PlatformSweep, platform_limit_sweep
from utils.settings import CODE_VERSION, resolve_out_dir

logger = logging.getLogger("sweep_controller")


def handle(config: RunConfig) -> ResultBase[PlatformSweep]:
    """Modo sweep-epsilon: delta_eps y plataforma sobre una lista decreciente de eps"""
    params = config.params
    steady = config.steady
    sweep = platform_limit_sweep(params, config.grid.build(), steady.eps_list,
                                 cells_per_eps=steady.cells_per_eps)
    out_dir = resolve_out_dir(config.out, "sweep-epsilon")

    rows = sweep.rows
    table = write_columns_csv(os.path.join(out_dir, "sweep.csv"),
                              [[r.eps for r in rows], [r.delta_eps for r in rows],
                               [r.platform for r in rows], [r.nx for r in rows]],
                              header="eps,delta_eps,platform,nx")
    manifest = write_manifest(os.path.join(out_dir, "manifest.txt"), {
        "version": CODE_VERSION,
        "mode": config.mode,
        "eps_list": steady.eps_list,
        "cells_per_eps": steady.cells_per_eps if steady.cells_per_eps is not None else "grid",
        "c": params.c, "p": params.p, "m": params.m, "M": params.M,
        "platform_target": sweep.target,
        "platform_extrapolated": sweep.extrapolated if sweep.extrapolated is not None else "none",
    })
    for r in rows:
        logger.info(f"eps={r.eps:g}: delta_eps={r.delta_eps:.8g}, plataforma={r.platform:.6g} (nx={r.nx})")
    return ResultBase[PlatformSweep](data=sweep, artifacts=[table, manifest],
                                     message=f"Barrido de {len(rows)} valores de eps")
