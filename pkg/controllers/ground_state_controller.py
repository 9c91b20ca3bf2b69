import logging
import os

from gridcontext.snapshots import write_columns_csv, write_manifest
from schemas.analysis_schema import RadialProfile
from schemas.base_schemas import ResultBase
from schemas.config_schema import RunConfig
from solvers.ground_state import ground_state_nehari_product, ground_state_norm_sq, shoot_ground_state
from solvers.scalar_analysis import analyze_delta
from utils.settings import CODE_VERSION, resolve_out_dir

logger = logging.getLogger("ground_state_controller")


def handle(config: RunConfig) -> ResultBase[RadialProfile]:
    """
    Modo ground-state: perfil radial de la ecuación límite en R^N al delta
    pedido, con su tasa de decaimiento, masa y energía.
    """
    params = config.params
    analysis = analyze_delta(params, config.steady.delta)
    profile = shoot_ground_state(analysis, N=params.dim, R_max=config.steady.radius)
    out_dir = resolve_out_dir(config.out, "ground-state")

    norm_sq = ground_state_norm_sq(profile)
    nehari_gap = abs(norm_sq - ground_state_nehari_product(profile)) / norm_sq

    csv_path = write_columns_csv(os.path.join(out_dir, "profile.csv"),
                                 [profile.r_samples, profile.w_samples, profile.dw_samples],
                                 header="r,w,dw")
    manifest = write_manifest(os.path.join(out_dir, "manifest.txt"), {
        "version": CODE_VERSION,
        "mode": config.mode,
        "dim": profile.dim,
        "delta": analysis.delta,
        "c_delta": analysis.c_delta,
        "t_delta": analysis.t_delta,
        "w0": profile.w0,
        "r_max": profile.r_max,
        "r_trusted": profile.r_trusted,
        "mu": profile.mu,
        "decay_constant": profile.decay_constant,
        "mass": profile.mass,
        "energy": profile.energy,
        "nehari_gap": nehari_gap,
    })
    if nehari_gap > 1e-6:
        logger.warning(f"Identidad de Nehari con error relativo {nehari_gap:.2e}")
    return ResultBase[RadialProfile](data=profile, message=f"Ground state con w(0) = {profile.w0:.10g}",
                                     artifacts=[csv_path, manifest])
