import logging
import os
from typing import Dict, List

from gridcontext.snapshots import write_columns_csv, write_field_csv, write_manifest
from schemas.base_schemas import ResultBase
from schemas.config_schema import InitialDataSpec, RunConfig
from schemas.report_schema import TrajectorySummary
from solvers import diagnostics
from solvers.timestepper import initial_field, initial_state, run
from utils.errors import EpsilonTooLargeError
from utils.image_utils import emit_image
from utils.presets import preset_config, preset_expectation
from utils.settings import CODE_VERSION, resolve_out_dir

logger = logging.getLogger("simulation_controller")

PLATFORM_NOTE_RTOL = 0.1


def _initial_entries(prefix: str, spec: InitialDataSpec) -> Dict[str, object]:
    entries: Dict[str, object] = {f"{prefix}_constant": spec.constant}
    for k, term in enumerate(spec.terms, start=1):
        entries[f"{prefix}_term{k}"] = f"{term.amp!r} {term.kx!r} {term.ky!r} {term.sx!r} {term.sy!r}"
    return entries


def _manifest_entries(config: RunConfig, summary: TrajectorySummary) -> Dict[str, object]:
    params, grid, scheme = config.params, config.grid, config.scheme
    entries: Dict[str, object] = {
        "version": CODE_VERSION,
        "mode": config.mode,
        "preset": config.preset or "none",
        "d1": params.d1, "d2": params.d2, "chi": params.chi, "alpha": params.alpha,
        "beta": params.beta, "c": params.c, "M": params.M,
        "eps": params.eps, "p": params.p, "m": params.m,
        "mass_bound": params.mass_bound,
        "hypothesis_holds": params.hypothesis_holds,
        "hypothesis_note": "within the mass hypothesis" if params.hypothesis_holds
        else "outside the mass hypothesis M <= alpha c |Omega| / (beta (p-1))",
        "grid_dim": grid.dim, "nx": grid.nx, "ny": grid.ny or grid.nx, "lx": grid.lx, "ly": grid.ly,
        "dt_max": scheme.dt_max, "cfl_safety": scheme.cfl_safety, "steady_tol": scheme.steady_tol,
        "t_end": scheme.t_end, "snapshot_times": scheme.snapshot_times or "none",
        "stop_at_steady": scheme.stop_at_steady,
    }
    entries.update(_initial_entries("u0", config.initial_u))
    entries.update(_initial_entries("v0", config.initial_v))
    entries.update({
        "steps": summary.steps,
        "t_final": summary.final.t,
        "steady": summary.steady,
        "max_mass_drift": summary.max_mass_drift,
        "determinism": "deterministic; no random seeds are used",
    })
    return entries


def _write_snapshots(summary: TrajectorySummary, out_dir: str) -> List[str]:
    paths = []
    snap_dir = os.path.join(out_dir, "snapshots")
    for snap in summary.snapshots:
        tag = f"t{snap.t:g}"
        paths.append(write_field_csv(snap.u, os.path.join(snap_dir, f"u_{tag}.csv"), t=snap.t, name="u"))
        paths.append(write_field_csv(snap.v, os.path.join(snap_dir, f"v_{tag}.csv"), t=snap.t, name="v"))
        if snap.u.grid.dim == 2:
            paths.append(emit_image(snap.u, os.path.join(snap_dir, f"u_{tag}.ppm")))
            paths.append(emit_image(snap.v, os.path.join(snap_dir, f"v_{tag}.ppm")))
    return paths


def handle(config: RunConfig) -> ResultBase[TrajectorySummary]:
    """
    Modos simulate y reproduce: integra el sistema parabólico desde el dato
    inicial y escribe snapshots, la traza de masa y extremos, la serie de
    número de picos, el reporte del pico final y el manifiesto.
    """
    if config.mode == "reproduce" and config.params is None:
        config = preset_config(config.preset, out=config.out)
    params = config.params
    grid = config.grid.build()
    u0 = initial_field(config.initial_u, grid, "u")
    v0 = initial_field(config.initial_v, grid, "v")
    summary = run(initial_state(u0, v0), params, config.scheme)

    out_dir = resolve_out_dir(config.out, config.preset or "simulate")
    artifacts = _write_snapshots(summary, out_dir)
    artifacts.append(write_columns_csv(
        os.path.join(out_dir, "trace.csv"),
        [summary.times, summary.mass, summary.u_max, summary.u_min, summary.v_max, summary.v_min],
        header="t,mass,u_max,u_min,v_max,v_min"))

    counts = diagnostics.spike_count_series(summary.snapshots)
    artifacts.append(write_columns_csv(os.path.join(out_dir, "spikes.csv"),
                                       [[t for t, _ in counts], [n for _, n in counts]], header="t,count"))

    entries = _manifest_entries(config, summary)
    final_u = summary.final.u
    report = diagnostics.locate_spikes(final_u)
    try:
        report = report.model_copy(update={"platform": diagnostics.platform_height(final_u, report, params.eps)})
    except EpsilonTooLargeError as exc:
        logger.warning(exc.detail)
    entries.update(diagnostics.spike_report_entries(report))
    entries["spike_count_series"] = ";".join(f"{t!r}:{n}" for t, n in counts)
    reference = params.mean_level
    entries["platform_reference"] = reference
    if report.platform is not None:
        if abs(report.platform - reference) > PLATFORM_NOTE_RTOL * reference:
            entries["platform_note"] = ("measured platform differs from beta M / (alpha |Omega|); "
                                        "known discrepancy of the simulated steady state")
    if len(summary.snapshots) >= 2:
        track = diagnostics.corner_migration_track(summary.snapshots)
        entries["migration_target_corner"] = track.target_corner
        entries["migration_distances"] = track.distances
        entries["migration_transient_end"] = track.transient_end
    if config.preset:
        entries["expected_behavior"] = preset_expectation(config.preset)

    artifacts.append(write_manifest(os.path.join(out_dir, "manifest.txt"), entries))
    logger.info(f"Corrida terminada en t={summary.final.t:.6g} ({summary.steps} pasos), "
                f"deriva de masa {summary.max_mass_drift:.2e}, {report.count} pico(s)")
    return ResultBase[TrajectorySummary](data=summary, artifacts=artifacts,
                                         message=f"Simulación hasta t = {summary.final.t:.6g}")
