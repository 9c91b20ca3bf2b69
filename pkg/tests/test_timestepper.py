import math

import numpy as np
import pytest

from gridcontext.grid import Grid, ScalarField, integrate_values
from schemas.config_schema import CosineTerm, InitialDataSpec, SchemeConfig
from schemas.params_schema import ModelParams
from solvers import diagnostics
from solvers.timestepper import initial_field, initial_state, run, stable_dt, step, steady_detect
from utils.errors import NonfiniteStateError, StiffnessError
from utils.presets import preset_config


def _params(**overrides):
    base = dict(d1=1.0, d2=0.01, chi=3.0, alpha=1.0, beta=1.0, c=0.1, M=3.0, dim=2, volume=1.0)
    base.update(overrides)
    return ModelParams(**base)


def _preset_state(name, nx):
    config = preset_config(name, nx=nx)
    grid = config.grid.build()
    state = initial_state(initial_field(config.initial_u, grid, "u"), initial_field(config.initial_v, grid, "v"))
    return config, state


def test_initial_field_cosine_terms():
    grid = Grid.rectangle(16, 16)
    spec = InitialDataSpec(constant=3.0, terms=[CosineTerm(amp=1.0, kx=2, ky=2)])
    X, Y = grid.mesh()
    f = initial_field(spec, grid, "u")
    np.testing.assert_allclose(f.values, 3.0 + np.cos(2 * math.pi * X) * np.cos(2 * math.pi * Y), rtol=1e-15)
    assert f.name == "u"


def test_initial_state_rejects_negative():
    grid = Grid.rectangle(16, 16)
    with pytest.raises(NonfiniteStateError):
        initial_state(ScalarField.constant(grid, -1.0), ScalarField.constant(grid, 1.0))


def test_homogeneous_state_is_stationary():
    grid = Grid.rectangle(32, 32)
    state = initial_state(ScalarField.constant(grid, 3.0, "u"), ScalarField.constant(grid, 3.0, "v"))
    config = SchemeConfig(dt_max=0.05, t_end=1.0)
    params = _params(c=10.0)
    for _ in range(20):
        state = step(state, params, config)
    np.testing.assert_allclose(state.u.values, 3.0, rtol=1e-12)
    np.testing.assert_allclose(state.v.values, 3.0, rtol=1e-12)


def test_mass_and_positivity_are_preserved():
    config, state = _preset_state("fig1", 32)
    params = config.params
    mass0 = state.mass0
    for _ in range(200):
        state = step(state, params, config.scheme)
        assert np.min(state.u.values) >= 0.0
        assert np.min(state.v.values) >= 0.0
    assert abs(integrate_values(state.u.values, state.u.grid) - mass0) <= 1e-10 * mass0


def test_step_respects_cfl():
    config, state = _preset_state("fig1", 32)
    dt = stable_dt(state, config.params, config.scheme)
    assert 0 < dt <= config.scheme.dt_max
    new = step(state, config.params, config.scheme, t_stop=dt / 2)
    assert new.t == pytest.approx(dt / 2)


def test_heat_mode_decay():
    grid = Grid.interval(128)
    params = ModelParams(d1=1.0, d2=1.0, chi=1e-12, alpha=1.0, beta=1.0, c=1.0, M=3.0, dim=1, volume=1.0)
    u0 = initial_field(InitialDataSpec(constant=3.0, terms=[CosineTerm(amp=1.0, kx=1)]), grid, "u")
    v0 = ScalarField.constant(grid, 1.0, "v")
    config = SchemeConfig(dt_max=1e-4, t_end=0.2, stop_at_steady=False)
    summary = run(initial_state(u0, v0), params, config)

    (x,) = grid.mesh()
    amplitude = 2 * integrate_values((summary.final.u.values - 3.0) * np.cos(math.pi * x), grid)
    assert amplitude == pytest.approx(math.exp(-math.pi ** 2 * 0.2), rel=0.02)
    assert summary.max_mass_drift <= 1e-10


def test_dt_underflow_is_stiffness():
    config, state = _preset_state("fig1", 16)
    scheme = config.scheme.model_copy(update={"dt_max": 1e-13})
    with pytest.raises(StiffnessError):
        step(state, config.params, scheme)


def test_steady_detect():
    grid = Grid.rectangle(16, 16)
    config = SchemeConfig(steady_tol=1e-6)
    prev = initial_state(ScalarField.constant(grid, 2.0), ScalarField.constant(grid, 1.0))
    same = prev.model_copy(update={"t": 0.1})
    assert steady_detect(prev, same, config)

    dt = 0.1
    factor = 1.0 + 10 * config.steady_tol * dt
    drift = prev.model_copy(update={"t": dt, "u": prev.u.with_values(prev.u.values * factor),
                                    "v": prev.v.with_values(prev.v.values * factor)})
    assert not steady_detect(prev, drift, config)


def test_run_records_snapshots_and_traces():
    config, state = _preset_state("fig3", 16)
    scheme = config.scheme.model_copy(update={"t_end": 1.0, "snapshot_times": [0.0, 0.5, 1.0],
                                              "stop_at_steady": False})
    summary = run(state, config.params, scheme)
    assert [s.t for s in summary.snapshots] == pytest.approx([0.0, 0.5, 1.0])
    assert summary.times.shape == summary.mass.shape == summary.u_max.shape
    assert summary.max_mass_drift <= 1e-10


def test_fig3_converges_to_constant_state():
    config, state = _preset_state("fig3", 32)
    summary = run(state, config.params, config.scheme)
    assert np.max(np.abs(summary.final.u.values - 3.0)) < 1e-3
    assert np.max(np.abs(summary.final.v.values - 3.0)) < 1e-3


@pytest.mark.slow
def test_fig1_spike_migrates_to_origin_corner():
    config, state = _preset_state("fig1", 64)
    summary = run(state, config.params, config.scheme)
    report = diagnostics.locate_spikes(summary.final.u)
    assert report.boundary_class == "corner"
    h = summary.final.u.grid.h_min
    assert all(abs(x) <= 1.5 * h for x in report.primary.point)

    track = diagnostics.corner_migration_track(summary.snapshots)
    assert track.target_corner == (0.0, 0.0)
    assert track.approaches
    assert track.transient_end < len(track.distances) - 1
    tail = track.distances[track.transient_end:]
    assert all(b <= a for a, b in zip(tail, tail[1:]))


@pytest.mark.slow
def test_fig1_spike_location_stable_under_refinement():
    points = []
    for nx in (128, 256):
        config, state = _preset_state("fig1", nx)
        summary = run(state, config.params, config.scheme)
        points.append(diagnostics.locate_spikes(summary.final.u).primary.point)
    coarse, fine = points
    assert all(abs(a - b) <= 1.5 / 128 for a, b in zip(coarse, fine))


@pytest.mark.slow
def test_fig2_spike_on_boundary():
    config, state = _preset_state("fig2", 64)
    summary = run(state, config.params, config.scheme)
    report = diagnostics.locate_spikes(summary.final.u)
    assert report.boundary_class in ("edge", "corner")


@pytest.mark.slow
def test_fig4b_spikes_at_opposite_corners():
    config, state = _preset_state("fig4b", 64)
    summary = run(state, config.params, config.scheme)
    u = summary.final.u
    report = diagnostics.locate_spikes(u)
    corners = u.grid.domain.corners
    h = u.grid.h_min
    nearest = set()
    for loc in report.locations:
        gaps = np.linalg.norm(corners - np.asarray(loc.point), axis=1)
        assert gaps.min() <= 1.5 * math.sqrt(2) * h
        nearest.add(tuple(float(x) for x in corners[int(np.argmin(gaps))]))
    assert nearest == {(0.0, 0.0), (1.0, 1.0)}


@pytest.mark.slow
def test_fig5_metastable_spikes_collapse_to_center():
    config, state = _preset_state("fig5", 128)
    summary = run(state, config.params, config.scheme)
    counts = diagnostics.spike_count_series(summary.snapshots)
    assert any(count >= 4 for _, count in counts[1:-1])
    final = diagnostics.locate_spikes(summary.final.u)
    assert final.count == 1
    h = summary.final.u.grid.h_min
    assert all(abs(x - 0.5) <= 1.5 * h for x in final.primary.point)


@pytest.mark.slow
def test_fig4a_interior_spike():
    config, state = _preset_state("fig4a", 64)
    summary = run(state, config.params, config.scheme)
    report = diagnostics.locate_spikes(summary.final.u)
    h = summary.final.u.grid.h_min
    assert all(abs(x - 0.5) <= 1.5 * h for x in report.primary.point)
