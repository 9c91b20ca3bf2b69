import math

import numpy as np
import pytest

from gridcontext.grid import Grid, ScalarField
from solvers.diagnostics import (corner_migration_track, full_report, locate_spikes, mean_bound_holds,
                                 normal_decay_fit, platform_height, profile_match, spike_count_series,
                                 spike_report_entries, superlevel_diameter)
from solvers.ground_state import shoot_ground_state
from solvers.least_energy import transplant_spike
from solvers.scalar_analysis import power_law_analysis
from solvers.timestepper import initial_state
from utils.errors import EpsilonTooLargeError, InvalidParameterError, ResolutionError

# centro de celda más cercano al centro del cuadrado de 64 x 64
MID = 32.5 / 64


def _bumps(grid, centers, width=0.1):
    values = np.zeros(grid.shape)
    for center in centers:
        values += np.exp(-grid.distance_to(center) ** 2 / width ** 2)
    return ScalarField(grid=grid, values=values, name="u")


def _edge_spike(n=512, eps=0.02, floor=0.5):
    grid = Grid.interval(n)
    (x,) = grid.mesh()
    return ScalarField(grid=grid, values=floor + np.exp(-x / eps), name="v")


def test_cosine_has_boundary_spike(line256):
    (x,) = line256.mesh()
    report = locate_spikes(ScalarField(grid=line256, values=np.cos(math.pi * x)))
    assert report.count == 1
    assert report.primary.index == (0,)
    assert report.boundary_class == "edge"
    assert report.anchor == (0.0,)


def test_double_bump_at_corners(square64):
    report = locate_spikes(_bumps(square64, [(0.0, 0.0), (1.0, 1.0)]))
    assert report.count == 2
    assert {loc.boundary_class for loc in report.locations} == {"corner"}
    assert {loc.index for loc in report.locations} == {(0, 0), (63, 63)}


def test_background_ripples_are_not_spikes(line256):
    (x,) = line256.mesh()
    values = np.exp(-x / 0.02) + 1e-4 * np.cos(40 * math.pi * x)
    assert locate_spikes(ScalarField(grid=line256, values=values)).count == 1


def test_constant_field_reports_global_max(square64):
    report = locate_spikes(ScalarField.constant(square64, 2.0))
    assert report.count == 1
    assert report.primary.value == 2.0


def test_platform_of_constructed_field():
    v = _edge_spike()
    report = locate_spikes(v)
    assert platform_height(v, report, 0.02) == pytest.approx(0.5, abs=1e-3)


def test_platform_of_constant(square64):
    v = ScalarField.constant(square64, 1.25)
    assert platform_height(v, locate_spikes(v), 0.01) == 1.25


def test_platform_needs_far_field():
    v = _edge_spike()
    with pytest.raises(EpsilonTooLargeError):
        platform_height(v, locate_spikes(v), 0.1)
    with pytest.raises(InvalidParameterError):
        platform_height(v, locate_spikes(v), 0.0)


def test_superlevel_diameter_of_disc(square64):
    values = (square64.distance_to((0.5, 0.5)) < 0.2).astype(float)
    diameter, empty = superlevel_diameter(ScalarField(grid=square64, values=values), eta=0.5)
    assert not empty
    assert abs(diameter - 0.4) <= square64.h_min


def test_superlevel_diameter_1d_and_empty():
    v = _edge_spike(floor=0.0)
    diameter, empty = superlevel_diameter(v, eta=math.exp(-1.0))
    assert not empty
    assert diameter == pytest.approx(0.02, abs=2 * v.grid.h_min)
    assert superlevel_diameter(v, eta=2.0) == (0.0, True)


def test_superlevel_diameter_collinear(square64):
    values = np.zeros(square64.shape)
    values[10, 5:20] = 1.0
    diameter, _ = superlevel_diameter(ScalarField(grid=square64, values=values), eta=0.5)
    assert diameter == pytest.approx(14 * square64.h_min)


def test_profile_match_round_trip_and_negative_control():
    grid = Grid.interval(1000)
    eps = 0.02
    profile = shoot_ground_state(power_law_analysis(1.0, 2.0, 1.0), N=1)
    w = ScalarField(grid=grid, values=transplant_spike(grid, eps, profile))
    assert profile_match(w, profile, (0.0,), eps) <= 1e-6

    wrong = shoot_ground_state(power_law_analysis(1.0, 2.0, 0.5), N=1)
    assert profile_match(w, wrong, (0.0,), eps) >= 0.1
    with pytest.raises(InvalidParameterError):
        profile_match(w, profile, (0.0,), 0.0)


def test_decay_fit_1d():
    grid = Grid.interval(512)
    (x,) = grid.mesh()
    w = ScalarField(grid=grid, values=np.exp(-1.3 * x / 0.02))
    assert normal_decay_fit(w, locate_spikes(w), 0.02) == pytest.approx(1.3, rel=1e-10)


def test_decay_fit_2d_corner():
    grid = Grid.rectangle(128, 128)
    eps = 0.02
    s = grid.distance_to((0.0, 0.0)) / eps
    w = ScalarField(grid=grid, values=np.exp(-0.8 * s) / np.sqrt(s))
    report = locate_spikes(w)
    assert report.boundary_class == "corner"
    assert normal_decay_fit(w, report, eps) == pytest.approx(0.8, rel=1e-8)


def test_decay_fit_needs_resolution(square64):
    w = _bumps(square64, [(0.0, 0.0)])
    with pytest.raises(ResolutionError):
        normal_decay_fit(w, locate_spikes(w), 1e-4)


def test_mean_bound(half_mass_params):
    assert mean_bound_holds(_edge_spike(), half_mass_params)
    grid = Grid.interval(512)
    (x,) = grid.mesh()
    interior = ScalarField(grid=grid, values=0.5 + np.exp(-((x - 0.5) / 0.02) ** 2))
    assert not mean_bound_holds(interior, half_mass_params)
    assert not mean_bound_holds(ScalarField.constant(grid, 0.5), half_mass_params)


def test_stationary_spike_has_constant_track(square64):
    f = _bumps(square64, [(0.0, 0.0)])
    track = corner_migration_track([f, f, f])
    assert track.target_corner == (0.0, 0.0)
    assert track.distances == [track.distances[0]] * 3
    assert track.transient_end == 0
    assert track.approaches


def test_migration_toward_corner(square64):
    v = ScalarField.constant(square64, 1.0)
    states = [initial_state(_bumps(square64, [(c, c)]), v).model_copy(update={"t": t})
              for t, c in ((0.0, 0.4), (5.0, MID), (10.0, 0.3), (20.0, 0.1))]
    track = corner_migration_track(states)
    assert track.times == [0.0, 5.0, 10.0, 20.0]
    assert track.target_corner == (0.0, 0.0)
    assert track.transient_end == 1
    assert all(b <= a for a, b in zip(track.distances[1:], track.distances[2:]))
    assert track.approaches


def test_migration_rejects_bad_input(square64):
    f = _bumps(square64, [(0.0, 0.0)])
    with pytest.raises(InvalidParameterError):
        corner_migration_track([f])
    with pytest.raises(InvalidParameterError):
        corner_migration_track([f, _bumps(Grid.rectangle(32, 32), [(0.0, 0.0)])])


def test_spike_count_series(square64):
    corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (MID, MID)]
    v = ScalarField.constant(square64, 1.0)
    states = [initial_state(_bumps(square64, corners), v).model_copy(update={"t": 300.0}),
              initial_state(_bumps(square64, [(MID, MID)]), v).model_copy(update={"t": 1000.0})]
    assert spike_count_series(states) == [(300.0, 5), (1000.0, 1)]


def test_full_report_and_manifest_entries():
    grid = Grid.interval(1000)
    eps = 0.02
    profile = shoot_ground_state(power_law_analysis(1.0, 2.0, 1.0), N=1)
    w = ScalarField(grid=grid, values=transplant_spike(grid, eps, profile), name="w")
    v = w.with_values(0.3 + w.values, name="v")
    report = full_report(w, eps, v=v, profile=profile)
    assert report.platform == pytest.approx(0.3, abs=1e-6)
    assert report.profile_error <= 1e-6
    assert report.decay_mu == pytest.approx(1.0, rel=0.1)
    assert report.superlevel_diameter > 0

    entries = spike_report_entries(report)
    assert entries["spike_count"] == 1
    assert entries["spike_boundary_class"] == "edge"
    assert entries["spike_platform"] == report.platform
    assert "spike_decay_mu" in entries
