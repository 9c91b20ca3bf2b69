import math

import numpy as np
import pytest

from gridcontext.grid import Grid, ScalarField
from schemas.params_schema import ModelParams
from schemas.report_schema import SpikeSeed
from solvers.least_energy import (PROFILE_CACHE_SIZE, cone_function, cone_test_energy, constant_energy_bound, energy,
                                  energy_gradient, energy_value, ground_profile, least_energy_select, nehari_scale,
                                  rank_candidates, residual_identity_check, solve_local, spike_energy_scale)
from solvers.scalar_analysis import F_delta, analyze_delta, constant_level, theta_bound
from utils.errors import InvalidParameterError, NonconvergenceError, ResolutionError

EPS = 0.02


@pytest.fixture(scope="module")
def analysis9():
    return analyze_delta(ModelParams.from_reduced(p=2.0, c=1.0, m=1.0), 9.0)


@pytest.fixture(scope="module")
def line1000():
    return Grid.interval(1000)


@pytest.fixture(scope="module")
def corner_spike(analysis9, line1000):
    return solve_local(EPS, analysis9, line1000)


def test_energy_of_trivial_fields(nine_analysis, line256):
    assert energy(ScalarField.constant(line256, 0.0), EPS, nine_analysis).value == 0.0
    negative = energy(ScalarField.constant(line256, -1.0), EPS, nine_analysis)
    assert negative.value == pytest.approx(0.5 * nine_analysis.c_delta, rel=1e-12)


def test_energy_of_constant_solution(nine_analysis, line256):
    wbar = constant_level(nine_analysis)
    report = energy(ScalarField.constant(line256, wbar), EPS, nine_analysis)
    expected = 0.5 * nine_analysis.c_delta * wbar ** 2 - F_delta(nine_analysis, wbar)
    assert report.value == pytest.approx(expected, rel=1e-10)
    assert report.is_constant
    assert report.residual_identity_gap <= 1e-12


def test_gradient_matches_finite_differences(nine_analysis, line256):
    rng = np.random.default_rng(11)
    w = ScalarField(grid=line256, values=1.0 + rng.uniform(0.0, 1.0, line256.shape))
    d = rng.standard_normal(line256.shape)
    h = 1e-5
    fd = (energy_value(w.values + h * d, line256, EPS, nine_analysis)
          - energy_value(w.values - h * d, line256, EPS, nine_analysis)) / (2 * h)
    assert float(np.sum(energy_gradient(w, EPS, nine_analysis) * d)) == pytest.approx(fd, rel=1e-6)


def test_nehari_scale_closed_form(sech_analysis, line256):
    assert nehari_scale(ScalarField.constant(line256, 1.0), EPS, sech_analysis) == pytest.approx(1.0, rel=1e-10)
    assert nehari_scale(ScalarField.constant(line256, 2.0), EPS, sech_analysis) == pytest.approx(0.5, rel=1e-10)
    with pytest.raises(InvalidParameterError):
        nehari_scale(ScalarField.constant(line256, -1.0), EPS, sech_analysis)


def test_perturbed_constant_returns_to_constant(nine_analysis):
    grid = Grid.interval(64)
    w = solve_local(EPS, nine_analysis, grid, SpikeSeed(kind="constant", perturbation=1e-6))
    np.testing.assert_allclose(w.values, constant_level(nine_analysis), rtol=1e-9)


def test_corner_spike_solution(corner_spike, analysis9):
    w = corner_spike.values
    assert np.all(w > 0)
    assert int(np.argmax(w)) == 0
    assert w[-1] < 1e-6 * w[0]
    assert not energy(corner_spike, EPS, analysis9).is_constant

    (x,) = corner_spike.grid.mesh()
    profile = ground_profile(analysis9, 1)
    expected = profile.evaluate(x / EPS)
    assert np.max(np.abs(w - expected)) <= 0.02 * profile.w0


def test_spike_identities(corner_spike, analysis9):
    assert residual_identity_check(corner_spike, EPS, analysis9) <= 1e-8
    assert nehari_scale(corner_spike, EPS, analysis9) == pytest.approx(1.0, abs=1e-6)

    report = energy(corner_spike, EPS, analysis9)
    theta = theta_bound(analysis9, np.logspace(-3, 3, 200))
    assert report.value > 0
    assert (0.5 - theta) * report.norm_sq <= report.value <= 0.5 * report.norm_sq


def test_identity_fails_off_solutions(nine_analysis, line256):
    rng = np.random.default_rng(5)
    w = ScalarField(grid=line256, values=rng.uniform(0.0, 1.0, line256.shape))
    assert residual_identity_check(w, EPS, nine_analysis) > 0.1


def test_large_eps_only_constant(nine_analysis):
    grid = Grid.interval(64)
    w = solve_local(10.0, nine_analysis, grid)
    assert energy(w, 10.0, nine_analysis).is_constant
    np.testing.assert_allclose(w.values, constant_level(nine_analysis), rtol=1e-8)


def test_nonconvergence_carries_last_iterate(analysis9, line1000):
    with pytest.raises(NonconvergenceError) as info:
        solve_local(EPS, analysis9, line1000, max_iter=1)
    assert info.value.last_iterate.shape == line1000.shape


def test_solve_local_rejects_threshold(unit_params, line256):
    with pytest.raises(InvalidParameterError):
        solve_local(EPS, analyze_delta(unit_params, 4.0), line256)
    with pytest.raises(InvalidParameterError):
        solve_local(0.0, analyze_delta(unit_params, 9.0), line256)


def test_spike_beats_constant(corner_spike, analysis9, line1000):
    constant = ScalarField.constant(line1000, constant_level(analysis9), name="w")
    ranking = rank_candidates([constant, corner_spike], EPS, analysis9)
    assert ranking.selected.field is corner_spike
    assert not ranking.inconsistent
    assert least_energy_select([constant], EPS, analysis9) is constant
    with pytest.raises(InvalidParameterError):
        least_energy_select([], EPS, analysis9)


def test_inconsistency_needs_spike_energy_scale(analysis9, line1000):
    wbar = constant_level(analysis9)
    (x,) = line1000.mesh()
    ripple = ScalarField(grid=line1000, values=wbar * (1 + 0.1 * np.cos(60 * np.pi * x)), name="w")
    ranking = rank_candidates([ripple, ScalarField.constant(line1000, wbar, name="w")], EPS, analysis9)
    assert ranking.selected.report.is_constant
    assert ranking.ranked[1].report.value > spike_energy_scale(EPS, analysis9, 1)
    assert not ranking.inconsistent


def test_low_energy_spike_losing_to_constant_is_flagged(analysis9):
    tiny = Grid.interval(50, 0.01)
    wbar = constant_level(analysis9)
    (x,) = tiny.mesh()
    wobble = ScalarField(grid=tiny, values=wbar * (1 + 0.01 * np.cos(np.pi * x / 0.01)), name="w")
    ranking = rank_candidates([wobble, ScalarField.constant(tiny, wbar, name="w")], EPS, analysis9)
    assert ranking.selected.report.is_constant
    assert ranking.ranked[1].report.value <= spike_energy_scale(EPS, analysis9, 1)
    assert ranking.inconsistent


def test_ground_profile_cache_is_bounded(analysis9):
    first = ground_profile(analysis9, 1)
    assert ground_profile(analysis9, 1) is first
    info = ground_profile.cache_info()
    assert info.maxsize == PROFILE_CACHE_SIZE
    assert info.hits >= 1
    assert info.currsize <= PROFILE_CACHE_SIZE


def test_symmetric_tie_picks_smallest_location(corner_spike, analysis9):
    mirrored = corner_spike.with_values(corner_spike.values[::-1].copy())
    ranking = rank_candidates([mirrored, corner_spike], EPS, analysis9)
    assert ranking.selected.field is corner_spike
    assert ranking.selected.location[0] < 0.5


def test_constant_energy_bound(nine_analysis, line256):
    wbar = constant_level(nine_analysis)
    value = energy(ScalarField.constant(line256, wbar), EPS, nine_analysis).value
    assert 0 < constant_energy_bound(nine_analysis, line256) <= value


def test_cone_energy_positive_and_scales(sech_analysis, nine_analysis):
    grid = Grid.interval(2000)
    assert cone_test_energy(0.04, nine_analysis, grid) > 0
    big = cone_test_energy(0.04, sech_analysis, grid)
    small = cone_test_energy(0.02, sech_analysis, grid)
    assert small / big == pytest.approx(0.5, rel=0.15)


def test_cone_energy_decreases_past_maximizer(nine_analysis):
    grid = Grid.interval(2000)
    e = cone_function(grid, 0.04)
    t_star = nehari_scale(ScalarField(grid=grid, values=e), 0.04, nine_analysis)
    values = [energy_value(t * e, grid, 0.04, nine_analysis) for t in t_star * np.linspace(1.1, 3.0, 8)]
    assert np.all(np.diff(values) < 0)


def test_cone_requires_resolution(nine_analysis):
    with pytest.raises(ResolutionError):
        cone_test_energy(EPS, nine_analysis, Grid.interval(64))


@pytest.mark.slow
def test_least_energy_scales_like_eps(analysis9):
    grid = Grid.interval(1600)
    eps_list = [0.08, 0.04, 0.02, 0.01]
    values, norms = [], []
    for eps in eps_list:
        report = energy(solve_local(eps, analysis9, grid), eps, analysis9)
        values.append(report.value)
        norms.append(report.norm_sq)
    slope = np.polyfit(np.log(eps_list), np.log(values), 1)[0]
    assert 0.9 <= slope <= 1.1
    slope = np.polyfit(np.log(eps_list), np.log(norms), 1)[0]
    assert 0.9 <= slope <= 1.1


@pytest.mark.slow
def test_corner_spike_beats_edge_spike(analysis9):
    grid = Grid.rectangle(100, 100)
    eps = 0.08
    corner = solve_local(eps, analysis9, grid, SpikeSeed(point=(0.0, 0.0)))
    edge = solve_local(eps, analysis9, grid, SpikeSeed(point=(0.5, 0.0)))
    ranking = rank_candidates([edge, corner], eps, analysis9)
    assert ranking.selected.field is corner
    assert energy(corner, eps, analysis9).value < energy(edge, eps, analysis9).value
    assert math.isfinite(ranking.ranked[1].report.value)
