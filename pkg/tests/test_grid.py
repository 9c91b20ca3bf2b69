import math

import numpy as np
import pytest
import scipy.sparse as sp
from pydantic import ValidationError

from gridcontext.fluxes import sg_divergence, sg_operator
from gridcontext.grid import (Grid, ScalarField, boundary_class_of, gradient_inner, h1_eps_norm, integrate,
                              integrate_values, laplacian_neumann, laplacian_values)
from gridcontext.snapshots import read_field_csv, read_manifest, write_field_csv, write_manifest
from utils.errors import InvalidParameterError


def _cos_line(n):
    grid = Grid.interval(n)
    (x,) = grid.mesh()
    return grid, np.cos(math.pi * x)


def test_grid_rejects_too_few_cells():
    with pytest.raises(ValidationError):
        Grid.interval(4)


def test_field_rejects_nonfinite(line256):
    values = np.zeros(line256.shape)
    values[3] = np.nan
    with pytest.raises(ValidationError):
        ScalarField(grid=line256, values=values)


def test_laplacian_of_constant_is_zero(square64):
    f = ScalarField.constant(square64, 2.5)
    assert np.max(np.abs(laplacian_neumann(f).values)) == 0.0


def test_laplacian_cosine_1d():
    grid, f = _cos_line(256)
    err = np.max(np.abs(laplacian_values(f, grid) + math.pi ** 2 * f))
    assert err < 5e-4


def test_laplacian_cosine_2d():
    grid = Grid.rectangle(128, 128)
    X, Y = grid.mesh()
    f = np.cos(math.pi * X) * np.cos(math.pi * Y)
    err = np.max(np.abs(laplacian_values(f, grid) + 2 * math.pi ** 2 * f))
    assert err < 2e-3


def test_laplacian_second_order():
    errors = []
    for n in (32, 64, 128):
        grid, f = _cos_line(n)
        errors.append(np.max(np.abs(laplacian_values(f, grid) + math.pi ** 2 * f)))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.9)


def test_laplacian_matrix_matches_stencil(square64):
    rng = np.random.default_rng(0)
    f = rng.standard_normal(square64.shape)
    np.testing.assert_allclose(square64.laplacian_matrix @ f.ravel(), laplacian_values(f, square64).ravel(),
                               atol=1e-9)


def test_discrete_divergence_theorem(square64):
    rng = np.random.default_rng(1)
    f = rng.standard_normal(square64.shape)
    assert abs(integrate_values(laplacian_values(f, square64), square64)) <= 1e-12 * np.max(np.abs(f)) * 64 ** 2


def test_summation_by_parts(square64):
    X, Y = square64.mesh()
    f = np.exp(np.sin(3 * X) * np.cos(2 * Y))
    g = np.cos(5 * X * Y) + X ** 2
    lhs = integrate_values(g * laplacian_values(f, square64), square64)
    rhs = -gradient_inner(f, g, square64)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_integrate_examples(line256):
    assert integrate(ScalarField.constant(Grid.rectangle(16, 16), 3.0)) == pytest.approx(3.0, rel=1e-15)
    (x,) = line256.mesh()
    assert abs(integrate_values(np.cos(math.pi * x), line256)) < 1e-12
    assert integrate_values(np.cos(math.pi * x) ** 2, line256) == pytest.approx(0.5, abs=1e-6)


def test_h1_eps_norm(line256):
    (x,) = line256.mesh()
    f = ScalarField(grid=line256, values=np.cos(math.pi * x))
    assert h1_eps_norm(f, 1.0, 1.0) == pytest.approx(math.sqrt(math.pi ** 2 / 2 + 0.5), abs=1e-4)
    assert h1_eps_norm(f.with_values(2 * f.values), 0.3, 0.7) == pytest.approx(2 * h1_eps_norm(f, 0.3, 0.7),
                                                                               rel=1e-12)
    k = ScalarField.constant(line256, 1.7)
    assert h1_eps_norm(k, 0.1, 0.5) == pytest.approx(math.sqrt(0.5 * 1.7 ** 2), rel=1e-12)
    with pytest.raises(InvalidParameterError):
        h1_eps_norm(f, 1.0, 0.0)


def test_boundary_classes(square64):
    assert boundary_class_of(square64, (0, 0)) == "corner"
    assert boundary_class_of(square64, (0, 10)) == "edge"
    assert boundary_class_of(square64, (20, 63)) == "edge"
    assert boundary_class_of(square64, (20, 30)) == "interior"
    assert boundary_class_of(Grid.interval(16), (15,)) == "edge"


def test_sg_operator_conserves_and_matches_divergence(square64):
    X, Y = square64.mesh()
    psi = 2 * np.log(3 + np.cos(math.pi * X) * np.cos(math.pi * Y) + 1)
    A = sg_operator(psi, square64, d1=1.3)
    np.testing.assert_allclose(np.asarray(A.sum(axis=0)).ravel(), 0.0, atol=1e-9)
    offdiag = A - sp.diags(A.diagonal())
    assert offdiag.min() >= 0.0

    u = 1 + X * Y
    np.testing.assert_allclose(A @ u.ravel(), sg_divergence(u, psi, square64, 1.3).ravel(), atol=1e-9)


def test_sg_flux_vanishes_on_equilibrium(square64):
    X, Y = square64.mesh()
    psi = 3 * np.log(1 + X + 0.5 * np.sin(2 * Y))
    u = 0.7 * np.exp(psi)
    assert np.max(np.abs(sg_divergence(u, psi, square64, 1.0))) < 1e-8 * np.max(u) * 64 ** 2


def test_snapshot_header_and_reload(tmp_path, square64):
    X, Y = square64.mesh()
    f = ScalarField(grid=square64, values=np.sin(X) + Y / 3, name="v")
    path = write_field_csv(f, str(tmp_path / "v.csv"), t=12.5)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
    assert header == "# nx=64 ny=64 Lx=1.0 Ly=1.0 t=12.5 name=v"
    back, t = read_field_csv(path)
    assert t == 12.5
    assert np.array_equal(back.values, f.values)


def test_manifest_key_values(tmp_path):
    path = write_manifest(str(tmp_path / "m.txt"), {"a": 0.1, "flag": True, "pts": (0.0, 1.0), "name": "x"})
    assert read_manifest(path) == {"a": "0.1", "flag": "true", "pts": "0.0,1.0", "name": "x"}
