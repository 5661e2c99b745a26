import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dswave.core import Grid, ScalarField, derive_parameters
from dswave.errors import DomainError
from dswave.flux import FluxField, combined_gradient, divergence, spatial_operator, vector_field_A
from dswave.scenarios import build_problem, preset_config
from dswave.timestepper import run, StepControl

from conftest import dense_operator_1d, dense_operator_2d, make_problem

P1 = derive_parameters(1.0, 0.5, 1)  # beta = 3


def test_lake_at_rest_gives_zero_gradient():
    grid = Grid((6, 5), (1.0, 1.0))
    x, y = grid.centers()
    z = ScalarField(grid, 0.3 * np.sin(5 * x) * np.cos(3 * y))
    v = ScalarField(grid, 1.0 - z.values)
    G = combined_gradient(v, z, derive_parameters(1.0, 0.5, 2, 4.0))
    for d in range(2):
        assert np.all(G.faces[d] == 0.0)


def test_linear_depth_hand_stencil():
    grid = Grid((4,), (1.0,))
    v = ScalarField(grid, grid.axis_centers(0))
    G = combined_gradient(v, ScalarField.constant(grid, 0.0), P1)
    # 3 * vbar^2 * dv/h with dv/h = 1 and vbar = 0.25, 0.5, 0.75
    np.testing.assert_allclose(G.normal(0), [0.0, 0.1875, 0.75, 1.6875, 0.0], rtol=1e-15, atol=0)


def test_dry_faces_have_zero_gradient():
    grid = Grid((5,), (1.0,))
    v = ScalarField(grid, [0.0, 0.0, 1.0, 2.0, 0.0])
    G = combined_gradient(v, ScalarField.constant(grid, 0.0), P1).normal(0)
    assert G[1] == 0.0  # both neighbours dry


def test_negative_depth_rejected():
    grid = Grid((4,), (1.0,))
    with pytest.raises(DomainError):
        combined_gradient(ScalarField(grid, [1.0, -1.0, 1.0, 1.0]), ScalarField.constant(grid, 0.0), P1)


def _flux_of(vec):
    grid = Grid((4, 4), (1.0, 1.0))
    g = np.zeros((5, 4, 2))
    g[2, 1] = vec
    return FluxField(grid, (g, np.zeros((4, 5, 2))))


def test_vector_field_substitution():
    params = derive_parameters(1.0, 0.5, 2, 4.0)
    A = vector_field_A(_flux_of((4.0, 0.0)), params, 0.0)
    np.testing.assert_allclose(A.faces[0][2, 1], [2.0 / math.sqrt(3.0), 0.0], rtol=1e-15)
    assert np.all(vector_field_A(_flux_of((0.0, 0.0)), params, 0.0).faces[0] == 0.0)


@given(arrays(float, (5, 4, 2), elements=st.floats(-50, 50)), st.floats(0.05, 0.95))
def test_degenerate_magnitude_identity(g, gamma):
    params = derive_parameters(2.0, gamma, 2)
    G = FluxField(Grid((4, 4), (1.0, 1.0)), (g, np.zeros((4, 5, 2))))
    A = vector_field_A(G, params, 0.0).faces[0]
    expected = params.beta ** (-gamma) * np.linalg.norm(g, axis=-1) ** gamma
    np.testing.assert_allclose(np.linalg.norm(A, axis=-1), expected, rtol=1e-12, atol=1e-300)


def test_eps_consistency():
    params = derive_parameters(1.0, 0.5, 2, 4.0)
    rng = np.random.default_rng(3)
    g = rng.uniform(-2, 2, (5, 4, 2))
    G = FluxField(Grid((4, 4), (1.0, 1.0)), (g, np.zeros((4, 5, 2))))
    exact = vector_field_A(G, params, 0.0).faces[0]
    big = np.linalg.norm(g, axis=-1) >= 0.1
    norm2 = np.sum(g * g, axis=-1)
    prev = np.inf
    for eps in (1e-2, 1e-4, 1e-6):
        err = np.abs(vector_field_A(G, params, eps).faces[0] - exact)[big].max(axis=-1)
        # first-order expansion of (|G|^2+eps^2)^((gamma-1)/2)
        assert np.all(err <= eps**2 / norm2[big] * np.abs(exact[big]).max(axis=-1) + 1e-15)
        assert err.max() < prev
        prev = err.max()


def test_divergence_examples():
    grid = Grid((6,), (3.0,))
    const = np.full((7, 1), 2.5)
    assert np.all(divergence(FluxField(grid, (const,))).values == 0.0)
    linear = grid.axis_faces(0)[:, None]
    np.testing.assert_allclose(divergence(FluxField(grid, (linear,))).values, 1.0, rtol=1e-14)


def test_hat_function_against_dense_stencil():
    x = (np.arange(8) + 0.5) / 8
    v = np.maximum(0.0, 0.25 - np.abs(x - 0.5)) * 4
    p = make_problem(v, params=P1, eps=1e-3)
    L = spatial_operator(p.v0, p).values
    expected = dense_operator_1d(v, np.zeros(8), 1 / 8, 3.0, 0.5, eps=1e-3)
    np.testing.assert_allclose(L, expected, rtol=1e-14, atol=1e-14)


def test_dirichlet_boundary_against_dense_stencil():
    rng = np.random.default_rng(7)
    v = rng.uniform(0.1, 1.0, 10)
    z = rng.uniform(0.0, 0.5, 10)
    p = make_problem(v, z, params=P1, boundary="DirichletZeroV")
    L = spatial_operator(p.v0, p).values
    expected = dense_operator_1d(v, z, 0.1, 3.0, 0.5, dirichlet=True)
    np.testing.assert_allclose(L, expected, rtol=1e-13, atol=1e-13)


def test_dam_break_snapshot_against_dense_stencil():
    cfg = preset_config("dam_break", grid={"cells": [12, 10]}, stepping={"T": 0.05, "dt_max": 0.01})
    sol = run(build_problem(cfg), StepControl(dt_max=0.01, scheme="SemiImplicit"))
    problem = sol.problem
    v = sol.values[-1]
    L = spatial_operator(ScalarField(problem.grid, v), problem).values
    expected = dense_operator_2d(v, problem.z.values, problem.grid.h, problem.params.beta, problem.params.gamma, problem.eps)
    np.testing.assert_allclose(L, expected, rtol=1e-12, atol=1e-14 * np.abs(expected).max())


@given(
    arrays(float, (7, 6), elements=st.floats(0.0, 0.9)),
    st.floats(1.0, 3.0),
    st.floats(0.05, 0.95),
)
def test_well_balanced_random_topography(z, H, gamma):
    params = derive_parameters(2.0, gamma, 2)
    p = make_problem(H - z, z, params=params)
    assert np.abs(spatial_operator(p.v0, p).values).max() <= 1e-13


@given(arrays(float, (6, 5), elements=st.floats(0.0, 2.0)), arrays(float, (6, 5), elements=st.floats(-1, 1)))
def test_zero_flux_telescopes(v, z):
    p = make_problem(v, z, eps=1e-6)
    L = spatial_operator(p.v0, p).values
    scale = np.abs(L).sum() + 1e-300
    assert abs(L.sum()) <= 1e-12 * scale


def test_dry_domain_operator_is_zero():
    p = make_problem(np.zeros((5, 5)), np.random.default_rng(0).uniform(size=(5, 5)))
    assert np.all(spatial_operator(p.v0, p).values == 0.0)
