import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dswave import degiorgi
from dswave.core import SpaceTimeSolution, derive_parameters
from dswave.degiorgi import (
    IterationConstants,
    IterationSchedule,
    certify,
    convergence_threshold,
    fast_convergence,
    level_set_integral,
    theorem_level,
)
from dswave.energy import Cylinder, ball_mask, time_weights
from dswave.errors import CalibrationError, DomainError, GeometryError
from dswave.scenarios import build_control, build_problem, preset_config
from dswave.suites import direct_iteration_converges
from dswave.timestepper import run

from conftest import make_problem


def _solution(values_2d, n_steps=40, z=None):
    values_2d = np.asarray(values_2d, dtype=float)
    p = make_problem(values_2d, z)
    times = np.linspace(0, 1, n_steps + 1)
    vals = np.broadcast_to(values_2d, (n_steps + 1,) + values_2d.shape).copy()
    return SpaceTimeSolution(p, times, vals, np.zeros_like(vals))


def test_schedule_endpoints():
    s = IterationSchedule(rho=0.4, m=4 / 3, beta=3.0, k=2.0, j_max=10)
    assert s.radii[0] == pytest.approx(0.4) and s.radii[-1] == pytest.approx(0.2, rel=1e-3)
    assert s.half_lengths[0] == pytest.approx(0.4 ** (4 / 3), rel=1e-14)
    assert s.levels[0] == 0.0 and s.levels[-1] == pytest.approx(2.0, rel=1e-3)
    assert np.all(np.diff(s.radii) < 0) and np.all(np.diff(s.half_lengths) < 0)
    assert np.all(np.diff(s.levels) > 0)
    assert np.all((s.mid_radii < s.radii[:-1]) & (s.mid_radii > s.radii[1:]))


def test_constants_for_reference_parameters():
    params = derive_parameters(1.0, 0.5, 2, 4.0)
    c = IterationConstants.from_parameters(params)
    assert c.b == pytest.approx(2.0 ** (2.25 * (4 / 3 + 3.5) / (4 / 3 + 2)), rel=1e-14)
    assert c.delta == pytest.approx(0.1875, rel=1e-14)


def test_fast_convergence_reference_case():
    assert convergence_threshold(2, 2, 1) == pytest.approx(0.25, rel=1e-15)
    ok, trace = fast_convergence(0.25, 2, 2, 1, 8)
    assert ok
    np.testing.assert_allclose(trace, [0.25 * 2.0**-j for j in range(9)], rtol=1e-13)
    ok, trace = fast_convergence(1.0, 2, 2, 1, 8)
    assert not ok and trace[-1] > 1e10
    ok, trace = fast_convergence(0.0, 2, 2, 1, 3)
    assert ok and trace == [0.0] * 4
    with pytest.raises(DomainError):
        fast_convergence(0.1, 1.0, 2, 1, 3)
    with pytest.raises(DomainError):
        fast_convergence(-0.1, 2, 2, 1, 3)


@given(
    st.floats(1.1, 10), st.floats(1.5, 4), st.floats(0.1, 2), st.floats(-3, 3), st.integers(1, 6)
)
def test_trace_solves_recursion(C, b, delta, log_mu, j):
    Y0 = 10.0**log_mu * convergence_threshold(C, b, delta)
    _, trace = fast_convergence(Y0, C, b, delta, j)
    prev = trace[j - 1]
    assume(0 < prev and math.isfinite(trace[j]) and trace[j] > 1e-300)
    assert trace[j] == pytest.approx(C * b ** (j - 1) * prev ** (1 + delta), rel=1e-8)


@given(st.floats(1.1, 10), st.floats(1.5, 4), st.floats(0.1, 2), st.floats(-3, 3))
def test_verdict_matches_direct_iteration(C, b, delta, log_mu):
    assume(abs(log_mu) > 1e-6)
    Y0 = 10.0**log_mu * convergence_threshold(C, b, delta)
    ok, _ = fast_convergence(Y0, C, b, delta, 5)
    assert ok == direct_iteration_converges(Y0, C, b, delta)


def test_level_set_integral_constant_field():
    sol = _solution(np.full((16, 16), 2.0))
    Q = Cylinder((0.5, 0.5), 0.5, 0.3, 0.2)
    vol = np.count_nonzero(ball_mask(sol.grid, Q.center, Q.radius)) * sol.grid.cell_volume
    tlen = time_weights(sol.times, Q.t_lo, Q.t_hi).sum()
    assert level_set_integral(sol, Q, 0.0) == pytest.approx(22.627416997969522 * vol * tlen, rel=1e-13)
    assert level_set_integral(sol, Q, 2.0) == 0.0
    with pytest.raises(DomainError):
        level_set_integral(sol, Q, -1.0)


def test_level_zero_is_power_integral():
    v = np.random.default_rng(1).uniform(0, 3, (16, 16))
    sol = _solution(v)
    Q = Cylinder((0.5, 0.5), 0.5, 0.4, 0.3)
    mask = ball_mask(sol.grid, Q.center, Q.radius)
    tlen = time_weights(sol.times, Q.t_lo, Q.t_hi).sum()
    expected = np.sum(v[mask] ** 4.5) * sol.grid.cell_volume * tlen
    assert level_set_integral(sol, Q, 0.0) == pytest.approx(expected, rel=1e-12)


def test_theorem_level_exponent_and_linearity():
    sol = _solution(np.zeros((16, 16)))
    k1 = theorem_level(sol, (0.5, 0.5), 0.5, 0.25, 1.0)
    assert k1 == pytest.approx(0.25**-0.875, rel=1e-14)
    assert theorem_level(sol, (0.5, 0.5), 0.5, 0.25, 3.0) == pytest.approx(3 * k1, rel=1e-14)
    with pytest.raises(DomainError):
        theorem_level(sol, (0.5, 0.5), 0.5, 0.25, 0.5)
    with pytest.raises(DomainError):
        theorem_level(sol, (0.5, 0.5), 0.5, 1.5, 1.0)


def test_certify_zero_solution():
    rep = certify(_solution(np.zeros((16, 16))), (0.5, 0.5), 0.5, 0.25)
    assert rep.converged and rep.bound_satisfied and rep.calibrated_c == 1.0
    assert rep.measured_sup == 0.0 and all(y == 0.0 for _, y in rep.Y_trace)
    assert rep.to_dict()["Y_trace"][0] == [0, 0.0]


def test_certify_still_water():
    z = np.random.default_rng(0).uniform(0, 0.5, (16, 16))
    rep = certify(_solution(1.0 - z, z=z), (0.5, 0.5), 0.5, 0.25)
    assert rep.bound_satisfied and rep.Y_trace[-1][1] == 0.0
    assert rep.measured_sup <= 1.0


def _spike(value=100.0):
    v = np.zeros((64, 64))
    v[32, 32] = value
    return _solution(v), (32.5 / 64, 32.5 / 64)


def test_certify_doubles_c_for_a_spike():
    sol, x = _spike()
    rep = certify(sol, x, 0.5, 0.25)
    assert rep.calibrated_c == 2.0 and rep.attempts == 2
    assert rep.measured_sup == 100.0 and rep.bound_satisfied


def test_certify_calibration_cap(monkeypatch):
    sol, x = _spike()
    monkeypatch.setattr(degiorgi, "C_CAP", 1.0)
    with pytest.raises(CalibrationError):
        certify(sol, x, 0.5, 0.25)


def test_certify_geometry_and_domain_errors():
    sol = _solution(np.ones((16, 16)))
    with pytest.raises(GeometryError):
        certify(sol, (0.5, 0.5), 0.5, 0.9)
    with pytest.raises(GeometryError):
        certify(sol, (0.5, 0.5), 0.05, 0.25)
    with pytest.raises(DomainError):
        certify(sol, (0.5, 0.5), 0.5, 0.25, j_max=0)


def test_certify_dam_break():
    cfg = preset_config("dam_break", grid={"cells": [16, 16]})
    sol = run(build_problem(cfg), build_control(cfg))
    rep = certify(sol, (0.3, 0.5), 0.5, 0.25)
    assert rep.converged and rep.bound_satisfied
    ys = [y for _, y in rep.Y_trace]
    assert all(b <= a for a, b in zip(ys, ys[1:]))
