import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dswave.core import Grid, Problem, ScalarField, constant_source, derive_parameters

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def params_beta3():
    # alpha = 1, gamma = 1/2 gives beta = 3, m = 4/3
    return derive_parameters(1.0, 0.5, 2, 4.0)


def make_problem(v0, z=None, params=None, extent=None, f=0.0, boundary="ZeroFlux", eps=0.0, T=1.0):
    v0 = np.asarray(v0, dtype=float)
    n = v0.ndim
    params = params or derive_parameters(1.0, 0.5, n, 4.0 if n == 2 else None)
    grid = Grid(v0.shape, extent or (1.0,) * n)
    z = np.zeros(v0.shape) if z is None else np.asarray(z, dtype=float)
    return Problem(
        params=params,
        grid=grid,
        z=ScalarField(grid, z),
        v0=ScalarField(grid, v0),
        source=constant_source(grid, f),
        boundary=boundary,
        eps=eps,
        T=T,
    )


def dense_operator_1d(v, z, h, beta, gamma, eps=0.0, dirichlet=False):
    """Loop-by-loop 1D finite-volume operator, written independently of the package."""
    N = len(v)
    u = [v[i] + z[i] for i in range(N)]
    A = [0.0] * (N + 1)
    for f in range(1, N):
        vbar = 0.5 * (v[f - 1] + v[f])
        G = beta * vbar ** (beta - 1) * (u[f] - u[f - 1]) / h
        r2 = G * G + eps * eps
        A[f] = 0.0 if r2 == 0 else beta ** (-gamma) * r2 ** ((gamma - 1) / 2) * G
    if dirichlet:
        for f, cell, du in ((0, 0, v[0]), (N, N - 1, -v[N - 1])):
            vbar = 0.5 * v[cell]
            G = beta * vbar ** (beta - 1) * du / h
            r2 = G * G + eps * eps
            A[f] = 0.0 if r2 == 0 else beta ** (-gamma) * r2 ** ((gamma - 1) / 2) * G
    return np.array([(A[i + 1] - A[i]) / h for i in range(N)])


def dense_operator_2d(v, z, h, beta, gamma, eps=0.0):
    """Loop-based 2D ZeroFlux operator with face-averaged tangential derivatives."""
    nx, ny = v.shape
    u = v + z

    def cell_dy(i, j):
        if j == 0:
            return (u[i, 1] - u[i, 0]) / h[1]
        if j == ny - 1:
            return (u[i, ny - 1] - u[i, ny - 2]) / h[1]
        return (u[i, j + 1] - u[i, j - 1]) / (2 * h[1])

    def cell_dx(i, j):
        if i == 0:
            return (u[1, j] - u[0, j]) / h[0]
        if i == nx - 1:
            return (u[nx - 1, j] - u[nx - 2, j]) / h[0]
        return (u[i + 1, j] - u[i - 1, j]) / (2 * h[0])

    def flux(vbar, gn, gt):
        mob = beta * vbar ** (beta - 1)
        Gn, Gt = mob * gn, mob * gt
        r2 = Gn * Gn + Gt * Gt + eps * eps
        return 0.0 if r2 == 0 else beta ** (-gamma) * r2 ** ((gamma - 1) / 2) * Gn

    Ax = np.zeros((nx + 1, ny))
    for i in range(1, nx):
        for j in range(ny):
            vbar = 0.5 * (v[i - 1, j] + v[i, j])
            gn = (u[i, j] - u[i - 1, j]) / h[0]
            gt = 0.5 * (cell_dy(i - 1, j) + cell_dy(i, j))
            Ax[i, j] = flux(vbar, gn, gt)
    Ay = np.zeros((nx, ny + 1))
    for i in range(nx):
        for j in range(1, ny):
            vbar = 0.5 * (v[i, j - 1] + v[i, j])
            gn = (u[i, j] - u[i, j - 1]) / h[1]
            gt = 0.5 * (cell_dx(i, j - 1) + cell_dx(i, j))
            Ay[i, j] = flux(vbar, gn, gt)
    return (Ax[1:, :] - Ax[:-1, :]) / h[0] + (Ay[:, 1:] - Ay[:, :-1]) / h[1]
