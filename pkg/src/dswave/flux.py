"""Face-staggered discretisation of the flux ``A(v, grad v**beta)`` and its divergence.

The combined gradient ``G = grad v**beta + beta v**(alpha/gamma) grad z`` is
discretised through the chain rule as ``beta * vbar**(beta-1) * du/h`` with
``u = v + z`` and ``vbar`` the arithmetic face mean of ``v``.  Because the
surface difference ``du`` appears as a factor, a lake at rest (``u``
constant) produces an identically zero flux.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BoundaryCondition, Grid, Parameters, Problem, ScalarField
from .errors import DomainError

__all__ = [
    "FluxField",
    "combined_gradient",
    "vector_field_A",
    "divergence",
    "spatial_operator",
    "face_coefficients",
    "surface_differences",
]

# Surface differences below this many ulps of the local magnitude are rounding
# noise from forming u = v + z and are snapped to zero.
_SNAP_ULPS = 8.0


@dataclass(frozen=True)
class FluxField:
    """One ``n``-vector per face, grouped by face orientation.

    ``faces[d]`` has shape ``grid.shape`` with ``cells[d] + 1`` entries along
    axis ``d`` (boundary faces included), plus a trailing axis of length ``n``.
    """

    grid: Grid
    faces: tuple

    def normal(self, d: int) -> np.ndarray:
        return self.faces[d][..., d]

    def magnitude(self, d: int) -> np.ndarray:
        return np.sqrt(np.sum(self.faces[d] ** 2, axis=-1))


def _face_mean(a: np.ndarray, d: int) -> np.ndarray:
    lo = [slice(None)] * a.ndim
    hi = [slice(None)] * a.ndim
    lo[d] = slice(0, -1)
    hi[d] = slice(1, None)
    return 0.5 * (a[tuple(lo)] + a[tuple(hi)])


def _snapped_diff(u: np.ndarray, scale: np.ndarray, d: int) -> np.ndarray:
    du = np.diff(u, axis=d)
    tol = _SNAP_ULPS * np.finfo(float).eps * np.maximum(
        np.take(scale, range(u.shape[d] - 1), axis=d), np.take(scale, range(1, u.shape[d]), axis=d)
    )
    return np.where(np.abs(du) <= tol, 0.0, du)


def _pad_faces(interior: np.ndarray, d: int, lo=None, hi=None) -> np.ndarray:
    """Add the two boundary face layers along axis ``d`` (zeros unless given)."""
    shape = list(interior.shape)
    shape[d] = 1
    lo = np.zeros(shape) if lo is None else np.expand_dims(lo, d)
    hi = np.zeros(shape) if hi is None else np.expand_dims(hi, d)
    return np.concatenate([lo, interior, hi], axis=d)


def surface_differences(v: np.ndarray, z: np.ndarray, grid: Grid, boundary: BoundaryCondition):
    """Per face orientation ``d``: ``(vbar, du_normal/h, [du_tangential/h ...])``.

    Returns a list indexed by ``d`` of tuples ``(vbar, grad)`` where ``grad``
    has a trailing axis of length ``n`` holding the surface gradient at the
    face.  Boundary faces follow ``boundary``: zero under ZeroFlux, a ghost
    cell with ``v = 0`` and ``z`` mirrored under DirichletZeroV.
    """
    n = grid.n
    h = grid.h
    u = v + z
    scale = np.maximum.reduce([np.abs(u), np.abs(z), np.abs(v)])

    # cell-centred derivatives along every axis, used for tangential parts
    cell_grad = []
    for k in range(n):
        dk = _snapped_diff(u, scale, k) / h[k]
        lo = [slice(None)] * n
        lo[k] = slice(0, 1)
        hi = [slice(None)] * n
        hi[k] = slice(-1, None)
        padded = np.concatenate([dk[tuple(lo)], dk, dk[tuple(hi)]], axis=k)
        cell_grad.append(_face_mean(padded, k))

    out = []
    for d in range(n):
        vbar_int = _face_mean(v, d)
        grad_int = np.empty(vbar_int.shape + (n,))
        for k in range(n):
            if k == d:
                grad_int[..., k] = _snapped_diff(u, scale, d) / h[d]
            else:
                grad_int[..., k] = _face_mean(cell_grad[k], d)
        if boundary is BoundaryCondition.DIRICHLET_ZERO_V:
            first = np.take(v, 0, axis=d)
            last = np.take(v, -1, axis=d)
            vbar = _pad_faces(vbar_int, d, 0.5 * first, 0.5 * last)
            grad = np.zeros(vbar.shape + (n,))
            sl = [slice(None)] * n
            sl[d] = slice(1, -1)
            grad[tuple(sl)] = grad_int
            lo = [slice(None)] * n
            lo[d] = 0
            hi = [slice(None)] * n
            hi[d] = -1
            # ghost surface equals the boundary cell's bed: du = -v outward
            grad[tuple(lo) + (d,)] = first / h[d]
            grad[tuple(hi) + (d,)] = -last / h[d]
        else:
            vbar = _pad_faces(vbar_int, d)
            grad = np.zeros(vbar.shape + (n,))
            sl = [slice(None)] * n
            sl[d] = slice(1, -1)
            grad[tuple(sl)] = grad_int
        out.append((vbar, grad))
    return out


def combined_gradient(
    v: ScalarField,
    z: ScalarField,
    params: Parameters,
    boundary: BoundaryCondition = BoundaryCondition.ZERO_FLUX,
) -> FluxField:
    """Face values of ``G = beta * vbar**(beta-1) * grad u``."""
    vv = np.asarray(v.values)
    if np.any(vv < 0):
        raise DomainError("combined_gradient needs v >= 0")
    beta = params.beta
    faces = []
    for vbar, grad in surface_differences(vv, np.asarray(z.values), v.grid, BoundaryCondition.parse(boundary)):
        faces.append(beta * np.power(vbar, beta - 1.0)[..., None] * grad)
    return FluxField(v.grid, tuple(faces))


def _regularised_factor(norm2: np.ndarray, gamma: float, eps: float) -> np.ndarray:
    r2 = norm2 + eps * eps
    out = np.zeros_like(r2)
    pos = r2 > 0
    out[pos] = np.power(r2[pos], 0.5 * (gamma - 1.0))
    return out


def vector_field_A(G: FluxField, params: Parameters, eps: float = 0.0) -> FluxField:
    """``beta**(-gamma) * (|G|^2 + eps^2)**((gamma-1)/2) * G`` face by face.

    With ``eps = 0`` the map extends continuously by ``A = 0`` at ``G = 0``.
    """
    scale = params.beta ** (-params.gamma)
    faces = []
    for g in G.faces:
        factor = _regularised_factor(np.sum(g * g, axis=-1), params.gamma, eps)
        faces.append(scale * factor[..., None] * g)
    return FluxField(G.grid, tuple(faces))


def divergence(F: FluxField) -> ScalarField:
    """Finite-volume divergence: net outward normal flux per unit cell volume."""
    grid = F.grid
    total = np.zeros(grid.shape)
    for d in range(grid.n):
        total += np.diff(F.normal(d), axis=d) / grid.h[d]
    return ScalarField(grid, total)


def spatial_operator(v: ScalarField, problem: Problem) -> ScalarField:
    """``L(v) = div A(v, grad v**beta)`` so that ``dv/dt = L(v) + f``."""
    G = combined_gradient(v, problem.z, problem.params, problem.boundary)
    return divergence(vector_field_A(G, problem.params, problem.eps))


def face_coefficients(v: np.ndarray, problem: Problem, eps: float = None):
    """Per face orientation, the scalar ``K`` with ``A_normal = K * du/h``.

    ``K = beta**(1-gamma) * (|G|^2 + eps^2)**((gamma-1)/2) * vbar**(beta-1)``
    evaluated at the (frozen) state ``v``.  Used by the lagged implicit solve.
    """
    params = problem.params
    eps = problem.eps if eps is None else eps
    beta, gamma = params.beta, params.gamma
    out = []
    for vbar, grad in surface_differences(v, np.asarray(problem.z.values), problem.grid, problem.boundary):
        mob = beta * np.power(vbar, beta - 1.0)
        g = mob[..., None] * grad
        factor = _regularised_factor(np.sum(g * g, axis=-1), gamma, eps)
        out.append(beta ** (-gamma) * factor * mob)
    return out
