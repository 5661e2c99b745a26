"""Energy functionals evaluated on computed solutions.

Holds the boundary quantity ``b[v, w]``, space-time cylinders and cutoff
functions, both sides of the Caccioppoli inequality on nested cylinders, and
the residual of the weak formulation against a smooth test function.

Quadrature convention: a stored state at ``times[i]`` stands for the
interval ``(times[i-1], times[i]]``; spatial integrals are midpoint sums over
cells whose centres lie in the open ball.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Grid, Parameters, ScalarField, SpaceTimeSolution
from .errors import DomainError, GeometryError, QuadratureError
from .flux import combined_gradient, vector_field_A

__all__ = [
    "Cylinder",
    "CutoffFunction",
    "EnergyReport",
    "boundary_quantity",
    "check_boundary_bounds",
    "build_cutoff",
    "caccioppoli_report",
    "weak_residual",
    "time_weights",
    "ball_mask",
    "cell_gradient_magnitude",
]

MIN_TIME_SLICES = 4


@dataclass(frozen=True)
class Cylinder:
    """``B_radius(center) x (t_center - half_length, t_center + half_length)``."""

    center: tuple
    t_center: float
    radius: float
    half_length: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not (self.radius > 0 and self.half_length > 0):
            raise GeometryError("cylinder radius and half-length must be positive")

    @classmethod
    def intrinsic(cls, center, t_center: float, rho: float, params: Parameters) -> "Cylinder":
        """``Q_rho``: half-length ``rho**m`` with ``m = (beta+1)/beta``."""
        return cls(center, t_center, rho, rho**params.m)

    @property
    def t_lo(self) -> float:
        return self.t_center - self.half_length

    @property
    def t_hi(self) -> float:
        return self.t_center + self.half_length

    def contains(self, other: "Cylinder") -> bool:
        """Strict inclusion of ``other`` (closure of other inside self)."""
        dist = float(np.linalg.norm(np.subtract(self.center, other.center)))
        return (
            dist + other.radius < self.radius
            and other.t_lo > self.t_lo
            and other.t_hi < self.t_hi
        )

    def check_inside(self, grid: Grid, T: float) -> None:
        """Raise ``GeometryError`` unless the closed cylinder lies in ``Omega x (0, T)``."""
        c = np.array(self.center)
        if len(c) != grid.n:
            raise GeometryError(f"cylinder centre has {len(c)} coordinates, grid is {grid.n}D")
        if np.any(c - self.radius <= grid.lower()) or np.any(c + self.radius >= grid.upper()):
            raise GeometryError(
                f"ball of radius {self.radius:g} around ({_fmt(self.center)}) leaves the domain "
                f"[{_fmt(grid.lower())}]..[{_fmt(grid.upper())}]"
            )
        if self.t_lo <= 0 or self.t_hi >= T:
            raise GeometryError(f"time range ({self.t_lo:g}, {self.t_hi:g}) not inside (0, {T:g})")

    def as_dict(self) -> dict:
        return {"center": list(self.center), "t_center": self.t_center, "radius": self.radius,
                "half_length": self.half_length}


def _fmt(xs) -> str:
    return ", ".join(f"{float(x):g}" for x in xs)


def ball_mask(grid: Grid, center, radius: float) -> np.ndarray:
    r2 = sum((x - c) ** 2 for x, c in zip(grid.centers(), center))
    return r2 < radius * radius


def time_weights(times: np.ndarray, t_lo: float, t_hi: float) -> np.ndarray:
    """Length of ``(times[i-1], times[i]] ∩ (t_lo, t_hi)`` for each stored state."""
    times = np.asarray(times)
    w = np.zeros(len(times))
    if len(times) > 1:
        lo = np.maximum(times[:-1], t_lo)
        hi = np.minimum(times[1:], t_hi)
        w[1:] = np.maximum(hi - lo, 0.0)
    return w


def _resolve(sol: SpaceTimeSolution, cyl: Cylinder, require: int = MIN_TIME_SLICES):
    cyl.check_inside(sol.grid, sol.T)
    mask = ball_mask(sol.grid, cyl.center, cyl.radius)
    if not mask.any():
        raise GeometryError("cylinder ball contains no cell centres")
    w = time_weights(sol.times, cyl.t_lo, cyl.t_hi)
    if np.count_nonzero(w) < require:
        raise QuadratureError(
            f"only {np.count_nonzero(w)} stored slices inside ({cyl.t_lo:g}, {cyl.t_hi:g}); need {require}"
        )
    return mask, w


def _space_time_integral(values: np.ndarray, mask: np.ndarray, weights: np.ndarray, vol: float) -> float:
    per_slice = np.sum(np.where(mask, values, 0.0), axis=tuple(range(1, values.ndim)))
    return float(np.sum(per_slice * weights) * vol)


# ---------------------------------------------------------------------------
# boundary quantity

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS
# below this |w - v| / max(v, w) the integral forms are used to avoid cancellation
_NEAR = 0.5


def _check_pair(v, w, beta):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(v < 0) or np.any(w < 0):
        raise DomainError("boundary_quantity needs v, w >= 0")
    if not beta > 0:
        raise DomainError("beta must be positive")
    return np.broadcast_arrays(v, w)


def _near_integrals(v, w, beta):
    """``∫_0^1 beta s^(beta-1) theta`` and ``∫_0^1 q s^(q-1)`` along ``s = v + (w-v) theta``."""
    q = 0.5 * (beta + 1.0)
    s = v[..., None] + (w - v)[..., None] * _GL_NODES
    ib = np.sum(_GL_WEIGHTS * _GL_NODES * beta * s ** (beta - 1.0), axis=-1)
    iq = np.sum(_GL_WEIGHTS * q * s ** (q - 1.0), axis=-1)
    return ib, iq


def boundary_quantity(v, w, beta: float):
    """``b[v, w] = beta/(beta+1) (w^(beta+1) - v^(beta+1)) + v (v^beta - w^beta)``.

    Close pairs use ``(w-v)^2 ∫_0^1 beta s^(beta-1) theta dtheta``, which is
    the same quantity without the cancellation of the direct formula.
    """
    v, w = _check_pair(v, w, beta)
    out = beta / (beta + 1.0) * (w ** (beta + 1.0) - v ** (beta + 1.0)) + v * (v**beta - w**beta)
    near = (w != v) & (np.abs(w - v) <= _NEAR * np.maximum(v, w))
    if np.any(near):
        ib, _ = _near_integrals(v[near], w[near], beta)
        out = np.array(out, dtype=float)
        out[near] = (w[near] - v[near]) ** 2 * ib
    return out if out.ndim else float(out)


def boundary_ratio(v, w, beta: float):
    """``b[v, w] / |v^((beta+1)/2) - w^((beta+1)/2)|^2`` for ``v != w``."""
    v, w = _check_pair(v, w, beta)
    # both sides are homogeneous of degree beta+1; rescaling avoids underflow
    scale = np.maximum(v, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        v, w = (np.where(scale > 0, v / scale, v), np.where(scale > 0, w / scale, w))
    q = 0.5 * (beta + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(boundary_quantity(v, w, beta) / (v**q - w**q) ** 2, dtype=float)
    near = np.abs(w - v) <= _NEAR * np.maximum(v, w)
    if np.any(near):
        ib, iq = _near_integrals(v[near], w[near], beta)
        out = np.array(out)
        out[near] = ib / iq**2
    return out if out.ndim else float(out)


def check_boundary_bounds(samples: int, beta: float, seed: int = 0, upper: float = 10.0):
    """Extremes ``(max_ratio, min_ratio)`` of :func:`boundary_ratio` over random pairs in ``[0, upper]^2``."""
    if samples < 1:
        raise DomainError("need at least one sample")
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.0, upper, samples)
    w = rng.uniform(0.0, upper, samples)
    keep = np.abs(v - w) > 1e-9 * upper
    r = boundary_ratio(v[keep], w[keep], beta)
    return float(np.max(r)), float(np.min(r))


# ---------------------------------------------------------------------------
# cutoff functions

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _dsmoothstep(x):
    inside = (x > 0) & (x < 1)
    return np.where(inside, 6.0 * x * (1.0 - x), 0.0)


@dataclass(frozen=True)
class CutoffFunction:
    """``phi(x, t) = eta(|x - x_o|) * psi(|t - t_o|)`` with C^1 cubic transitions.

    ``eta`` falls from 1 at ``inner.radius`` to 0 at ``outer.radius`` and
    ``psi`` from 1 at ``inner.half_length`` to 0 at ``outer.half_length``.
    The cubic ``3s^2 - 2s^3`` has slope at most 3/2, under the bound 2.
    """

    inner: Cylinder
    outer: Cylinder

    def _s_space(self, x):
        r = np.sqrt(sum((xi - c) ** 2 for xi, c in zip(x, self.outer.center)))
        width = self.outer.radius - self.inner.radius
        return r, (r - self.inner.radius) / width, width

    def _s_time(self, t):
        dt = np.asarray(t, dtype=float) - self.outer.t_center
        width = self.outer.half_length - self.inner.half_length
        return dt, (np.abs(dt) - self.inner.half_length) / width, width

    def spatial(self, x):
        _, s, _ = self._s_space(x)
        return 1.0 - _smoothstep(s)

    def temporal(self, t):
        _, s, _ = self._s_time(t)
        return 1.0 - _smoothstep(s)

    def __call__(self, x, t):
        return self.spatial(x) * self.temporal(t)

    def spatial_gradient_profile(self, x):
        """Gradient of ``eta`` at points ``x`` (tuple of coordinate arrays)."""
        r, s, width = self._s_space(x)
        dr = -_dsmoothstep(s) / width
        safe = np.where(r > 0, r, 1.0)
        return tuple(np.where(r > 0, dr * (xi - c) / safe, 0.0) for xi, c in zip(x, self.outer.center))

    def gradient(self, x, t):
        psi = self.temporal(t)
        return tuple(g * psi for g in self.spatial_gradient_profile(x))

    def time_derivative(self, x, t):
        dt, s, width = self._s_time(t)
        return self.spatial(x) * (-_dsmoothstep(s) / width * np.sign(dt))


def build_cutoff(inner: Cylinder, outer: Cylinder) -> CutoffFunction:
    if tuple(inner.center) != tuple(outer.center) or inner.t_center != outer.t_center:
        raise GeometryError("cutoff cylinders must share their centre")
    if not outer.contains(inner):
        raise GeometryError("inner cylinder must lie strictly inside the outer one")
    return CutoffFunction(inner, outer)


# ---------------------------------------------------------------------------
# Caccioppoli functional

RHS_TERMS = ("gradient_cutoff", "time_cutoff", "v_power", "truncation", "source", "topography")


@dataclass
class EnergyReport:
    k: float
    lhs_gradient_term: float
    lhs_sup_term: float
    rhs_terms: dict = field(default_factory=dict)
    empirical_ratio: float = 0.0

    @property
    def lhs_total(self) -> float:
        return self.lhs_gradient_term + self.lhs_sup_term

    @property
    def rhs_total(self) -> float:
        return float(sum(self.rhs_terms.values()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lhs_total"] = self.lhs_total
        d["rhs_total"] = self.rhs_total
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def cell_gradient_magnitude(values: np.ndarray, grid: Grid) -> np.ndarray:
    """``|grad|`` of each slice by central differences (one-sided at the edge)."""
    axes = range(values.ndim - grid.n, values.ndim)
    comps = [np.gradient(values, grid.h[d], axis=ax, edge_order=1) for d, ax in enumerate(axes)]
    return np.sqrt(sum(c * c for c in comps))


def caccioppoli_report(sol: SpaceTimeSolution, inner: Cylinder, outer: Cylinder, k: float) -> EnergyReport:
    """Both sides of the cylinder energy inequality, constant omitted.

    LHS: gradient of ``(v^beta - k^beta)_+`` to the power ``gamma+1`` over the
    inner cylinder plus the largest slice integral of
    ``(v^((beta+1)/2) - k^((beta+1)/2))_+^2``.  RHS: the six outer-cylinder
    integrals with weights ``(R - rho)^-(gamma+1)`` and ``(theta - s)^-1``.
    """
    if not k >= 0:
        raise DomainError("level k must be nonnegative")
    if not (tuple(inner.center) == tuple(outer.center) and inner.t_center == outer.t_center):
        raise GeometryError("inner and outer cylinders must be concentric")
    if not (inner.radius < outer.radius and inner.half_length < outer.half_length):
        raise GeometryError("need rho < R and s < theta")
    params = sol.params
    beta, gamma = params.beta, params.gamma
    grid = sol.grid
    vol = grid.cell_volume
    mask_o, w_o = _resolve(sol, outer)
    mask_i, w_i = _resolve(sol, inner)

    v = sol.values
    q = 0.5 * (beta + 1.0)
    trunc_beta = np.maximum(v**beta - k**beta, 0.0)
    trunc_half = np.maximum(v**q - k**q, 0.0)
    above = v > k

    grad_trunc = cell_gradient_magnitude(trunc_beta, grid)
    lhs_grad = _space_time_integral(grad_trunc ** (gamma + 1.0), mask_i, w_i, vol)
    slice_energy = np.sum(np.where(mask_i, trunc_half**2, 0.0), axis=tuple(range(1, v.ndim))) * vol
    lhs_sup = float(np.max(slice_energy[w_i > 0]))

    R_minus_rho = outer.radius - inner.radius
    theta_minus_s = outer.half_length - inner.half_length
    grad_z = cell_gradient_magnitude(np.asarray(sol.problem.z.values), grid)
    abs_f = np.abs(sol.sources)
    restrict = mask_o[None, ...] & above
    rhs = {
        "gradient_cutoff": _space_time_integral(trunc_beta ** (gamma + 1.0), mask_o, w_o, vol) / R_minus_rho ** (gamma + 1.0),
        "time_cutoff": _space_time_integral(trunc_half**2, mask_o, w_o, vol) / theta_minus_s,
        "v_power": _space_time_integral(np.where(restrict, v ** (beta * (gamma + 1.0)), 0.0), True, w_o, vol),
        "truncation": _space_time_integral(np.where(restrict, trunc_beta ** (gamma + 1.0), 0.0), True, w_o, vol),
        "source": _space_time_integral(np.where(restrict, abs_f ** ((gamma + 1.0) / gamma), 0.0), True, w_o, vol),
        "topography": _space_time_integral(
            np.where(restrict, grad_z[None, ...] ** (beta * (gamma + 1.0)), 0.0), True, w_o, vol
        ),
    }
    report = EnergyReport(k=float(k), lhs_gradient_term=lhs_grad, lhs_sup_term=lhs_sup, rhs_terms=rhs)
    rhs_total = report.rhs_total
    if rhs_total > 0:
        report.empirical_ratio = report.lhs_total / rhs_total
    elif report.lhs_total == 0:
        report.empirical_ratio = 0.0
    else:
        report.empirical_ratio = math.inf
    return report


# ---------------------------------------------------------------------------
# weak formulation

def weak_residual(sol: SpaceTimeSolution, phi: CutoffFunction) -> float:
    """``|∫∫ A·grad(phi) - v d_t(phi) - f phi|`` over the stored solution.

    ``A`` is the face flux of each stored state, paired with ``grad phi`` at
    face centres and interval midpoints.  The time term integrates
    ``d_t phi`` exactly against the piecewise-constant depth, i.e. it uses
    ``phi(t_i) - phi(t_{i-1})``.
    """
    problem = sol.problem
    grid = sol.grid
    vol = grid.cell_volume
    params = problem.params
    times = sol.times
    centers = grid.centers()
    face_pts = [grid.face_centers(d) for d in range(grid.n)]
    total_flux = 0.0
    total_time = 0.0
    total_src = 0.0
    for i in range(1, len(times)):
        t0, t1 = times[i - 1], times[i]
        dt = t1 - t0
        tm = 0.5 * (t0 + t1)
        if phi.temporal(t0) == 0 and phi.temporal(t1) == 0 and phi.temporal(tm) == 0:
            continue
        v = ScalarField(grid, sol.values[i])
        A = vector_field_A(combined_gradient(v, problem.z, params, problem.boundary), params, problem.eps)
        for d in range(grid.n):
            dphi = phi.gradient(face_pts[d], tm)[d]
            total_flux += float(np.sum(A.normal(d) * dphi)) * vol * dt
        total_time += float(np.sum(sol.values[i] * (phi(centers, t1) - phi(centers, t0)))) * vol
        total_src += float(np.sum(sol.sources[i] * phi(centers, tm))) * vol * dt
    return abs(total_flux - total_time - total_src)
