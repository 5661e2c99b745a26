"""Time integration of ``dv/dt = L(v) + f`` with clipping at zero depth."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import BoundaryCondition, Problem, ScalarField, SpaceTimeSolution, validate_problem
from .errors import ConvergenceError, DomainError, ValidationError
from .flux import face_coefficients, spatial_operator, surface_differences

log = logging.getLogger(__name__)

__all__ = ["Scheme", "StepControl", "StepDiagnostics", "stable_dt", "step", "run"]

_TINY = 1e-300


class Scheme(enum.Enum):
    EXPLICIT = "Explicit"
    SEMI_IMPLICIT = "SemiImplicit"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name, member.value.lower()):
                return member
        raise DomainError(f"unknown scheme {value!r}")


@dataclass(frozen=True)
class StepControl:
    cfl: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    scheme: Scheme = Scheme.EXPLICIT
    max_newton_iters: int = 50
    newton_tol: float = 1e-10
    damping: float = 1.0
    store_every: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not (0 < self.cfl <= 1):
            raise DomainError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not (0 < self.dt_min <= self.dt_max):
            raise DomainError("need 0 < dt_min <= dt_max")
        if self.store_every < 1:
            raise DomainError("store_every must be >= 1")
        if not (0 < self.damping <= 1):
            raise DomainError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class StepDiagnostics:
    dt: float
    clipped_mass: float
    iterations: int = 0


def max_diffusivity(v: np.ndarray, problem: Problem) -> float:
    """``max_faces vbar**alpha * (|grad u|^2 + eps^2)**((gamma-1)/2)``; dry faces count as 0."""
    params = problem.params
    best = 0.0
    for vbar, grad in surface_differences(v, np.asarray(problem.z.values), problem.grid, problem.boundary):
        wet = vbar > 0
        if not np.any(wet):
            continue
        r2 = np.sum(grad[wet] ** 2, axis=-1) + problem.eps**2
        with np.errstate(divide="ignore"):
            d = np.power(vbar[wet], params.alpha) * np.where(r2 > 0, np.power(r2, 0.5 * (params.gamma - 1.0)), np.inf)
        best = max(best, float(np.max(d)))
    return best


def stable_dt(v: ScalarField, problem: Problem, ctrl: StepControl) -> float:
    """CFL-type step ``cfl * h^2 / (2 n D_max)`` clamped to ``[dt_min, dt_max]``."""
    d_max = max_diffusivity(np.asarray(v.values), problem)
    h2 = min(problem.grid.h) ** 2
    dt = ctrl.cfl * h2 / (2 * problem.grid.n * d_max + _TINY)
    return float(min(max(dt, ctrl.dt_min), ctrl.dt_max))


def _clip(v: np.ndarray, vol: float):
    neg = np.minimum(v, 0.0)
    return np.maximum(v, 0.0), float(-neg.sum() * vol) + 0.0


def _assemble(w: np.ndarray, problem: Problem, dt: float):
    """Matrix ``I - dt*D_K`` and the bed forcing ``dt*D_K z`` with ``K`` frozen at ``w``."""
    grid = problem.grid
    N = grid.size
    idx = np.arange(N).reshape(grid.shape)
    z = np.asarray(problem.z.values)
    coeffs = face_coefficients(np.maximum(w, 0.0), problem)
    rows, cols, vals = [], [], []
    diag = np.ones(N)
    forcing = np.zeros(N)
    for d in range(grid.n):
        K = coeffs[d]
        inner = [slice(None)] * grid.n
        inner[d] = slice(1, -1)
        a = (dt * K[tuple(inner)] / grid.h[d] ** 2).ravel()
        lo = [slice(None)] * grid.n
        lo[d] = slice(0, -1)
        hi = [slice(None)] * grid.n
        hi[d] = slice(1, None)
        p = idx[tuple(lo)].ravel()
        q = idx[tuple(hi)].ravel()
        np.add.at(diag, p, a)
        np.add.at(diag, q, a)
        rows += [p, q]
        cols += [q, p]
        vals += [-a, -a]
        dz = z.ravel()[q] - z.ravel()[p]
        np.add.at(forcing, p, a * dz)
        np.add.at(forcing, q, -a * dz)
        if problem.boundary is BoundaryCondition.DIRICHLET_ZERO_V:
            for face, cell in ((0, 0), (-1, -1)):
                fs = [slice(None)] * grid.n
                fs[d] = face
                cs = [slice(None)] * grid.n
                cs[d] = cell
                ab = (dt * K[tuple(fs)] / grid.h[d] ** 2).ravel()
                np.add.at(diag, idx[tuple(cs)].ravel(), ab)
    rows.append(np.arange(N))
    cols.append(np.arange(N))
    vals.append(diag)
    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    return M, forcing


def _solve(M, b: np.ndarray) -> np.ndarray:
    return spla.spsolve(M.tocsc(), b, permc_spec="MMD_AT_PLUS_A")


def step(v: ScalarField, t: float, dt: float, problem: Problem, ctrl: StepControl):
    """Advance one step; returns ``(new_state, StepDiagnostics)``."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    vv = np.asarray(v.values)
    if np.any(vv < 0):
        raise DomainError("step needs v >= 0")
    vol = problem.grid.cell_volume
    f = problem.f(t)
    if ctrl.scheme is Scheme.EXPLICIT:
        raw = vv + dt * (np.asarray(spatial_operator(v, problem).values) + f)
        new, clipped = _clip(raw, vol)
        return ScalarField(problem.grid, new), StepDiagnostics(dt, clipped, 0)

    rhs_base = (vv + dt * f).ravel()
    w = vv.copy()
    scale = max(1.0, float(np.max(np.abs(vv))))
    for it in range(1, ctrl.max_newton_iters + 1):
        M, forcing = _assemble(w, problem, dt)
        sol = _solve(M, rhs_base + forcing).reshape(problem.grid.shape)
        nxt = (1.0 - ctrl.damping) * w + ctrl.damping * sol
        change = float(np.max(np.abs(nxt - w)))
        w = nxt
        if change <= ctrl.newton_tol * scale:
            new, clipped = _clip(w, vol)
            return ScalarField(problem.grid, new), StepDiagnostics(dt, clipped, it)
    raise ConvergenceError(
        f"lagged-coefficient iteration stalled after {ctrl.max_newton_iters} iterations at t={t:g} (last change {change:.3e})"
    )


def run(problem: Problem, ctrl: StepControl = StepControl()) -> SpaceTimeSolution:
    """Integrate from 0 to ``problem.T``, storing every ``ctrl.store_every``-th state."""
    violations = validate_problem(problem)
    if violations:
        raise ValidationError(violations)
    grid = problem.grid
    vol = grid.cell_volume
    v = problem.v0
    t = 0.0
    times = [0.0]
    states = [np.array(v.values)]
    sources = [np.zeros(grid.shape)]
    f_acc = np.zeros(grid.shape)
    acc_dt = 0.0
    dts, clipped, masses, maxes, step_times = [], [], [], [], []
    T = float(problem.T)
    k = 0
    while t < T:
        if ctrl.scheme is Scheme.EXPLICIT:
            dt = stable_dt(v, problem, ctrl)
        else:
            dt = ctrl.dt_max
        last = T - (t + dt) <= 1e-12 * T
        if last:
            dt = T - t
        f_acc += problem.f(t) * dt
        acc_dt += dt
        v, diag = step(v, t, dt, problem, ctrl)
        k += 1
        t = T if last else t + dt
        dts.append(dt)
        clipped.append(diag.clipped_mass)
        masses.append(float(np.sum(v.values)) * vol)
        maxes.append(float(np.max(v.values)))
        step_times.append(t)
        if k % ctrl.store_every == 0 or t >= T:
            times.append(t)
            states.append(np.array(v.values))
            sources.append(f_acc / acc_dt)
            f_acc = np.zeros(grid.shape)
            acc_dt = 0.0
    log.debug("run finished: %d steps, clipped mass %.3e", k, sum(clipped))
    return SpaceTimeSolution(
        problem=problem,
        times=np.array(times),
        values=np.stack(states),
        sources=np.stack(sources),
        step_dt=np.array(dts),
        step_clipped=np.array(clipped),
        step_mass=np.array(masses),
        step_max=np.array(maxes),
        step_times=np.array(step_times),
    )
