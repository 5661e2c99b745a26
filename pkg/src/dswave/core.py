"""Parameters, grids, fields and problem definitions for the diffusive wave model.

The unknown is the water depth ``v = u - z`` where ``u`` is the free surface
and ``z`` the land elevation.  Everything here is immutable once built.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "Parameters",
    "derive_parameters",
    "default_sigma",
    "Grid",
    "ScalarField",
    "BoundaryCondition",
    "Problem",
    "SpaceTimeSolution",
    "validate_problem",
    "power_transform",
    "constant_source",
]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def default_sigma(gamma: float, n: int) -> float:
    return 2.0 * (n + gamma + 1.0) / (gamma + 1.0)


@dataclass(frozen=True)
class Parameters:
    """Exponents of the equation plus the derived quantities.

    ``beta = (alpha + gamma) / gamma`` is the power of ``v`` that carries a
    spatial gradient and ``m = (beta + 1) / beta`` is the intrinsic time
    scaling of the cylinders ``B_rho x (t - rho**m, t + rho**m)``.
    """

    alpha: float
    gamma: float
    n: int
    sigma: float
    beta: float
    m: float

    @property
    def sigma_threshold(self) -> float:
        return (self.gamma + 1.0 + self.n) / (self.gamma + 1.0)

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "n": self.n,
            "sigma": self.sigma,
            "beta": self.beta,
            "m": self.m,
        }


def derive_parameters(alpha: float, gamma: float, n: int, sigma: Optional[float] = None) -> Parameters:
    """Validate ``(alpha, gamma, n, sigma)`` and compute ``beta`` and ``m``.

    ``sigma`` defaults to ``2 (n + gamma + 1) / (gamma + 1)``.  ``n = 1`` is
    accepted for cheap experiments even though the regularity theory is
    stated for ``n >= 2``.
    """
    alpha = float(alpha)
    gamma = float(gamma)
    if n not in (1, 2):
        raise DomainError(f"n must be 1 or 2, got {n!r}")
    if not math.isfinite(alpha) or alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"gamma ∉ (0,1): got {gamma}")
    if alpha + gamma <= 1.0:
        raise DomainError(f"alpha + gamma must exceed 1 (slow diffusion), got {alpha + gamma}")
    if sigma is None:
        sigma = default_sigma(gamma, n)
    sigma = float(sigma)
    threshold = (gamma + 1.0 + n) / (gamma + 1.0)
    if not sigma > threshold:
        raise DomainError(f"sigma must exceed (gamma+1+n)/(gamma+1) = {threshold}, got {sigma}")
    beta = (alpha + gamma) / gamma
    m = (beta + 1.0) / beta
    return Parameters(alpha=alpha, gamma=gamma, n=int(n), sigma=sigma, beta=beta, m=m)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred Cartesian grid on ``origin + [0, extent]``."""

    cells: tuple
    extent: tuple
    origin: tuple = None

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        extent = tuple(float(e) for e in self.extent)
        origin = tuple(float(o) for o in self.origin) if self.origin is not None else (0.0,) * len(cells)
        if len(cells) not in (1, 2) or len(extent) != len(cells) or len(origin) != len(cells):
            raise DomainError("grid needs matching 1D or 2D cells/extent/origin")
        if any(c < 4 for c in cells):
            raise DomainError(f"need at least 4 cells per axis, got {cells}")
        if any(not (e > 0 and math.isfinite(e)) for e in extent):
            raise DomainError(f"extent must be positive, got {extent}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "origin", origin)

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple:
        return self.cells

    @property
    def h(self) -> tuple:
        return tuple(e / c for e, c in zip(self.extent, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    def axis_centers(self, d: int) -> np.ndarray:
        return self.origin[d] + (np.arange(self.cells[d]) + 0.5) * self.h[d]

    def axis_faces(self, d: int) -> np.ndarray:
        return self.origin[d] + np.arange(self.cells[d] + 1) * self.h[d]

    def centers(self) -> tuple:
        """Cell-centre coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*[self.axis_centers(d) for d in range(self.n)], indexing="ij"))

    def face_centers(self, d: int) -> tuple:
        """Coordinates of the faces normal to axis ``d`` (boundary faces included)."""
        axes = [self.axis_faces(k) if k == d else self.axis_centers(k) for k in range(self.n)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def lower(self) -> np.ndarray:
        return np.array(self.origin)

    def upper(self) -> np.ndarray:
        return np.array(self.origin) + np.array(self.extent)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(tuple(c * factor for c in self.cells), self.extent, self.origin)

    def as_dict(self) -> dict:
        return {"cells": list(self.cells), "extent": list(self.extent), "origin": list(self.origin)}


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            if values.size == self.grid.size:
                values = values.reshape(self.grid.shape)
            else:
                raise DomainError(f"field has {values.size} values, grid has {self.grid.size} cells")
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "ScalarField":
        return cls(grid, np.broadcast_to(fn(*grid.centers()), grid.shape))

    def integral(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


class BoundaryCondition(enum.Enum):
    DIRICHLET_ZERO_V = "DirichletZeroV"
    ZERO_FLUX = "ZeroFlux"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        for member in cls:
            if value in (member.value, member.name, member.value.lower()):
                return member
        raise DomainError(f"unknown boundary condition {value!r}")


def constant_source(grid: Grid, rate: float) -> Callable[[float], np.ndarray]:
    values = _frozen(np.full(grid.shape, float(rate)))
    return lambda t: values


@dataclass(frozen=True)
class Problem:
    """Everything needed to evolve ``dv/dt = div A(v, grad v**beta) + f``.

    ``source`` maps a time to a cell array; it is sampled at the left end of
    each solver step.
    """

    params: Parameters
    grid: Grid
    z: ScalarField
    v0: ScalarField
    source: Callable[[float], np.ndarray] = None
    boundary: BoundaryCondition = BoundaryCondition.ZERO_FLUX
    eps: float = 1e-8
    T: float = 1.0

    def __post_init__(self):
        if self.source is None:
            object.__setattr__(self, "source", constant_source(self.grid, 0.0))
        object.__setattr__(self, "boundary", BoundaryCondition.parse(self.boundary))

    def f(self, t: float) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.source(t), dtype=float), self.grid.shape)

    def with_(self, **changes) -> "Problem":
        from dataclasses import replace

        return replace(self, **changes)


def _cell_label(index) -> str:
    return "(" + ",".join(str(int(i)) for i in index) + ")"


def validate_problem(p: Problem) -> list:
    """Return human-readable invariant violations; empty means well posed."""
    out = []
    if p.grid.n != p.params.n:
        out.append(f"grid dimension {p.grid.n} does not match params.n={p.params.n}")
    for name, fld in (("z", p.z), ("v0", p.v0)):
        if fld.grid != p.grid:
            out.append(f"{name} lives on a different grid")
    bad = np.argwhere(~np.isfinite(p.z.values))
    for idx in bad[:10]:
        out.append(f"z non-finite at cell {_cell_label(idx)}")
    bad = np.argwhere(~np.isfinite(p.v0.values))
    for idx in bad[:10]:
        out.append(f"v0 non-finite at cell {_cell_label(idx)}")
    neg = np.argwhere(p.v0.values < 0)
    for idx in neg[:10]:
        out.append(f"v0 negative at cell {_cell_label(idx)}")
    if len(neg) > 10:
        out.append(f"v0 negative at {len(neg) - 10} further cells")
    if not (p.eps >= 0 and math.isfinite(p.eps)):
        out.append(f"eps must be a finite nonnegative number, got {p.eps}")
    if not (p.T >= 0 and math.isfinite(p.T)):
        out.append(f"T must be a finite nonnegative number, got {p.T}")
    try:
        f0 = p.f(0.0)
        if not np.all(np.isfinite(f0)):
            out.append("source f non-finite at t=0")
    except Exception as exc:  # report-style: a broken source is a violation, not a crash
        out.append(f"source f cannot be evaluated: {exc}")
    if p.params.sigma <= p.params.sigma_threshold:
        out.append("sigma below the data regularity threshold")
    return out


def power_transform(v: ScalarField, exponent: float) -> ScalarField:
    """Pointwise ``v**exponent`` for a nonnegative field (``0**p = 0``)."""
    if not exponent > 0:
        raise DomainError(f"exponent must be positive, got {exponent}")
    if np.any(v.values < 0):
        raise DomainError("power_transform needs a nonnegative field")
    return ScalarField(v.grid, np.power(v.values, exponent))


@dataclass(frozen=True)
class SpaceTimeSolution:
    """Stored depth snapshots ``v(t_i)`` together with step bookkeeping.

    Between stored times the solution is read as piecewise constant: the
    state at ``times[i]`` represents the interval ``(times[i-1], times[i]]``.
    ``sources[i]`` holds the time-averaged source over that interval
    (``sources[0]`` is unused and zero).
    """

    problem: Problem
    times: np.ndarray
    values: np.ndarray
    sources: np.ndarray
    step_dt: np.ndarray = field(default_factory=lambda: _frozen([]))
    step_clipped: np.ndarray = field(default_factory=lambda: _frozen([]))
    step_mass: np.ndarray = field(default_factory=lambda: _frozen([]))
    step_max: np.ndarray = field(default_factory=lambda: _frozen([]))
    step_times: np.ndarray = field(default_factory=lambda: _frozen([]))

    def __post_init__(self):
        for name in ("times", "values", "sources", "step_dt", "step_clipped", "step_mass", "step_max", "step_times"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.values.shape[1:] != self.grid.shape or len(self.values) != len(self.times):
            raise DomainError("solution values do not match times/grid")
        if self.sources.shape != self.values.shape:
            raise DomainError("sources must match values")
        if len(self.times) and self.times[0] != 0.0:
            raise DomainError("times must start at 0")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("times must be strictly increasing")
        if np.any(self.values < 0):
            raise DomainError("stored depths must be nonnegative")

    @property
    def grid(self) -> Grid:
        return self.problem.grid

    @property
    def params(self) -> Parameters:
        return self.problem.params

    @property
    def states(self) -> list:
        return [ScalarField(self.grid, v) for v in self.values]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def total_clipped_mass(self) -> float:
        return float(np.sum(self.step_clipped))

    def masses(self) -> np.ndarray:
        axes = tuple(range(1, self.values.ndim))
        return self.values.sum(axis=axes) * self.grid.cell_volume

    def source_integral(self) -> float:
        """Integral of f over the stored horizon (exact for the step sampling)."""
        dt = np.diff(self.times)
        axes = tuple(range(1, self.values.ndim))
        per_slice = self.sources[1:].sum(axis=axes) * self.grid.cell_volume
        return float(np.sum(per_slice * dt))


def stack_fields(fields: Sequence[ScalarField]) -> np.ndarray:
    return np.stack([f.values for f in fields])
