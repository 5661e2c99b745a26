"""De Giorgi iteration on computed solutions and the local boundedness certificate."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Parameters, SpaceTimeSolution
from .energy import Cylinder, ball_mask, time_weights
from .errors import CalibrationError, DomainError, GeometryError

__all__ = [
    "IterationSchedule",
    "IterationConstants",
    "CertificateReport",
    "fast_convergence",
    "convergence_threshold",
    "level_set_integral",
    "theorem_level",
    "certify",
]

CONVERGENCE_FRACTION = 1e-8
C_CAP = 2.0**20


@dataclass(frozen=True)
class IterationSchedule:
    """Shrinking radii and half-lengths and rising levels, ``j = 0 .. j_max``."""

    rho: float
    m: float
    beta: float
    k: float
    j_max: int

    def _j(self):
        return np.arange(self.j_max + 2, dtype=float)

    @property
    def radii(self) -> np.ndarray:
        return 0.5 * (1.0 + 2.0 ** -self._j()) * self.rho

    @property
    def half_lengths(self) -> np.ndarray:
        j = self._j()
        return (0.5 * self.rho) ** self.m * (1.0 + (2.0**self.m - 1.0) / 2.0 ** (self.m * j))

    @property
    def mid_radii(self) -> np.ndarray:
        r = self.radii
        return 0.5 * (r[:-1] + r[1:])

    @property
    def mid_half_lengths(self) -> np.ndarray:
        t = self.half_lengths
        return 0.5 * (t[:-1] + t[1:])

    @property
    def levels(self) -> np.ndarray:
        j = self._j()
        return self.k * (1.0 - 2.0 ** -j) ** (2.0 / (self.beta + 1.0))

    def cylinder(self, j: int, center, t_center: float) -> Cylinder:
        return Cylinder(center, t_center, float(self.radii[j]), float(self.half_lengths[j]))


@dataclass(frozen=True)
class IterationConstants:
    """``b`` and ``delta`` of the recursion ``Y_{j+1} <= C b^j Y_j^(1+delta)``.

    ``C`` depends on the solution and the level; it is kept as an input.
    """

    C: float
    b: float
    delta: float

    @classmethod
    def from_parameters(cls, params: Parameters, C: float = 2.0) -> "IterationConstants":
        n, m, beta, gamma, sigma = params.n, params.m, params.beta, params.gamma, params.sigma
        b = 2.0 ** ((2.0 * beta * (gamma + 1.0) / (beta + 1.0)) * ((m + n + gamma + 1.0) / (m + n)))
        delta = (gamma + 1.0 - (n + gamma + 1.0) / sigma) / (n + m)
        return cls(C=float(C), b=float(b), delta=float(delta))


@dataclass
class CertificateReport:
    k_final: float
    Y_trace: list
    converged: bool
    measured_sup: float
    bound_satisfied: bool
    calibrated_c: float
    center: list = field(default_factory=list)
    t_center: float = 0.0
    rho: float = 0.0
    j_max: int = 0
    b: float = 0.0
    delta: float = 0.0
    attempts: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["Y_trace"] = [[int(j), float(y)] for j, y in self.Y_trace]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def convergence_threshold(C: float, b: float, delta: float) -> float:
    return math.exp(-math.log(C) / delta - math.log(b) / delta**2)


def fast_convergence(Y0: float, C: float, b: float, delta: float, j_max: int):
    """Threshold test ``Y0 <= C^(-1/delta) b^(-1/delta^2)`` plus the extremal trace.

    The trace is the solution of ``Y_{j+1} = C b^j Y_j^(1+delta)``, written in
    closed form around the threshold solution ``thr * b^(-j/delta)``:
    ``log Y_j = log thr - j log(b)/delta + (1+delta)^j log(Y0/thr)``.
    This avoids the rounding blow-up of iterating exactly at the threshold.
    """
    if not (C > 1 and b > 1 and delta > 0):
        raise DomainError("need C > 1, b > 1, delta > 0")
    if Y0 < 0:
        raise DomainError("Y0 must be nonnegative")
    thr = convergence_threshold(C, b, delta)
    if Y0 == 0:
        return True, [0.0] * (j_max + 1)
    log_thr = math.log(thr)
    log_ratio = math.log(Y0) - log_thr
    trace = []
    for j in range(j_max + 1):
        growth = (1.0 + delta) ** j * log_ratio if log_ratio != 0 else 0.0
        log_y = log_thr - j * math.log(b) / delta + growth
        trace.append(math.exp(log_y) if log_y < 709.0 else math.inf)
    return Y0 <= thr, trace


def level_set_integral(sol: SpaceTimeSolution, Q: Cylinder, k_level: float, params: Parameters = None) -> float:
    """``∫∫_Q (v^((beta+1)/2) - k^((beta+1)/2))_+^(2 beta (gamma+1)/(beta+1))``."""
    params = params or sol.params
    if k_level < 0:
        raise DomainError("level must be nonnegative")
    Q.check_inside(sol.grid, sol.T)
    mask = ball_mask(sol.grid, Q.center, Q.radius)
    w = time_weights(sol.times, Q.t_lo, Q.t_hi)
    beta, gamma = params.beta, params.gamma
    q = 0.5 * (beta + 1.0)
    power = 2.0 * beta * (gamma + 1.0) / (beta + 1.0)
    integrand = np.maximum(sol.values**q - k_level**q, 0.0) ** power
    per_slice = np.sum(np.where(mask, integrand, 0.0), axis=tuple(range(1, sol.values.ndim)))
    return float(np.sum(per_slice * w) * sol.grid.cell_volume)


def theorem_level(sol: SpaceTimeSolution, center, t_center: float, rho: float, c: float, params: Parameters = None) -> float:
    """``k = c rho^(-(n+gamma+1)/(beta m)) [1 + ∫∫_{Q_rho} v^(beta(gamma+1))]^(1/(beta m))``."""
    params = params or sol.params
    if not 0 < rho <= 1:
        raise DomainError(f"rho must lie in (0, 1], got {rho}")
    if c < 1:
        raise DomainError("c must be >= 1")
    beta_m = params.beta * params.m
    assert abs(beta_m - (params.beta + 1.0)) <= 1e-12 * beta_m
    Q = Cylinder.intrinsic(center, t_center, rho, params)
    integral = level_set_integral(sol, Q, 0.0, params)
    n, gamma = params.n, params.gamma
    return c * rho ** (-(n + gamma + 1.0) / beta_m) * (1.0 + integral) ** (1.0 / beta_m)


def _converged(trace) -> bool:
    y0 = trace[0]
    return y0 == 0 or trace[-1] <= CONVERGENCE_FRACTION * y0


def certify(
    sol: SpaceTimeSolution,
    center,
    t_center: float,
    rho: float,
    params: Parameters = None,
    j_max: int = 12,
) -> CertificateReport:
    """Calibrate ``c`` by doubling until the ``Y_j`` decay, then test the sup bound."""
    params = params or sol.params
    if not 0 < rho <= 1:
        raise DomainError(f"rho must lie in (0, 1], got {rho}")
    if not 1 <= j_max <= 60:
        raise DomainError("j_max must lie in 1..60")
    center = tuple(float(x) for x in np.atleast_1d(center))
    Q0 = Cylinder.intrinsic(center, t_center, rho, params)
    Q0.check_inside(sol.grid, sol.T)
    consts = IterationConstants.from_parameters(params)
    c = 1.0
    attempts = 0
    while True:
        attempts += 1
        k = theorem_level(sol, center, t_center, rho, c, params)
        sched = IterationSchedule(rho=rho, m=params.m, beta=params.beta, k=k, j_max=j_max)
        trace = [
            level_set_integral(sol, sched.cylinder(j, center, t_center), float(sched.levels[j]), params)
            for j in range(j_max + 1)
        ]
        if any(b > a for a, b in zip(trace, trace[1:])):
            raise AssertionError(f"Y_j trace not monotone: {trace}")
        if _converged(trace):
            break
        c *= 2.0
        if c > C_CAP:
            raise CalibrationError(f"no c <= 2^20 made the level-set integrals decay (last trace {trace})")

    half = Cylinder(center, t_center, 0.5 * rho, (0.5 * rho) ** params.m)
    mask = ball_mask(sol.grid, half.center, half.radius)
    w = time_weights(sol.times, half.t_lo, half.t_hi)
    if not mask.any() or not np.any(w > 0):
        raise GeometryError("half cylinder resolves no cells or slices")
    measured = float(np.max(sol.values[w > 0][:, mask]))
    return CertificateReport(
        k_final=float(k),
        Y_trace=list(enumerate(trace)),
        converged=True,
        measured_sup=measured,
        bound_satisfied=measured <= k,
        calibrated_c=c,
        center=list(center),
        t_center=float(t_center),
        rho=float(rho),
        j_max=int(j_max),
        b=consts.b,
        delta=consts.delta,
        attempts=attempts,
    )
