"""Exponential time mollification of piecewise-constant signals.

A :class:`TimeSignal` holds node times ``t_0 = 0 < ... < t_K`` and node
values; the signal is read as ``w(t) = values[i]`` on ``[t_i, t_{i+1})``.
Against such signals the kernel integrals are done in closed form, so the
only errors left are rounding errors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "TimeSignal",
    "mollify_forward",
    "mollify_backward",
    "evaluate_forward",
    "interval_mean_forward",
    "check_time_derivative_identity",
    "check_lp_contraction",
    "lp_norm",
]


@dataclass(frozen=True)
class TimeSignal:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        values = np.array(self.values, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise DomainError("a signal needs at least two node times")
        if times[0] != 0.0:
            raise DomainError("signal times must start at 0")
        if np.any(np.diff(times) <= 0):
            raise DomainError("signal times must be strictly increasing")
        if values.shape[0] != len(times):
            raise DomainError("one value (or field) per node time is required")
        if not np.all(np.isfinite(values)):
            raise DomainError("signal values must be finite")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    def reflect(self) -> "TimeSignal":
        """``t -> T - t``; interval ``[t_i, t_{i+1})`` keeps its value."""
        times = self.T - self.times[::-1]
        times[0] = 0.0
        vals = np.empty_like(self.values)
        vals[:-1] = self.values[-2::-1]
        vals[-1] = self.values[0]
        return TimeSignal(times, vals)


def _check_h(h: float) -> float:
    h = float(h)
    if not h > 0:
        raise DomainError(f"mollification parameter must be positive, got {h}")
    return h


def mollify_forward(w: TimeSignal, h: float) -> TimeSignal:
    """``w_h(t) = (1/h) int_0^t exp((s-t)/h) w(s) ds`` at the node times."""
    h = _check_h(h)
    decay = np.exp(-w.dt / h)
    out = np.zeros_like(w.values)
    for i, e in enumerate(decay):
        out[i + 1] = e * out[i] + (1.0 - e) * w.values[i]
    return TimeSignal(w.times, out)


def mollify_backward(w: TimeSignal, h: float) -> TimeSignal:
    """``w_hbar(t) = (1/h) int_t^T exp((t-s)/h) w(s) ds`` at the node times.

    Computed as the forward mollification of the time-reflected signal.
    """
    h = _check_h(h)
    fwd = mollify_forward(w.reflect(), h)
    return TimeSignal(w.times, fwd.values[::-1])


def evaluate_forward(w: TimeSignal, wh: TimeSignal, h: float, tau: np.ndarray) -> np.ndarray:
    """Closed-form ``w_h(t_i + tau_i)`` inside each interval, ``0 <= tau_i <= dt_i``."""
    tau = np.asarray(tau, dtype=float)
    e = np.exp(-tau / h).reshape((-1,) + (1,) * (w.values.ndim - 1))
    return e * wh.values[:-1] + (1.0 - e) * w.values[:-1]


def interval_mean_forward(w: TimeSignal, wh: TimeSignal, h: float) -> np.ndarray:
    """Exact mean of ``w_h`` over each interval ``[t_i, t_{i+1}]``."""
    r = w.dt / h
    # (1 - exp(-r)) / r, stable for small r
    frac = -np.expm1(-r) / r
    frac = frac.reshape((-1,) + (1,) * (w.values.ndim - 1))
    return frac * wh.values[:-1] + (1.0 - frac) * w.values[:-1]


def check_time_derivative_identity(w: TimeSignal, h: float) -> float:
    """Largest interval defect of ``d/dt w_h = (w - w_h)/h``.

    On each interval the difference quotient of ``w_h`` across the interval is
    compared with ``(wbar - mean w_h)/h``, where ``mean w_h`` is exact and
    ``wbar`` is the trapezoidal mean of the sampled node values.  For signals
    that really are constant on each interval the defect is rounding only;
    for node samples of a varying signal it is ``O(dt)``, carried by the
    discrepancy between the piecewise-constant reading and the samples.
    """
    h = _check_h(h)
    wh = mollify_forward(w, h)
    dt = w.dt.reshape((-1,) + (1,) * (w.values.ndim - 1))
    quotient = np.diff(wh.values, axis=0) / dt
    wbar = 0.5 * (w.values[:-1] + w.values[1:])
    rhs = (wbar - interval_mean_forward(w, wh, h)) / h
    return float(np.max(np.abs(quotient - rhs)))


def lp_norm(values: np.ndarray, weights: np.ndarray, p: float) -> float:
    """``(sum weights * |values|^p)^(1/p)`` with weights broadcast over time."""
    weights = np.asarray(weights, dtype=float).reshape((-1,) + (1,) * (values.ndim - 1))
    return float(np.sum(weights * np.abs(values) ** p) ** (1.0 / p))


def check_lp_contraction(w: TimeSignal, h: float, p: float, cell_volume: float = 1.0):
    """``(||w_h||_p, ||w||_p)`` on ``Omega x (0, T)`` by midpoint quadrature.

    ``w`` is exactly piecewise constant so its norm is exact; ``w_h`` is
    evaluated in closed form at interval midpoints.
    """
    h = _check_h(h)
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    wh = mollify_forward(w, h)
    mid = evaluate_forward(w, wh, h, 0.5 * w.dt)
    weights = w.dt * cell_volume
    return lp_norm(mid, weights, p), lp_norm(w.values[:-1], weights, p)
