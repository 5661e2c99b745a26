"""Seeded property suites for the analytic lemmas (no scenario needed).

Each suite returns a :class:`SuiteResult` whose ``details`` carry the numbers
behind the verdict, so the CLI can dump them as JSON.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import derive_parameters
from .degiorgi import IterationConstants, IterationSchedule, convergence_threshold, fast_convergence
from .energy import check_boundary_bounds
from .mollifier import (
    TimeSignal,
    check_lp_contraction,
    check_time_derivative_identity,
    evaluate_forward,
    lp_norm,
    mollify_backward,
    mollify_forward,
)

__all__ = [
    "SuiteResult",
    "boundary_suite",
    "mollifier_suite",
    "fast_convergence_suite",
    "schedule_suite",
    "random_parameters",
    "direct_iteration_converges",
    "run_all",
]

BOUNDARY_BETAS = (1.0, 1.5, 3.0, 5.0)
IDENTITY_TOL = 1e-14
CONVERGENCE_FRACTIONS = (0.1, 0.01, 0.001)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "details": self.details}


# ---------------------------------------------------------------------------
# boundary quantity

def boundary_suite(seed: int = 0, samples: int = 10_000) -> SuiteResult:
    details = {}
    ok = True
    for beta in BOUNDARY_BETAS:
        hi, lo = check_boundary_bounds(samples, beta, seed=seed)
        entry = {"max_ratio": hi, "min_ratio": lo}
        if beta == 1.0:
            entry["passed"] = max(abs(hi - 0.5), abs(lo - 0.5)) <= 1e-12
        else:
            entry["passed"] = bool(lo > 0 and math.isfinite(hi))
        ok &= entry["passed"]
        details[f"beta={beta:g}"] = entry
    return SuiteResult("boundary_quantity", ok, details)


# ---------------------------------------------------------------------------
# mollifier

def smooth_signal(rng: np.random.Generator, modes: int = 4):
    """Random trigonometric polynomial on ``[0, 1]`` and its callable."""
    a = rng.normal(size=modes)
    b = rng.normal(size=modes)
    k = np.arange(1, modes + 1)

    def w(t):
        t = np.asarray(t, dtype=float)[..., None]
        return np.sum(a * np.sin(np.pi * k * t) + b * np.cos(np.pi * k * t), axis=-1) / k.size

    return w


def _sampled(w, K: int, T: float = 1.0) -> TimeSignal:
    t = np.linspace(0.0, T, K + 1)
    return TimeSignal(t, w(t))


def derivative_refinement_ratios(seed: int = 0, trials: int = 10, K: int = 200, h: float = 0.05) -> list:
    """Coarse over fine residual of the derivative identity for random smooth signals."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        w = smooth_signal(rng)
        coarse = check_time_derivative_identity(_sampled(w, K), h)
        fine = check_time_derivative_identity(_sampled(w, 2 * K), h)
        ratios.append(coarse / fine)
    return ratios


def contraction_trials(seed: int = 0, trials: int = 100, gamma: float = 0.5) -> list:
    """``lhs / rhs`` of the L^p contraction over random field-valued signals."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(trials):
        p = (1.0, 2.0, gamma + 1.0)[i % 3]
        K = int(rng.integers(5, 60))
        T = float(rng.uniform(0.1, 3.0))
        cells = int(rng.integers(1, 20))
        values = rng.uniform(-2.0, 2.0, size=(K + 1, cells))
        w = TimeSignal(np.linspace(0.0, T, K + 1), values)
        h = float(10.0 ** rng.uniform(-3, 1)) * T
        lhs, rhs = check_lp_contraction(w, h, p)
        out.append((p, lhs, rhs))
    return out


def convergence_errors(p: float = 2.0, K: int = 100_000, T: float = 1.0) -> dict:
    """``||w_h - w||_p`` for ``w = sin(2 pi t / T)`` at ``h in {0.1, 0.01, 0.001} T``.

    ``w`` is read at interval midpoints and ``w_h`` is evaluated there in
    closed form, so the sampling error is far below the smallest ``h``.
    """
    t = np.linspace(0.0, T, K + 1)
    mid = t[:-1] + 0.5 * np.diff(t)
    fn = lambda s: np.sin(2.0 * np.pi * s / T)  # noqa: E731
    w = TimeSignal(t, np.append(fn(mid), 0.0))
    errs = {}
    for frac in CONVERGENCE_FRACTIONS:
        h = frac * T
        wh = mollify_forward(w, h)
        approx = evaluate_forward(w, wh, h, 0.5 * w.dt)
        errs[frac] = lp_norm(approx - fn(mid), w.dt, p)
    return errs


def mollifier_suite(seed: int = 0, gamma: float = 0.5) -> SuiteResult:
    details = {}
    # closed forms for w = 1
    t = np.linspace(0.0, 2.0, 41)
    one = TimeSignal(t, np.ones_like(t))
    h = 0.3
    fwd_err = float(np.max(np.abs(mollify_forward(one, h).values - (1.0 - np.exp(-t / h)))))
    bwd_err = float(np.max(np.abs(mollify_backward(one, h).values - (1.0 - np.exp(-(t[-1] - t) / h)))))
    const_res = check_time_derivative_identity(one, h)
    details["constant"] = {"forward_error": fwd_err, "backward_error": bwd_err, "identity_residual": const_res}
    const_ok = max(fwd_err, bwd_err, const_res) <= 1e-12

    ratios = derivative_refinement_ratios(seed)
    details["refinement_ratios"] = ratios
    refine_ok = all(1.6 <= r <= 2.4 for r in ratios)

    trials = contraction_trials(seed, gamma=gamma)
    fails = [(p, lhs, rhs) for p, lhs, rhs in trials if lhs > rhs * (1.0 + 1e-10)]
    details["contraction"] = {"trials": len(trials), "failures": len(fails)}
    contraction_ok = not fails

    p = 2.0
    errs = convergence_errors(p)
    vals = [errs[f] for f in CONVERGENCE_FRACTIONS]
    # |w_h - w| <= h sup|w'| when w(0) = 0, so ||w_h - w||_p <= h sup|w'| T^(1/p)
    bound = [f * 2.0 * np.pi for f in CONVERGENCE_FRACTIONS]
    details["convergence"] = {"p": p, "h": list(CONVERGENCE_FRACTIONS), "errors": vals, "bound": bound}
    conv_ok = vals[0] > vals[1] > vals[2] and all(e <= b for e, b in zip(vals, bound))

    rng = np.random.default_rng(seed)
    w = TimeSignal(np.linspace(0.0, 1.0, 31), rng.uniform(0.0, 3.0, size=(31, 7)))
    stacked = mollify_forward(w, 0.1).values
    per_cell = np.stack([mollify_forward(TimeSignal(w.times, w.values[:, c]), 0.1).values for c in range(7)], axis=1)
    positive = bool(np.all(stacked >= 0) and np.all(mollify_backward(w, 0.1).values >= 0))
    commute = bool(np.array_equal(stacked, per_cell))
    details["positivity"] = positive
    details["per_cell_commutes"] = commute

    ok = const_ok and refine_ok and contraction_ok and conv_ok and positive and commute
    return SuiteResult("mollifier", ok, details)


# ---------------------------------------------------------------------------
# fast convergence

def direct_iteration_converges(Y0: float, C: float, b: float, delta: float, max_iter: int = 100_000) -> bool:
    """Iterate ``Y <- C b^j Y^(1+delta)`` in log space until it clearly escapes."""
    if Y0 == 0:
        return True
    log_y = math.log(Y0)
    lc, lb = math.log(C), math.log(b)
    for j in range(max_iter):
        log_y = lc + j * lb + (1.0 + delta) * log_y
        if log_y > 1e4:
            return False
        if log_y < -1e4:
            return True
    raise RuntimeError("direct iteration undecided")


def random_lemma_inputs(rng: np.random.Generator):
    C = float(rng.uniform(1.1, 10.0))
    b = float(rng.uniform(1.5, 4.0))
    delta = float(rng.uniform(0.1, 2.0))
    mu = 10.0 ** rng.uniform(-3.0, 3.0)
    return C, b, delta, mu * convergence_threshold(C, b, delta)


def fast_convergence_suite(seed: int = 0, trials: int = 100, j_max: int = 200) -> SuiteResult:
    rng = np.random.default_rng(seed)
    disagree = []
    slow = []
    for i in range(trials):
        C, b, delta, Y0 = random_lemma_inputs(rng)
        verdict, _ = fast_convergence(Y0, C, b, delta, 10)
        if verdict != direct_iteration_converges(Y0, C, b, delta):
            disagree.append(i)
        thr = convergence_threshold(C, b, delta)
        ok, trace = fast_convergence(thr, C, b, delta, j_max)
        if not ok or not any(y <= 1e-10 * thr for y in trace):
            slow.append(i)
    details = {"trials": trials, "disagreements": disagree, "threshold_failures": slow}
    return SuiteResult("fast_convergence", not disagree and not slow, details)


# ---------------------------------------------------------------------------
# schedule and exponents

def random_parameters(rng: np.random.Generator):
    gamma = float(rng.uniform(0.05, 0.95))
    alpha = float(rng.uniform(1.0 - gamma + 0.01, 5.0))
    n = int(rng.integers(1, 3))
    threshold = (gamma + 1.0 + n) / (gamma + 1.0)
    sigma = threshold * float(rng.uniform(1.01, 3.0))
    return derive_parameters(alpha, gamma, n, sigma)


def schedule_suite(seed: int = 0, trials: int = 100) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst_tau = worst_exp = 0.0
    min_delta = math.inf
    monotone = True
    for _ in range(trials):
        params = random_parameters(rng)
        rho = float(rng.uniform(0.01, 1.0))
        sched = IterationSchedule(rho=rho, m=params.m, beta=params.beta, k=1.0, j_max=30)
        worst_tau = max(worst_tau, abs(sched.half_lengths[0] - rho**params.m) / rho**params.m)
        worst_exp = max(worst_exp, abs(params.beta * params.m - (params.beta + 1.0)) / (params.beta + 1.0))
        min_delta = min(min_delta, IterationConstants.from_parameters(params).delta)
        levels = sched.levels
        monotone &= bool(levels[0] == 0 and np.all(np.diff(levels) > 0))
        tau = sched.half_lengths
        # increments below double resolution of tau round to zero
        resolvable = np.abs(np.diff(tau)) > 4 * np.finfo(float).eps * tau[1:]
        steps = np.diff(tau)
        monotone &= bool(np.all(np.diff(sched.radii) < 0) and np.all(steps <= 0) and np.all(steps[resolvable] < 0))
    details = {
        "trials": trials,
        "max_tau0_error": worst_tau,
        "max_exponent_error": worst_exp,
        "min_delta": min_delta,
        "monotone": monotone,
    }
    ok = worst_tau <= IDENTITY_TOL and worst_exp <= IDENTITY_TOL and min_delta > 0 and monotone
    return SuiteResult("schedule", ok, details)


def run_all(seed: int = 0) -> list:
    return [boundary_suite(seed), mollifier_suite(seed), fast_convergence_suite(seed), schedule_suite(seed)]

