"""Vendor's optimal-stopping problem under a static audit.

Closed-form net utility G, the waiver-cost decomposition, the optimal
investment strategy, and an independent value-iteration oracle that
verifies the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .types import GridSpec, Schedule, TestFunction, VendorParams, default_grid

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def g_value(test: TestFunction, params: VendorParams, x):
    """Net expected discounted utility of a one-time investment x under a static audit.

    G(x) = -c*x + p(x)*R / (1 - alpha + alpha*p(x)).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("effort x must be >= 0")
    p = test(x)
    val = -params.c * x + p * params.R / (1.0 - params.alpha + params.alpha * p)
    return float(val) if val.ndim == 0 else val


def waiver_cost(test: TestFunction, params: VendorParams, x):
    """One-time fee equivalent of the audit: R - c*x - G(x).

    Equals (1-alpha)*(1-p(x))*R / (1 - alpha + alpha*p(x)); lies in [0, R].
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("effort x must be >= 0")
    p = test(x)
    a = params.alpha
    val = (1.0 - a) * (1.0 - p) * params.R / (1.0 - a + a * p)
    return float(val) if val.ndim == 0 else val


def golden_max(f, a: float, b: float, tol: float = 1e-9) -> float:
    """Golden-section maximization of f on [a, b]; assumes a single interior peak."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class StrategySolution:
    """Optimal net utility, the maximizer set, and a flat-region flag."""

    utility: float
    maximizers: tuple
    tie_tol: float
    flat: bool = False  # maximizers form a continuum; endpoints reported

    def to_json(self) -> dict:
        return {
            "utility": self.utility,
            "maximizers": list(self.maximizers),
            "tie_tol": self.tie_tol,
            "flat": self.flat,
        }


def optimal_strategy(
    test: TestFunction,
    params: VendorParams,
    grid: GridSpec | None = None,
    tie_tol: float | None = None,
) -> StrategySolution:
    """Maximize G on [0, x_max] by grid search plus golden-section refinement.

    Returns every refined local maximum whose value lies within tie_tol of
    the global maximum. A run of >= 3 consecutive near-optimal grid points
    is flagged as a flat region and reported by its endpoints.
    """
    if grid is None:
        grid = default_grid(params)
    if grid.x_max < params.rosi:
        raise ValueError(f"grid.x_max must be >= R/c = {params.rosi}")
    if tie_tol is None:
        tie_tol = 1e-6 * params.R

    xs = grid.points()
    g = g_value(test, params, xs)

    # local maxima on the grid, endpoints included
    cand_idx = [0, len(xs) - 1]
    interior = np.nonzero((g[1:-1] >= g[:-2]) & (g[1:-1] >= g[2:]))[0] + 1
    cand_idx.extend(interior.tolist())

    f = lambda x: g_value(test, params, x)
    refined = []
    for i in sorted(set(cand_idx)):
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, len(xs) - 1)]
        pick = [(xs[i], g[i])]
        if hi > lo:
            x_star = golden_max(f, lo, hi)
            pick += [(x_star, f(x_star)), (lo, f(lo)), (hi, f(hi))]
        refined.append(max(pick, key=lambda t: t[1]))

    best = max(v for _, v in refined)
    utility = max(best, 0.0)

    maximizers = []
    for x_star, v in sorted(refined):
        if v >= best - tie_tol and all(abs(x_star - m) > 1e-7 for m in maximizers):
            maximizers.append(x_star)

    # flat-region detection: long contiguous stretch of (numerically) exactly
    # optimal grid points; a smooth peak never produces one at this tolerance
    near = g >= best - 1e-12 * max(1.0, params.R)
    flat = False
    run = 0
    for ok in near:
        run = run + 1 if ok else 0
        if run >= 5:
            flat = True
            break
    if flat:
        # report bracket endpoints of the widest near-optimal run
        idx = np.nonzero(near)[0]
        maximizers = sorted(set(maximizers) | {xs[idx[0]], xs[idx[-1]]})

    return StrategySolution(utility=utility, maximizers=tuple(maximizers), tie_tol=tie_tol, flat=flat)


def enumerate_schedules(
    solution: StrategySolution, horizon: int, switch_times=None
) -> list[Schedule]:
    """Concrete optimal investment schedules drawn from the maximizer set.

    One one-and-done schedule per maximizer. With two or more maximizers,
    incremental schedules step through the ascending maximizer levels at the
    given switch times (default: t = 1, 2, ...).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not solution.maximizers:
        raise ValueError("solution has no maximizers")

    schedules = [
        Schedule(levels=(m,) * horizon, kind="one_and_done") for m in solution.maximizers
    ]
    levels = sorted(solution.maximizers)
    if len(levels) >= 2:
        if switch_times is None:
            switch_times = list(range(1, len(levels)))
        if len(switch_times) != len(levels) - 1 or sorted(switch_times) != list(switch_times):
            raise ValueError("need one ascending switch time per level transition")
        seq = []
        nxt = 0
        for t in range(horizon):
            while nxt < len(switch_times) and t >= switch_times[nxt]:
                nxt += 1
            seq.append(levels[nxt])
        schedules.append(Schedule(levels=tuple(seq), kind="incremental"))
    return schedules


@dataclass(frozen=True)
class ValueFunction:
    """Discretized fixed point of the vendor's Bellman equation."""

    xs: np.ndarray
    values: np.ndarray

    def at_zero(self) -> float:
        return float(self.values[0])


def value_iteration_oracle(
    test: TestFunction,
    params: VendorParams,
    grid: GridSpec | None = None,
    tol: float = 1e-9,
    max_iter: int | None = None,
) -> ValueFunction:
    """Solve the vendor's MDP by value iteration on the grid.

    V(x) = max{0, max_{y >= x} [c*x - c*y + p(y)*R + alpha*(1-p(y))*V(y)]},
    with the inner maximum computed by one right-to-left running-max pass.
    Stops when the sup-norm change drops below tol*(1-alpha).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if grid is None:
        grid = default_grid(params)
    if grid.x_max < params.rosi:
        raise ValueError(f"grid.x_max must be >= R/c = {params.rosi}")

    xs = grid.points()
    p = np.asarray(test(xs), dtype=float)
    c, R, a = params.c, params.R, params.alpha
    base = -c * xs + p * R  # y-dependent part excluding the continuation term

    if max_iter is None:
        # contraction factor <= alpha; generous cap on top of the analytic count
        need = math.log(tol * (1.0 - a) / max(R, 1.0)) / math.log(a)
        max_iter = int(abs(need)) * 4 + 100

    V = np.zeros_like(xs)
    thresh = tol * (1.0 - a)
    for _ in range(max_iter):
        q = base + a * (1.0 - p) * V
        m = np.maximum.accumulate(q[::-1])[::-1]
        V_new = np.maximum(0.0, c * xs + m)
        if np.max(np.abs(V_new - V)) < thresh:
            return ValueFunction(xs=xs, values=V_new)
        V = V_new
    raise RuntimeError(f"value iteration failed to converge in {max_iter} sweeps")
