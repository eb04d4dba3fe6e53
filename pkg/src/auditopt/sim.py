"""Episode simulation and exact evaluation of investment schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .multistep import Audit, backward_induction
from .types import GridSpec, Schedule, VendorParams, default_grid


def evaluate_schedule(
    schedule: Schedule, audit: Audit, params: VendorParams, residual_tol: float = 1e-12
) -> float:
    """Exact expected discounted utility of following the schedule.

    Sums survival-weighted terms alpha^t * (pass_prob*R - incremental cost)
    until the tail bound S_t * alpha^t * R/(1-alpha) drops below residual_tol.
    The cost paid at step t and the reward for passing the test revealed at
    t+1 share the same discount alpha^t.
    """
    c, R, a = params.c, params.R, params.alpha
    total = 0.0
    survive = 1.0  # probability no test has been passed before step t
    x_prev = 0.0
    disc = 1.0
    t = 0
    while survive * disc * R / (1.0 - a) >= residual_tol:
        x_t = schedule.level_at(t)
        p = float(audit.test_at(t)(x_t))
        total += survive * disc * (p * R - c * (x_t - x_prev))
        survive *= 1.0 - p
        x_prev = x_t
        disc *= a
        t += 1
    return total


@dataclass(frozen=True)
class SimResult:
    mean_utility: float
    std_error: float
    episodes: int
    pass_time_histogram: dict
    truncated_fraction: float

    def to_json(self) -> dict:
        return {
            "mean": self.mean_utility,
            "std_error": self.std_error,
            "episodes": self.episodes,
            "truncated_fraction": self.truncated_fraction,
            "pass_time_histogram": {str(k): v for k, v in sorted(self.pass_time_histogram.items())},
        }


def simulate(
    schedule: Schedule,
    audit: Audit,
    params: VendorParams,
    episodes: int,
    seed: int,
    horizon_eps: float | None = None,
) -> SimResult:
    """Seeded Monte Carlo of the repeated-audit episode process.

    Each episode draws from an independent substream keyed by (seed, episode
    index), so results are deterministic and independent of execution order.
    Episodes are truncated once the remaining discounted revenue
    alpha^t * R/(1-alpha) falls below horizon_eps (default 1e-9 * R).
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if horizon_eps is None:
        horizon_eps = 1e-9 * params.R
    if horizon_eps <= 0:
        raise ValueError("horizon_eps must be positive")

    c, R, a = params.c, params.R, params.alpha
    utilities = np.empty(episodes)
    histogram: dict[int, int] = {}
    truncated = 0

    for ep in range(episodes):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(ep,)))
        total = 0.0
        x_prev = 0.0
        disc = 1.0
        t = 0
        while True:
            if disc * R / (1.0 - a) < horizon_eps:
                truncated += 1
                break
            x_t = schedule.level_at(t)
            total -= disc * c * (x_t - x_prev)
            p = float(audit.test_at(t)(x_t))
            if rng.random() < p:
                total += disc * R
                histogram[t + 1] = histogram.get(t + 1, 0) + 1
                break
            x_prev = x_t
            disc *= a
            t += 1
        utilities[ep] = total

    std_error = float(np.std(utilities, ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    return SimResult(
        mean_utility=float(np.mean(utilities)),
        std_error=std_error,
        episodes=episodes,
        pass_time_histogram=histogram,
        truncated_fraction=truncated / episodes,
    )


def never_quit_audit_trail(
    audit: Audit,
    params: VendorParams,
    schedule: Schedule,
    grid: GridSpec | None = None,
) -> tuple:
    """Continuation value c*x + U*_t(x) entering each scheduled step.

    Every entry is the analytic reward-to-go of continuing rather than
    quitting; non-negativity shows quitting is never strictly optimal.
    """
    if grid is None:
        x_cap = max([params.rosi] + list(schedule.levels)) + 1.0
        grid = GridSpec(x_max=x_cap, step=1e-3)
    nvf = backward_induction(audit, params, grid)
    steps = nvf.step_values

    values = []
    x_prev = 0.0
    for t in range(len(schedule.levels) + 1):
        u_star = steps[min(t, len(steps) - 1)]
        cont = params.c * x_prev + float(np.interp(x_prev, nvf.xs, u_star))
        values.append(cont)
        x_prev = schedule.level_at(t)
    return tuple(values)
