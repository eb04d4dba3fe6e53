"""Shared domain types: economic parameters, test functions, grids, schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr


@dataclass(frozen=True)
class VendorParams:
    """Economic primitives: revenue R, marginal investment cost c, discount alpha."""

    R: float
    c: float
    alpha: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0,1), got {self.alpha}")

    @property
    def rosi(self) -> float:
        """Return on security investment R/c; also the investment capacity."""
        return self.R / self.c


class TestFunction:
    """Monotone map from cumulative effort x >= 0 to pass probability in [0,1]."""

    def __call__(self, x):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_json(obj: dict) -> "TestFunction":
        kind = obj.get("type")
        if kind == "threshold":
            return ThresholdTest(float(obj["delta"]), float(obj["sigma"]))
        if kind == "linear":
            return LinearTest(float(obj["b"]))
        if kind == "constant":
            return ConstantTest(float(obj["p"]))
        raise ValueError(f"unknown test type: {kind!r}")


@dataclass(frozen=True)
class ThresholdTest(TestFunction):
    """Pass iff a noisy estimate x + N(0, sigma^2) clears the threshold delta.

    p(x) = Phi((x - delta) / sigma); p(delta) = 1/2 exactly.
    """

    delta: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.delta) / self.sigma)

    def to_json(self) -> dict:
        return {"type": "threshold", "delta": self.delta, "sigma": self.sigma}


@dataclass(frozen=True)
class LinearTest(TestFunction):
    """Truncated-linear test: 0 below the entrance value b, 1 above b+1."""

    b: float

    def __post_init__(self):
        if self.b < 0:
            raise ValueError(f"entrance value b must be >= 0, got {self.b}")

    def __call__(self, x):
        return np.clip(np.asarray(x, dtype=float) - self.b, 0.0, 1.0)

    def to_json(self) -> dict:
        return {"type": "linear", "b": self.b}


@dataclass(frozen=True)
class ConstantTest(TestFunction):
    """Effort-independent pass probability."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0,1], got {self.p}")

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.p)

    def to_json(self) -> dict:
        return {"type": "constant", "p": self.p}


@dataclass(frozen=True)
class GridSpec:
    """Uniform effort grid [0, x_max] with the given step."""

    x_max: float
    step: float = 1e-3

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not self.x_max > 0:
            raise ValueError(f"x_max must be positive, got {self.x_max}")

    def points(self) -> np.ndarray:
        n = int(math.floor(self.x_max / self.step + 0.5)) + 1
        return np.linspace(0.0, (n - 1) * self.step, n)


def default_grid(params: VendorParams, step: float = 1e-3) -> GridSpec:
    """Grid covering [0, R/c + 1]; every maximizer of the net utility lies in [0, R/c]."""
    return GridSpec(x_max=params.rosi + 1.0, step=step)


@dataclass(frozen=True)
class Schedule:
    """Non-decreasing sequence of cumulative effort levels; last level repeats forever."""

    levels: tuple
    kind: str = "one_and_done"

    def __post_init__(self):
        if len(self.levels) == 0:
            raise ValueError("schedule needs at least one level")
        prev = 0.0
        for lv in self.levels:
            if lv < 0:
                raise ValueError("levels must be non-negative")
            if lv < prev - 1e-15:
                raise ValueError("levels must be non-decreasing")
            prev = lv

    def level_at(self, t: int) -> float:
        return self.levels[min(t, len(self.levels) - 1)]
