"""Discrete first-price auction games.

Bids and item values live on a uniform grid {0, eps, ..., (N-1) eps}. The
learner's value is its private context; ties go to the learner. The winner
pays its own bid, the loser pays nothing.

This module also builds the geometric-value instance family used to separate
mean-based learning from the Stackelberg benchmark, together with the two CDF
gadgets that drive its analysis: the threshold-segment Stackelberg CDF and the
per-phase target CDFs of the exploiting bid schedule.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GridError, ParameterError
from .games import BayesianGame

GRID_TOL = 1e-9


@dataclass(frozen=True)
class BidGrid:
    """Uniform bid/value grid: bid i means the amount i * epsilon."""

    epsilon: float
    n_bids: int

    def __post_init__(self):
        if not self.epsilon > 0:
            raise GridError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_bids < 2:
            raise GridError(f"need at least 2 bids, got {self.n_bids}")

    def values(self) -> np.ndarray:
        return np.arange(self.n_bids) * self.epsilon

    @property
    def max_value(self) -> float:
        return (self.n_bids - 1) * self.epsilon

    def index_of(self, value: float, tol: float = GRID_TOL) -> int:
        idx = int(round(value / self.epsilon))
        if idx < 0 or idx >= self.n_bids or abs(idx * self.epsilon - value) > tol:
            raise GridError(f"value {value} is not on the grid (eps={self.epsilon}, N={self.n_bids})")
        return idx

    def contains(self, value: float, tol: float = GRID_TOL) -> bool:
        try:
            self.index_of(value, tol)
            return True
        except GridError:
            return False

    def index_of_floor(self, value: float) -> int:
        """Largest grid index whose bid does not exceed `value`."""
        idx = int(math.floor(value / self.epsilon + GRID_TOL))
        if idx < 0:
            raise GridError(f"no grid bid at or below {value}")
        return min(idx, self.n_bids - 1)


@dataclass(frozen=True)
class FpaInstance:
    """A Bayesian first-price auction: grid, optimizer value, learner value prior."""

    grid: BidGrid
    v_opt: float
    support_values: tuple[float, ...]
    support_probs: tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.support_values)
        probs = tuple(float(p) for p in self.support_probs)
        if len(values) != len(probs) or not values:
            raise GridError("support values and probabilities must be nonempty and equal length")
        if any(v2 <= v1 for v1, v2 in zip(values, values[1:])):
            raise GridError(f"support values must be strictly increasing, got {values}")
        self.grid.index_of(self.v_opt)
        for v in values:
            self.grid.index_of(v)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise GridError(f"support probabilities must be nonnegative and sum to 1, got {probs}")
        object.__setattr__(self, "v_opt", float(self.v_opt))
        object.__setattr__(self, "support_values", values)
        object.__setattr__(self, "support_probs", probs)

    @property
    def m(self) -> int:
        return len(self.support_values)

    def to_json_dict(self) -> dict:
        return {
            "epsilon": self.grid.epsilon,
            "n_bids": self.grid.n_bids,
            "v_opt": self.v_opt,
            "values": list(self.support_values),
            "probs": list(self.support_probs),
        }

    @staticmethod
    def from_json_dict(data: dict) -> "FpaInstance":
        return FpaInstance(
            grid=BidGrid(float(data["epsilon"]), int(data["n_bids"])),
            v_opt=float(data["v_opt"]),
            support_values=tuple(data["values"]),
            support_probs=tuple(data["probs"]),
        )

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)

    @staticmethod
    def from_json(path) -> "FpaInstance":
        with open(path) as fh:
            return FpaInstance.from_json_dict(json.load(fh))


def build_fpa(grid: BidGrid, v_opt, support_values, support_probs) -> BayesianGame:
    """First-price auction as a Bayesian game.

    Both players bid on the grid; context c is the learner value v_c. The
    learner wins ties: u_L(i, j, c) = (v_c - j eps) if j >= i else 0, and
    u_O(i, j, c) = (v_opt - i eps) if i > j else 0.
    """
    instance = FpaInstance(grid, v_opt, tuple(support_values), tuple(support_probs))
    n = grid.n_bids
    bids = grid.values()
    c_count = instance.m
    u_l = np.zeros((n, n, c_count))
    u_o = np.zeros((n, n, c_count))
    wins_l = bids[None, :] >= bids[:, None]  # learner bid j wins against optimizer bid i
    for c, v in enumerate(instance.support_values):
        u_l[:, :, c] = np.where(wins_l, v - bids[None, :], 0.0)
        u_o[:, :, c] = np.where(~wins_l, instance.v_opt - bids[:, None], 0.0)
    return BayesianGame.from_tensors(np.array(instance.support_probs), u_o, u_l)


def fpa_game(instance: FpaInstance) -> BayesianGame:
    return build_fpa(instance.grid, instance.v_opt, instance.support_values, instance.support_probs)


def separation_instance(m: int, grid: BidGrid) -> FpaInstance:
    """Geometric-value instance: v_opt = 1, values 2^i with P[v = 2^i] = 2^(i-m)
    for i < m and P[v = 2^m] = 2^(1-m).

    Requires a dyadic grid (1/eps a power of two) reaching 2^m, so every value
    and the optimizer value 1 are exactly representable.
    """
    if m < 2:
        raise ParameterError(f"separation instance needs m >= 2, got {m}")
    inv = 1.0 / grid.epsilon
    if abs(inv - round(inv)) > GRID_TOL or (round(inv) & (round(inv) - 1)) != 0:
        raise GridError(f"epsilon must be a dyadic divisor of 1, got {grid.epsilon}")
    if grid.max_value + GRID_TOL < 2.0**m:
        raise GridError(
            f"grid reaches only {grid.max_value}, need at least {2.0 ** m} for m={m}"
        )
    values = tuple(float(2**i) for i in range(1, m + 1))
    probs = [2.0 ** (i - m) for i in range(1, m)]
    probs.append(2.0 ** (1 - m))
    return FpaInstance(grid=grid, v_opt=1.0, support_values=values, support_probs=tuple(probs))


@dataclass(frozen=True)
class StackelbergCdf:
    """Piecewise bid CDF with value-indexed segments.

    Thresholds b_1 <= ... <= b_{m+1} with b_1 = 0. On the segment
    (b_i, b_{i+1}] the CDF grows as F(x) = (v_i - b_i) F(b_i) / (v_i - x),
    which keeps bid b_i a best response for a learner with value v_i.
    """

    instance: FpaInstance
    thresholds: tuple[float, ...]
    f_zero: float

    def __post_init__(self):
        b = tuple(float(x) for x in self.thresholds)
        if len(b) != self.instance.m + 1:
            raise ParameterError(
                f"need m+1={self.instance.m + 1} thresholds, got {len(b)}"
            )
        if abs(b[0]) > GRID_TOL:
            raise ParameterError(f"first threshold must be 0, got {b[0]}")
        if any(x2 < x1 - GRID_TOL for x1, x2 in zip(b, b[1:])):
            raise ParameterError(f"thresholds must be nondecreasing, got {b}")
        if b[-1] > self.instance.v_opt + GRID_TOL:
            raise ParameterError(f"top threshold {b[-1]} exceeds v_opt {self.instance.v_opt}")
        if not -GRID_TOL <= self.f_zero <= 1 + GRID_TOL:
            raise ParameterError(f"F(0) must lie in [0, 1], got {self.f_zero}")
        object.__setattr__(self, "thresholds", b)
        object.__setattr__(self, "f_zero", float(self.f_zero))

    def values_at_thresholds(self) -> list[float]:
        """F(b_1), ..., F(b_{m+1}) chained through the segment formula."""
        vals = [self.f_zero]
        b = self.thresholds
        for i, v in enumerate(self.instance.support_values):
            lo, hi = b[i], b[i + 1]
            if hi - lo <= GRID_TOL:
                vals.append(vals[-1])
                continue
            if v - hi <= GRID_TOL:
                raise DomainError(f"segment ({lo}, {hi}] touches the value {v}")
            vals.append(vals[-1] * (v - lo) / (v - hi))
        return vals


def stackelberg_cdf_eval(cdf: StackelbergCdf, x: float) -> float:
    """Evaluate the piecewise CDF at a grid bid; plateaus beyond b_{m+1}."""
    b = cdf.thresholds
    vals = cdf.values_at_thresholds()
    if x <= b[0] + GRID_TOL:
        return cdf.f_zero
    if x > b[-1] + GRID_TOL:
        return vals[-1]
    for i, v in enumerate(cdf.instance.support_values):
        lo, hi = b[i], b[i + 1]
        if lo + GRID_TOL < x <= hi + GRID_TOL:
            if v - x <= GRID_TOL:
                raise DomainError(f"CDF undefined at x={x} on segment with value {v}")
            return vals[i] * (v - lo) / (v - x)
    return vals[-1]


def phase_cdf(instance: FpaInstance, i: int, x: float) -> float:
    """Target CDF of phase i of the exploiting schedule.

    F_0 is identically zero; for i in 1..m, F_i(x) = v / (2 (v - x)) with
    v the (i-th highest) support value v_{m-i+1}.
    """
    if not 0 <= x <= instance.v_opt + GRID_TOL:
        raise DomainError(f"x={x} outside [0, v_opt={instance.v_opt}]")
    if not 0 <= i <= instance.m:
        raise DomainError(f"phase index {i} outside 0..{instance.m}")
    if i == 0:
        return 0.0
    v = instance.support_values[instance.m - i]
    if v - x <= GRID_TOL:
        raise DomainError(f"phase CDF undefined: value {v} not above x={x}")
    return v / (2.0 * (v - x))


@dataclass(frozen=True)
class PhaseCdfFamily:
    """Accessor for F_0..F_m on one instance."""

    instance: FpaInstance

    def __call__(self, i: int, x: float) -> float:
        return phase_cdf(self.instance, i, x)

    def increments_nondecreasing(self, xs: np.ndarray | None = None) -> bool:
        """Check numerically that F_i - F_{i-1} is nondecreasing on the grid."""
        if xs is None:
            grid = self.instance.grid
            xs = grid.values()
            xs = xs[xs <= self.instance.v_opt + GRID_TOL]
        for i in range(1, self.instance.m + 1):
            diffs = np.array([self(i, x) - self(i - 1, x) for x in xs])
            if np.any(np.diff(diffs) < -GRID_TOL):
                return False
        return True
