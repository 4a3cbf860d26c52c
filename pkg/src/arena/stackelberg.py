"""Stackelberg utility of a Bayesian game.

Two routes. The generic route enumerates a best-response cover and solves one
LP per covered pure strategy: maximize the optimizer's expected utility over
its mixed strategies subject to the strategy being a per-context best
response (weak inequalities realize the optimizer-favoring tie-break). The
auction-specific route searches threshold vectors of the segment-form bid CDF
that keeps each supported value's designated bid a best response, normalizing
the CDF to 1 at the top threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .errors import GridError, NumericError, ParameterError
from .fpa import GRID_TOL, FpaInstance, StackelbergCdf, fpa_game
from .games import (
    BayesianGame,
    OptimizerMixed,
    PureStrategy,
    conditional_utilities,
    pure_strategy_utility,
)
from .lp import LinearProgram, lp_solve
from .swap_learners import CoverSpec, fpa_cover

VERIFY_TOL = 1e-8


@dataclass
class StackelbergSolution:
    value: float
    alpha: OptimizerMixed
    best_response: PureStrategy
    per_strategy_values: dict[tuple[int, ...], float | None]
    method: str
    cdf: StackelbergCdf | None = None

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "alpha": self.alpha.probs.tolist(),
            "best_response": list(self.best_response.choices),
            "method": self.method,
            "per_strategy_values": {
                ",".join(map(str, f)): v for f, v in self.per_strategy_values.items()
            },
            "thresholds": list(self.cdf.thresholds) if self.cdf is not None else None,
            "f_zero": self.cdf.f_zero if self.cdf is not None else None,
        }


def _verify_solution(game: BayesianGame, sol: StackelbergSolution) -> None:
    uo_cond, ul_cond = conditional_utilities(game, sol.alpha)
    for c in range(game.n_contexts):
        row = ul_cond[c]
        if row[sol.best_response[c]] < row.max() - VERIFY_TOL:
            raise NumericError(
                f"returned strategy is not a best response in context {c} "
                f"(gap {row.max() - row[sol.best_response[c]]})"
            )
    achieved, _ = pure_strategy_utility(game, sol.alpha, sol.best_response)
    if abs(achieved - sol.value) > VERIFY_TOL:
        raise NumericError(f"value {sol.value} does not match u_O(alpha, f) = {achieved}")


def stackelberg_solve(
    game: BayesianGame,
    cover: CoverSpec,
    allowed_optimizer_actions: np.ndarray | None = None,
) -> StackelbergSolution:
    """Cover-enumeration LP solve of the commitment problem.

    The caller is responsible for the cover actually containing a best
    response to every optimizer mixture (for first-price auctions use a
    monotone cover; for small arbitrary games the full cover).
    """
    if allowed_optimizer_actions is None:
        allowed = np.arange(game.m_actions)
    else:
        allowed = np.asarray(allowed_optimizer_actions, dtype=int)
    m_sub = allowed.size
    per_strategy: dict[tuple[int, ...], float | None] = {}
    best = None
    for f in cover.strategies:
        obj = np.zeros(m_sub)
        for k, i in enumerate(allowed):
            obj[k] = sum(
                game.prior[c] * game.u_opt[i, f[c], c] for c in range(game.n_contexts)
            )
        rows = []
        for c in range(game.n_contexts):
            diffs = game.u_learner[allowed, :, c] - game.u_learner[allowed, f[c], c][:, None]
            for j in range(game.n_actions):
                if j == f[c]:
                    continue
                rows.append(diffs[:, j])
        lp = LinearProgram(
            c=obj,
            a_ub=np.array(rows) if rows else None,
            b_ub=np.zeros(len(rows)) if rows else None,
            a_eq=np.ones((1, m_sub)),
            b_eq=np.array([1.0]),
            maximize=True,
        )
        res = lp_solve(lp)
        if res.status != "optimal":
            per_strategy[f] = None
            continue
        per_strategy[f] = float(res.objective)
        if best is None or res.objective > best[0] + 1e-12:
            alpha_full = np.zeros(game.m_actions)
            alpha_full[allowed] = np.clip(res.x, 0.0, None)
            alpha_full /= alpha_full.sum()
            best = (float(res.objective), alpha_full, f)
    if best is None:
        raise NumericError("every covered strategy was infeasible; cover cannot be a best-response cover")
    value, alpha, f = best
    sol = StackelbergSolution(value, OptimizerMixed(alpha), PureStrategy(f), per_strategy, "lp")
    _verify_solution(game, sol)
    return sol


def fpa_stackelberg_lp(
    instance: FpaInstance,
    cover_kind: str = "monotone",
    prune: bool = True,
) -> StackelbergSolution:
    """LP route specialized to auctions.

    With prune=True the optimizer's support is restricted to bids at most its
    value (higher bids never profit) and the cover's bid range to v_opt plus
    one tick (higher learner bids always win yet overpay).
    """
    game = fpa_game(instance)
    max_bid = instance.v_opt + instance.grid.epsilon if prune else None
    cover = fpa_cover(instance, cover_kind, max_bid=max_bid)
    allowed = None
    if prune:
        allowed = np.arange(instance.grid.index_of_floor(instance.v_opt) + 1)
    return stackelberg_solve(game, cover, allowed_optimizer_actions=allowed)


def _threshold_cdf_marks(instance: FpaInstance, b: tuple[int, ...]) -> list[float] | None:
    """F at the thresholds, chained downward from F(b_{m+1}) = 1.

    A nonempty segment topping out exactly at its value is the degenerate
    jump case: the CDF below it collapses to zero and all mass above enters
    at or past the value. Segments whose value falls strictly inside are
    rejected (no valid CDF shape).
    """
    bid_values = instance.grid.values()
    m = instance.m
    marks = [0.0] * (m + 1)
    marks[m] = 1.0
    for k in range(m - 1, -1, -1):
        v = instance.support_values[k]
        lo, hi = bid_values[b[k]], bid_values[b[k + 1]]
        if hi <= lo + GRID_TOL:
            marks[k] = marks[k + 1]
        elif v > hi + GRID_TOL:
            marks[k] = marks[k + 1] * (v - hi) / (v - lo)
        elif abs(v - hi) <= GRID_TOL:
            marks[k] = 0.0
        else:
            return None
    return marks


def _threshold_cdf_evals(instance: FpaInstance, b: tuple[int, ...], marks: list[float]) -> np.ndarray:
    """F at every grid bid for a threshold candidate (plateau of 1 on top)."""
    bid_values = instance.grid.values()
    evals = np.ones(instance.grid.n_bids)
    evals[: b[0] + 1] = marks[0]
    for k in range(instance.m):
        v = instance.support_values[k]
        lo = bid_values[b[k]]
        for j in range(b[k] + 1, b[k + 1] + 1):
            if j == b[k + 1]:
                evals[j] = marks[k + 1]
            elif marks[k] == 0.0:
                evals[j] = 0.0
            else:
                evals[j] = marks[k] * (v - lo) / (v - bid_values[j])
    return evals


def fpa_stackelberg_characterized(instance: FpaInstance) -> StackelbergSolution:
    """Threshold-vector grid search over segment-form commitment CDFs.

    Enumerates nondecreasing (b_2, ..., b_{m+1}) over grid bids up to v_opt
    with b_1 = 0, pins F at the top threshold to 1, chains the remaining
    threshold values downward through the segment formula (including the
    degenerate all-mass-at-the-value jumps), rejects candidates whose CDF is
    invalid or whose designated bids fail the per-value best-response check,
    and evaluates the optimizer's utility segment by segment: a bid in
    (b_i, b_{i+1}] wins exactly against the i lowest values.
    """
    m = instance.m
    if m > 4:
        raise ParameterError(f"characterization search supports m <= 4, got m = {m}")
    grid = instance.grid
    game = fpa_game(instance)
    top = grid.index_of_floor(instance.v_opt)
    bid_values = grid.values()
    cum_probs = np.cumsum(instance.support_probs)
    best = None
    for tail in combinations_with_replacement(range(top + 1), m):
        b = (0,) + tail  # b_1..b_{m+1} as grid indices
        marks = _threshold_cdf_marks(instance, b)
        if marks is None or not -GRID_TOL <= marks[0] <= 1.0 + GRID_TOL:
            continue
        evals = _threshold_cdf_evals(instance, b, marks)
        if np.any(np.diff(evals) < -GRID_TOL):
            continue
        # Best-response check for every supported value at its designated bid.
        ok = True
        for i, v in enumerate(instance.support_values):
            mine = (v - bid_values[b[i]]) * marks[i]
            if np.max((v - bid_values) * evals) > mine + 1e-9:
                ok = False
                break
        if not ok:
            continue
        # Optimizer utility: mass at grid bid x in (b_i, b_{i+1}] beats values 1..i.
        value = 0.0
        alpha = np.zeros(game.m_actions)
        alpha[0] = marks[0]
        for i in range(m):
            for j in range(b[i] + 1, b[i + 1] + 1):
                mass = evals[j] - evals[j - 1]
                alpha[j] += mass
                value += mass * (instance.v_opt - bid_values[j]) * cum_probs[i]
        if best is None or value > best[0] + 1e-12:
            best = (float(value), alpha, tuple(b[i] for i in range(m)), marks)
    if best is None:
        raise GridError("no valid threshold vector; grid too coarse for the characterization")
    value, alpha, bids_for_values, marks = best
    alpha = np.clip(alpha, 0.0, None)
    alpha /= alpha.sum()
    cdf = None
    if marks[0] > 0.0:
        # Regular candidate; expose the segment CDF object as well.
        thresholds = tuple(bid_values[i] for i in bids_for_values) + (
            bid_values[_alpha_top_index(alpha)],
        )
        try:
            cdf = StackelbergCdf(instance, thresholds, marks[0])
        except (ParameterError, GridError):
            cdf = None
    sol = StackelbergSolution(
        value,
        OptimizerMixed(alpha),
        PureStrategy(bids_for_values),
        {},
        "characterization",
        cdf=cdf,
    )
    _verify_solution(game, sol)
    return sol


def _alpha_top_index(alpha: np.ndarray) -> int:
    return int(np.max(np.flatnonzero(alpha > 1e-12)))
