"""Optimizer policies, the phased exploiting schedule, the oblivious bid
transform, and the deterministic simulation engine.

The engine is seeded with three counter-based substreams (optimizer draw,
context draw, learner realization), one uniform per round each, so looped and
vectorized execution produce bit-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import HorizonError, ParameterError, ShapeError
from .fpa import GRID_TOL, FpaInstance, fpa_game, phase_cdf
from .games import BayesianGame, OptimizerMixed
from .learners import LearnerState, mean_based_mask
from .regret import Trace
from .rng import derive_streams
from .swap_learners import PolytopeSwapLearner

CHUNK = 8192


@dataclass(frozen=True)
class StaticMixed:
    """Same mixed strategy every round, sampled i.i.d."""

    alpha: OptimizerMixed


@dataclass(frozen=True)
class ObliviousSequence:
    """A fixed bid sequence, independent of anything the learner does."""

    actions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "actions", np.asarray(self.actions, dtype=int))


@dataclass(frozen=True)
class AdaptiveCallback:
    """Callback policy: fn(t, history) -> action, with history a dict of the
    realized columns so far (opt_actions, contexts, learner_actions)."""

    fn: Callable[[int, dict], int]


Policy = StaticMixed | ObliviousSequence | AdaptiveCallback


@dataclass(frozen=True)
class ExploitPlan:
    """Phased nondecreasing bid schedule against tolerance-gated learners.

    Phase 0 bids zero for ceil(gamma' T) rounds with gamma' = 2 gamma / eps;
    phase i >= 1 emits, in nondecreasing order, bid counts whose cumulative
    histogram tracks (1 - gamma') T (F_i - F_{i-1}) on the grid, padding each
    phase's floor-rounding shortfall with leading zero bids.
    """

    instance: FpaInstance
    gamma: float
    gamma_prime: float
    horizon: int
    phase_slices: tuple[tuple[int, int], ...]
    phase_bid_counts: tuple[np.ndarray, ...]
    bids: np.ndarray


def exploit_sequence(instance: FpaInstance, gamma: float, horizon: int) -> ExploitPlan:
    grid = instance.grid
    eps = grid.epsilon
    if abs(instance.v_opt - 1.0) > GRID_TOL:
        raise ParameterError(f"exploit schedule needs v_opt = 1, got {instance.v_opt}")
    if abs(instance.support_values[0] - 2.0) > GRID_TOL:
        raise ParameterError(
            f"exploit schedule needs lowest value 2, got {instance.support_values[0]}"
        )
    if gamma < 0:
        raise ParameterError(f"gamma must be nonnegative, got {gamma}")
    gamma_prime = 2.0 * gamma / eps
    if gamma_prime >= 1.0:
        raise ParameterError(f"gamma' = 2 gamma / eps = {gamma_prime} must be below 1")
    n0 = int(math.ceil(gamma_prime * horizon))
    remaining = horizon - n0
    top_idx = grid.index_of(1.0)
    xs = np.arange(top_idx + 1) * eps
    m = instance.m

    def floor_mass(value: float) -> int:
        return int(math.floor(value + 1e-9))

    bids = [np.zeros(n0, dtype=int)]
    slices = [(0, n0)]
    counts_per_phase = []
    cursor = n0
    prev_top = 0
    for i in range(1, m + 1):
        increments = np.array([phase_cdf(instance, i, x) - phase_cdf(instance, i - 1, x) for x in xs])
        cum = np.array([floor_mass(remaining * v) for v in increments])
        counts = np.diff(np.concatenate([[0], cum]))
        if counts.min() < 0:
            raise ParameterError("phase increments not nondecreasing; instance unsupported")
        phase_top = floor_mass(remaining * phase_cdf(instance, i, 1.0))
        target = phase_top - prev_top
        prev_top = phase_top
        shortfall = target - counts.sum()
        if shortfall < 0:
            raise ParameterError("phase mass accounting failed")
        counts[0] += shortfall
        counts_per_phase.append(counts)
        phase_bids = np.repeat(np.arange(top_idx + 1), counts)
        bids.append(phase_bids)
        slices.append((cursor, cursor + phase_bids.size))
        cursor += phase_bids.size
    bids_arr = np.concatenate(bids)
    if bids_arr.size != horizon:
        raise ParameterError(f"schedule length {bids_arr.size} != horizon {horizon}")
    return ExploitPlan(
        instance, gamma, gamma_prime, horizon, tuple(slices), tuple(counts_per_phase), bids_arr
    )


def zero_bid_dominance_report(plan: ExploitPlan, params_gamma: float | None = None) -> dict:
    """Audit: at positive-bid rounds of phase i, bid 0 must be the only action
    within the tolerance window for every context whose value is at most the
    phase's target value. Uses cumulative sums through the current round.
    """
    instance = plan.instance
    game = fpa_game(instance)
    gamma = plan.gamma if params_gamma is None else params_gamma
    slack = gamma * plan.horizon
    rewards = np.transpose(game.u_learner[plan.bids], (0, 2, 1))  # (T, C, N)
    sigma = np.cumsum(rewards, axis=0)
    violations = 0
    checked = 0
    for i in range(1, instance.m + 1):
        lo, hi = plan.phase_slices[i]
        phase_bids = plan.bids[lo:hi]
        positive = np.flatnonzero(phase_bids > 0) + lo
        if positive.size == 0:
            continue
        v_target = instance.support_values[instance.m - i]
        low_contexts = [c for c, v in enumerate(instance.support_values) if v <= v_target + GRID_TOL]
        for c in low_contexts:
            rows = sigma[positive, c, :]
            mask = mean_based_mask(rows, slack)
            ok = mask[:, 0] & ~mask[:, 1:].any(axis=1)
            violations += int((~ok).sum())
            checked += ok.size
    return {"violations": violations, "checked": checked}


@dataclass(frozen=True)
class ObliviousTransform:
    """Delay-and-filter rewrite of a bid sequence.

    The output opens with ceil(gamma_hat T) zero bids, gamma_hat =
    3 gamma / (eps - gamma); afterwards round t's bid passes through only if
    it beats the learner's lowest within-tolerance bid at round t of the
    original sequence and does not exceed the optimizer's value.
    """

    instance: FpaInstance
    gamma: float
    gamma_hat: float
    pad: int
    input_actions: np.ndarray
    output_actions: np.ndarray
    original_sets: np.ndarray  # (T, N) bool
    transformed_sets: np.ndarray  # (T + pad, N) bool


def obliviousify(bids: np.ndarray, instance: FpaInstance, gamma: float) -> ObliviousTransform:
    if instance.m != 1:
        raise ParameterError("oblivious transform is defined for standard (single-value) auctions")
    eps = instance.grid.epsilon
    if not 0 < gamma < eps:
        raise ParameterError(f"need 0 < gamma < eps = {eps}, got gamma = {gamma}")
    bids = np.asarray(bids, dtype=int)
    t_total = bids.size
    gamma_hat = 3.0 * gamma / (eps - gamma)
    pad = int(math.ceil(gamma_hat * t_total))
    game = fpa_game(instance)
    rewards = game.u_learner[bids][:, :, 0]  # (T, N)
    sigma = np.cumsum(rewards, axis=0)
    original_sets = mean_based_mask(sigma, gamma * t_total)
    min_x = np.argmax(original_sets, axis=1)  # lowest within-tolerance bid
    v_idx_cap = instance.grid.index_of_floor(instance.v_opt)
    passed = (bids > min_x) & (bids <= v_idx_cap)
    out = np.concatenate([np.zeros(pad, dtype=int), np.where(passed, bids, 0)])
    rewards_hat = game.u_learner[out][:, :, 0]
    sigma_hat = np.cumsum(rewards_hat, axis=0)
    transformed_sets = mean_based_mask(sigma_hat, gamma * (t_total + pad))
    return ObliviousTransform(
        instance, gamma, gamma_hat, pad, bids, out, original_sets, transformed_sets
    )


def transform_dominance_holds(transform: ObliviousTransform) -> bool:
    """max of the transformed tolerance set at t + pad never exceeds the min
    of the original set at t."""
    n = transform.original_sets.shape[1]
    min_orig = np.argmax(transform.original_sets, axis=1)
    shifted = transform.transformed_sets[transform.pad:]
    max_trans = n - 1 - np.argmax(shifted[:, ::-1], axis=1)
    return bool(np.all(max_trans <= min_orig))


def _inverse_cdf(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized inverse-CDF sampling; cum is (..., N) with last entry >= 1."""
    return (u[..., None] >= cum).sum(axis=-1)


def _require_rows(learner, game: BayesianGame, t: int) -> np.ndarray:
    rows = learner.current_rows(t, game.n_actions)
    if rows.shape != (game.n_contexts, game.n_actions):
        raise ShapeError(f"learner produced rows of shape {rows.shape}")
    return rows


def simulate(
    game: BayesianGame,
    policy: Policy,
    learner,
    horizon: int,
    seed: int,
    scenario_key: str | int = "sim",
    record_profiles: bool = True,
) -> Trace:
    """Run one repeated game and record the trace.

    Per round: a context is sampled from the prior, the optimizer emits an
    action without seeing it, the learner's current rows realize an action
    for that context, utilities are recorded, and the learner absorbs the
    round's full reward vector. Identical (key, seed) replay identically.
    """
    opt_stream, ctx_stream, act_stream = derive_streams(scenario_key, seed, 3)
    horizon = int(horizon)
    if getattr(learner, "horizon", horizon) < horizon:
        raise HorizonError(f"learner horizon {learner.horizon} below requested {horizon}")

    cum_prior = np.cumsum(game.prior)
    cum_prior[-1] = max(cum_prior[-1], 1.0)
    contexts = _inverse_cdf(cum_prior, ctx_stream.random(horizon))

    if isinstance(policy, StaticMixed):
        if policy.alpha.probs.size != game.m_actions:
            raise ShapeError("policy alpha has the wrong number of actions")
        cum_alpha = np.cumsum(policy.alpha.probs)
        cum_alpha[-1] = max(cum_alpha[-1], 1.0)
        opt_actions = _inverse_cdf(cum_alpha, opt_stream.random(horizon))
    elif isinstance(policy, ObliviousSequence):
        if policy.actions.size != horizon:
            raise ShapeError(f"sequence length {policy.actions.size} != horizon {horizon}")
        opt_actions = policy.actions
    else:
        opt_actions = None  # adaptive, decided per round

    u_act = act_stream.random(horizon)
    vectorizable = opt_actions is not None and isinstance(learner, LearnerState)

    if vectorizable:
        return _simulate_vectorized(
            game, opt_actions, contexts, u_act, learner, horizon, record_profiles
        )
    return _simulate_loop(game, policy, opt_actions, contexts, u_act, learner, horizon,
                          record_profiles)


def _simulate_vectorized(game, opt_actions, contexts, u_act, learner, horizon, record_profiles):
    c_count, n = game.n_contexts, game.n_actions
    learner_actions = np.zeros(horizon, dtype=int)
    profiles = np.zeros((horizon, c_count, n)) if record_profiles else None
    exp_opt = 0.0
    exp_learner = 0.0
    carry = learner.sigma.copy()
    for start in range(0, horizon, CHUNK):
        stop = min(start + CHUNK, horizon)
        acts = opt_actions[start:stop]
        block = stop - start
        rewards = np.transpose(game.u_learner[acts], (0, 2, 1))  # (B, C, N)
        sig_incl = carry + np.cumsum(rewards, axis=0)
        decision = np.empty_like(sig_incl)
        decision[0] = carry
        decision[1:] = sig_incl[:-1]
        carry = sig_incl[-1]
        ts = np.arange(start + 1, stop + 1)
        flat_rows = learner.rows(
            decision.reshape(block * c_count, n), np.repeat(ts, c_count)
        ).reshape(block, c_count, n)
        ctx_block = contexts[start:stop]
        realized_rows = flat_rows[np.arange(block), ctx_block]
        cum = np.cumsum(realized_rows, axis=1)
        cum[:, -1] = np.maximum(cum[:, -1], 1.0)
        learner_actions[start:stop] = _inverse_cdf(cum, u_act[start:stop])
        if record_profiles:
            profiles[start:stop] = flat_rows
        uo_block = np.transpose(game.u_opt[acts], (0, 2, 1))
        exp_opt += float(np.einsum("bcn,bcn,c->", flat_rows, uo_block, game.prior))
        exp_learner += float(np.einsum("bcn,bcn,c->", flat_rows, rewards, game.prior))
    learner.rewards.sigma[:] = carry
    learner.rewards.rounds_elapsed += horizon
    learner.decisions += horizon
    u_opt_real = game.u_opt[opt_actions, learner_actions, contexts]
    u_learner_real = game.u_learner[opt_actions, learner_actions, contexts]
    return Trace(
        opt_actions, contexts, learner_actions, u_opt_real, u_learner_real,
        profiles, expected_u_opt_total=exp_opt, expected_u_learner_total=exp_learner,
    )


def _simulate_loop(game, policy, opt_actions, contexts, u_act, learner, horizon, record_profiles):
    c_count, n = game.n_contexts, game.n_actions
    learner_actions = np.zeros(horizon, dtype=int)
    realized_opt = np.zeros(horizon, dtype=int)
    profiles = np.zeros((horizon, c_count, n)) if record_profiles else None
    is_cover_learner = isinstance(learner, PolytopeSwapLearner)
    cover_weights = np.zeros((horizon, len(learner.cover))) if is_cover_learner else None
    exp_opt = 0.0
    exp_learner = 0.0
    history = {"opt_actions": [], "contexts": [], "learner_actions": []}
    for t in range(horizon):
        if opt_actions is not None:
            i_t = int(opt_actions[t])
        else:
            i_t = int(policy.fn(t, history))
            if not 0 <= i_t < game.m_actions:
                raise ShapeError(f"adaptive policy returned action {i_t}")
        rows = _require_rows(learner, game, t + 1)
        c_t = int(contexts[t])
        cum = np.cumsum(rows[c_t])
        cum[-1] = max(cum[-1], 1.0)
        j_t = int(np.searchsorted(cum, u_act[t], side="right"))
        realized_opt[t] = i_t
        learner_actions[t] = j_t
        if record_profiles:
            profiles[t] = rows
        if is_cover_learner:
            cover_weights[t] = learner.distribution()
        uo_cond = game.u_opt[i_t].T
        ul_cond = game.u_learner[i_t].T
        exp_opt += float(game.prior @ (rows * uo_cond).sum(axis=1))
        exp_learner += float(game.prior @ (rows * ul_cond).sum(axis=1))
        learner.absorb(game.learner_rewards(i_t))
        history["opt_actions"].append(i_t)
        history["contexts"].append(c_t)
        history["learner_actions"].append(j_t)
    u_opt_real = game.u_opt[realized_opt, learner_actions, contexts]
    u_learner_real = game.u_learner[realized_opt, learner_actions, contexts]
    return Trace(
        realized_opt, contexts, learner_actions, u_opt_real, u_learner_real, profiles,
        cover=learner.cover if is_cover_learner else None,
        cover_weights=cover_weights,
        expected_u_opt_total=exp_opt, expected_u_learner_total=exp_learner,
    )
