"""Mean-based learners and the tolerance-set calculus they obey.

A learner keeps one cumulative reward row per context: sigma[c, j] is the
total utility action j would have earned against the optimizer actions played
so far, regardless of which contexts were realized (full-information reward
vectors). An action is within tolerance at a round if its cumulative reward
trails the leader by at most gamma * T.

Decision convention: rows are computed from the sums through round t-1, since
the learner cannot see round t's reward before acting. The verifier can audit
either against that convention or against sums through round t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import HorizonError, ParameterError, ShapeError
from .games import BayesianGame

if TYPE_CHECKING:
    from .optimizers import Trace

SET_TOL = 1e-12


@dataclass(frozen=True)
class MeanBasedParams:
    gamma: float
    horizon: int

    def __post_init__(self):
        if self.gamma < 0 or self.horizon < 0:
            raise ParameterError(f"need gamma >= 0 and horizon >= 0, got {self}")

    @property
    def slack(self) -> float:
        return self.gamma * self.horizon


def mean_based_set(sigma_row: np.ndarray, params: MeanBasedParams) -> np.ndarray:
    """Actions whose cumulative reward is within gamma*T of the leader."""
    row = np.asarray(sigma_row, dtype=float)
    return np.flatnonzero(row >= row.max() - params.slack - SET_TOL)


def mean_based_mask(sigma: np.ndarray, slack: float) -> np.ndarray:
    """Vectorized membership mask for (T, N) cumulative reward rows."""
    return sigma >= sigma.max(axis=-1, keepdims=True) - slack - SET_TOL


@dataclass
class CumulativeRewards:
    """Per-context, per-action running reward sums."""

    sigma: np.ndarray  # (C, N)
    rounds_elapsed: int = 0

    @staticmethod
    def zeros(n_contexts: int, n_actions: int) -> "CumulativeRewards":
        return CumulativeRewards(np.zeros((n_contexts, n_actions)))

    def add(self, reward: np.ndarray) -> None:
        reward = np.asarray(reward, dtype=float)
        if reward.shape != self.sigma.shape:
            raise ShapeError(f"reward shape {reward.shape} != sigma shape {self.sigma.shape}")
        self.sigma += reward
        self.rounds_elapsed += 1


def default_hedge_eta(u_max: float, n_actions: int, horizon: int) -> float:
    """Textbook horizon-tuned step size, sqrt(8 ln N / T) / u_max."""
    if u_max <= 0:
        return 1.0
    return math.sqrt(8.0 * math.log(max(n_actions, 2)) / max(horizon, 1)) / u_max


def default_eps_schedule(n_actions: int):
    def eps(t: int) -> float:
        if t < 1:
            return 1.0
        return min(1.0, t ** (-1.0 / 3.0) * (n_actions * math.log(max(t, 1))) ** (1.0 / 3.0))

    return eps


class LearnerState:
    """Single-owner mutable learner state; subclasses fix the row rule."""

    kind = "abstract"

    def __init__(self, n_actions: int, n_contexts: int, horizon: int,
                 rng: np.random.Generator | None = None):
        self.n_actions = int(n_actions)
        self.n_contexts = int(n_contexts)
        self.horizon = int(horizon)
        self.rewards = CumulativeRewards.zeros(self.n_contexts, self.n_actions)
        self.decisions = 0
        self.rng = rng if rng is not None else np.random.default_rng(0)

    @property
    def sigma(self) -> np.ndarray:
        return self.rewards.sigma

    def absorb(self, reward: np.ndarray) -> None:
        self.rewards.add(reward)

    def rows(self, sigma: np.ndarray, ts: np.ndarray) -> np.ndarray:
        """Decision rows for a (B, N) stack of sigma states at rounds ts (1-based)."""
        raise NotImplementedError

    def profile(self) -> np.ndarray:
        """Current (C, N) behavioral rows from the absorbed reward history."""
        ts = np.full(self.n_contexts, self.decisions + 1)
        return self.rows(self.sigma, ts)

    def current_rows(self, t: int, n_actions: int | None = None) -> np.ndarray:
        if n_actions is not None and n_actions != self.n_actions:
            raise ShapeError(f"learner has {self.n_actions} actions, game has {n_actions}")
        return self.rows(self.sigma, np.full(self.n_contexts, t))

    def describe(self) -> dict:
        return {"kind": self.kind}


class FollowTheLeader(LearnerState):
    """Point mass on the argmax of cumulative rewards, lowest index on ties."""

    kind = "ftl"

    def rows(self, sigma: np.ndarray, ts: np.ndarray) -> np.ndarray:
        sigma = np.atleast_2d(sigma)
        out = np.zeros_like(sigma, dtype=float)
        out[np.arange(sigma.shape[0]), np.argmax(sigma, axis=1)] = 1.0
        return out


class Hedge(LearnerState):
    """Exponential weights: row proportional to exp(eta * sigma_j)."""

    kind = "hedge"

    def __init__(self, n_actions, n_contexts, horizon, eta: float, rng=None):
        super().__init__(n_actions, n_contexts, horizon, rng)
        if eta <= 0:
            raise ParameterError(f"hedge step size must be positive, got {eta}")
        self.eta = float(eta)

    @classmethod
    def for_game(cls, game: BayesianGame, horizon: int, rng=None, eta: float | None = None) -> "Hedge":
        if eta is None:
            eta = default_hedge_eta(game.utility_bound, game.n_actions, horizon)
        return cls(game.n_actions, game.n_contexts, horizon, eta, rng)

    def rows(self, sigma: np.ndarray, ts: np.ndarray) -> np.ndarray:
        sigma = np.atleast_2d(sigma)
        logits = self.eta * (sigma - sigma.max(axis=1, keepdims=True))
        w = np.exp(logits)
        return w / w.sum(axis=1, keepdims=True)

    def describe(self) -> dict:
        return {"kind": self.kind, "eta": self.eta}


class EpsGreedy(LearnerState):
    """Argmax row mixed with uniform exploration on a decaying schedule."""

    kind = "eps_greedy"

    def __init__(self, n_actions, n_contexts, horizon, schedule=None, rng=None):
        super().__init__(n_actions, n_contexts, horizon, rng)
        self.schedule = schedule if schedule is not None else default_eps_schedule(n_actions)

    def rows(self, sigma: np.ndarray, ts: np.ndarray) -> np.ndarray:
        sigma = np.atleast_2d(sigma)
        ts = np.atleast_1d(ts)
        eps = np.array([self.schedule(int(t)) for t in ts])
        out = np.zeros_like(sigma, dtype=float)
        out[np.arange(sigma.shape[0]), np.argmax(sigma, axis=1)] = 1.0
        return out * (1.0 - eps)[:, None] + (eps / self.n_actions)[:, None]


def sample_from_row(row: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from a probability row using one uniform."""
    cum = np.cumsum(row)
    cum[-1] = max(cum[-1], 1.0)
    return int(np.searchsorted(cum, u, side="right"))


def learner_step(
    state: LearnerState,
    context: int,
    game: BayesianGame,
    last_opt_action: int | None,
) -> tuple[np.ndarray, int]:
    """One decision: absorb the previous round's reward vector, emit the row
    for the given context, and realize an action from it via the state's RNG.
    """
    if state.decisions >= state.horizon:
        raise HorizonError(f"learner already made {state.decisions} of {state.horizon} decisions")
    if last_opt_action is not None:
        state.absorb(game.learner_rewards(last_opt_action))
    row = state.profile()[context]
    action = sample_from_row(row, float(state.rng.random()))
    state.decisions += 1
    return row, action


@dataclass(frozen=True)
class MeanBasedAudit:
    violations: int
    mean_based_rounds: np.ndarray  # (T,) bool, True where the round was compliant
    per_round_gap: np.ndarray  # leader's sigma minus the realized action's sigma

    @property
    def fraction_violating(self) -> float:
        t = self.mean_based_rounds.size
        return self.violations / t if t else 0.0


def verify_mean_based(
    trace: "Trace",
    game: BayesianGame,
    params: MeanBasedParams,
    convention: str = "paper",
) -> MeanBasedAudit:
    """Audit a trace against the tolerance condition.

    convention="paper" checks the realized action against sums through the
    current round; convention="decision" checks against sums through the
    previous round (what the learner could actually see).
    """
    if convention not in ("paper", "decision"):
        raise ParameterError(f"unknown convention {convention!r}")
    t_total = trace.opt_actions.size
    gaps = np.zeros(t_total)
    slack = params.slack
    carry = np.zeros((game.n_contexts, game.n_actions))
    chunk = 8192
    for start in range(0, t_total, chunk):
        stop = min(start + chunk, t_total)
        acts = trace.opt_actions[start:stop]
        rewards = np.transpose(game.u_learner[acts], (0, 2, 1))  # (B, C, N)
        sig = carry + np.cumsum(rewards, axis=0)
        if convention == "decision":
            shifted = np.empty_like(sig)
            shifted[0] = carry
            shifted[1:] = sig[:-1]
            view = shifted
        else:
            view = sig
        rows = view[np.arange(stop - start), trace.contexts[start:stop]]
        picked = rows[np.arange(stop - start), trace.learner_actions[start:stop]]
        gaps[start:stop] = rows.max(axis=1) - picked
        carry = sig[-1]
    ok = gaps <= slack + SET_TOL
    return MeanBasedAudit(int((~ok).sum()), ok, gaps)
