"""Finite two-player Bayesian games and their utility/best-response algebra.

A game has M optimizer actions, N learner actions, and C contexts. A context
is sampled from a public prior and revealed only to the learner. Utilities
are dense (M, N, C) tensors. A pure strategy for the learner is a map from
contexts to actions; mixed strategies are distributions over pure strategies,
and a behavioral profile is the per-context marginal signature of such a
distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ShapeError

PROB_TOL = 1e-12
# Payoff comparisons use an absolute tolerance far below any payoff gap of
# the small dyadic games this toolkit targets.
PAYOFF_TOL = 1e-9


def _check_prob_vector(p: np.ndarray, name: str, tol: float = PROB_TOL) -> None:
    if p.ndim != 1:
        raise ShapeError(f"{name} must be a vector, got shape {p.shape}")
    if p.size and p.min() < -tol:
        raise ShapeError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > tol:
        raise ShapeError(f"{name} sums to {p.sum()!r}, expected 1 within {tol}")


@dataclass(frozen=True)
class PureStrategy:
    """Map from context index to learner action index."""

    choices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(int(a) for a in self.choices))

    def __len__(self) -> int:
        return len(self.choices)

    def __getitem__(self, context: int) -> int:
        return self.choices[context]


@dataclass(frozen=True)
class OptimizerMixed:
    """Probability vector over optimizer actions."""

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=float)
        _check_prob_vector(arr, "optimizer mixed strategy")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @staticmethod
    def point_mass(i: int, m_actions: int) -> "OptimizerMixed":
        p = np.zeros(m_actions)
        p[i] = 1.0
        return OptimizerMixed(p)


@dataclass(frozen=True)
class StrategyDistribution:
    """Distribution over pure strategies (the learner's mixed strategy)."""

    support: tuple[tuple[PureStrategy, float], ...]

    def __post_init__(self):
        support = tuple((f, float(w)) for f, w in self.support)
        seen = set()
        total = 0.0
        for f, w in support:
            if w < -PROB_TOL:
                raise ShapeError(f"negative probability {w} in strategy distribution")
            if f.choices in seen:
                raise ShapeError(f"duplicate pure strategy {f.choices} in support")
            seen.add(f.choices)
            total += w
        if abs(total - 1.0) > PROB_TOL:
            raise ShapeError(f"strategy distribution sums to {total!r}")
        object.__setattr__(self, "support", support)

    @staticmethod
    def point_mass(f: PureStrategy) -> "StrategyDistribution":
        return StrategyDistribution(((f, 1.0),))


@dataclass(frozen=True)
class BehavioralProfile:
    """Per-context distributions over learner actions, shape (C, N)."""

    per_context: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.per_context, dtype=float)
        if arr.ndim != 2:
            raise ShapeError(f"profile must be (C, N), got shape {arr.shape}")
        for c in range(arr.shape[0]):
            _check_prob_vector(arr[c], f"profile row {c}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "per_context", arr)

    @property
    def n_contexts(self) -> int:
        return self.per_context.shape[0]

    @property
    def n_actions(self) -> int:
        return self.per_context.shape[1]


def profiles_equal(a: BehavioralProfile, b: BehavioralProfile, tol: float = PROB_TOL) -> bool:
    """Marginal equivalence: entrywise agreement within `tol`."""
    if a.per_context.shape != b.per_context.shape:
        return False
    return bool(np.max(np.abs(a.per_context - b.per_context)) <= tol)


@dataclass(frozen=True)
class BayesianGame:
    m_actions: int
    n_actions: int
    n_contexts: int
    prior: np.ndarray
    u_opt: np.ndarray
    u_learner: np.ndarray
    utility_bound: float

    def __post_init__(self):
        prior = np.asarray(self.prior, dtype=float)
        _check_prob_vector(prior, "prior")
        if prior.shape != (self.n_contexts,):
            raise ShapeError(f"prior has shape {prior.shape}, expected ({self.n_contexts},)")
        shape = (self.m_actions, self.n_actions, self.n_contexts)
        uo = np.asarray(self.u_opt, dtype=float)
        ul = np.asarray(self.u_learner, dtype=float)
        if uo.shape != shape or ul.shape != shape:
            raise ShapeError(
                f"utility tensors must have shape {shape}, got {uo.shape} and {ul.shape}"
            )
        bound = float(self.utility_bound)
        if bound < 0:
            raise ShapeError("utility bound must be nonnegative")
        peak = max(np.abs(uo).max(), np.abs(ul).max()) if uo.size else 0.0
        if peak > bound + PAYOFF_TOL:
            raise ShapeError(f"tensor entry {peak} exceeds utility bound {bound}")
        for name, arr in (("prior", prior), ("u_opt", uo), ("u_learner", ul)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "utility_bound", bound)

    @staticmethod
    def from_tensors(prior, u_opt, u_learner, utility_bound: float | None = None) -> "BayesianGame":
        uo = np.asarray(u_opt, dtype=float)
        ul = np.asarray(u_learner, dtype=float)
        if uo.ndim != 3:
            raise ShapeError(f"utility tensor must be 3d (M, N, C), got shape {uo.shape}")
        m, n, c = uo.shape
        if utility_bound is None:
            utility_bound = float(max(np.abs(uo).max(), np.abs(ul).max())) if uo.size else 0.0
        return BayesianGame(m, n, c, np.asarray(prior, dtype=float), uo, ul, utility_bound)

    def learner_rewards(self, opt_action: int) -> np.ndarray:
        """Reward vector of a round, as a (C, N) array of u_L(i, j, c)."""
        return self.u_learner[opt_action].T

    def to_json_dict(self) -> dict:
        return {
            "m": self.m_actions,
            "n": self.n_actions,
            "c": self.n_contexts,
            "prior": self.prior.tolist(),
            "u_opt": self.u_opt.tolist(),
            "u_learner": self.u_learner.tolist(),
        }

    @staticmethod
    def from_json_dict(data: dict) -> "BayesianGame":
        game = BayesianGame.from_tensors(data["prior"], data["u_opt"], data["u_learner"])
        if game.m_actions != data["m"] or game.n_actions != data["n"] or game.n_contexts != data["c"]:
            raise ShapeError("declared (m, n, c) disagree with tensor shapes")
        return game

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)

    @staticmethod
    def from_json(path) -> "BayesianGame":
        with open(path) as fh:
            return BayesianGame.from_json_dict(json.load(fh))


def enumerate_pure_strategies(n_actions: int, n_contexts: int) -> list[tuple[int, ...]]:
    """All N^C pure strategies in lexicographic order."""
    return list(product(range(n_actions), repeat=n_contexts))


def conditional_utilities(game: BayesianGame, alpha: OptimizerMixed) -> tuple[np.ndarray, np.ndarray]:
    """(C, N) arrays of u_O(alpha, j, c) and u_L(alpha, j, c)."""
    if alpha.probs.shape != (game.m_actions,):
        raise ShapeError(
            f"alpha has {alpha.probs.shape[0]} entries, game has {game.m_actions} optimizer actions"
        )
    uo = np.tensordot(alpha.probs, game.u_opt, axes=(0, 0)).T
    ul = np.tensordot(alpha.probs, game.u_learner, axes=(0, 0)).T
    return uo, ul


def expected_utilities(
    game: BayesianGame, alpha: OptimizerMixed, beta: StrategyDistribution
) -> tuple[float, float]:
    """Expected utilities u_O(alpha, beta), u_L(alpha, beta).

    Computed as the double sum over pure strategies in the support and
    contexts, weighted by the strategy probabilities and the prior.
    """
    uo_cond, ul_cond = conditional_utilities(game, alpha)
    total_o = 0.0
    total_l = 0.0
    for f, w in beta.support:
        if len(f) != game.n_contexts:
            raise ShapeError(f"pure strategy has {len(f)} contexts, game has {game.n_contexts}")
        for c in range(game.n_contexts):
            j = f[c]
            if not 0 <= j < game.n_actions:
                raise ShapeError(f"action {j} out of range for {game.n_actions} actions")
            total_o += w * game.prior[c] * uo_cond[c, j]
            total_l += w * game.prior[c] * ul_cond[c, j]
    return total_o, total_l


def pure_strategy_utility(game: BayesianGame, alpha: OptimizerMixed, f: PureStrategy) -> tuple[float, float]:
    """Point-mass collapse of expected_utilities onto a single pure strategy."""
    return expected_utilities(game, alpha, StrategyDistribution.point_mass(f))


@dataclass(frozen=True)
class BestResponse:
    """Per-context argmax sets plus the optimizer-favoring selection."""

    sets: tuple[tuple[int, ...], ...]
    optimizer_favoring: PureStrategy


def best_response(game: BayesianGame, alpha: OptimizerMixed, tol: float = PAYOFF_TOL) -> BestResponse:
    """Learner best responses to a committed optimizer mixture.

    For each context c the set contains every action within `tol` of the
    conditional maximum of u_L(alpha, ., c). The optimizer-favoring selection
    picks, per context, the argmax action that maximizes u_O(alpha, ., c),
    breaking remaining ties by lowest action index.
    """
    uo_cond, ul_cond = conditional_utilities(game, alpha)
    sets = []
    favored = []
    for c in range(game.n_contexts):
        row = ul_cond[c]
        top = row.max()
        members = np.flatnonzero(row >= top - tol)
        sets.append(tuple(int(j) for j in members))
        gains = uo_cond[c, members]
        favored.append(int(members[int(np.argmax(gains))]))
    return BestResponse(tuple(sets), PureStrategy(tuple(favored)))


def behavioral_marginals(
    beta: StrategyDistribution, n_contexts: int, n_actions: int
) -> BehavioralProfile:
    """Collapse a distribution over pure strategies to its (C, N) marginals."""
    rows = np.zeros((n_contexts, n_actions))
    for f, w in beta.support:
        if len(f) != n_contexts:
            raise ShapeError(f"pure strategy has {len(f)} contexts, expected {n_contexts}")
        for c in range(n_contexts):
            rows[c, f[c]] += w
    return BehavioralProfile(rows)


def profile_of_pure(f: PureStrategy, n_actions: int) -> BehavioralProfile:
    rows = np.zeros((len(f), n_actions))
    for c, j in enumerate(f.choices):
        rows[c, j] = 1.0
    return BehavioralProfile(rows)
