"""No-swap-regret expert bank and the cover-restricted learner built on it.

The bank runs one exponential-weights expert per action; each round, expert i
is fed the reward vector scaled by the probability with which the combined
play used action i, and the combined play is the stationary distribution of
the row-stochastic matrix assembled from the experts' rows.

Treating every pure strategy in a best-response cover as a single action
turns the bank into a contextual learner whose cover-restricted polytope swap
regret inherits the bank's swap-regret bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import NumericError, ParameterError, ShapeError
from .fpa import FpaInstance, GRID_TOL
from .games import BayesianGame, OptimizerMixed, PureStrategy, best_response
from .learners import default_hedge_eta

STATIONARY_TOL = 1e-10
ENUM_GUARD = 10_000_000


@dataclass(frozen=True)
class CoverSpec:
    """An explicit set of pure strategies, with how it was produced."""

    strategies: tuple[tuple[int, ...], ...]
    provenance: str  # "full" | "monotone" | "monotone_capped"

    def __post_init__(self):
        if len(set(self.strategies)) != len(self.strategies):
            raise ShapeError("cover contains duplicate strategies")

    def __len__(self) -> int:
        return len(self.strategies)

    def index_of(self, f: tuple[int, ...]) -> int:
        return self.strategies.index(f)

    def choice_matrix(self) -> np.ndarray:
        """(C, |S|) int array: entry [c, k] is strategy k's action in context c."""
        return np.array(self.strategies, dtype=int).T


def count_monotone_maps(n_contexts: int, n_actions: int, caps=None) -> int:
    if caps is None:
        return comb(n_actions + n_contexts - 1, n_contexts)
    caps = list(caps)
    if len(caps) != n_contexts:
        raise ShapeError(f"{len(caps)} caps for {n_contexts} contexts")
    # counts[a] = number of partial monotone maps ending at action a
    counts = [1 if a <= caps[0] else 0 for a in range(n_actions)]
    for c in range(1, n_contexts):
        prefix = np.cumsum(counts)
        counts = [int(prefix[a]) if a <= caps[c] else 0 for a in range(n_actions)]
    return int(sum(counts))


def enumerate_monotone_maps(n_contexts: int, n_actions: int, caps=None) -> CoverSpec:
    """All nondecreasing maps from contexts to actions, lexicographic order.

    With per-context caps, additionally requires f(c) <= caps[c]. The count
    without caps is C(N + m - 1, m); enumeration refuses above 10^7.
    """
    if n_contexts < 1 or n_actions < 1:
        raise ParameterError("need at least one context and one action")
    total = count_monotone_maps(n_contexts, n_actions, caps)
    if total > ENUM_GUARD:
        raise ParameterError(f"cover would contain {total} strategies (limit {ENUM_GUARD})")
    caps_list = list(caps) if caps is not None else [n_actions - 1] * n_contexts
    out: list[tuple[int, ...]] = []

    # Depth-first in lexicographic order over choice tuples.
    def emit(prefix: tuple[int, ...], c: int, lo: int):
        if c == n_contexts:
            out.append(prefix)
            return
        for a in range(lo, min(caps_list[c], n_actions - 1) + 1):
            emit(prefix + (a,), c + 1, a)

    emit((), 0, 0)
    provenance = "monotone" if caps is None else "monotone_capped"
    return CoverSpec(tuple(out), provenance)


def full_cover(n_contexts: int, n_actions: int) -> CoverSpec:
    total = n_actions**n_contexts
    if total > ENUM_GUARD:
        raise ParameterError(f"full cover would contain {total} strategies (limit {ENUM_GUARD})")
    from itertools import product

    return CoverSpec(tuple(product(range(n_actions), repeat=n_contexts)), "full")


def fpa_cover(instance: FpaInstance, kind: str = "monotone", max_bid: float | None = None) -> CoverSpec:
    """Best-response cover for a first-price auction game.

    kind "monotone" uses all nondecreasing value-to-bid maps; "monotone_capped"
    additionally requires the bid not to exceed the value. `max_bid` prunes
    the bid range (useful when the relevant optimizer bids are bounded).
    """
    n = instance.grid.n_bids
    if max_bid is not None:
        n = min(n, instance.grid.index_of_floor(max_bid) + 1)
    if kind == "full":
        return full_cover(instance.m, n)
    if kind == "monotone":
        return enumerate_monotone_maps(instance.m, n)
    if kind == "monotone_capped":
        caps = []
        for v in instance.support_values:
            caps.append(min(n - 1, int(math.floor(v / instance.grid.epsilon + GRID_TOL))))
        return enumerate_monotone_maps(instance.m, n, caps=caps)
    raise ParameterError(f"unknown cover kind {kind!r}")


def stationary_distribution(q: np.ndarray, tol: float = STATIONARY_TOL,
                            max_power_iters: int = 100_000) -> np.ndarray:
    """Probability vector p with p = p Q for a row-stochastic Q.

    Direct linear solve with a normalization row; falls back to least squares
    (whose minimum-norm answer picks the uniform distribution when every p is
    stationary, e.g. Q = I), then to damped power iteration.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if q.shape != (n, n):
        raise ShapeError(f"Q must be square, got {q.shape}")

    def residual(p):
        return float(np.abs(p - p @ q).sum())

    a = q.T - np.eye(n)
    a[0, :] = 1.0
    b = np.zeros(n)
    b[0] = 1.0
    try:
        p = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        p = None
    if p is not None and p.min() >= -1e-12 and residual(np.clip(p, 0, None)) <= tol:
        p = np.clip(p, 0.0, None)
        return p / p.sum()

    full = np.vstack([q.T - np.eye(n), np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(full, rhs, rcond=None)
    if p.min() >= -1e-12 and residual(np.clip(p, 0, None)) <= tol:
        p = np.clip(p, 0.0, None)
        return p / p.sum()

    p = np.full(n, 1.0 / n)
    for _ in range(max_power_iters):
        nxt = 0.5 * p + 0.5 * (p @ q)
        if np.abs(nxt - p).sum() <= tol / 4:
            p = nxt
            break
        p = nxt
    if residual(p) > 1e-8:
        raise NumericError(f"stationary solve failed, residual {residual(p)}")
    return p / p.sum()


class SwapExpertBank:
    """Expert-per-action reduction from external to swap regret."""

    def __init__(self, n_actions: int, eta: float, horizon: int):
        if eta <= 0:
            raise ParameterError(f"expert step size must be positive, got {eta}")
        self.n_actions = int(n_actions)
        self.eta = float(eta)
        self.horizon = int(horizon)
        self.log_weights = np.zeros((n_actions, n_actions))
        self.play = np.full(n_actions, 1.0 / n_actions)
        self.last_q = np.full((n_actions, n_actions), 1.0 / n_actions)
        self.last_residual = 0.0
        self.rounds = 0

    @classmethod
    def for_rewards(cls, n_actions: int, u_max: float, horizon: int) -> "SwapExpertBank":
        return cls(n_actions, default_hedge_eta(u_max, n_actions, horizon), horizon)

    def step(self, reward: np.ndarray) -> np.ndarray:
        """Feed one reward vector; return the next round's play distribution."""
        reward = np.asarray(reward, dtype=float)
        if reward.shape != (self.n_actions,):
            raise ShapeError(f"reward has shape {reward.shape}, expected ({self.n_actions},)")
        self.log_weights += self.eta * np.outer(self.play, reward)
        logits = self.log_weights - self.log_weights.max(axis=1, keepdims=True)
        q = np.exp(logits)
        q /= q.sum(axis=1, keepdims=True)
        p = stationary_distribution(q)
        self.last_residual = float(np.abs(p - p @ q).sum())
        self.last_q = q
        self.play = p
        self.rounds += 1
        return p


def blum_mansour_step(bank: SwapExpertBank, reward: np.ndarray) -> np.ndarray:
    return bank.step(reward)


class PolytopeSwapLearner:
    """Cover-restricted learner: the bank's actions are pure strategies.

    The meta reward of strategy f in a round with optimizer action i is
    sum_c p_c u_L(i, f(c), c), so the learner only ever consumes reward
    vectors, and its play induces a behavioral profile via the cover's
    per-context marginals.
    """

    kind = "polytope_swap"

    def __init__(self, cover: CoverSpec, prior: np.ndarray, horizon: int,
                 eta: float | None = None, u_max: float = 1.0):
        if len(cover) == 0:
            raise ParameterError("cover must be nonempty")
        self.cover = cover
        self.prior = np.asarray(prior, dtype=float)
        self.n_contexts = len(cover.strategies[0])
        if self.prior.shape != (self.n_contexts,):
            raise ShapeError(f"prior shape {self.prior.shape} != ({self.n_contexts},)")
        self.choices = cover.choice_matrix()  # (C, |S|)
        self.n_actions = int(self.choices.max()) + 1
        if eta is None:
            eta = default_hedge_eta(u_max, len(cover), horizon)
        self.bank = SwapExpertBank(len(cover), eta, horizon)
        self.decisions = 0
        self.horizon = int(horizon)

    def distribution(self) -> np.ndarray:
        """Current play over the cover."""
        return self.bank.play

    def profile(self, n_actions: int | None = None) -> np.ndarray:
        """Induced (C, N) behavioral rows."""
        n = n_actions if n_actions is not None else self.n_actions
        p = self.bank.play
        rows = np.zeros((self.n_contexts, n))
        for c in range(self.n_contexts):
            rows[c] = np.bincount(self.choices[c], weights=p, minlength=n)
        return rows

    def current_rows(self, t: int, n_actions: int | None = None) -> np.ndarray:
        return self.profile(n_actions)

    def meta_rewards(self, reward: np.ndarray) -> np.ndarray:
        """Collapse a (C, N) reward vector to per-strategy meta rewards."""
        gathered = np.take_along_axis(reward, self.choices, axis=1)  # (C, |S|)
        return self.prior @ gathered

    def absorb(self, reward: np.ndarray) -> None:
        self.bank.step(self.meta_rewards(reward))


def polytope_swap_learner_step(
    learner: PolytopeSwapLearner, reward: np.ndarray, n_actions: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Feed one round's reward vector; return (cover distribution, profile)."""
    learner.absorb(reward)
    return learner.distribution(), learner.profile(n_actions)


def verify_monotone_best_response(
    game: BayesianGame, alpha: OptimizerMixed
) -> tuple[bool, PureStrategy | None]:
    """Check a nondecreasing best-response selection exists across contexts.

    Contexts must be ordered by increasing learner value (first-price games
    built here are). Greedy: per context take the smallest best response at
    least as large as the previous selection. Returns the monotone witness,
    or (False, None) with alpha as the implied counterexample.
    """
    br = best_response(game, alpha)
    prev = 0
    witness = []
    for c in range(game.n_contexts):
        candidates = [j for j in br.sets[c] if j >= prev]
        if not candidates:
            return False, None
        prev = min(candidates)
        witness.append(prev)
    return True, PureStrategy(tuple(witness))
