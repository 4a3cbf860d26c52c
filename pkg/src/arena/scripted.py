"""Bundled two-context games with scripted reward-based learners.

Two reference scenarios, exposed through the CLI as examples "6.1" and "6.2".
Both use two optimizer actions, two learner actions, and two contexts, with
all context-0 utilities zero, so everything interesting happens in context 1.
The learner follows a fixed round schedule of pure strategies, which makes it
trivially reward-based: its play depends only on the round index.

Example 6.1 (negligible first context): prior (p1, 1 - p1) with p1 small; the
optimizer plays action 0 then action 1 for half the horizon each; the learner
plays (0,0) then (1,0). Its strategy-relabeling regret is (1 - p1) T / 4 while
its external regret is zero.

Example 6.2 (uniform prior): the optimizer plays action 0 for two thirds of
the horizon then action 1; the learner walks through (1,0), (0,1), (1,1). Its
strategy-relabeling regret is T / 6, again with nonpositive external regret.
The scripted trace's optimizer utility always equals one third of the
point-commitment benchmark plus two thirds of the mixed-commitment benchmark,
per round, whatever the optimizer utility tensor is; that identity is exposed
as a checker.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .games import BayesianGame, OptimizerMixed, PureStrategy

DEFAULT_P1 = "1/T"


@dataclass
class ScriptedRewardLearner:
    """Plays a fixed pure strategy per round range; ranges partition [0, T)."""

    schedule: tuple[tuple[int, int, PureStrategy], ...]
    n_actions: int
    position: int = 0

    def __post_init__(self):
        spans = sorted((s, e) for s, e, _ in self.schedule)
        cursor = 0
        for s, e in spans:
            if s != cursor or e <= s:
                raise ParameterError(f"schedule ranges must partition the horizon, got {spans}")
            cursor = e
        self.horizon = cursor
        self.n_contexts = len(self.schedule[0][2])

    def strategy_at(self, t: int) -> PureStrategy:
        for s, e, f in self.schedule:
            if s <= t < e:
                return f
        raise ParameterError(f"round {t} outside the scripted horizon {self.horizon}")

    def current_rows(self, t: int, n_actions: int | None = None) -> np.ndarray:
        n = n_actions if n_actions is not None else self.n_actions
        f = self.strategy_at(self.position)
        rows = np.zeros((self.n_contexts, n))
        for c, j in enumerate(f.choices):
            rows[c, j] = 1.0
        return rows

    def absorb(self, reward: np.ndarray) -> None:
        self.position += 1


def example_6_1(horizon: int, p1: float | str = DEFAULT_P1):
    """Negligible-context scenario: (game, optimizer action sequence, learner)."""
    if horizon % 2 != 0:
        raise ParameterError(f"horizon must be even, got {horizon}")
    if p1 == DEFAULT_P1:
        p1 = 1.0 / horizon
    p1 = float(p1)
    if not 0.0 <= p1 <= max(0.01, 1.0 / horizon):
        raise ParameterError(
            f"context-0 probability must be small (at most max(0.01, 1/T)), got {p1}"
        )
    u_learner = np.zeros((2, 2, 2))
    u_learner[0, 0, 1] = 1.0
    u_learner[0, 1, 1] = 0.0
    u_learner[1, 0, 1] = 0.0
    u_learner[1, 1, 1] = 0.5
    game = BayesianGame.from_tensors([p1, 1.0 - p1], np.zeros((2, 2, 2)), u_learner,
                                     utility_bound=1.0)
    half = horizon // 2
    opt_actions = np.concatenate([np.zeros(half, dtype=int), np.ones(half, dtype=int)])
    learner = ScriptedRewardLearner(
        schedule=(
            (0, half, PureStrategy((0, 0))),
            (half, horizon, PureStrategy((1, 0))),
        ),
        n_actions=2,
    )
    return game, opt_actions, learner


def example_6_2(horizon: int):
    """Context-bundling scenario: (game, optimizer action sequence, learner)."""
    if horizon % 3 != 0:
        raise ParameterError(f"horizon must be divisible by 3, got {horizon}")
    u_learner = np.zeros((2, 2, 2))
    u_learner[0, 0, 1] = 2.0
    u_learner[0, 1, 1] = 1.0
    u_learner[1, 0, 1] = 0.0
    u_learner[1, 1, 1] = 2.0
    game = BayesianGame.from_tensors([0.5, 0.5], np.zeros((2, 2, 2)), u_learner,
                                     utility_bound=2.0)
    third = horizon // 3
    opt_actions = np.concatenate([np.zeros(2 * third, dtype=int), np.ones(third, dtype=int)])
    learner = ScriptedRewardLearner(
        schedule=(
            (0, third, PureStrategy((1, 0))),
            (third, 2 * third, PureStrategy((0, 1))),
            (2 * third, horizon, PureStrategy((1, 1))),
        ),
        n_actions=2,
    )
    return game, opt_actions, learner


def build_example(which: str, horizon: int, p1: float | str = DEFAULT_P1):
    if which == "6.1":
        return example_6_1(horizon, p1)
    if which == "6.2":
        return example_6_2(horizon)
    raise ParameterError(f"unknown example {which!r}; choose 6.1 or 6.2")


@dataclass(frozen=True)
class MixtureIdentityCheck:
    """Per-round decomposition of the 6.2 scripted trace's optimizer utility."""

    trace_utility_per_round: float
    point_commitment_value: float
    mixed_commitment_value: float
    identity_error: float
    max_commitment_dominates: bool


def verify_commitment_mixture_identity(
    u_opt_prime: np.ndarray, horizon: int = 3, tol: float = 1e-9
) -> MixtureIdentityCheck:
    """Check the 6.2 mixture identity for an arbitrary optimizer tensor.

    With the scripted play of example 6.2 and any optimizer utilities u', the
    trace utility U equals (1/3 U1 + 2/3 U2) T, where U1 is u' at the
    pure commitment on action 0 against the learner best-responding with
    action 0 in context 1, and U2 is u' at the uniform commitment against the
    best response action 1 in context 1 (context 0 responses are action 0 and
    action 1 respectively, matching the optimizer-favoring convention of the
    zero-utility context only vacuously).
    """
    u = np.asarray(u_opt_prime, dtype=float)
    if u.shape != (2, 2, 2):
        raise ShapeError(f"optimizer tensor must be (2, 2, 2), got {u.shape}")
    if horizon % 3 != 0:
        raise ParameterError(f"horizon must be divisible by 3, got {horizon}")
    third = horizon / 3.0
    # Scripted blocks: (action 0, strategy (1,0)), (action 0, (0,1)), (action 1, (1,1)).
    per_block = [
        0.5 * (u[0, 1, 0] + u[0, 0, 1]),
        0.5 * (u[0, 0, 0] + u[0, 1, 1]),
        0.5 * (u[1, 1, 0] + u[1, 1, 1]),
    ]
    trace_total = third * sum(per_block)
    # Benchmark 1: commit to action 0; context-1 best response is action 0.
    u1 = 0.5 * (u[0, 0, 0] + u[0, 0, 1])
    # Benchmark 2: commit to the uniform mixture; context-1 best response is action 1.
    u2 = 0.25 * (u[0, 1, 0] + u[1, 1, 0] + u[0, 1, 1] + u[1, 1, 1])
    identity_error = abs(trace_total - (u1 / 3.0 + 2.0 * u2 / 3.0) * horizon)
    dominates = max(u1, u2) * horizon >= trace_total - tol
    return MixtureIdentityCheck(
        trace_utility_per_round=trace_total / horizon,
        point_commitment_value=u1,
        mixed_commitment_value=u2,
        identity_error=identity_error,
        max_commitment_dominates=bool(dominates),
    )


def scripted_best_response_facts() -> dict:
    """The two commitment best-response comparisons behind the 6.2 benchmarks."""
    game, _, _ = example_6_2(3)
    alpha1 = OptimizerMixed.point_mass(0, 2)
    alpha2 = OptimizerMixed(np.array([0.5, 0.5]))
    from .games import conditional_utilities

    _, ul1 = conditional_utilities(game, alpha1)
    _, ul2 = conditional_utilities(game, alpha2)
    return {
        "point_context1_action0": float(ul1[1, 0]),
        "point_context1_action1": float(ul1[1, 1]),
        "mixed_context1_action0": float(ul2[1, 0]),
        "mixed_context1_action1": float(ul2[1, 1]),
    }
