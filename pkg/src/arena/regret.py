"""Exact post-hoc regret accounting over recorded traces.

Three meters: external regret (best fixed pure strategy in hindsight), swap
regret for single-context games, and polytope swap regret, which minimizes
over all re-decompositions of each round's behavioral profile into a mixture
of pure strategies and maximizes over a single strategy-relabeling map into a
deviation set. The min-max is solved exactly as one linear program with
epigraph variables; rounds with identical (optimizer action, profile) pairs
are merged into weighted groups first, which leaves the optimum unchanged.

Also contains the marginal-preserving decomposition repair: given a target
profile and a reference mixture, produce a mixture with the target's exact
marginals whose L1 distance to the reference is at most twice the L1 gap of
the marginals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError, ParameterError, ShapeError
from .games import (
    BayesianGame,
    BehavioralProfile,
    PureStrategy,
    StrategyDistribution,
    enumerate_pure_strategies,
)
from .lp import LinearProgram, lp_solve
from .swap_learners import CoverSpec, full_cover

DESK_LIMIT = 4096
CERT_TOL = 1e-9


@dataclass
class Trace:
    """Per-round record of one repeated game.

    profiles holds the learner's full behavioral rows per round, shape
    (T, C, N); lean runs may omit it. cover/cover_weights record a
    cover-based learner's own play distribution over its cover.
    """

    opt_actions: np.ndarray
    contexts: np.ndarray
    learner_actions: np.ndarray
    u_opt_realized: np.ndarray
    u_learner_realized: np.ndarray
    profiles: np.ndarray | None = None
    cover: CoverSpec | None = None
    cover_weights: np.ndarray | None = None
    expected_u_opt_total: float | None = None
    expected_u_learner_total: float | None = None

    def __post_init__(self):
        self.opt_actions = np.asarray(self.opt_actions, dtype=int)
        self.contexts = np.asarray(self.contexts, dtype=int)
        self.learner_actions = np.asarray(self.learner_actions, dtype=int)
        self.u_opt_realized = np.asarray(self.u_opt_realized, dtype=float)
        self.u_learner_realized = np.asarray(self.u_learner_realized, dtype=float)
        t = self.opt_actions.size
        for name in ("contexts", "learner_actions", "u_opt_realized", "u_learner_realized"):
            if getattr(self, name).size != t:
                raise ShapeError(f"trace column {name} has wrong length")
        if self.profiles is not None:
            self.profiles = np.asarray(self.profiles, dtype=float)
            if self.profiles.shape[0] != t:
                raise ShapeError("profiles length disagrees with trace length")

    @property
    def horizon(self) -> int:
        return int(self.opt_actions.size)


def validate_trace(trace: Trace, game: BayesianGame, tol: float = 1e-9) -> None:
    """Check realized actions are playable and utilities match the tensors."""
    i, c, j = trace.opt_actions, trace.contexts, trace.learner_actions
    uo = game.u_opt[i, j, c]
    ul = game.u_learner[i, j, c]
    if np.max(np.abs(uo - trace.u_opt_realized)) > tol:
        raise ShapeError("realized optimizer utilities disagree with game tensor")
    if np.max(np.abs(ul - trace.u_learner_realized)) > tol:
        raise ShapeError("realized learner utilities disagree with game tensor")
    if trace.profiles is not None:
        probs = trace.profiles[np.arange(trace.horizon), c, j]
        if probs.min() <= 0:
            raise ShapeError("a realized action has zero probability in its profile row")


def require_profiles(trace: Trace) -> np.ndarray:
    if trace.profiles is None:
        raise ParameterError("this meter needs per-round behavioral profiles in the trace")
    return trace.profiles


def expected_learner_utility_total(trace: Trace, game: BayesianGame) -> float:
    """Sum over rounds of u_L(i_t, beta_t) (prior- and profile-averaged)."""
    profiles = require_profiles(trace)
    total = 0.0
    chunk = 8192
    for start in range(0, trace.horizon, chunk):
        stop = min(start + chunk, trace.horizon)
        rewards = np.transpose(game.u_learner[trace.opt_actions[start:stop]], (0, 2, 1))
        weighted = np.einsum("bcn,bcn,c->", profiles[start:stop], rewards, game.prior)
        total += float(weighted)
    return total


def external_regret(trace: Trace, game: BayesianGame) -> float:
    """Best fixed pure strategy in hindsight minus what the profiles earned.

    The hindsight maximum decomposes per context; the value may be negative.
    """
    column_totals = game.u_learner[trace.opt_actions].sum(axis=0)  # (N, C)
    best_fixed = float(game.prior @ column_totals.max(axis=0))
    return best_fixed - expected_learner_utility_total(trace, game)


def swap_regret(trace: Trace, game: BayesianGame) -> float:
    """Standard swap regret; only defined for single-context games."""
    if game.n_contexts != 1:
        raise DomainError(f"swap regret needs C=1, game has C={game.n_contexts}")
    profiles = require_profiles(trace)
    beta = profiles[:, 0, :]  # (T, N)
    weights = np.zeros((game.n_actions, game.m_actions))
    for i in range(game.m_actions):
        mask = trace.opt_actions == i
        if mask.any():
            weights[:, i] = beta[mask].sum(axis=0)
    payoff = game.u_learner[:, :, 0]  # (M, N)
    totals = weights @ payoff  # totals[j, k]: played-j mass moved to k
    return float((totals.max(axis=1) - np.diag(totals)).sum())


@dataclass(frozen=True)
class RoundGroup:
    opt_action: int
    profile: np.ndarray  # (C, N)
    weight: float
    rounds: tuple[int, ...]


def group_rounds(trace: Trace, merge: bool = True) -> list[RoundGroup]:
    """Merge rounds with identical (optimizer action, profile) pairs.

    Identical rounds admit identical optimal decompositions (the objective is
    convex and symmetric across them), so merging leaves the regret LP's
    optimum unchanged; merge=False keeps one group per round for audits.
    """
    profiles = require_profiles(trace)
    if not merge:
        return [
            RoundGroup(int(trace.opt_actions[t]), profiles[t].copy(), 1.0, (t,))
            for t in range(trace.horizon)
        ]
    seen: dict[tuple, list[int]] = {}
    order: list[tuple] = []
    for t in range(trace.horizon):
        key = (int(trace.opt_actions[t]), profiles[t].tobytes())
        if key not in seen:
            seen[key] = []
            order.append(key)
        seen[key].append(t)
    groups = []
    for key in order:
        rounds = seen[key]
        groups.append(
            RoundGroup(key[0], profiles[rounds[0]].copy(), float(len(rounds)), tuple(rounds))
        )
    return groups


def _pure_utilities(game: BayesianGame, strategies: list[tuple[int, ...]]) -> np.ndarray:
    """(M, K) array of prior-averaged u_L(i, f) for the listed strategies."""
    out = np.zeros((game.m_actions, len(strategies)))
    for k, f in enumerate(strategies):
        cols = game.u_learner[:, list(f), np.arange(game.n_contexts)]  # (M, C)
        out[:, k] = cols @ game.prior
    return out


@dataclass
class PolytopeSwapResult:
    value: float
    baseline: float
    groups: list[RoundGroup]
    rho: np.ndarray  # (K, P) optimal decompositions per group
    pi: dict[tuple[int, ...], tuple[int, ...]]
    lp_objective: float

    def certificate_value(self, game: BayesianGame) -> float:
        """Recompute the objective from the stored (rho, pi) certificate."""
        strategies = enumerate_pure_strategies(game.n_actions, game.n_contexts)
        targets = sorted(set(self.pi.values()))
        u_target = _pure_utilities(game, targets)
        t_index = {f: k for k, f in enumerate(targets)}
        total = 0.0
        for g_idx, group in enumerate(self.groups):
            for f_idx, f in enumerate(strategies):
                w = group.weight * self.rho[g_idx, f_idx]
                if w:
                    total += w * u_target[group.opt_action, t_index[self.pi[f]]]
        return total - self.baseline


def polytope_swap_regret(
    trace: Trace, game: BayesianGame, cover: CoverSpec | None = None, merge_rounds: bool = True
) -> tuple[float, PolytopeSwapResult]:
    """Deviation-set polytope swap regret, solved exactly as one LP.

    Variables: one decomposition per round group over all N^C pure strategies,
    constrained to the group's profile marginals (a transportation polytope),
    plus one epigraph variable per pure strategy covering every deviation
    target in the set. The reported value can be negative; it always exceeds
    external regret minus 1e-9.
    """
    n, c_count = game.n_actions, game.n_contexts
    p_count = n**c_count
    if p_count > DESK_LIMIT:
        raise ParameterError(f"N^C = {p_count} exceeds the desk-scale limit {DESK_LIMIT}")
    if cover is None:
        cover = full_cover(c_count, n)
    strategies = enumerate_pure_strategies(n, c_count)
    groups = group_rounds(trace, merge=merge_rounds)
    k_count = len(groups)
    s_count = len(cover)

    u_cover = _pure_utilities(game, list(cover.strategies))  # (M, |S|)
    baseline = expected_learner_utility_total(trace, game)

    n_rho = k_count * p_count
    n_vars = n_rho + p_count
    obj = np.zeros(n_vars)
    obj[n_rho:] = 1.0

    # Marginal equalities: per (group, context, action).
    eq_rows = []
    eq_rhs = []
    for g_idx, group in enumerate(groups):
        for c in range(c_count):
            for j in range(n):
                row = np.zeros(n_vars)
                for f_idx, f in enumerate(strategies):
                    if f[c] == j:
                        row[g_idx * p_count + f_idx] = 1.0
                eq_rows.append(row)
                eq_rhs.append(group.profile[c, j])

    # Epigraph inequalities: z_f >= sum_g w_g rho_{g,f} u_L(i_g, h) for h in cover.
    ub_rows = []
    ub_rhs = []
    for f_idx in range(p_count):
        for h_idx in range(s_count):
            row = np.zeros(n_vars)
            for g_idx, group in enumerate(groups):
                row[g_idx * p_count + f_idx] = group.weight * u_cover[group.opt_action, h_idx]
            row[n_rho + f_idx] = -1.0
            ub_rows.append(row)
            ub_rhs.append(0.0)

    bounds = [(0.0, None)] * n_rho + [(None, None)] * p_count
    lp = LinearProgram(
        c=obj,
        a_ub=np.array(ub_rows),
        b_ub=np.array(ub_rhs),
        a_eq=np.array(eq_rows),
        b_eq=np.array(eq_rhs),
        bounds=bounds,
        maximize=False,
    )
    res = lp_solve(lp)
    if res.status != "optimal":
        raise NumericError(f"polytope swap LP reported {res.status}; the profile itself is feasible")

    rho = res.x[:n_rho].reshape(k_count, p_count)
    rho = np.clip(rho, 0.0, None)
    # Deviation map from the optimal decomposition (ties to the first target).
    scores = np.zeros((p_count, s_count))
    for g_idx, group in enumerate(groups):
        scores += group.weight * np.outer(rho[g_idx], u_cover[group.opt_action])
    pi = {}
    for f_idx, f in enumerate(strategies):
        pi[f] = cover.strategies[int(np.argmax(scores[f_idx]))]
    value = float(res.objective) - baseline
    result = PolytopeSwapResult(value, baseline, groups, rho, pi, float(res.objective))

    recomputed = result.certificate_value(game)
    if abs(recomputed - value) > max(CERT_TOL, CERT_TOL * abs(value)) + 1e-7:
        raise NumericError(
            f"certificate recomputes to {recomputed}, LP reported {value}"
        )
    return value, result


def decomposed_swap_regret(trace: Trace, game: BayesianGame) -> float:
    """Cover-restricted swap regret evaluated at the learner's own decomposition.

    The trace must carry cover_weights (the learner's play over its cover each
    round). That decomposition is feasible for the defining minimization, so
    this value upper-bounds the exact cover-restricted polytope swap regret;
    it is also exactly the quantity the expert-bank reduction controls.
    """
    if trace.cover is None or trace.cover_weights is None:
        raise ParameterError("trace carries no cover decomposition")
    cover = trace.cover
    weights = np.asarray(trace.cover_weights, dtype=float)
    u_cover = _pure_utilities(game, list(cover.strategies))  # (M, |S|)
    mass = np.zeros((len(cover), game.m_actions))
    for i in range(game.m_actions):
        mask = trace.opt_actions == i
        if mask.any():
            mass[:, i] = weights[mask].sum(axis=0)
    totals = mass @ u_cover  # totals[f, h]
    earned = float((mass * u_cover.T).sum())
    return float(totals.max(axis=1).sum()) - earned


def construct_rho(
    target: BehavioralProfile | np.ndarray,
    reference: StrategyDistribution | np.ndarray,
    n_actions: int | None = None,
    n_contexts: int | None = None,
) -> StrategyDistribution:
    """Repair a reference mixture to match a target profile's marginals.

    Phase 1 walks pure strategies in lexicographic order, granting each the
    largest mass allowed by both the reference and the remaining per-context
    marginal budget. Phase 2 fills any leftover deficit with the product
    distribution of the residual marginals. The output's marginals equal the
    target exactly, and its L1 distance to the reference is at most twice the
    entrywise L1 gap between the two profiles' marginals.
    """
    rows = target.per_context if isinstance(target, BehavioralProfile) else np.asarray(target, float)
    c_count, n = rows.shape
    strategies = enumerate_pure_strategies(n, c_count)
    p_count = len(strategies)
    if isinstance(reference, StrategyDistribution):
        ref = np.zeros(p_count)
        index = {f: k for k, f in enumerate(strategies)}
        for f, w in reference.support:
            ref[index[f.choices]] += w
    else:
        ref = np.asarray(reference, dtype=float)
        if ref.shape != (p_count,):
            raise ShapeError(f"reference has shape {ref.shape}, expected ({p_count},)")

    choice = np.array(strategies)  # (P, C)
    rho1 = np.zeros(p_count)
    running = np.zeros((c_count, n))
    active = np.ones(p_count, dtype=bool)
    for k in range(p_count):
        if not active[k]:
            continue
        f = strategies[k]
        budget = min(rows[c, f[c]] - running[c, f[c]] for c in range(c_count))
        grant = min(ref[k], max(budget, 0.0))
        if grant > 0:
            rho1[k] = grant
            for c in range(c_count):
                running[c, f[c]] += grant
        for c in range(c_count):
            if rows[c, f[c]] - running[c, f[c]] <= 0:
                active &= choice[:, c] != f[c]

    deficit = 1.0 - rho1.sum()
    if deficit <= 1e-15:
        out = rho1
    else:
        residual = np.clip(rows - running, 0.0, None)
        fill = np.ones(p_count)
        for c in range(c_count):
            fill *= residual[c, choice[:, c]]
        out = rho1 + fill / deficit ** (c_count - 1)

    support = tuple(
        (PureStrategy(strategies[k]), float(out[k])) for k in range(p_count) if out[k] > 0 or k == 0
    )
    total = sum(w for _, w in support)
    if abs(total - 1.0) > 1e-9:
        raise NumericError(f"repaired decomposition sums to {total}")
    # Renormalize the float dust so the distribution invariant holds exactly.
    support = tuple((f, w / total) for f, w in support)
    return StrategyDistribution(support)


@dataclass
class RegretReport:
    external: float
    polytope_swap: float | None = None
    swap: float | None = None
    cover_kind: str | None = None
    cover_size: int | None = None
    certificate: dict | None = None

    def __post_init__(self):
        if self.polytope_swap is not None and self.polytope_swap < self.external - CERT_TOL:
            raise NumericError(
                f"polytope swap regret {self.polytope_swap} below external {self.external}"
            )

    def to_json_dict(self) -> dict:
        return {
            "external": self.external,
            "swap": self.swap,
            "polytope_swap": self.polytope_swap,
            "cover_kind": self.cover_kind,
            "cover_size": self.cover_size,
            "certificate": self.certificate,
        }


def build_report(
    trace: Trace,
    game: BayesianGame,
    cover: CoverSpec | None = None,
    include_polytope: bool = True,
) -> RegretReport:
    ext = external_regret(trace, game)
    swap = swap_regret(trace, game) if game.n_contexts == 1 else None
    poly = None
    cert = None
    cover_kind = None
    cover_size = None
    if include_polytope and game.n_actions**game.n_contexts <= DESK_LIMIT:
        poly, result = polytope_swap_regret(trace, game, cover)
        cover_kind = cover.provenance if cover is not None else "full"
        cover_size = len(cover) if cover is not None else game.n_actions**game.n_contexts
        cert = {
            "groups": [
                {"opt_action": g.opt_action, "weight": g.weight, "profile": g.profile.tolist()}
                for g in result.groups
            ],
            "rho": result.rho.tolist(),
            "pi": {",".join(map(str, k)): list(v) for k, v in result.pi.items()},
            "lp_objective": result.lp_objective,
            "baseline": result.baseline,
        }
    return RegretReport(ext, poly, swap, cover_kind, cover_size, cert)


TRACE_BASE_COLUMNS = ["t", "opt_action", "context", "learner_action", "u_opt", "u_learner"]


def trace_to_csv(trace: Trace, path, include_profiles: bool | None = None) -> None:
    """One row per round; profile columns included when compact enough."""
    has_profiles = trace.profiles is not None
    if include_profiles is None:
        include_profiles = has_profiles and trace.profiles[0].size <= 64
    include_profiles = include_profiles and has_profiles
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = list(TRACE_BASE_COLUMNS)
        if include_profiles:
            c_count, n = trace.profiles.shape[1:]
            header += [f"beta_c{c}_a{j}" for c in range(c_count) for j in range(n)]
        writer.writerow(header)
        for t in range(trace.horizon):
            row = [
                t,
                int(trace.opt_actions[t]),
                int(trace.contexts[t]),
                int(trace.learner_actions[t]),
                repr(float(trace.u_opt_realized[t])),
                repr(float(trace.u_learner_realized[t])),
            ]
            if include_profiles:
                row += [repr(float(x)) for x in trace.profiles[t].ravel()]
            writer.writerow(row)


def trace_from_csv(path) -> Trace:
    """Rebuild a trace; absent profile columns become realized point masses."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    if header[: len(TRACE_BASE_COLUMNS)] != TRACE_BASE_COLUMNS:
        raise ParameterError(f"unrecognized trace header {header[:6]}")
    beta_cols = header[len(TRACE_BASE_COLUMNS):]
    data = np.array([[float(x) for x in r] for r in rows])
    t_count = data.shape[0]
    opt = data[:, 1].astype(int)
    ctx = data[:, 2].astype(int)
    act = data[:, 3].astype(int)
    profiles = None
    if beta_cols:
        c_count = max(int(name.split("_")[1][1:]) for name in beta_cols) + 1
        n = max(int(name.split("_")[2][1:]) for name in beta_cols) + 1
        profiles = data[:, len(TRACE_BASE_COLUMNS):].reshape(t_count, c_count, n)
    else:
        c_count = int(ctx.max()) + 1 if t_count else 1
        n = int(act.max()) + 1 if t_count else 1
        profiles = np.zeros((t_count, c_count, n))
        profiles[np.arange(t_count), ctx, act] = 1.0
    return Trace(opt, ctx, act, data[:, 4], data[:, 5], profiles)
