"""Scenario configuration, deterministic experiment orchestration, and result
emission.

A scenario config is a JSON object validated field by field (errors name the
offending key). Each run writes a summary JSON, a per-seed trace CSV, a
per-seed plot-data CSV (round, cumulative optimizer utility, the Stackelberg
reference line V*t), and a rendered figure next to them. Identical config and
seeds reproduce byte-identical summaries apart from the wall-clock field.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fpa import BidGrid, FpaInstance, fpa_game, separation_instance
from .games import BayesianGame, OptimizerMixed
from .learners import EpsGreedy, FollowTheLeader, Hedge
from .optimizers import ObliviousSequence, StaticMixed, exploit_sequence, simulate
from .regret import Trace, build_report, decomposed_swap_regret, trace_to_csv
from .stackelberg import fpa_stackelberg_characterized, fpa_stackelberg_lp, stackelberg_solve
from .swap_learners import PolytopeSwapLearner, fpa_cover, full_cover

SCENARIO_KINDS = (
    "fpa_standard_robustness",
    "fpa_bayesian_exploit",
    "polytope_cap",
    "example_6_1",
    "example_6_2",
    "stackelberg_only",
)

PROFILE_CSV_LIMIT = 64


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _need(config: dict, key: str, kinds, path: str):
    if key not in config:
        raise ConfigError(f"missing key {path}{key}")
    value = config[key]
    if not isinstance(value, kinds):
        raise ConfigError(f"bad type at {path}{key}: expected {kinds}, got {type(value).__name__}")
    return value


def _instance_from_config(config: dict, path: str = "instance.") -> FpaInstance:
    spec = _need(config, "instance", dict, "")
    if "separation" in spec:
        sep = spec["separation"]
        m = _need(sep, "m", int, path + "separation.")
        eps = _need(sep, "epsilon", (int, float), path + "separation.")
        n_bids = _need(sep, "n_bids", int, path + "separation.")
        return separation_instance(m, BidGrid(float(eps), n_bids))
    for key in ("epsilon", "n_bids", "v_opt", "values", "probs"):
        _need(spec, key, object, path)
    return FpaInstance.from_json_dict(spec)


def _learner_from_config(spec: dict, game: BayesianGame, instance, horizon: int,
                         default_cover: str | None = None):
    kind = _need(spec, "kind", str, "learner.")
    if kind == "hedge":
        eta = spec.get("eta")
        return Hedge.for_game(game, horizon, eta=float(eta) if eta is not None else None)
    if kind == "ftl":
        return FollowTheLeader(game.n_actions, game.n_contexts, horizon)
    if kind == "eps_greedy":
        return EpsGreedy(game.n_actions, game.n_contexts, horizon)
    if kind == "polytope_swap":
        if instance is None:
            raise ConfigError("learner.kind polytope_swap needs an auction instance")
        cover_kind = spec.get("cover", default_cover or "monotone_capped")
        cover = fpa_cover(instance, cover_kind)
        return PolytopeSwapLearner(cover, game.prior, horizon, u_max=game.utility_bound)
    raise ConfigError(f"unknown learner.kind {kind!r}")


def _policy_from_config(spec: dict, game: BayesianGame, instance, horizon: int):
    kind = _need(spec, "kind", str, "optimizer.")
    if kind == "static":
        alpha = np.asarray(_need(spec, "alpha", list, "optimizer."), dtype=float)
        return StaticMixed(OptimizerMixed(alpha))
    if kind == "pure":
        action = _need(spec, "action", int, "optimizer.")
        return StaticMixed(OptimizerMixed.point_mass(action, game.m_actions))
    if kind == "sequence":
        path = _need(spec, "file", str, "optimizer.")
        actions = np.loadtxt(path, dtype=int, ndmin=1)
        return ObliviousSequence(actions)
    if kind == "exploit":
        if instance is None:
            raise ConfigError("optimizer.kind exploit needs an auction instance")
        gamma = float(_need(spec, "gamma", (int, float), "optimizer."))
        plan = exploit_sequence(instance, gamma, horizon)
        return ObliviousSequence(plan.bids)
    raise ConfigError(f"unknown optimizer.kind {kind!r}")


def validate_config(config: dict) -> dict:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    kind = _need(config, "scenario", str, "")
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"unknown scenario {kind!r}; choose one of {SCENARIO_KINDS}")
    if kind != "stackelberg_only":
        horizon = _need(config, "horizon", int, "")
        if horizon <= 0:
            raise ConfigError("horizon must be positive")
        seeds = _need(config, "seeds", list, "")
        if not seeds or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("seeds must be a nonempty list of integers")
    return config


@dataclass
class RunResult:
    scenario: str
    config_hash: str
    summary: dict
    out_dir: Path | None


def _external_regret_lean(opt_actions, expected_learner_total, game) -> float:
    column_totals = game.u_learner[opt_actions].sum(axis=0)
    best_fixed = float(game.prior @ column_totals.max(axis=0))
    return best_fixed - expected_learner_total


def _stackelberg_value(instance: FpaInstance) -> float:
    if instance.m <= 4:
        return fpa_stackelberg_characterized(instance).value
    return fpa_stackelberg_lp(instance).value


def _seed_record(trace: Trace, seed: int, game: BayesianGame) -> dict:
    return {
        "seed": seed,
        "optimizer_total_utility": float(trace.u_opt_realized.sum()),
        "learner_total_utility": float(trace.u_learner_realized.sum()),
        "expected_optimizer_total": trace.expected_u_opt_total,
        "expected_learner_total": trace.expected_u_learner_total,
    }


def run_scenario(config: dict, out_dir: str | Path | None = None, jobs: int = 1) -> RunResult:
    config = validate_config(config)
    kind = config["scenario"]
    digest = config_hash(config)
    started = time.time()
    out = Path(out_dir) if out_dir is not None else (
        Path(config["out_dir"]) if "out_dir" in config else None
    )
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    if kind == "stackelberg_only":
        summary = _run_stackelberg_only(config)
        traces = {}
        v_ref = summary.get("V")
    else:
        summary, traces, v_ref = _run_simulation_scenario(config, jobs)

    summary["scenario"] = kind
    summary["config_hash"] = digest
    summary["wall_clock_sec"] = round(time.time() - started, 3)
    if out is not None:
        _emit_outputs(out, summary, traces, v_ref, config)
    return RunResult(kind, digest, summary, out)


def _run_stackelberg_only(config: dict) -> dict:
    method = config.get("method", "lp")
    cover_kind = config.get("cover", "monotone")
    if "instance" in config:
        instance = _instance_from_config(config)
        game = fpa_game(instance)
    elif "game" in config:
        game = BayesianGame.from_json_dict(_need(config, "game", dict, ""))
        instance = None
    else:
        raise ConfigError("missing key instance (or game)")
    summary: dict = {}
    if method in ("lp", "both"):
        if instance is not None:
            sol = fpa_stackelberg_lp(instance, cover_kind=cover_kind)
        else:
            cover = full_cover(game.n_contexts, game.n_actions)
            sol = stackelberg_solve(game, cover)
        summary["V"] = sol.value
        summary["lp_solution"] = sol.to_json_dict()
    if method in ("characterization", "both"):
        if instance is None:
            raise ConfigError("method characterization needs an auction instance")
        sol = fpa_stackelberg_characterized(instance)
        summary.setdefault("V", sol.value)
        summary["characterization_solution"] = sol.to_json_dict()
    if method not in ("lp", "characterization", "both"):
        raise ConfigError(f"unknown method {method!r}")
    return summary


def _run_simulation_scenario(config: dict, jobs: int):
    kind = config["scenario"]
    horizon = config["horizon"]
    seeds = config["seeds"]
    game, instance, make_learner, make_policy, v_ref = _scenario_pieces(config)

    per_seed = []
    traces = {}
    runner = _SeedRunner(config)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(runner, seeds))
    else:
        outputs = [runner(seed) for seed in seeds]
    for seed, (record, trace) in zip(seeds, outputs):
        per_seed.append(record)
        traces[seed] = trace

    summary: dict = {
        "horizon": horizon,
        "per_seed": per_seed,
        "V": v_ref,
    }
    if v_ref is not None and v_ref > 0:
        ratios = [r["optimizer_total_utility"] / (v_ref * horizon) for r in per_seed]
        summary["mean_ratio_vs_stackelberg"] = float(np.mean(ratios))
    for key in ("external_regret", "polytope_swap_regret", "swap_regret", "cover_regret_bound",
                "decomposed_cover_regret"):
        values = [r[key] for r in per_seed if key in r]
        if values:
            summary[key] = values[0] if len(set(map(repr, values))) == 1 else values
    return summary, traces, v_ref


def _scenario_pieces(config: dict):
    """Build (game, instance, learner factory, policy factory, V reference)."""
    kind = config["scenario"]
    horizon = config["horizon"]
    if kind in ("example_6_1", "example_6_2"):
        from . import scripted

        if kind == "example_6_1":
            game, opt_actions, _ = scripted.example_6_1(horizon, config.get("p1", "1/T"))
        else:
            game, opt_actions, _ = scripted.example_6_2(horizon)

        def make_learner():
            if kind == "example_6_1":
                return scripted.example_6_1(horizon, config.get("p1", "1/T"))[2]
            return scripted.example_6_2(horizon)[2]

        def make_policy():
            return ObliviousSequence(opt_actions)

        return game, None, make_learner, make_policy, None

    instance = _instance_from_config(config)
    game = fpa_game(instance)
    learner_spec = _need(config, "learner", dict, "")
    optimizer_spec = _need(config, "optimizer", dict, "")

    def make_learner():
        return _learner_from_config(learner_spec, game, instance, horizon,
                                    default_cover=config.get("cover"))

    def make_policy():
        return _policy_from_config(optimizer_spec, game, instance, horizon)

    v_ref = _stackelberg_value(instance) if config.get("benchmark", True) else None
    return game, instance, make_learner, make_policy, v_ref


class _SeedRunner:
    """Picklable per-seed worker so runs can fan out across processes."""

    def __init__(self, config: dict):
        self.config = config

    def __call__(self, seed: int):
        config = self.config
        kind = config["scenario"]
        horizon = config["horizon"]
        game, instance, make_learner, make_policy, v_ref = _scenario_pieces(config)
        learner = make_learner()
        policy = make_policy()
        record_profiles = game.n_contexts * game.n_actions <= PROFILE_CSV_LIMIT
        trace = simulate(
            game, policy, learner, horizon, seed,
            scenario_key=config_hash(config), record_profiles=record_profiles,
        )
        record = _seed_record(trace, seed, game)
        if kind in ("example_6_1", "example_6_2"):
            report = build_report(trace, game)
            record["external_regret"] = report.external
            record["polytope_swap_regret"] = report.polytope_swap
        elif kind == "polytope_cap":
            record["decomposed_cover_regret"] = decomposed_swap_regret(trace, game)
            size = len(trace.cover)
            record["cover_regret_bound"] = (
                3.0 * game.utility_bound * math.sqrt(size * math.log(size) * horizon)
            )
            record["external_regret"] = _external_regret_lean(
                trace.opt_actions, trace.expected_u_learner_total, game
            )
        else:
            record["external_regret"] = _external_regret_lean(
                trace.opt_actions, trace.expected_u_learner_total, game
            )
        record["optimizer_mean_per_round"] = record["optimizer_total_utility"] / horizon
        return record, trace


def _emit_outputs(out: Path, summary: dict, traces: dict[int, Trace], v_ref, config: dict) -> None:
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    for seed, trace in traces.items():
        trace_to_csv(trace, out / f"trace_seed{seed}.csv")
        _write_plot_csv(out / f"plot_seed{seed}.csv", trace, v_ref)
    if traces:
        _render_run_figure(out / "figure.png", traces, v_ref, config)


def _plot_rows(trace: Trace, v_ref):
    t = trace.horizon
    stride = max(1, t // 5000)
    cum = np.cumsum(trace.u_opt_realized)
    rounds = np.arange(1, t + 1)
    idx = np.arange(0, t, stride)
    for k in idx:
        ref = v_ref * rounds[k] if v_ref is not None else ""
        yield rounds[k], cum[k], ref


def _write_plot_csv(path: Path, trace: Trace, v_ref) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "cum_optimizer_utility", "stackelberg_reference"])
        for row in _plot_rows(trace, v_ref):
            writer.writerow(row)


def _render_run_figure(path: Path, traces: dict[int, Trace], v_ref, config: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for seed, trace in traces.items():
        rows = np.array([(r, c) for r, c, _ in _plot_rows(trace, None)], dtype=float)
        ax.plot(rows[:, 0], rows[:, 1], label=f"seed {seed}", lw=1.2)
    if v_ref is not None:
        t = max(trace.horizon for trace in traces.values())
        ax.plot([0, t], [0, v_ref * t], "k--", lw=1.0, label=f"V*t (V={v_ref:.4g})")
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative optimizer utility")
    ax.set_title(config.get("scenario", "run"))
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def gap_report(results_by_m: dict[int, dict], out_dir: str | Path | None = None) -> list[dict]:
    """Ratio table for exploit runs across instance sizes m.

    Each input summary must come from an fpa_bayesian_exploit run and carry V
    and per-seed totals. Emits one row per m with the mean per-round utility,
    V, the ratio U/(V*T), and the standard error across seeds.
    """
    rows = []
    for m in sorted(results_by_m):
        summary = results_by_m[m]
        if summary is None:
            raise ConfigError(f"missing exploit results for m={m}")
        horizon = summary["horizon"]
        v_ref = summary["V"]
        per_round = np.array(
            [r["optimizer_total_utility"] / horizon for r in summary["per_seed"]]
        )
        ratios = per_round / v_ref
        stderr = float(per_round.std(ddof=1) / math.sqrt(per_round.size)) if per_round.size > 1 else 0.0
        rows.append(
            {
                "m": m,
                "mean_utility_per_round": float(per_round.mean()),
                "V": v_ref,
                "ratio": float(ratios.mean()),
                "stderr_utility_per_round": stderr,
                "seeds": len(summary["per_seed"]),
            }
        )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "gap_report.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
        _render_gap_figure(out / "gap_report.png", rows)
    return rows


def _render_gap_figure(path: Path, rows: list[dict]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ms = [r["m"] for r in rows]
    ratios = [r["ratio"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(ms, ratios, "o-", label="U / (V*T)")
    ax.axhline(1.0, color="k", ls="--", lw=1.0, label="Stackelberg cap")
    ax.set_xlabel("m (support size)")
    ax.set_ylabel("utility ratio")
    ax.set_xticks(ms)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
