"""Command-line entry points.

    arena run <config.json> [--out DIR] [--jobs K]
    arena stackelberg <game-or-instance.json> [--cover ...] [--method ...]
    arena examples --which 6.1|6.2 [--horizon N] [--p1 X] [--seed S] [--out DIR]
    arena regret <trace.csv> <game.json> [--cover ...]

Exit codes: 0 ok, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ArenaError, ConfigError, NumericError
from .games import BayesianGame
from .harness import run_scenario
from .regret import build_report, trace_from_csv
from .swap_learners import enumerate_monotone_maps, full_cover


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def _cmd_run(args) -> int:
    config = _load_json(args.config)
    result = run_scenario(config, out_dir=args.out, jobs=args.jobs)
    print(json.dumps(result.summary, sort_keys=True, indent=2))
    return 0


def _cmd_stackelberg(args) -> int:
    data = _load_json(args.input)
    config = {"scenario": "stackelberg_only", "method": args.method, "cover": args.cover}
    if "epsilon" in data:
        config["instance"] = data
    elif "u_opt" in data:
        config["game"] = data
    else:
        raise ConfigError("input JSON is neither an auction instance nor a game")
    result = run_scenario(config, out_dir=args.out)
    print(json.dumps(result.summary, sort_keys=True, indent=2))
    return 0


def _cmd_examples(args) -> int:
    config = {
        "scenario": f"example_{args.which.replace('.', '_')}",
        "horizon": args.horizon,
        "seeds": [args.seed],
    }
    if args.which == "6.1" and args.p1 is not None:
        config["p1"] = args.p1
    out = args.out if args.out is not None else f"example_{args.which}"
    result = run_scenario(config, out_dir=out)
    # Also emit the game itself for downstream tools.
    from . import scripted

    game, _, _ = scripted.build_example(args.which, args.horizon, args.p1 if args.p1 is not None else "1/T")
    game.to_json(Path(out) / "game.json")
    print(json.dumps(result.summary, sort_keys=True, indent=2))
    return 0


def _cmd_regret(args) -> int:
    trace = trace_from_csv(args.trace)
    game = BayesianGame.from_json_dict(_load_json(args.game))
    cover = None
    if args.cover == "monotone":
        cover = enumerate_monotone_maps(game.n_contexts, game.n_actions)
    elif args.cover == "full":
        cover = full_cover(game.n_contexts, game.n_actions)
    report = build_report(trace, game, cover)
    payload = json.dumps(report.to_json_dict(), sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    print(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arena", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None)
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.set_defaults(fn=_cmd_run)

    p_st = sub.add_parser("stackelberg", help="solve the commitment problem")
    p_st.add_argument("input", help="game JSON or auction instance JSON")
    p_st.add_argument("--cover", default="monotone",
                      choices=["full", "monotone", "monotone_capped"])
    p_st.add_argument("--method", default="lp", choices=["lp", "characterization", "both"])
    p_st.add_argument("--out", default=None)
    p_st.set_defaults(fn=_cmd_stackelberg)

    p_ex = sub.add_parser("examples", help="emit a bundled example's game, trace, and regrets")
    p_ex.add_argument("--which", required=True, choices=["6.1", "6.2"])
    p_ex.add_argument("--horizon", type=int, default=600)
    p_ex.add_argument("--p1", type=float, default=None)
    p_ex.add_argument("--seed", type=int, default=0)
    p_ex.add_argument("--out", default=None)
    p_ex.set_defaults(fn=_cmd_examples)

    p_rg = sub.add_parser("regret", help="meter a recorded trace")
    p_rg.add_argument("trace")
    p_rg.add_argument("game")
    p_rg.add_argument("--cover", default=None, choices=["full", "monotone"])
    p_rg.add_argument("--out", default=None)
    p_rg.set_defaults(fn=_cmd_regret)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except ArenaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
