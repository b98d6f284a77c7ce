"""Command-line front end: every experiment and check as a subcommand.

Exit codes: 0 success, 2 unusable invocation or config, 3 a verification
subcommand ran and its check failed. Stochastic subcommands require a master
seed; artifacts start with a metadata header line carrying the resolved
config, and re-running with the same seed reproduces files byte for byte.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np
import tomli

from .beliefs import (
    Cooperative,
    Horizon,
    InfeasibleConditionError,
    StagePolicy,
    min_epsilon_for_cooperation,
    cooperation_margin,
)
from .engine import (
    SimConfig,
    _atomic_write,
    run_batch,
    tournament,
    write_batch_csv,
    write_tournament_csv,
)
from .games import load_game, minimax_value, validate_ssd, worst_case_value
from .rl import TrainConfig, evaluate, save_policy, train
from .tradeoff import (
    TradeoffParams,
    cooperation_loss_bound,
    simulate_tight_policy,
    switch_index,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3

SUBCOMMANDS = (
    "simulate",
    "tournament",
    "bound",
    "check-coop",
    "minimax",
    "verify-safety",
    "train-rl",
    "eval-rl",
)


class ConfigError(ValueError):
    """Invocation or config file cannot be used."""


def _coerce(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            continue
    return text


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from exc
    return _flatten(data)


def _flatten(data: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, f"{name}."))
        else:
            out[name] = value
    return out


# Keys under the belief.* namespace map onto the flat SimConfig fields.
_BELIEF_ALIASES = {
    "belief.x": "x",
    "belief.beta": "beta",
    "belief.beta_plus": "beta_plus",
    "belief.beta_minus": "beta_minus",
    "belief.epsilon": "epsilon_0",
}


def _merge_settings(args: argparse.Namespace, flag_fields: dict[str, str]) -> dict:
    settings = _load_config_file(getattr(args, "config", None))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        settings[key.strip()] = _coerce(value.strip())
    for key, target in _BELIEF_ALIASES.items():
        if key in settings:
            settings[target] = settings.pop(key)
    for flag, target in flag_fields.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings[target] = value
    return settings


def _sim_config(settings: dict) -> SimConfig:
    agents = settings.pop("agents", None)
    if agents is not None:
        kinds = [a.strip() for a in str(agents).split(",")]
        if len(kinds) != 2:
            raise ConfigError(f"--agents expects two comma-separated kinds, got {agents!r}")
        settings["agent_i"], settings["agent_j"] = kinds
    known = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = set(settings) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return SimConfig(**settings)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _require_seed(settings: dict) -> None:
    if "seed" not in settings:
        raise ConfigError("stochastic subcommands require a master seed (--seed)")


def _out_path(args: argparse.Namespace, name: str) -> str:
    out_dir = getattr(args, "out", None) or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


_SIM_FLAGS = {
    "game": "game",
    "rounds": "rounds",
    "noise": "noise",
    "gamma": "gamma",
    "runs": "runs",
    "seed": "seed",
    "epsilon0": "epsilon_0",
    "x": "x",
    "beta": "beta",
}


def _cmd_simulate(args: argparse.Namespace) -> int:
    settings = _merge_settings(args, _SIM_FLAGS)
    if args.agents:
        settings["agents"] = args.agents
    _require_seed(settings)
    config = _sim_config(settings)
    summary = run_batch(config)
    path = _out_path(args, "simulate.csv")
    write_batch_csv(summary, config, path)
    print(path)
    return EXIT_OK


def _cmd_tournament(args: argparse.Namespace) -> int:
    settings = _merge_settings(args, _SIM_FLAGS)
    kinds_raw = args.agents or settings.pop("agents", None)
    if not kinds_raw:
        raise ConfigError("tournament requires --agents kind1,kind2,...")
    kinds = [k.strip() for k in str(kinds_raw).split(",") if k.strip()]
    _require_seed(settings)
    config = _sim_config(settings)
    result = tournament(kinds, config)
    path = _out_path(args, "tournament.csv")
    write_tournament_csv(result, config, path)
    print(path)
    return EXIT_OK


def _cmd_bound(args: argparse.Namespace) -> int:
    count = args.count
    if count < 1:
        raise ConfigError("--count must be >= 1")
    eps_grid = np.linspace(args.eps_min, args.eps_max, count)
    lines = [
        "# arctic-lab bound "
        f"d={args.d:g} P_minus_S={args.p_minus_s:g} T={args.rounds} v={args.v:g} R={args.R:g}"
    ]
    lines.append("epsilon,I,bound,simulated_gap")
    for eps in eps_grid:
        params = TradeoffParams(
            epsilon=float(eps), d=args.d, P_minus_S=args.p_minus_s,
            T_rounds=args.rounds, v=args.v, R=args.R,
        )
        index = switch_index(params.epsilon, params.C, params.T_rounds)
        bound = cooperation_loss_bound(params)
        gap = params.optimal_cooperative_value - simulate_tight_policy(params)
        lines.append(f"{eps:.6f},{index},{bound:.6f},{gap:.6f}")
    path = _out_path(args, "bound.csv")
    _atomic_write(path, "\n".join(lines) + "\n")
    print(path)
    return EXIT_OK


def _cmd_check_coop(args: argparse.Namespace) -> int:
    game = load_game(args.game)
    if not validate_ssd(game):
        raise ConfigError(f"game {args.game!r} is not a social dilemma")
    horizon = Horizon(args.horizon, args.gamma)
    belief = Cooperative(x=args.x, beta=args.beta, beta_plus=args.beta_plus,
                         beta_minus=args.beta_minus)
    alpha = args.alpha if args.alpha is not None else args.x
    alpha_bar = args.alpha_bar if args.alpha_bar is not None else alpha
    policy = StagePolicy(alpha, alpha_bar)
    margin = cooperation_margin(game, policy, belief, horizon)
    feasible = True
    try:
        eps_min = min_epsilon_for_cooperation(game, policy, belief, horizon)
        eps_text = f"{eps_min:.6f}"
    except InfeasibleConditionError as exc:
        feasible = False
        eps_text = f"infeasible ({exc})"
    report = "\n".join([
        f"# arctic-lab check-coop game={args.game} x={args.x:g} beta={args.beta:g} "
        f"beta_plus={args.beta_plus:g} beta_minus={args.beta_minus:g} "
        f"alpha={alpha:g} alpha_bar={alpha_bar:g} gamma={args.gamma:g} "
        f"horizon={args.horizon}",
        f"cooperation_margin={margin:.6f}",
        f"cooperation_holds={margin >= 0.0}",
        f"min_epsilon={eps_text}",
    ]) + "\n"
    _atomic_write(_out_path(args, "check_coop.txt"), report)
    print(report, end="")
    if args.expect_coop and (not feasible or margin < 0.0):
        return EXIT_VERIFY
    return EXIT_OK


def _cmd_minimax(args: argparse.Namespace) -> int:
    game = load_game(args.game)
    v_i = minimax_value(game, "i")
    v_j = minimax_value(game, "j")
    text = f"game={args.game} v_i={v_i:.9f} v_j={v_j:.9f}\n"
    _atomic_write(_out_path(args, "minimax.txt"), text)
    print(text, end="")
    return EXIT_OK


def _cmd_verify_safety(args: argparse.Namespace) -> int:
    game = load_game(args.game)
    v = minimax_value(game, args.player)
    if args.coop_prob is not None:
        worst = worst_case_value(game, args.coop_prob, args.player)
        exploitability = v - worst
        source = f"coop_prob={args.coop_prob:g}"
    elif args.trace is not None:
        rewards = _read_mean_rewards(args.trace, args.player)
        worst = float(np.mean(rewards))
        exploitability = v - worst
        source = f"trace={args.trace}"
    else:
        raise ConfigError("verify-safety needs --coop-prob or --trace")
    ok = exploitability <= args.max_epsilon + 1e-12
    report = "\n".join([
        f"# arctic-lab verify-safety game={args.game} player={args.player} {source}",
        f"minimax_value={v:.9f}",
        f"guaranteed_or_realized={worst:.9f}",
        f"exploitability={exploitability:.9f}",
        f"epsilon_budget={args.max_epsilon:g}",
        f"within_budget={ok}",
    ]) + "\n"
    _atomic_write(_out_path(args, "verify_safety.txt"), report)
    print(report, end="")
    return EXIT_OK if ok else EXIT_VERIFY


def _read_mean_rewards(path: str, player: str) -> list[float]:
    column = "mean_reward_i" if player == "i" else "mean_reward_j"
    try:
        with open(path, "r", encoding="utf-8") as fh:
            rows = [line.strip() for line in fh if line.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read trace {path!r}: {exc}") from exc
    rows = [r for r in rows if not r.startswith("#")]
    if not rows:
        raise ConfigError(f"trace {path!r} is empty")
    header = rows[0].split(",")
    if column not in header:
        raise ConfigError(f"trace {path!r} lacks column {column!r}")
    idx = header.index(column)
    try:
        return [float(r.split(",")[idx]) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"malformed trace {path!r}") from exc


_TRAIN_FLAGS = {
    "game": "game",
    "partner": "partner",
    "episodes": "episodes",
    "rounds": "rounds",
    "x": "x",
    "noise": "noise",
    "seed": "seed",
    "shaping": "shaping",
}


def _cmd_train_rl(args: argparse.Namespace) -> int:
    settings = _merge_settings(args, _TRAIN_FLAGS)
    _require_seed(settings)
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    unknown = set(settings) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        config = TrainConfig(**settings)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    policy = train(config)
    path = _out_path(args, "policy.csv")
    save_policy(policy, path)
    print(path)
    return EXIT_OK


def _cmd_eval_rl(args: argparse.Namespace) -> int:
    settings = _merge_settings(args, _SIM_FLAGS)
    _require_seed(settings)
    runs = settings.pop("runs", 300)
    config = _sim_config(settings)
    summary = evaluate(args.policy, args.opponent, config, runs=runs)
    path = _out_path(args, "eval.csv")
    eval_config = dataclasses.replace(
        config, agent_i=f"rl:{args.policy}", agent_j=args.opponent, runs=runs
    )
    write_batch_csv(summary, eval_config, path)
    print(path)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--out", help="output directory (default .)")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key")


def _add_sim_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--game", help="built-in name (pd, stag_hunt) or game file")
    parser.add_argument("--agents", help="agent_i,agent_j kinds")
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--noise", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--runs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--epsilon0", type=float)
    parser.add_argument("--x", type=float)
    parser.add_argument("--beta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arctic-lab",
        description="Risk-capital cooperation experiments in iterated 2x2 social dilemmas",
    )
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("simulate", help="run one seeded batch and write its per-round CSV")
    _add_common(p); _add_sim_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("tournament", help="round-robin score matrix over agent kinds")
    _add_common(p); _add_sim_flags(p)
    p.set_defaults(func=_cmd_tournament)

    p = sub.add_parser("bound", help="cooperation-loss bound sweep over epsilon")
    _add_common(p)
    p.add_argument("--d", type=float, default=0.75)
    p.add_argument("--p-minus-s", type=float, default=0.25)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--v", type=float, default=0.25)
    p.add_argument("--R", type=float, default=0.75)
    p.add_argument("--eps-min", type=float, default=0.01)
    p.add_argument("--eps-max", type=float, default=1.0)
    p.add_argument("--count", type=int, default=100)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("check-coop", help="cooperation margin and minimal epsilon")
    _add_common(p)
    p.add_argument("--game", default="pd")
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--beta-plus", type=float, default=1.0)
    p.add_argument("--beta-minus", type=float, default=0.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-bar", type=float)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--horizon", type=int, default=None,
                   help="rounds remaining (default unbounded)")
    p.add_argument("--expect-coop", action="store_true",
                   help="exit 3 unless cooperation is a feasible best response")
    p.set_defaults(func=_cmd_check_coop)

    p = sub.add_parser("minimax", help="print both players' guaranteed values")
    _add_common(p)
    p.add_argument("--game", default="pd")
    p.set_defaults(func=_cmd_minimax)

    p = sub.add_parser("verify-safety", help="exploitability of a strategy or trace")
    _add_common(p)
    p.add_argument("--game", default="pd")
    p.add_argument("--player", choices=("i", "j"), default="i")
    p.add_argument("--coop-prob", type=float)
    p.add_argument("--trace", help="batch CSV to audit")
    p.add_argument("--max-epsilon", type=float, default=1.0)
    p.set_defaults(func=_cmd_verify_safety)

    p = sub.add_parser("train-rl", help="train a tabular policy in the shaped environment")
    _add_common(p)
    p.add_argument("--game")
    p.add_argument("--partner")
    p.add_argument("--episodes", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--x", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--shaping", type=lambda s: s.lower() == "true")
    p.set_defaults(func=_cmd_train_rl)

    p = sub.add_parser("eval-rl", help="evaluate a frozen policy, unshaped")
    _add_common(p); _add_sim_flags(p)
    p.add_argument("--policy", required=True)
    p.add_argument("--opponent", required=True)
    p.set_defaults(func=_cmd_eval_rl)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "subcommand", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # Covers ConfigError, game/policy format errors, domain errors.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
