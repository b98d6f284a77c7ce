"""Seeded repeated-game matches, batch aggregation, and round-robin scores.

Reproducibility contract: a match is a pure function of (config, run_seed),
and run k of a batch uses run_seed = mix_seed(master_seed, k), a splitmix64
mix documented below, so batches are order-independent and safely parallel.

Per round, each agent emits a cooperation intention; the realized action is
sampled from it and then, with probability `noise`, replaced by a uniform
random action (so half of noise events flip the action). The alternative
model noise_model="flip" flips the action with probability `noise` instead.
By default the execution noise is the trembling hand of adaptive agents
(risk-capital and learned policies); scripted reference strategies execute
exactly. Set noise_scope="all" to perturb every agent's actions.
Rewards are always the bimatrix cells of the realized action pair; the
reported "cooperation" series cover both intentions and realized frequencies.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import Agent, AgentObservation, make_agent
from .games import PLAYER_I, PLAYER_J, Action, MatrixGame, load_game

__all__ = [
    "SimConfig",
    "MatchTrace",
    "BatchSummary",
    "TournamentResult",
    "mix_seed",
    "run_match",
    "run_batch",
    "tournament",
    "write_batch_csv",
    "write_tournament_csv",
]

_MASK64 = (1 << 64) - 1

BATCH_CSV_COLUMNS = (
    "round",
    "mean_intent_i",
    "mean_intent_j",
    "mean_coop_i",
    "mean_coop_j",
    "mean_eps_i",
    "mean_eps_j",
    "mean_reward_i",
    "mean_reward_j",
)


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, k: int) -> int:
    """64-bit mix of (master seed, run index): splitmix64(master ^ splitmix64(k))."""
    return _splitmix64((master_seed & _MASK64) ^ _splitmix64(k & _MASK64))


@dataclass(frozen=True)
class SimConfig:
    """Experiment configuration; defaults are the matrix-game experiment set
    (100 rounds, 5% noise, gamma 0.9, 200 runs)."""

    game: str | MatrixGame = "pd"
    agent_i: str = "arctic"
    agent_j: str = "t4t"
    rounds: int = 100
    noise: float = 0.05
    noise_model: str = "resample"
    noise_scope: str = "adaptive"
    gamma: float = 0.9
    runs: int = 200
    seed: int = 0
    epsilon_0: float = 0.0
    x: float = 0.5
    beta: float = 0.0
    beta_plus: float = 1.0
    beta_minus: float = 0.0
    tie_future: bool = True
    capital_cap: str = "none"
    update_basis: str = "realized"
    horizon_rounds: int | None = None

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not (0.0 <= self.noise < 1.0):
            raise ValueError(f"noise must lie in [0, 1), got {self.noise}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.noise_model not in ("resample", "flip"):
            raise ValueError(f"unknown noise_model {self.noise_model!r}")
        if self.noise_scope not in ("adaptive", "all"):
            raise ValueError(f"unknown noise_scope {self.noise_scope!r}")

    def resolve_game(self) -> MatrixGame:
        return self.game if isinstance(self.game, MatrixGame) else load_game(self.game)

    def build_agent(self, kind: str, game: MatrixGame, player: str,
                    rng: np.random.Generator | None = None) -> Agent:
        return make_agent(
            kind,
            game,
            x=self.x,
            beta=self.beta,
            beta_plus=self.beta_plus,
            beta_minus=self.beta_minus,
            gamma=self.gamma,
            horizon_rounds=self.horizon_rounds,
            tie_future=self.tie_future,
            epsilon_0=self.epsilon_0,
            capital_cap=self.capital_cap,
            update_basis=self.update_basis,
            player=player,
            rng=rng,
        )

    def describe(self) -> str:
        """Stable key=value rendering of the resolved config for file headers."""
        pairs = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, MatrixGame):
                value = value.name or "custom"
            pairs.append(f"{f.name}={value}")
        return " ".join(pairs)


@dataclass
class MatchTrace:
    """Per-round record of one match; rewards are realized bimatrix cells."""

    intent_i: np.ndarray
    intent_j: np.ndarray
    coop_i: np.ndarray
    coop_j: np.ndarray
    reward_i: np.ndarray
    reward_j: np.ndarray
    eps_i: np.ndarray
    eps_j: np.ndarray

    @property
    def rounds(self) -> int:
        return len(self.reward_i)

    @property
    def total_i(self) -> float:
        return float(self.reward_i.sum())

    @property
    def total_j(self) -> float:
        return float(self.reward_j.sum())


@dataclass
class BatchSummary:
    """Across-run means per round plus cumulative score statistics."""

    runs: int
    mean_intent_i: np.ndarray
    mean_intent_j: np.ndarray
    mean_coop_i: np.ndarray
    mean_coop_j: np.ndarray
    mean_eps_i: np.ndarray
    mean_eps_j: np.ndarray
    mean_reward_i: np.ndarray
    mean_reward_j: np.ndarray
    score_i: float = 0.0
    score_j: float = 0.0
    score_i_se: float = 0.0
    score_j_se: float = 0.0

    @property
    def rounds(self) -> int:
        return len(self.mean_reward_i)


def _realize(
    intent: float,
    rng: np.random.Generator,
    noise: float,
    model: str,
    noisy: bool,
) -> Action:
    action = Action.C if rng.random() < intent else Action.D
    if noisy and noise > 0.0 and rng.random() < noise:
        if model == "resample":
            action = Action.C if rng.random() < 0.5 else Action.D
        else:
            action = Action.D if action is Action.C else Action.C
    return action


def run_match(config: SimConfig, run_seed: int) -> MatchTrace:
    """Play one seeded match; deterministic given (config, run_seed)."""
    game = config.resolve_game()
    seq = np.random.SeedSequence(run_seed)
    match_ss, ss_i, ss_j = seq.spawn(3)
    rng = np.random.default_rng(match_ss)
    agent_i = config.build_agent(config.agent_i, game, PLAYER_I, np.random.default_rng(ss_i))
    agent_j = config.build_agent(config.agent_j, game, PLAYER_J, np.random.default_rng(ss_j))

    noisy_i = config.noise_scope == "all" or agent_i.adaptive
    noisy_j = config.noise_scope == "all" or agent_j.adaptive
    n = config.rounds
    trace = MatchTrace(
        intent_i=np.zeros(n), intent_j=np.zeros(n),
        coop_i=np.zeros(n, dtype=bool), coop_j=np.zeros(n, dtype=bool),
        reward_i=np.zeros(n), reward_j=np.zeros(n),
        eps_i=np.zeros(n), eps_j=np.zeros(n),
    )
    a_i: Action | None = None
    a_j: Action | None = None
    r_i = r_j = 0.0
    for t in range(n):
        obs_i = AgentObservation(t, a_i, a_j, r_i)
        obs_j = AgentObservation(t, a_j, a_i, r_j)
        intent_i = agent_i.act(obs_i).coop_prob
        intent_j = agent_j.act(obs_j).coop_prob
        a_i = _realize(intent_i, rng, config.noise, config.noise_model, noisy_i)
        a_j = _realize(intent_j, rng, config.noise, config.noise_model, noisy_j)
        r_i = game.payoff(PLAYER_I, a_i, a_j)
        r_j = game.payoff(PLAYER_J, a_j, a_i)
        trace.intent_i[t] = intent_i
        trace.intent_j[t] = intent_j
        trace.coop_i[t] = a_i is Action.C
        trace.coop_j[t] = a_j is Action.C
        trace.reward_i[t] = r_i
        trace.reward_j[t] = r_j
        trace.eps_i[t] = agent_i.risk_capital or 0.0
        trace.eps_j[t] = agent_j.risk_capital or 0.0
    return trace


def _run_indexed(args: tuple[SimConfig, int]) -> MatchTrace:
    config, k = args
    return run_match(config, mix_seed(config.seed, k))


def _worker_count() -> int:
    raw = os.environ.get("ARCTIC_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_batch(config: SimConfig) -> BatchSummary:
    """Aggregate `config.runs` seeded matches; independent of execution order."""
    jobs = [(config, k) for k in range(config.runs)]
    workers = _worker_count()
    if workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(_run_indexed, jobs, chunksize=8))
    else:
        traces = [_run_indexed(job) for job in jobs]

    stack = lambda name: np.stack([getattr(tr, name) for tr in traces])
    totals_i = np.array([tr.total_i for tr in traces])
    totals_j = np.array([tr.total_j for tr in traces])
    n = len(traces)
    se = lambda a: float(a.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return BatchSummary(
        runs=n,
        mean_intent_i=stack("intent_i").mean(axis=0),
        mean_intent_j=stack("intent_j").mean(axis=0),
        mean_coop_i=stack("coop_i").mean(axis=0),
        mean_coop_j=stack("coop_j").mean(axis=0),
        mean_eps_i=stack("eps_i").mean(axis=0),
        mean_eps_j=stack("eps_j").mean(axis=0),
        mean_reward_i=stack("reward_i").mean(axis=0),
        mean_reward_j=stack("reward_j").mean(axis=0),
        score_i=float(totals_i.mean()),
        score_j=float(totals_j.mean()),
        score_i_se=se(totals_i),
        score_j_se=se(totals_j),
    )


@dataclass
class TournamentResult:
    """Full round-robin score matrix, self-play included."""

    kinds: list[str]
    cells: dict[tuple[str, str], tuple[float, float]] = field(default_factory=dict)
    runs: int = 0


def tournament(agent_kinds: list[str], config: SimConfig) -> TournamentResult:
    """Mean cumulative scores for every ordered pairing of `agent_kinds`."""
    if len(agent_kinds) < 1:
        raise ValueError("tournament needs at least one agent kind")
    result = TournamentResult(kinds=list(agent_kinds), runs=config.runs)
    for row, kind_i in enumerate(agent_kinds):
        for col, kind_j in enumerate(agent_kinds):
            cell_seed = mix_seed(config.seed, row * len(agent_kinds) + col + 1)
            cell_cfg = dataclasses.replace(
                config, agent_i=kind_i, agent_j=kind_j, seed=cell_seed
            )
            summary = run_batch(cell_cfg)
            result.cells[(kind_i, kind_j)] = (summary.score_i, summary.score_j)
    return result


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_batch_csv(summary: BatchSummary, config: SimConfig, path: str) -> None:
    """One row per round, 6-decimal floats, metadata header line first."""
    lines = [
        f"# arctic-lab batch runs={summary.runs} "
        f"score_i={summary.score_i:.6f} score_j={summary.score_j:.6f} "
        f"score_i_se={summary.score_i_se:.6f} score_j_se={summary.score_j_se:.6f} "
        f"| {config.describe()}"
    ]
    lines.append(",".join(BATCH_CSV_COLUMNS))
    for t in range(summary.rounds):
        # Rounds are numbered 1..T, the game's own clock.
        row = [str(t + 1)] + [
            f"{getattr(summary, col)[t]:.6f}" for col in BATCH_CSV_COLUMNS[1:]
        ]
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_tournament_csv(result: TournamentResult, config: SimConfig, path: str) -> None:
    """Score matrix; cell format "score_i|score_j" at table precision."""
    lines = [f"# arctic-lab tournament runs={result.runs} | {config.describe()}"]
    lines.append(",".join(["agent"] + result.kinds))
    for kind_i in result.kinds:
        row = [kind_i]
        for kind_j in result.kinds:
            s_i, s_j = result.cells[(kind_i, kind_j)]
            row.append(f"{s_i:.2f}|{s_j:.2f}")
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")
