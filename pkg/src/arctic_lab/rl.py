"""Desk-scale learning in repeated matrix games: a cooperation-level signal,
belief-consistent reward shaping for training, and a tabular TD learner that
trains shaped and is evaluated unshaped through the match engine.

The learner's state is its discretized risk-capital bucket (banked surplus
over the game value, clipped to [0, 1]) together with the last joint action.
During training the partner's cooperation level gates the shaping: while the
partner keeps earning above the game value, the learner is paid the joint
reward, which is what makes reciprocation optimal for it; transfer play uses
raw bimatrix rewards only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .agents import Agent, AgentObservation
from .games import Action, MatrixGame, MixedStrategy, load_game, minimax_value
from .engine import SimConfig, BatchSummary, run_batch, run_match, mix_seed

__all__ = [
    "CoopLevel",
    "EnvState",
    "TabularPolicy",
    "TrainConfig",
    "EmptyBatchError",
    "PolicyFormatError",
    "update_coop_level",
    "shaped_reward",
    "train",
    "evaluate",
    "save_policy",
    "load_policy",
    "PolicyAgent",
]

JOINT_KEYS = ("start", "CC", "CD", "DC", "DD")
ACTIONS = (Action.C, Action.D)


class EmptyBatchError(ValueError):
    """Evaluation asked for zero rollouts."""


class PolicyFormatError(ValueError):
    """Malformed policy file."""


@dataclass(frozen=True)
class CoopLevel:
    """Discounted indicator of rounds whose reward beat the game value.

    normalized=True (default) uses x <- gamma*x + (1-gamma)*1{r > v}, which
    stays in [0, 1] so thresholds on a unit scale are meaningful; the raw
    variant x <- gamma*x + 1{r > v} is bounded by 1/(1-gamma).
    """

    x_t: float = 0.0
    gamma: float = 0.9
    v: float = 0.25
    threshold: float = 0.5
    normalized: bool = True

    def __post_init__(self) -> None:
        if self.x_t < 0.0:
            raise ValueError(f"x_t must be nonnegative, got {self.x_t}")
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    @property
    def active(self) -> bool:
        return self.x_t >= self.threshold


def update_coop_level(level: CoopLevel, r_k: float) -> CoopLevel:
    """Fold one reward into the discounted cooperation signal."""
    hit = 1.0 if r_k > level.v else 0.0
    if level.normalized:
        x_t = level.gamma * level.x_t + (1.0 - level.gamma) * hit
    else:
        x_t = level.gamma * level.x_t + hit
    return replace(level, x_t=x_t)


def shaped_reward(r_i: float, r_j: float, coop_level_i: CoopLevel, x: float) -> float:
    """Reward handed to player i's opponent: the joint reward r_i + r_j while
    i's cooperation level is at least x, else r_j unchanged."""
    return r_i + r_j if coop_level_i.x_t >= x else r_j


@dataclass(frozen=True)
class EnvState:
    """Learner state: risk-capital bucket, last joint action, round index."""

    bucket: int
    last_joint: str
    round_index: int = 0

    def __post_init__(self) -> None:
        if self.bucket < 0:
            raise ValueError(f"bucket must be nonnegative, got {self.bucket}")
        if self.last_joint not in JOINT_KEYS:
            raise ValueError(f"unknown joint action {self.last_joint!r}")

    @property
    def state_id(self) -> int:
        return self.bucket * len(JOINT_KEYS) + JOINT_KEYS.index(self.last_joint)


def _bucket(bank: float, buckets: int) -> int:
    return int(round(min(bank, 1.0) * (buckets - 1)))


def _joint_key(own: Action | None, opp: Action | None) -> str:
    if own is None or opp is None:
        return "start"
    return ("C" if own is Action.C else "D") + ("C" if opp is Action.C else "D")


@dataclass
class TabularPolicy:
    """Frozen or in-training action-value table over EnvState x {C, D}."""

    q: dict[int, list[float]]
    buckets: int = 11
    lr: float = 0.1
    explore: float = 0.1
    seed: int = 0
    fingerprint: str = ""

    def values(self, state_id: int) -> list[float]:
        return self.q.setdefault(state_id, [0.0, 0.0])

    def greedy(self, state_id: int, rng: np.random.Generator) -> Action:
        qc, qd = self.q.get(state_id, (0.0, 0.0))
        if qc == qd:
            return ACTIONS[int(rng.integers(0, 2))]
        return Action.C if qc > qd else Action.D


@dataclass(frozen=True)
class TrainConfig:
    """Shaped-environment training setup.

    partner selects the training diet: "mix:a,b,c" (default mixes a pure
    defector with two reciprocators) draws one partner kind per episode,
    which is the desk-scale stand-in for co-training; "self" trains two
    independent learners; any single match-engine agent kind also works.
    Reward shaping is the cooperative-belief transform, so it applies to
    every episode except those against the pure defector (the adversarial
    component of the belief carries no shaping).
    """

    game: str | MatrixGame = "pd"
    partner: str = "mix:alld,t4t,pc"
    episodes: int = 20000
    rounds: int = 50
    lr: float = 0.1
    gamma_td: float = 0.5
    explore_start: float = 0.3
    explore_end: float = 0.01
    shaping: bool = True
    x: float = 0.5
    coop_gamma: float = 0.9
    coop_normalized: bool = True
    buckets: int = 11
    noise: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.episodes < 0:
            raise ValueError(f"episodes must be >= 0, got {self.episodes}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")


def _fingerprint(game: MatrixGame, cfg: TrainConfig) -> str:
    cells = ",".join(
        f"{v:g}" for mat in (game.payoff_i, game.payoff_j) for row in mat for v in row
    )
    return (
        f"game={game.name or 'custom'} payoffs={cells} buckets={cfg.buckets} "
        f"x={cfg.x:g} shaping={cfg.shaping} coop_normalized={cfg.coop_normalized} "
        f"episodes={cfg.episodes} seed={cfg.seed}"
    )


class _Script:
    """Scripted training partner built from an agent kind string."""

    def __init__(self, kind: str, game: MatrixGame, x: float, rng: np.random.Generator):
        from .agents import make_agent

        self.agent = make_agent(kind, game, x=x, gamma=0.9, player="j", rng=rng)
        self.rng = rng

    def act(self, obs: AgentObservation) -> Action:
        intent = self.agent.act(obs).coop_prob
        return Action.C if self.rng.random() < intent else Action.D


def _tremble(action: Action, noise: float, rng: np.random.Generator) -> Action:
    if noise > 0.0 and rng.random() < noise:
        return Action.C if rng.random() < 0.5 else Action.D
    return action


def train(cfg: TrainConfig) -> TabularPolicy:
    """Q-learning in the shaped repeated game; deterministic given the seed.

    The learner trembles at the engine's noise rate; the scripted partner
    executes exactly, mirroring match-engine semantics. With partner="self" a
    second, independent learner takes the other seat (shaping off is the
    usual pairing for that mode).
    """
    game = cfg.game if isinstance(cfg.game, MatrixGame) else load_game(cfg.game)
    rng = np.random.default_rng(cfg.seed)
    v_i = minimax_value(game, "i")
    v_j = minimax_value(game, "j")
    policy = TabularPolicy(
        q={}, buckets=cfg.buckets, lr=cfg.lr, explore=cfg.explore_end,
        seed=cfg.seed, fingerprint=_fingerprint(game, cfg),
    )
    self_play = cfg.partner == "self"
    diet = (
        cfg.partner.split(":", 1)[1].split(",")
        if cfg.partner.startswith("mix:")
        else [cfg.partner]
    )
    partner_policy = (
        TabularPolicy(q={}, buckets=cfg.buckets, lr=cfg.lr, explore=cfg.explore_end,
                      seed=cfg.seed)
        if self_play
        else None
    )

    def choose(pol: TabularPolicy, state_id: int, explore: float) -> Action:
        if rng.random() < explore:
            return ACTIONS[int(rng.integers(0, 2))]
        return pol.greedy(state_id, rng)

    for episode in range(cfg.episodes):
        frac = episode / max(cfg.episodes - 1, 1)
        explore = cfg.explore_start + (cfg.explore_end - cfg.explore_start) * frac
        if self_play:
            partner, adversarial = None, False
        else:
            kind = diet[int(rng.integers(0, len(diet)))]
            partner = _Script(kind, game, cfg.x, rng)
            adversarial = kind in ("alld", "adv")
        bank_i = bank_j = 0.0
        state_i = EnvState(0, "start")
        state_j = EnvState(0, "start")
        a_i: Action | None = None
        a_j: Action | None = None
        r_j_prev = 0.0
        partner_level = CoopLevel(gamma=cfg.coop_gamma, v=v_j, threshold=cfg.x,
                                  normalized=cfg.coop_normalized)
        for t in range(cfg.rounds):
            act_i = choose(policy, state_i.state_id, explore)
            act_i = _tremble(act_i, cfg.noise, rng)
            if self_play:
                act_j = choose(partner_policy, state_j.state_id, explore)
                act_j = _tremble(act_j, cfg.noise, rng)
            else:
                obs = AgentObservation(t, a_j, a_i, r_j_prev)
                act_j = partner.act(obs)
            r_i = game.payoff("i", act_i, act_j)
            r_j = game.payoff("j", act_j, act_i)

            # Shaping pays the partner's reward forward to the learner while
            # the partner's cooperation level clears the threshold; it is the
            # cooperative-belief transform, so adversarial episodes stay raw.
            if cfg.shaping and not self_play and not adversarial:
                r_train = shaped_reward(r_j, r_i, partner_level, cfg.x)
            else:
                r_train = r_i
            partner_level = update_coop_level(partner_level, r_j)

            bank_i = max(bank_i + (r_i - v_i), 0.0)
            next_i = EnvState(_bucket(bank_i, cfg.buckets), _joint_key(act_i, act_j), t + 1)
            _td_update(policy, state_i.state_id, act_i, r_train,
                       next_i.state_id, cfg, terminal=t == cfg.rounds - 1)
            if self_play:
                bank_j = max(bank_j + (r_j - v_j), 0.0)
                next_j = EnvState(_bucket(bank_j, cfg.buckets), _joint_key(act_j, act_i), t + 1)
                _td_update(partner_policy, state_j.state_id, act_j, r_j,
                           next_j.state_id, cfg, terminal=t == cfg.rounds - 1)
                state_j = next_j
            state_i = next_i
            a_i, a_j, r_j_prev = act_i, act_j, r_j
    return policy


def _td_update(pol: TabularPolicy, state_id: int, action: Action, reward: float,
               next_id: int, cfg: TrainConfig, terminal: bool) -> None:
    values = pol.values(state_id)
    idx = 0 if action is Action.C else 1
    target = reward
    if not terminal:
        target += cfg.gamma_td * max(pol.values(next_id))
    values[idx] += cfg.lr * (target - values[idx])


def save_policy(policy: TabularPolicy, path: str) -> None:
    """Plain-text table: header lines then state_id,action,value rows."""
    lines = [
        f"# arctic-lab tabular policy",
        f"# buckets={policy.buckets} seed={policy.seed}",
        f"# {policy.fingerprint}",
        "state_id,action,value",
    ]
    for state_id in sorted(policy.q):
        qc, qd = policy.q[state_id]
        lines.append(f"{state_id},C,{qc:.12g}")
        lines.append(f"{state_id},D,{qd:.12g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_policy(path: str) -> TabularPolicy:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read().splitlines()
    except OSError as exc:
        raise PolicyFormatError(f"cannot read policy {path!r}: {exc}") from exc
    buckets, seed, fingerprint = 11, 0, ""
    q: dict[int, list[float]] = {}
    saw_header = False
    for line in raw:
        if line.startswith("#"):
            body = line[1:].strip()
            for token in body.split():
                if token.startswith("buckets="):
                    buckets = int(token.split("=", 1)[1])
                elif token.startswith("seed="):
                    seed = int(token.split("=", 1)[1])
            if body.startswith("game="):
                fingerprint = body
            continue
        if line.strip() == "state_id,action,value":
            saw_header = True
            continue
        if not line.strip():
            continue
        try:
            sid_s, action_s, value_s = line.split(",")
            sid, value = int(sid_s), float(value_s)
            if not math.isfinite(value):
                raise ValueError("non-finite value")
            idx = {"C": 0, "D": 1}[action_s]
        except (ValueError, KeyError) as exc:
            raise PolicyFormatError(f"bad policy row {line!r}") from exc
        q.setdefault(sid, [0.0, 0.0])[idx] = value
    if not saw_header:
        raise PolicyFormatError(f"{path!r} is not a policy file (missing column header)")
    return TabularPolicy(q=q, buckets=buckets, seed=seed, fingerprint=fingerprint)


class PolicyAgent(Agent):
    """Frozen tabular policy driven through the match engine; greedy with
    uniform random tie-breaking, trembling-hand execution like any learner."""

    adaptive = True

    def __init__(self, policy: TabularPolicy, game: MatrixGame, player: str = "i",
                 rng: np.random.Generator | None = None) -> None:
        self.kind = "rl"
        self.policy = policy
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.v = minimax_value(game, player)
        self.bank = 0.0

    def act(self, obs: AgentObservation) -> MixedStrategy:
        if obs.round_index > 0:
            self.bank = max(self.bank + (obs.own_last_reward - self.v), 0.0)
        state = EnvState(
            _bucket(self.bank, self.policy.buckets),
            _joint_key(obs.own_last_action, obs.opp_last_action),
            obs.round_index,
        )
        action = self.policy.greedy(state.state_id, self.rng)
        return MixedStrategy(1.0 if action is Action.C else 0.0)

    @property
    def risk_capital(self) -> float:
        return min(self.bank, 1.0)


def evaluate(policy_path: str, opponent: str, config: SimConfig | None = None,
             runs: int | None = None) -> BatchSummary:
    """Run the frozen policy unshaped against `opponent`; no learning, and
    every reward in the traces is a bimatrix cell (spot-checked at runtime)."""
    base = config if config is not None else SimConfig(runs=300)
    n_runs = runs if runs is not None else base.runs
    if n_runs < 1:
        raise EmptyBatchError(f"evaluation needs at least one rollout, got {n_runs}")
    load_policy(policy_path)  # fail fast on format errors
    import dataclasses

    cfg = dataclasses.replace(base, agent_i=f"rl:{policy_path}", agent_j=opponent,
                              runs=n_runs)
    _assert_unshaped(cfg)
    return run_batch(cfg)


def _assert_unshaped(cfg: SimConfig) -> None:
    game = cfg.resolve_game()
    cells = {
        round(game.payoff("i", a, b), 12)
        for a in ACTIONS
        for b in ACTIONS
    }
    trace = run_match(cfg, mix_seed(cfg.seed, 0))
    for r in trace.reward_i:
        if round(float(r), 12) not in cells:
            raise AssertionError(f"evaluation reward {r} is not a bimatrix cell")
