"""Round-by-round agents: a fixed-strategy zoo and the risk-capital agent.

Agents emit a cooperation intention (mixed strategy) each round; the match
engine samples and perturbs the realized action. The risk-capital agent
("arctic") best-responds to an epsilon-mixture of the adversarial and trust
forecasts, then re-banks the payoff surplus it earned over the game's
minimax value:

    bank <- max(bank + (E[u(intention, realized opponent action)] - v) / K, 0)
    epsilon <- min(bank, 1)

The mixture weight epsilon is capped at 1 (a convex mixture needs no more),
while the bank itself keeps accumulating by default so that established trust
survives isolated defections; set capital_cap="unit" to also cap the bank,
which makes the stored capital identical to epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .beliefs import (
    Adversarial,
    Cooperative,
    Horizon,
    Mixture,
    StagePolicy,
    best_response_to_belief,
)
from .games import (
    PLAYER_I,
    Action,
    MatrixGame,
    MixedStrategy,
    expected_utility,
    minimax_value,
)

__all__ = [
    "AgentObservation",
    "Agent",
    "AllD",
    "AllC",
    "TitForTat",
    "RandomAgent",
    "PCBestResponder",
    "ArcticState",
    "ArcticAgent",
    "arctic_policy",
    "arctic_update",
    "make_agent",
    "AGENT_KINDS",
]


@dataclass(frozen=True)
class AgentObservation:
    """What an agent sees at the start of a round; the optional fields are
    absent exactly at round 0."""

    round_index: int
    own_last_action: Action | None = None
    opp_last_action: Action | None = None
    own_last_reward: float = 0.0

    def __post_init__(self) -> None:
        first = self.round_index == 0
        if first != (self.own_last_action is None) or first != (
            self.opp_last_action is None
        ):
            raise ValueError("last actions must be absent exactly at round 0")


class Agent:
    """Base class: subclasses implement act(observation) -> intention."""

    kind: str = ""
    # Adaptive agents execute with a trembling hand (engine action noise);
    # scripted reference strategies execute exactly under the default scope.
    adaptive: bool = False

    def act(self, obs: AgentObservation) -> MixedStrategy:
        raise NotImplementedError

    @property
    def risk_capital(self) -> float | None:
        """Mixture weight for agents that track one, else None."""
        return None


class AllD(Agent):
    kind = "alld"

    def act(self, obs: AgentObservation) -> MixedStrategy:
        return MixedStrategy(0.0)


class AllC(Agent):
    kind = "allc"

    def act(self, obs: AgentObservation) -> MixedStrategy:
        return MixedStrategy(1.0)


class TitForTat(Agent):
    """Cooperates first, then mirrors the opponent's previous realized action."""

    kind = "t4t"

    def act(self, obs: AgentObservation) -> MixedStrategy:
        if obs.opp_last_action is None:
            return MixedStrategy(1.0)
        return MixedStrategy(1.0 if obs.opp_last_action is Action.C else 0.0)


class RandomAgent(Agent):
    """Cooperates with a fixed probability every round."""

    def __init__(self, p: float) -> None:
        self.kind = f"random:{p:g}"
        self.intention = MixedStrategy(float(p))

    def act(self, obs: AgentObservation) -> MixedStrategy:
        return self.intention


class PCBestResponder(Agent):
    """Plays the best response to the pure trust forecast every round."""

    kind = "pc"

    def __init__(
        self,
        game: MatrixGame,
        belief: Cooperative,
        horizon: Horizon,
        tie_future: bool = False,
        player: str = PLAYER_I,
    ) -> None:
        self.policy = best_response_to_belief(game, belief, horizon, tie_future, player)

    def act(self, obs: AgentObservation) -> MixedStrategy:
        return MixedStrategy(self.policy.alpha)


@dataclass(frozen=True)
class ArcticState:
    """Risk-capital agent state between rounds.

    epsilon is the mixture weight in [0, 1]; bank is the accumulated surplus
    it is derived from (equal to epsilon when capital_cap="unit"). K rescales
    surpluses of games whose payoff range exceeds 1.
    """

    epsilon: float
    bank: float
    v: float
    K: float
    belief_params: Cooperative
    horizon: Horizon
    last_policy: StagePolicy
    player: str = PLAYER_I
    tie_future: bool = False
    capital_cap: str = "none"
    floor_events: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.bank < 0.0:
            raise ValueError(f"bank must be nonnegative, got {self.bank}")
        if self.K < 1.0:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.capital_cap not in ("none", "unit"):
            raise ValueError(f"unknown capital_cap {self.capital_cap!r}")


def arctic_policy(state: ArcticState, game: MatrixGame) -> StagePolicy:
    """Best response to the epsilon-mixture belief at the current weight."""
    if state.epsilon == 0.0:
        belief: Mixture | Adversarial = Adversarial()
    else:
        belief = Mixture(state.epsilon, state.belief_params)
    return best_response_to_belief(
        game, belief, state.horizon, state.tie_future, state.player
    )


def arctic_update(
    state: ArcticState,
    own_policy: StagePolicy,
    opp_action: Action,
    game: MatrixGame,
) -> ArcticState:
    """Re-bank the surplus earned this round over the minimax value.

    The expectation is over the agent's own mixed intention against the
    opponent's realized action; the result is floored at zero (an ill-funded
    mixture is meaningless) and the mixture weight is capped at one.
    """
    opp = 1.0 if opp_action is Action.C else 0.0
    surplus = expected_utility(game, own_policy.alpha, opp, state.player) - state.v
    bank = state.bank + surplus / state.K
    floors = state.floor_events
    if bank < 0.0:
        bank = 0.0
        floors += 1
    if state.capital_cap == "unit":
        bank = min(bank, 1.0)
    return replace(
        state,
        bank=bank,
        epsilon=min(bank, 1.0),
        floor_events=floors,
    )


class ArcticAgent(Agent):
    """Banks surplus over the game value and spends it as trust."""

    kind = "arctic"
    adaptive = True

    def __init__(
        self,
        game: MatrixGame,
        belief: Cooperative,
        horizon: Horizon,
        epsilon_0: float = 0.0,
        K: float = 1.0,
        player: str = PLAYER_I,
        tie_future: bool = False,
        capital_cap: str = "none",
        update_basis: str = "intention",
    ) -> None:
        if update_basis not in ("intention", "realized"):
            raise ValueError(f"unknown update_basis {update_basis!r}")
        self.game = game
        self.update_basis = update_basis
        self.state = ArcticState(
            epsilon=min(epsilon_0, 1.0),
            bank=float(epsilon_0),
            v=minimax_value(game, player),
            K=K,
            belief_params=belief,
            horizon=horizon,
            last_policy=StagePolicy(0.0, 0.0),
            player=player,
            tie_future=tie_future,
            capital_cap=capital_cap,
        )

    def act(self, obs: AgentObservation) -> MixedStrategy:
        if obs.round_index > 0:
            if self.update_basis == "realized":
                own = 1.0 if obs.own_last_action is Action.C else 0.0
                basis = StagePolicy(own, own)
            else:
                basis = self.state.last_policy
            self.state = arctic_update(self.state, basis, obs.opp_last_action, self.game)
        policy = arctic_policy(self.state, self.game)
        self.state = replace(self.state, last_policy=policy)
        return MixedStrategy(policy.alpha)

    @property
    def risk_capital(self) -> float:
        return self.state.epsilon


AGENT_KINDS = ("arctic", "pc", "t4t", "alld", "adv", "allc", "random:<p>", "rl:<path>")


def make_agent(
    kind: str,
    game: MatrixGame,
    *,
    x: float = 0.5,
    beta: float = 0.0,
    beta_plus: float = 1.0,
    beta_minus: float = 0.0,
    gamma: float = 0.9,
    horizon_rounds: int | None = None,
    tie_future: bool = True,
    epsilon_0: float = 0.0,
    K: float = 1.0,
    capital_cap: str = "none",
    update_basis: str = "realized",
    player: str = PLAYER_I,
    rng: np.random.Generator | None = None,
) -> Agent:
    """Build an agent from its config string, e.g. "arctic", "random:0.3"."""
    if gamma == 1.0 and horizon_rounds is None:
        raise ValueError("an unbounded horizon requires gamma < 1")
    horizon = Horizon(horizon_rounds, gamma)
    if kind in ("alld", "adv"):
        return AllD()
    if kind == "allc":
        return AllC()
    if kind == "t4t":
        return TitForTat()
    if kind.startswith("random:"):
        return RandomAgent(float(kind.split(":", 1)[1]))
    belief = Cooperative(x=x, beta=beta, beta_plus=beta_plus, beta_minus=beta_minus)
    if kind == "pc":
        return PCBestResponder(game, belief, horizon, tie_future, player)
    if kind == "arctic":
        return ArcticAgent(
            game,
            belief,
            horizon,
            epsilon_0=epsilon_0,
            K=K,
            player=player,
            tie_future=tie_future,
            capital_cap=capital_cap,
            update_basis=update_basis,
        )
    if kind.startswith("rl:"):
        from .rl import PolicyAgent, load_policy

        return PolicyAgent(load_policy(kind.split(":", 1)[1]), game, player, rng=rng)
    raise ValueError(f"unknown agent kind {kind!r}; known kinds: {AGENT_KINDS}")
