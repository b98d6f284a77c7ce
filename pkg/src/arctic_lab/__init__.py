"""arctic-lab: safe cooperation in iterated 2x2 social dilemmas.

Matrix-game primitives, policy-conditioned opponent forecasts, the
risk-capital agent, a seeded match engine, the cooperation/safety trade-off
bound, and a desk-scale tabular learner, all behind one CLI (``arctic-lab``).
"""

from .games import (
    Action,
    ConstantPayoffsError,
    MatrixGame,
    MixedStrategy,
    NAMED_GAMES,
    PRISONERS_DILEMMA,
    STAG_HUNT,
    best_response,
    expected_utility,
    load_game,
    minimax_strategy,
    minimax_value,
    normalize,
    validate_ssd,
    worst_case_value,
)
from .beliefs import (
    Adversarial,
    Belief,
    Cooperative,
    Horizon,
    InfeasibleConditionError,
    Mixture,
    OpponentForecast,
    StagePolicy,
    best_response_to_belief,
    discounted_return,
    forecast,
    min_epsilon_for_cooperation,
    cooperation_margin,
)
from .tradeoff import (
    DomainError,
    TradeoffParams,
    cooperation_loss_bound,
    phi,
    risk_budget_sequence,
    simulate_tight_policy,
    switch_index,
)
from .agents import (
    Agent,
    AgentObservation,
    ArcticAgent,
    ArcticState,
    arctic_policy,
    arctic_update,
    make_agent,
)
from .engine import (
    BatchSummary,
    MatchTrace,
    SimConfig,
    TournamentResult,
    mix_seed,
    run_batch,
    run_match,
    tournament,
)
from .rl import (
    CoopLevel,
    EmptyBatchError,
    EnvState,
    TabularPolicy,
    TrainConfig,
    evaluate,
    shaped_reward,
    train,
    update_coop_level,
)

__version__ = "0.1.0"
