"""Policy-conditioned opponent forecasts and best responses to them.

A belief maps a player's own stage policy (cooperate-now probability alpha,
cooperate-later probability alpha_bar) to a forecast of the opponent's play
(beta_now, beta_future). Three belief kinds are supported:

- Adversarial: the opponent minimizes the player's payoff given the policy.
- Cooperative: the opponent keeps cooperating at beta now, and moves to
  beta_plus in future rounds when alpha clears the threshold x, else to
  beta_minus (a trust forecast gated on the player's own cooperation).
- Mixture: convex combination of those two forecasts with weight epsilon on
  the cooperative one; epsilon is the risk capital an agent is prepared to
  stake on the cooperative story being true.

Returns are discounted: stage payoff now plus gamma-weighted payoffs for the
remaining rounds under (alpha_bar, beta_future).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .games import (
    PLAYER_I,
    MatrixGame,
    _minimax_candidates,
    expected_utility,
    validate_ssd,
    worst_case_value,
)

__all__ = [
    "StagePolicy",
    "OpponentForecast",
    "Adversarial",
    "Cooperative",
    "Mixture",
    "Belief",
    "Horizon",
    "InfeasibleConditionError",
    "forecast",
    "discounted_return",
    "best_response_to_belief",
    "worst_case_value",
    "cooperation_margin",
    "min_epsilon_for_cooperation",
]

GRID_STEP = 1e-3


class InfeasibleConditionError(ValueError):
    """No epsilon in [0, 1] makes cooperation a best response."""


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class StagePolicy:
    """(alpha, alpha_bar): cooperate-now and cooperate-in-future probabilities."""

    alpha: float
    alpha_bar: float

    def __post_init__(self) -> None:
        _check_unit("alpha", self.alpha)
        _check_unit("alpha_bar", self.alpha_bar)


@dataclass(frozen=True)
class OpponentForecast:
    """Forecast opponent cooperation now and in future rounds."""

    beta_now: float
    beta_future: float

    def __post_init__(self) -> None:
        _check_unit("beta_now", self.beta_now)
        _check_unit("beta_future", self.beta_future)


@dataclass(frozen=True)
class Adversarial:
    """Opponent plays whatever minimizes the player's return."""


@dataclass(frozen=True)
class Cooperative:
    """Trust forecast: future cooperation rises to beta_plus when the player's
    own cooperation intent reaches x, otherwise falls to beta_minus."""

    x: float
    beta: float
    beta_plus: float = 1.0
    beta_minus: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 < self.x <= 1.0):
            raise ValueError(f"threshold x must lie in (0, 1], got {self.x}")
        for name in ("beta", "beta_plus", "beta_minus"):
            _check_unit(name, getattr(self, name))
        if not (self.beta_minus <= self.beta <= self.beta_plus):
            raise ValueError(
                "cooperative belief requires beta_minus <= beta <= beta_plus, got "
                f"{self.beta_minus}, {self.beta}, {self.beta_plus}"
            )


@dataclass(frozen=True)
class Mixture:
    """(1 - epsilon) adversarial forecast + epsilon cooperative forecast."""

    epsilon: float
    cooperative: Cooperative

    def __post_init__(self) -> None:
        _check_unit("epsilon", self.epsilon)


Belief = Adversarial | Cooperative | Mixture


@dataclass(frozen=True)
class Horizon:
    """Remaining rounds (None for unbounded) and discount factor."""

    n: int | None
    gamma: float

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.n is None:
            if self.gamma == 1.0:
                raise ValueError("unbounded horizon requires gamma < 1")
        elif self.n < 1:
            raise ValueError(f"horizon must cover at least one round, got {self.n}")

    def future_weight(self) -> float:
        """Closed form of sum_{t=1}^{n-1} gamma^t (gamma/(1-gamma) unbounded)."""
        if self.n is None:
            return self.gamma / (1.0 - self.gamma)
        if self.gamma == 1.0:
            return float(self.n - 1)
        return self.gamma * (1.0 - self.gamma ** (self.n - 1)) / (1.0 - self.gamma)


def _adversary_now(game: MatrixGame, alpha: float, player: str) -> float:
    """Opponent cooperation probability minimizing the stage payoff; ties defect."""
    against_c = expected_utility(game, alpha, 1.0, player)
    against_d = expected_utility(game, alpha, 0.0, player)
    return 1.0 if against_c < against_d else 0.0


def _mixture_params(belief: Belief) -> tuple[float, Cooperative | None]:
    """(epsilon weight on the cooperative forecast, cooperative params)."""
    if isinstance(belief, Adversarial):
        return 0.0, None
    if isinstance(belief, Cooperative):
        return 1.0, belief
    if isinstance(belief, Mixture):
        return belief.epsilon, belief.cooperative
    raise TypeError(f"unknown belief {belief!r}")


def forecast(
    belief: Belief,
    policy: StagePolicy,
    game: MatrixGame,
    player: str = PLAYER_I,
) -> OpponentForecast:
    """Opponent play forecast by `belief` given the player's own policy."""
    eps, coop = _mixture_params(belief)
    adv_now = _adversary_now(game, policy.alpha, player)
    adv_fut = _adversary_now(game, policy.alpha_bar, player)
    if coop is None:
        return OpponentForecast(adv_now, adv_fut)
    coop_now = coop.beta
    coop_fut = coop.beta_plus if policy.alpha >= coop.x else coop.beta_minus
    return OpponentForecast(
        (1.0 - eps) * adv_now + eps * coop_now,
        (1.0 - eps) * adv_fut + eps * coop_fut,
    )


def discounted_return(
    game: MatrixGame,
    policy: StagePolicy,
    opp_forecast: OpponentForecast,
    horizon: Horizon,
    player: str = PLAYER_I,
) -> float:
    """E[u(alpha, beta_now)] plus the discounted tail under (alpha_bar, beta_future)."""
    stage = expected_utility(game, policy.alpha, opp_forecast.beta_now, player)
    tail = expected_utility(game, policy.alpha_bar, opp_forecast.beta_future, player)
    return stage + horizon.future_weight() * tail


def _eu_array(rstp: tuple[float, float, float, float], a: np.ndarray, b) -> np.ndarray:
    r, s, t, p = rstp
    return a * (b * r + (1.0 - b) * s) + (1.0 - a) * (b * t + (1.0 - b) * p)


@lru_cache(maxsize=4096)
def _alpha_grid(x: float | None, game: MatrixGame, player: str) -> np.ndarray:
    pts = [np.arange(0.0, 1.0 + GRID_STEP / 2, GRID_STEP), np.array([1.0])]
    if x is not None:
        # Exact breakpoint plus a point just inside the defect branch.
        pts.append(np.array([x, max(x - 1e-9, 0.0)]))
    # The adversarial component's minimizer switches at the maximin crossing;
    # including it exactly makes worst-case play lossless.
    pts.append(np.array(_minimax_candidates(game, player)))
    grid = np.unique(np.concatenate(pts))
    grid.setflags(write=False)
    return grid


@lru_cache(maxsize=4096)
def _candidate_profile(
    x: float | None, game: MatrixGame, player: str
) -> tuple[np.ndarray, np.ndarray]:
    """Candidate strategies and the adversary's minimizing reply at each."""
    rstp = game.rstp(player)
    alphas = _alpha_grid(x, game, player)
    adv = (_eu_array(rstp, alphas, 1.0) < _eu_array(rstp, alphas, 0.0)).astype(float)
    adv.setflags(write=False)
    return alphas, adv


@lru_cache(maxsize=1 << 17)
def _best_response_cached(
    game: MatrixGame,
    belief: Belief,
    horizon: Horizon,
    tie_future: bool,
    player: str,
) -> StagePolicy:
    rstp = game.rstp(player)
    weight = horizon.future_weight()
    eps, coop = _mixture_params(belief)
    x = coop.x if coop is not None else None

    alphas, adv_now = _candidate_profile(x, game, player)
    if coop is None:
        b_now = adv_now
        coop_fut = np.zeros_like(alphas)
    else:
        b_now = (1.0 - eps) * adv_now + eps * coop.beta
        coop_fut = np.where(alphas >= coop.x, coop.beta_plus, coop.beta_minus)
    stage = _eu_array(rstp, alphas, b_now)

    if tie_future:
        adv_fut = adv_now  # alpha_bar == alpha, same adversarial minimizer
        b_fut = (1.0 - eps) * adv_fut + eps * coop_fut
        total = stage + weight * _eu_array(rstp, alphas, b_fut)
        best = int(np.argmax(total))  # first max = lowest alpha on ties
        a = float(alphas[best])
        return StagePolicy(a, a)

    # Future term is optimized separately per forecast branch; the adversarial
    # component of the future forecast tracks alpha_bar.
    abars, adv_fut = _candidate_profile(None, game, player)

    def branch_best(coop_future: float) -> tuple[float, float]:
        b = (1.0 - eps) * adv_fut + eps * coop_future
        vals = _eu_array(rstp, abars, b)
        idx = int(np.argmax(vals))
        return float(vals[idx]), float(abars[idx])

    if coop is None:
        fut_value, fut_abar = branch_best(0.0)
        total = stage + weight * fut_value
        best = int(np.argmax(total))
        return StagePolicy(float(alphas[best]), fut_abar)

    val_plus, abar_plus = branch_best(coop.beta_plus)
    val_minus, abar_minus = branch_best(coop.beta_minus)
    on_coop_branch = alphas >= coop.x
    total = stage + weight * np.where(on_coop_branch, val_plus, val_minus)
    best = int(np.argmax(total))
    a = float(alphas[best])
    return StagePolicy(a, abar_plus if a >= coop.x else abar_minus)


def best_response_to_belief(
    game: MatrixGame,
    belief: Belief,
    horizon: Horizon,
    tie_future: bool = False,
    player: str = PLAYER_I,
) -> StagePolicy:
    """Maximize the discounted return against `belief` over stage policies.

    The objective is piecewise bilinear with a jump at alpha = x, so the
    search evaluates the exact breakpoints {0, x, 1} together with a fine
    grid on each branch; with `tie_future` the future probability is pinned
    to alpha. Ties break toward the lower cooperation probability.
    """
    return _best_response_cached(game, belief, horizon, bool(tie_future), player)


def cooperation_margin(
    game: MatrixGame,
    policy: StagePolicy,
    belief: Cooperative,
    horizon: Horizon,
    player: str = PLAYER_I,
) -> float:
    """Margin by which cooperating at (alpha, alpha_bar) beats defecting now,
    against the trust forecast. Cooperation is a best response iff >= 0:

        alpha*beta*(R+P-S-T) + alpha*(S-P)
          + W * (beta_plus - beta_minus) * [alpha_bar*(R+P-S-T) + T - P]

    with W the discounted future weight.
    """
    if not validate_ssd(game):
        raise ValueError("margin is defined for social-dilemma games only")
    r, s, t, p = game.rstp(player)
    delta = r + p - s - t
    weight = horizon.future_weight()
    return (
        policy.alpha * belief.beta * delta
        + policy.alpha * (s - p)
        + weight * (belief.beta_plus - belief.beta_minus) * (policy.alpha_bar * delta + t - p)
    )


def min_epsilon_for_cooperation(
    game: MatrixGame,
    policy: StagePolicy,
    belief: Cooperative,
    horizon: Horizon,
    player: str = PLAYER_I,
) -> float:
    """Smallest risk weight epsilon making cooperation a best response to the
    epsilon-mixture of the adversarial and trust forecasts.

    Solves  alpha*(P-S) <= epsilon * [alpha*beta*(R+P-S-T)
            + W*(beta_plus - beta_minus)*(alpha_bar*(R+P-S-T) + T - P)]
    in closed form. Raises InfeasibleConditionError when no epsilon <= 1
    satisfies it.
    """
    if not validate_ssd(game):
        raise ValueError("threshold is defined for social-dilemma games only")
    r, s, t, p = game.rstp(player)
    delta = r + p - s - t
    weight = horizon.future_weight()
    cost = policy.alpha * (p - s)
    gain_rate = policy.alpha * belief.beta * delta + weight * (
        belief.beta_plus - belief.beta_minus
    ) * (policy.alpha_bar * delta + t - p)
    if cost <= 0.0:
        return 0.0
    if gain_rate <= 0.0:
        raise InfeasibleConditionError(
            "cooperation is never a best response: no future gain to invest in"
        )
    eps = cost / gain_rate
    if eps > 1.0:
        raise InfeasibleConditionError(
            f"cooperation requires epsilon {eps:.6g} > 1"
        )
    return eps
