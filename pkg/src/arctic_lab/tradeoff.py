"""Cooperation/safety trade-off: the loss bound, its growth constant, the
switch index, and the tight risk-budget schedule used to validate the bound.

The model: a policy with safety slack epsilon cooperates at most at the rate
its banked surplus allows. Against a reciprocating opponent each unit of
cooperation yesterday returns d units of surplus today (E[r_t] = d*a_{t-1} + v),
so the admissible cooperation level obeys

    a_k <= a_{k-1} + C * a_{k-2},     C = d / (P - S),

whose growth rate is phi(C), the positive root of z^2 = z + C (the golden
ratio at C = 1). Cooperation is therefore within a vanishing fraction of
optimal after roughly -log_phi(epsilon) rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "TradeoffParams",
    "DomainError",
    "phi",
    "switch_index",
    "cooperation_loss_bound",
    "risk_budget_sequence",
    "simulate_tight_policy",
]


class DomainError(ValueError):
    """Argument outside the operation's mathematical domain."""


@dataclass(frozen=True)
class TradeoffParams:
    """Inputs of the loss bound.

    d: per-unit return on yesterday's cooperation (> 0).
    P_minus_S: punishment minus sucker payoff (> 0); C = d / P_minus_S.
    v: per-round value guaranteed by safe play.
    R: per-round value under full mutual cooperation (optimal cooperative
       value is T_rounds * R).
    """

    epsilon: float
    d: float
    P_minus_S: float
    T_rounds: int
    v: float
    R: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.d <= 0.0:
            raise ValueError(f"d must be positive, got {self.d}")
        if self.P_minus_S <= 0.0:
            raise ValueError(f"P_minus_S must be positive, got {self.P_minus_S}")
        if self.T_rounds < 1:
            raise ValueError(f"T_rounds must be >= 1, got {self.T_rounds}")

    @property
    def C(self) -> float:
        return self.d / self.P_minus_S

    @property
    def optimal_cooperative_value(self) -> float:
        return self.T_rounds * self.R

    @property
    def optimal_safe_value(self) -> float:
        return self.T_rounds * self.v


def phi(C: float) -> float:
    """Positive root (1 + sqrt(1 + 4C)) / 2 of z^2 = z + C."""
    if C < 0.0:
        raise DomainError(f"C must be nonnegative, got {C}")
    return (1.0 + math.sqrt(1.0 + 4.0 * C)) / 2.0


def switch_index(epsilon: float, C: float, T_rounds: int) -> int:
    """min(ceil(-log_phi(C)(epsilon)), T): the round by which the budget
    schedule reaches full cooperation."""
    if C <= 0.0:
        raise DomainError(f"C must be positive, got {C}")
    if epsilon == 0.0:
        raise DomainError("epsilon = 0 never reaches full cooperation; treat as I = T")
    if not (0.0 < epsilon <= 1.0):
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    index = math.ceil(-math.log(epsilon) / math.log(phi(C)))
    return min(int(index), T_rounds)


def cooperation_loss_bound(params: TradeoffParams) -> float:
    """Guaranteed shortfall of any epsilon-safe policy from the optimal
    cooperative value: (I/T) * T*R - d*epsilon*(1 - phi^(I+1)) / (1 - phi)."""
    if params.epsilon == 0.0:
        raise DomainError("bound undefined at epsilon = 0 (switch index diverges)")
    c = params.C
    p = phi(c)
    index = switch_index(params.epsilon, c, params.T_rounds)
    geometric = (1.0 - p ** (index + 1)) / (1.0 - p)
    return (index / params.T_rounds) * params.optimal_cooperative_value - (
        params.d * params.epsilon * geometric
    )


def risk_budget_sequence(epsilon: float, C: float, T_rounds: int) -> list[float]:
    """Tight cooperation schedule: a_0 = a_1 = epsilon,
    a_k = min(a_{k-1} + C * a_{k-2}, 1)."""
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if C <= 0.0:
        raise ValueError(f"C must be positive, got {C}")
    if T_rounds < 1:
        raise ValueError(f"T_rounds must be >= 1, got {T_rounds}")
    seq = [epsilon]
    if T_rounds > 1:
        seq.append(epsilon)
    for k in range(2, T_rounds):
        seq.append(min(seq[k - 1] + C * seq[k - 2], 1.0))
    return seq


def simulate_tight_policy(params: TradeoffParams) -> float:
    """Cooperative value collected by the tight schedule under the equality
    model E[r_t] = d * a_{t-1} + v, with a_{-1} = 0; an independent check of
    cooperation_loss_bound."""
    schedule = risk_budget_sequence(params.epsilon, params.C, params.T_rounds)
    total = 0.0
    prev = 0.0
    for t in range(params.T_rounds):
        total += params.d * prev + params.v
        prev = schedule[t]
    return total
