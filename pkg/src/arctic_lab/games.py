"""Two-player 2x2 matrix games: social-dilemma validation, expected utility,
best responses, minimax values, and payoff normalization.

Conventions used throughout the package:
- Actions are C (cooperate) and D (defect); a mixed strategy is the
  probability of playing C.
- Payoff matrices are indexed [row player i's action][column player j's
  action] with C first, D second, for *both* players' matrices.
- Per-player stage payoffs are named R = u(C,C), S = u(C,D), T = u(D,C),
  P = u(D,D), where the first argument is that player's own action.
- Ties in any argmax over cooperation probabilities break toward the lower
  probability (defect first): deterministic and conservative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

Matrix2 = tuple[tuple[float, float], tuple[float, float]]

PLAYER_I = "i"
PLAYER_J = "j"


class Action(enum.Enum):
    """One round's move: cooperate or defect."""

    C = "C"
    D = "D"


class ConstantPayoffsError(ValueError):
    """Raised when normalizing a game whose payoffs are all identical."""


class GameFormatError(ValueError):
    """Raised for malformed game files or unknown game names."""


@dataclass(frozen=True)
class MixedStrategy:
    """Probability of cooperating in a single round."""

    coop_prob: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.coop_prob <= 1.0) or math.isnan(self.coop_prob):
            raise ValueError(f"coop_prob must lie in [0, 1], got {self.coop_prob}")


def _coop_prob(strategy: MixedStrategy | float) -> float:
    p = strategy.coop_prob if isinstance(strategy, MixedStrategy) else float(strategy)
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"cooperation probability out of [0, 1]: {p}")
    return p


def _as_matrix(values) -> Matrix2:
    rows = tuple(tuple(float(v) for v in row) for row in values)
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise GameFormatError("payoff matrix must be 2x2")
    for row in rows:
        for v in row:
            if not math.isfinite(v):
                raise GameFormatError(f"payoff must be finite, got {v}")
    return rows  # type: ignore[return-value]


@dataclass(frozen=True)
class MatrixGame:
    """A two-player 2x2 game given by one payoff matrix per player.

    Both matrices are indexed [i's action][j's action] (C=0, D=1). When
    ``normalized`` is set, construction checks every payoff lies in [0, 1].
    """

    payoff_i: Matrix2
    payoff_j: Matrix2
    name: str = ""
    normalized: bool = field(default=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "payoff_i", _as_matrix(self.payoff_i))
        object.__setattr__(self, "payoff_j", _as_matrix(self.payoff_j))
        if self.normalized:
            for mat in (self.payoff_i, self.payoff_j):
                for row in mat:
                    for v in row:
                        if not (0.0 <= v <= 1.0):
                            raise ValueError(
                                f"normalized game has payoff {v} outside [0, 1]"
                            )

    def payoff(self, player: str, own: Action, opp: Action) -> float:
        """Stage payoff for `player` when it plays `own` and the other plays `opp`."""
        if player == PLAYER_I:
            return self.payoff_i[0 if own is Action.C else 1][0 if opp is Action.C else 1]
        if player == PLAYER_J:
            return self.payoff_j[0 if opp is Action.C else 1][0 if own is Action.C else 1]
        raise ValueError(f"unknown player {player!r}")

    def rstp(self, player: str) -> tuple[float, float, float, float]:
        """(R, S, T, P) from `player`'s point of view."""
        u = self.payoff
        return (
            u(player, Action.C, Action.C),
            u(player, Action.C, Action.D),
            u(player, Action.D, Action.C),
            u(player, Action.D, Action.D),
        )


def expected_utility(
    game: MatrixGame,
    own: MixedStrategy | float,
    opp: MixedStrategy | float,
    player: str = PLAYER_I,
) -> float:
    """Bilinear expected stage payoff of `player` for mixed strategies (own, opp)."""
    a = _coop_prob(own)
    b = _coop_prob(opp)
    r, s, t, p = game.rstp(player)
    return a * (b * r + (1.0 - b) * s) + (1.0 - a) * (b * t + (1.0 - b) * p)


def best_response(
    game: MatrixGame, opp: MixedStrategy | float, player: str = PLAYER_I
) -> MixedStrategy:
    """Pure-tending best response to an opponent mixed strategy.

    Expected utility is linear in own cooperation probability, so the argmax
    is an endpoint; exact indifference breaks toward defection.
    """
    b = _coop_prob(opp)
    slope = expected_utility(game, 1.0, b, player) - expected_utility(game, 0.0, b, player)
    return MixedStrategy(1.0 if slope > 0.0 else 0.0)


def _minimax_candidates(game: MatrixGame, player: str) -> list[float]:
    r, s, t, p = game.rstp(player)
    # Worst case of alpha is min(u(alpha, C), u(alpha, D)); both are linear in
    # alpha, so the maximin sits at an endpoint or at their crossing.
    candidates = [0.0, 1.0]
    denom = (r - t) - (s - p)
    if denom != 0.0:
        cross = (p - t) / denom
        if 0.0 < cross < 1.0:
            candidates.append(cross)
    return candidates


def worst_case_value(
    game: MatrixGame, policy: MixedStrategy | float, player: str = PLAYER_I
) -> float:
    """Payoff guaranteed by `policy` against the worst opponent strategy."""
    a = _coop_prob(policy)
    return min(
        expected_utility(game, a, 1.0, player),
        expected_utility(game, a, 0.0, player),
    )


def minimax_strategy(game: MatrixGame, player: str = PLAYER_I) -> MixedStrategy:
    """A strategy attaining the minimax value; ties break toward defection."""
    best_a, best_v = 0.0, -math.inf
    for a in sorted(_minimax_candidates(game, player)):
        v = worst_case_value(game, a, player)
        if v > best_v + 1e-15:
            best_a, best_v = a, v
    return MixedStrategy(best_a)


def minimax_value(game: MatrixGame, player: str = PLAYER_I) -> float:
    """Highest payoff `player` can guarantee: max over own mixed strategies of
    the worst case over opponent mixed strategies, in closed form."""
    return max(
        worst_case_value(game, a, player) for a in _minimax_candidates(game, player)
    )


def validate_ssd(game: MatrixGame) -> bool:
    """True iff both players' payoffs form a social dilemma:
    R > P, R > S, 2R > T + S, and (T > R or P > S)."""
    for player in (PLAYER_I, PLAYER_J):
        r, s, t, p = game.rstp(player)
        if not (r > p and r > s and 2.0 * r > t + s and (t > r or p > s)):
            return False
    return True


def normalize(game: MatrixGame) -> tuple[MatrixGame, float]:
    """Affinely rescale each player's payoffs onto [0, 1].

    Returns the rescaled game and K, the greatest payoff range across the two
    players before scaling. Positive affine maps per player leave best-response
    and social-dilemma structure unchanged. A player whose payoffs are all
    equal maps to zeros; if both players are constant, raises
    ConstantPayoffsError.
    """
    ranges = []
    scaled = []
    for mat in (game.payoff_i, game.payoff_j):
        flat = [v for row in mat for v in row]
        lo, hi = min(flat), max(flat)
        ranges.append(hi - lo)
        if hi > lo:
            scaled.append(tuple(tuple((v - lo) / (hi - lo) for v in row) for row in mat))
        else:
            scaled.append(((0.0, 0.0), (0.0, 0.0)))
    k = max(ranges)
    if k == 0.0:
        raise ConstantPayoffsError("every payoff of both players is identical")
    out = MatrixGame(
        payoff_i=scaled[0],
        payoff_j=scaled[1],
        name=game.name,
        normalized=True,
    )
    return out, k


# Built-in games, payoffs already normalized on [0, 1].
PRISONERS_DILEMMA = MatrixGame(
    payoff_i=((0.75, 0.0), (1.0, 0.25)),
    payoff_j=((0.75, 1.0), (0.0, 0.25)),
    name="pd",
    normalized=True,
)

STAG_HUNT = MatrixGame(
    payoff_i=((1.0, 0.0), (0.75, 0.25)),
    payoff_j=((1.0, 0.75), (0.0, 0.25)),
    name="stag_hunt",
    normalized=True,
)

NAMED_GAMES = {"pd": PRISONERS_DILEMMA, "stag_hunt": STAG_HUNT}


def load_game(spec: str) -> MatrixGame:
    """Resolve a game from a built-in name or a TOML game file.

    A game file holds ``payoff_i = [[...], [...]]`` and ``payoff_j`` with rows
    indexed by player i's action (C then D) and columns by player j's action.
    """
    if spec in NAMED_GAMES:
        return NAMED_GAMES[spec]
    import tomli

    try:
        with open(spec, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise GameFormatError(f"cannot read game {spec!r}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise GameFormatError(f"malformed game file {spec!r}: {exc}") from exc
    try:
        payoff_i = data["payoff_i"]
        payoff_j = data["payoff_j"]
    except KeyError as exc:
        raise GameFormatError(f"game file {spec!r} missing key {exc}") from exc
    return MatrixGame(
        payoff_i=payoff_i,
        payoff_j=payoff_j,
        name=str(data.get("name", spec)),
        normalized=bool(data.get("normalized", False)),
    )
