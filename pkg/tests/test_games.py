"""Game-core: expected utility, best responses, minimax, SSD checks, scaling."""

import math
import random

import numpy as np
import pytest

from arctic_lab.games import (
    Action,
    ConstantPayoffsError,
    GameFormatError,
    MatrixGame,
    MixedStrategy,
    PRISONERS_DILEMMA as PD,
    STAG_HUNT as SH,
    best_response,
    expected_utility,
    load_game,
    minimax_strategy,
    minimax_value,
    normalize,
    validate_ssd,
    worst_case_value,
)


def random_normalized_game(rnd: random.Random) -> MatrixGame:
    draw = lambda: tuple(tuple(rnd.random() for _ in range(2)) for _ in range(2))
    return MatrixGame(payoff_i=draw(), payoff_j=draw(), normalized=True)


def grid_best_response(game, opp, player="i", step=1e-3):
    grid = np.arange(0.0, 1.0 + step / 2, step)
    values = [expected_utility(game, a, opp, player) for a in grid]
    return grid[int(np.argmax(values))], max(values)


def grid_minimax(game, player="i", step=1e-3):
    def worst(a):
        return min(
            expected_utility(game, a, 1.0, player),
            expected_utility(game, a, 0.0, player),
        )

    grid = np.arange(0.0, 1.0 + step / 2, step)
    values = [worst(a) for a in grid]
    center = grid[int(np.argmax(values))]
    # Refine near the coarse optimum down to 1e-6.
    fine = np.clip(np.arange(center - step, center + step + 5e-7, 1e-6), 0.0, 1.0)
    return max(worst(a) for a in fine)


class TestExpectedUtility:
    def test_sucker_payoff(self):
        assert expected_utility(PD, 1.0, 0.0, "i") == 0.0

    def test_mutual_cooperation(self):
        assert expected_utility(PD, 1.0, 1.0, "i") == 0.75

    def test_uniform_mix_averages_cells(self):
        # Oracle: mean of the four PD cells (0.75 + 0 + 1 + 0.25) / 4.
        assert expected_utility(PD, 0.5, 0.5, "i") == pytest.approx(0.5, abs=1e-15)

    def test_player_j_mirror(self):
        assert expected_utility(PD, 1.0, 0.0, "j") == 0.0
        assert expected_utility(PD, 0.0, 1.0, "j") == 1.0

    @pytest.mark.parametrize("seed", range(30))
    def test_bilinearity(self, seed):
        rnd = random.Random(seed)
        game = random_normalized_game(rnd)
        a, b, c, lam = rnd.random(), rnd.random(), rnd.random(), rnd.random()
        mixed = expected_utility(game, lam * a + (1 - lam) * b, c)
        split = lam * expected_utility(game, a, c) + (1 - lam) * expected_utility(game, b, c)
        assert mixed == pytest.approx(split, abs=1e-12)

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            expected_utility(PD, 1.2, 0.5)
        with pytest.raises(ValueError):
            MixedStrategy(-0.1)


class TestBestResponse:
    def test_defection_dominant_in_pd(self):
        for opp in (0.0, 0.3, 1.0):
            assert best_response(PD, opp).coop_prob == 0.0

    def test_stag_hunt_cooperates_against_mostly_stag(self):
        # C earns 0.6 against 0.6; D earns 0.25 + 0.6/2 = 0.55.
        assert best_response(SH, 0.6).coop_prob == 1.0

    def test_stag_hunt_indifference_breaks_to_defection(self):
        assert best_response(SH, 0.5).coop_prob == 0.0

    @pytest.mark.parametrize("seed", range(40))
    def test_attains_grid_maximum(self, seed):
        rnd = random.Random(1000 + seed)
        game = random_normalized_game(rnd)
        opp = rnd.random()
        br = best_response(game, opp).coop_prob
        _, grid_value = grid_best_response(game, opp)
        assert expected_utility(game, br, opp) >= grid_value - 1e-9


class TestMinimax:
    def test_table_games_exact(self):
        assert minimax_value(PD, "i") == pytest.approx(0.25, abs=1e-12)
        assert minimax_value(PD, "j") == pytest.approx(0.25, abs=1e-12)
        assert minimax_value(SH, "i") == pytest.approx(0.25, abs=1e-12)
        assert minimax_value(SH, "j") == pytest.approx(0.25, abs=1e-12)

    def test_constant_game(self):
        c = 0.4
        flat = MatrixGame(((c, c), (c, c)), ((c, c), (c, c)))
        assert minimax_value(flat) == pytest.approx(c, abs=1e-15)

    def test_closed_form_matches_grid_on_random_games(self):
        rnd = random.Random(7)
        for _ in range(1000):
            game = random_normalized_game(rnd)
            assert minimax_value(game) == pytest.approx(grid_minimax(game), abs=1e-6)

    @pytest.mark.parametrize("seed", range(50))
    def test_minimax_strategy_guarantees_value(self, seed):
        rnd = random.Random(2000 + seed)
        game = random_normalized_game(rnd)
        for player in ("i", "j"):
            mm = minimax_strategy(game, player).coop_prob
            v = minimax_value(game, player)
            for opp in np.arange(0.0, 1.0001, 0.01):
                assert expected_utility(game, mm, opp, player) >= v - 1e-9


class TestWorstCase:
    def test_examples(self):
        assert worst_case_value(PD, 0.0) == 0.25
        assert worst_case_value(PD, 0.5) == 0.125
        assert worst_case_value(SH, 1.0) == 0.0


class TestValidateSsd:
    def test_table_games(self):
        assert validate_ssd(PD)
        assert validate_ssd(SH)

    def test_flat_game_rejected(self):
        flat = MatrixGame(((1, 1), (1, 1)), ((1, 1), (1, 1)))
        assert not validate_ssd(flat)

    def test_one_sided_dilemma_rejected(self):
        lopsided = MatrixGame(PD.payoff_i, ((1, 1), (1, 1)))
        assert not validate_ssd(lopsided)


class TestNormalize:
    def test_identity_on_normalized_pd(self):
        scaled, k = normalize(PD)
        assert k == 1.0
        assert scaled.payoff_i == PD.payoff_i
        assert scaled.payoff_j == PD.payoff_j

    def test_scaled_pd_recovers_table(self):
        big = MatrixGame(((3, 0), (4, 1)), ((3, 4), (0, 1)))
        scaled, k = normalize(big)
        assert k == 4.0
        assert scaled.payoff_i == PD.payoff_i
        assert scaled.payoff_j == PD.payoff_j

    def test_k_is_greatest_range(self):
        game = MatrixGame(((0, 1), (2, 1)), ((0, 5), (3, 1)))
        _, k = normalize(game)
        assert k == 5.0

    def test_constant_payoffs_error(self):
        flat = MatrixGame(((1, 1), (1, 1)), ((2, 2), (2, 2)))
        with pytest.raises(ConstantPayoffsError):
            normalize(flat)

    @pytest.mark.parametrize("seed", range(30))
    def test_ssd_structure_is_affine_invariant(self, seed):
        rnd = random.Random(3000 + seed)
        raw = MatrixGame(
            tuple(tuple(rnd.uniform(-5, 5) for _ in range(2)) for _ in range(2)),
            tuple(tuple(rnd.uniform(-5, 5) for _ in range(2)) for _ in range(2)),
        )
        scaled, _ = normalize(raw)
        assert validate_ssd(raw) == validate_ssd(scaled)

    def test_normalized_flag_enforced(self):
        with pytest.raises(ValueError):
            MatrixGame(((2, 0), (1, 0.25)), PD.payoff_j, normalized=True)


class TestGameFiles:
    def test_named_games(self):
        assert load_game("pd") is PD
        assert load_game("stag_hunt") is SH

    def test_load_toml(self, tmp_path):
        path = tmp_path / "game.toml"
        path.write_text(
            'name = "custom"\n'
            "payoff_i = [[0.75, 0.0], [1.0, 0.25]]\n"
            "payoff_j = [[0.75, 1.0], [0.0, 0.25]]\n"
        )
        game = load_game(str(path))
        assert game.payoff_i == PD.payoff_i
        assert validate_ssd(game)

    def test_missing_key(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("payoff_i = [[1, 0], [0, 1]]\n")
        with pytest.raises(GameFormatError):
            load_game(str(path))

    def test_unknown_name(self):
        with pytest.raises(GameFormatError):
            load_game("no_such_game")

    def test_nonfinite_rejected(self):
        with pytest.raises(GameFormatError):
            MatrixGame(((math.inf, 0), (1, 0.25)), PD.payoff_j)


def test_actions_are_exactly_two():
    assert {a.value for a in Action} == {"C", "D"}
