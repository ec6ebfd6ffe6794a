import itertools
import math

import numpy as np
import pytest

from randx import catalog, scoring
from randx.classicaloracle import (
    BadDimsError,
    TooLargeError,
    UnknownGameError,
    UnsupportedError,
    classical_value,
    known_values,
    seesaw,
    strategy_device,
)
from randx.devicemodel import is_classically_predictable, validate_device
from randx.gamedefs import nonlocal_game

CHSH_W = 0.5 + math.sqrt(2.0) / 4.0


def random_two_player_game(seed, n_in=2, n_out=2):
    rng = np.random.default_rng(seed)
    inputs = tuple(range(n_in))
    outputs = tuple(range(n_out))
    joint_inputs = list(itertools.product(inputs, inputs))
    p_raw = rng.random(len(joint_inputs))
    p_raw /= p_raw.sum()
    dist = dict(zip(joint_inputs, p_raw))
    scores = {}
    for a in joint_inputs:
        for x in itertools.product(outputs, outputs):
            scores[(a, x)] = float(rng.integers(0, 2))
    return nonlocal_game(
        f"random-{seed}",
        player_inputs=[inputs, inputs],
        player_outputs=[outputs, outputs],
        distribution=dist,
        scores=scores,
        distinguished_input=joint_inputs[0],
    )


class TestClassicalValue:
    def test_chsh(self):
        res = classical_value(catalog.chsh().game)
        assert res.best_value == 0.75
        assert res.count == 16  # (2 outputs ^ 2 inputs) per player

    def test_magic_square(self):
        res = classical_value(catalog.magic_square().game)
        assert res.best_value == 8.0 / 9.0
        assert res.count == (8 ** 3) ** 2

    def test_single_player_copy_game(self):
        inputs = (0, 1, 2)
        scores = {((a,), (a,)): 1.0 for a in inputs}
        g = nonlocal_game(
            "copy",
            player_inputs=[inputs],
            player_outputs=[inputs],
            distribution={(a,): 1.0 / 3.0 for a in inputs},
            scores=scores,
            distinguished_input=(0,),
        )
        assert classical_value(g).best_value == pytest.approx(1.0, abs=1e-15)

    def test_guard(self):
        inputs = tuple(range(6))
        outputs = tuple(range(10))
        g = nonlocal_game(
            "huge",
            player_inputs=[inputs, inputs],
            player_outputs=[outputs, outputs],
            distribution={a: 1 / 36 for a in itertools.product(inputs, inputs)},
            scores={},
            distinguished_input=(0, 0),
        )
        with pytest.raises(TooLargeError):
            classical_value(g)

    def test_strategy_rescoring_matches(self):
        g = catalog.chsh().game
        res = classical_value(g)
        d = strategy_device(g, res.best_strategy)
        assert validate_device(d).ok
        assert scoring.eps_score(g, d, 0.0) == pytest.approx(res.best_value, abs=1e-12)

    def test_perturbing_best_never_improves(self):
        g = catalog.chsh().game
        res = classical_value(g)
        rng = np.random.default_rng(0)
        for _ in range(50):
            strategy = [dict(player) for player in res.best_strategy]
            player = int(rng.integers(len(strategy)))
            a = g.player_inputs[player][int(rng.integers(len(g.player_inputs[player])))]
            strategy[player][a] = g.player_outputs[player][
                int(rng.integers(len(g.player_outputs[player])))
            ]
            d = strategy_device(g, strategy)
            assert scoring.eps_score(g, d, 0.0) <= res.best_value + 1e-12

    def test_deterministic_tie_break(self):
        a = classical_value(catalog.chsh().game)
        b = classical_value(catalog.chsh().game)
        assert a.best_strategy == b.best_strategy


class TestSeesaw:
    def test_chsh_unconstrained_reaches_quantum_value(self):
        res = seesaw(catalog.chsh().game, (2, 2), restarts=8, seed=11)
        assert res.value >= CHSH_W - 1e-5
        assert validate_device(res.device).ok

    def test_value_matches_rescored_device(self):
        res = seesaw(catalog.chsh().game, (2, 2), restarts=4, seed=3)
        rescored = scoring.eps_score(catalog.chsh().game, res.device, 0.0)
        assert res.value == pytest.approx(rescored, abs=1e-8)

    def test_chsh_constrained_hits_three_quarters(self):
        res = seesaw(catalog.chsh().game, (2, 2), constrain_abar=True, restarts=8, seed=5)
        assert res.value >= 0.75 - 1e-6
        assert res.value <= 0.75 + 1e-6
        ok, dev = is_classically_predictable(res.device, (0, 0))
        assert ok, f"constrained witness not predictable (defect {dev})"

    def test_zero_scores_give_zero(self):
        g = catalog.chsh().game
        zero = nonlocal_game(
            "zero",
            player_inputs=g.player_inputs,
            player_outputs=g.player_outputs,
            distribution={a: g.prob(a) for a in g.input_alphabet},
            scores={},
            distinguished_input=(0, 0),
        )
        res = seesaw(zero, (2, 2), restarts=2, iters=20, seed=0)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_classical_never_beats_quantum(self):
        for seed in (1, 2, 3):
            g = random_two_player_game(seed)
            cv = classical_value(g)
            sw = seesaw(g, (2, 2), restarts=6, seed=seed)
            assert cv.best_value <= sw.value + 1e-9

    def test_constrained_never_beats_unconstrained(self):
        for seed in (4, 5):
            g = random_two_player_game(seed)
            un = seesaw(g, (2, 2), restarts=6, seed=seed)
            con = seesaw(g, (2, 2), constrain_abar=True, restarts=6, seed=seed)
            assert con.value <= un.value + 1e-9

    def test_seeded_reproducibility(self):
        a = seesaw(catalog.chsh().game, (2, 2), restarts=3, seed=7)
        b = seesaw(catalog.chsh().game, (2, 2), restarts=3, seed=7)
        assert a.value == b.value

    def test_guards(self):
        g = catalog.chsh().game
        with pytest.raises(BadDimsError):
            seesaw(g, (9, 2))
        three = nonlocal_game(
            "three",
            player_inputs=[(0,), (0,), (0,)],
            player_outputs=[(0, 1)] * 3,
            distribution={(0, 0, 0): 1.0},
            scores={},
            distinguished_input=(0, 0, 0),
        )
        with pytest.raises(UnsupportedError):
            seesaw(three, (2, 2, 2))


class TestKnownValues:
    def test_chsh_row(self):
        row = known_values("chsh")
        assert row.w_classical == 0.75
        assert row.w_quantum == pytest.approx(CHSH_W, abs=1e-15)
        assert row.w_quantum_abar == 0.75
        assert row.noise_tolerance == pytest.approx(math.sqrt(2.0) / 4.0 - 0.25, abs=1e-12)

    def test_magic_square_row(self):
        row = known_values("magic-square")
        assert row.w_classical == pytest.approx(8.0 / 9.0, abs=1e-15)
        assert row.w_quantum == pytest.approx(5 / 9 + (4 / 9) * CHSH_W, abs=1e-12)
        assert row.w_quantum_abar is None
        assert row.noise_tolerance is None
        assert "lower bound" in row.notes["w_quantum"]

    def test_unknown(self):
        with pytest.raises(UnknownGameError):
            known_values("ghz")
