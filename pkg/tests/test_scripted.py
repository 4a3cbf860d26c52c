import numpy as np
import pytest

from arena.errors import ParameterError
from arena.optimizers import ObliviousSequence, simulate
from arena.regret import polytope_swap_regret
from arena.scripted import (
    build_example,
    example_6_1,
    example_6_2,
    scripted_best_response_facts,
    verify_commitment_mixture_identity,
)


def test_example_61_tensor_and_prior():
    game, opts, learner = example_6_1(100, 0.0)
    assert game.u_learner[1, 1, 1] == pytest.approx(0.5)
    assert game.u_learner[0, 0, 1] == pytest.approx(1.0)
    assert np.all(game.u_learner[:, :, 0] == 0)
    assert np.all(game.u_opt == 0)
    assert game.prior[0] == 0.0
    assert (opts[:50] == 0).all() and (opts[50:] == 1).all()


def test_example_61_default_p1_is_one_over_t():
    game, _, _ = example_6_1(200)
    assert game.prior[0] == pytest.approx(1 / 200)


def test_example_62_prior_and_schedule():
    game, opts, learner = example_6_2(9)
    assert game.prior == pytest.approx([0.5, 0.5])
    assert (opts == np.array([0, 0, 0, 0, 0, 0, 1, 1, 1])).all()
    assert learner.strategy_at(0).choices == (1, 0)
    assert learner.strategy_at(3).choices == (0, 1)
    assert learner.strategy_at(8).choices == (1, 1)


def test_horizon_guards():
    with pytest.raises(ParameterError):
        example_6_1(7)
    with pytest.raises(ParameterError):
        example_6_2(8)
    with pytest.raises(ParameterError):
        build_example("9.9", 6)


def test_scripted_traces_replay_bit_identically():
    game, opts, _ = example_6_2(30)
    traces = []
    for _ in range(2):
        learner = example_6_2(30)[2]
        traces.append(simulate(game, ObliviousSequence(opts), learner, 30, seed=4))
    a, b = traces
    assert np.array_equal(a.learner_actions, b.learner_actions)
    assert np.array_equal(a.profiles, b.profiles)
    # profiles are exactly the scripted point masses
    learner = example_6_2(30)[2]
    for t in range(30):
        f = learner.strategy_at(t)
        for c in range(2):
            assert a.profiles[t, c, f[c]] == 1.0


def test_example_61_near_quarter_t_at_default_p1():
    t = 120
    game, opts, learner = example_6_1(t)  # p1 = 1/T
    trace = simulate(game, ObliviousSequence(opts), learner, t, seed=0)
    val, _ = polytope_swap_regret(trace, game)
    assert abs(val - t / 4) <= 0.25 + 1e-9  # correction is exactly p1 * T / 4


def test_identity_zero_tensor():
    check = verify_commitment_mixture_identity(np.zeros((2, 2, 2)))
    assert check.identity_error <= 1e-12
    assert check.point_commitment_value == 0.0
    assert check.mixed_commitment_value == 0.0
    assert check.max_commitment_dominates


def test_identity_random_tensors(rng):
    for _ in range(50):
        u = rng.uniform(-1, 1, size=(2, 2, 2))
        check = verify_commitment_mixture_identity(u, horizon=9)
        assert check.identity_error <= 1e-9
        assert check.max_commitment_dominates


def test_identity_with_learner_tensor():
    game, _, _ = example_6_2(6)
    check = verify_commitment_mixture_identity(np.asarray(game.u_learner))
    assert check.identity_error <= 1e-9


def test_commitment_best_response_facts():
    facts = scripted_best_response_facts()
    assert facts["point_context1_action0"] == pytest.approx(2.0)
    assert facts["point_context1_action1"] == pytest.approx(1.0)
    assert facts["mixed_context1_action1"] == pytest.approx(1.5)
    assert facts["mixed_context1_action0"] == pytest.approx(1.0)
    assert facts["point_context1_action0"] > facts["point_context1_action1"]
    assert facts["mixed_context1_action1"] > facts["mixed_context1_action0"]
