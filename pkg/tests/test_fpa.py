import numpy as np
import pytest

from arena.errors import DomainError, GridError, ParameterError
from arena.fpa import (
    BidGrid,
    FpaInstance,
    PhaseCdfFamily,
    StackelbergCdf,
    build_fpa,
    fpa_game,
    phase_cdf,
    separation_instance,
    stackelberg_cdf_eval,
)


def test_build_fpa_tie_and_win_rules():
    grid = BidGrid(0.25, 5)
    game = build_fpa(grid, 1.0, (0.75,), (1.0,))
    # tie at 0.5: learner wins and pays its bid
    assert game.u_learner[2, 2, 0] == pytest.approx(0.25)
    assert game.u_opt[2, 2, 0] == 0.0
    # optimizer bids 0.75 over learner's 0.5
    assert game.u_opt[3, 2, 0] == pytest.approx(0.25)
    assert game.u_learner[3, 2, 0] == 0.0
    # tie at zero
    assert game.u_learner[0, 0, 0] == pytest.approx(0.75)
    assert game.u_opt[0, 0, 0] == 0.0


def test_first_price_audit_small_grids(rng):
    # Exactly one side can win each (i, j, c) cell, and the winner pays its bid.
    for n_bids in (3, 5, 9):
        grid = BidGrid(0.25, n_bids)
        vals = grid.values()
        values = (float(vals[1]), float(vals[n_bids - 1]))
        game = build_fpa(grid, float(vals[1]), values, (0.5, 0.5))
        for i in range(n_bids):
            for j in range(n_bids):
                learner_wins = j >= i
                for c, v in enumerate(values):
                    if learner_wins:
                        assert game.u_learner[i, j, c] == pytest.approx(v - vals[j])
                        assert game.u_opt[i, j, c] == 0.0
                    else:
                        assert game.u_learner[i, j, c] == 0.0
                        assert game.u_opt[i, j, c] == pytest.approx(vals[1] - vals[i])


def test_off_grid_value_rejected():
    with pytest.raises(GridError):
        FpaInstance(BidGrid(0.25, 5), 1.0, (0.3,), (1.0,))
    with pytest.raises(GridError):
        FpaInstance(BidGrid(0.25, 5), 0.99, (0.5,), (1.0,))


def test_separation_instance_values_and_probs():
    inst = separation_instance(2, BidGrid(0.25, 17))
    assert inst.support_values == (2.0, 4.0)
    assert inst.support_probs == (0.5, 0.5)
    inst3 = separation_instance(3, BidGrid(0.25, 33))
    assert inst3.support_values == (2.0, 4.0, 8.0)
    assert inst3.support_probs == (0.25, 0.5, 0.25)
    for m in (2, 3, 4, 5):
        grid = BidGrid(0.125, 8 * 2**m + 1)
        probs = separation_instance(m, grid).support_probs
        assert sum(probs) == 1.0  # dyadic sums are exact


def test_separation_instance_grid_guards():
    with pytest.raises(GridError):
        separation_instance(3, BidGrid(0.25, 17))  # reaches only 4
    with pytest.raises(GridError):
        separation_instance(2, BidGrid(0.2, 100))  # not dyadic
    with pytest.raises(ParameterError):
        separation_instance(1, BidGrid(0.25, 17))


def test_cdf_eval_endpoint_and_single_segment():
    inst = FpaInstance(BidGrid(0.25, 9), 1.0, (2.0,), (1.0,))
    cdf = StackelbergCdf(inst, (0.0, 1.0), 0.5)
    # interior uses the segment formula; the left endpoint is f_zero itself
    assert stackelberg_cdf_eval(cdf, 0.0) == pytest.approx(0.5)
    assert stackelberg_cdf_eval(cdf, 1.0) == pytest.approx(1.0)  # (2-0)*0.5/(2-1)
    # plateau beyond the top threshold
    assert stackelberg_cdf_eval(cdf, 1.5) == pytest.approx(1.0)


def test_cdf_eval_continuity_at_thresholds():
    inst = separation_instance(2, BidGrid(0.25, 17))
    cdf = StackelbergCdf(inst, (0.0, 0.5, 1.0), 0.4)
    marks = cdf.values_at_thresholds()
    assert stackelberg_cdf_eval(cdf, 0.5) == pytest.approx(marks[1], abs=1e-12)
    assert stackelberg_cdf_eval(cdf, 1.0) == pytest.approx(marks[2], abs=1e-12)


def test_cdf_monotone_on_random_thresholds(rng):
    inst = separation_instance(2, BidGrid(0.25, 17))
    grid_bids = inst.grid.values()
    xs = grid_bids[grid_bids <= 1.0]
    for _ in range(50):
        pair = np.sort(rng.integers(0, 5, size=2)) * 0.25
        f0 = float(rng.uniform(0, 0.6))
        cdf = StackelbergCdf(inst, (0.0, float(pair[0]), float(pair[1])), f0)
        vals = [stackelberg_cdf_eval(cdf, x) for x in xs]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_phase_cdf_values():
    inst = separation_instance(2, BidGrid(0.25, 17))
    for x in (0.0, 0.25, 1.0):
        assert phase_cdf(inst, 0, x) == 0.0
    assert phase_cdf(inst, 1, 0.0) == pytest.approx(0.5)  # 4 / (2*4)
    assert phase_cdf(inst, 2, 1.0) == pytest.approx(1.0)  # 2 / (2*(2-1))
    with pytest.raises(DomainError):
        phase_cdf(inst, 1, 1.5)
    with pytest.raises(DomainError):
        phase_cdf(inst, 3, 0.5)


def test_phase_increments_nondecreasing_up_to_m6():
    for m in (2, 3, 4, 5, 6):
        grid = BidGrid(0.25, 4 * 2**m + 1)
        inst = separation_instance(m, grid)
        assert PhaseCdfFamily(inst).increments_nondecreasing()


def test_instance_json_roundtrip(tmp_path):
    inst = separation_instance(2, BidGrid(0.25, 17))
    path = tmp_path / "inst.json"
    inst.to_json(path)
    loaded = FpaInstance.from_json(path)
    assert loaded == inst
