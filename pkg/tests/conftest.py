import numpy as np
import pytest

from arena.fpa import BidGrid, FpaInstance, fpa_game
from arena.regret import Trace


@pytest.fixture
def rng():
    return np.random.default_rng(20250811)


def random_fpa_instance(rng, n_bids=4, eps=0.25, n_values=2, v_opt=None):
    grid = BidGrid(eps, n_bids)
    vals = grid.values()
    support = sorted(rng.choice(np.arange(1, n_bids), size=n_values, replace=False))
    values = tuple(float(vals[i]) for i in support)
    probs = rng.random(n_values)
    probs /= probs.sum()
    if v_opt is None:
        v_opt = float(vals[int(rng.integers(1, n_bids))])
    return FpaInstance(grid, v_opt, values, tuple(probs))


def random_trace(rng, game, horizon, dyadic_profiles: int | None = None) -> Trace:
    """Random profiles and optimizer actions; realized columns consistent."""
    t = horizon
    opt = rng.integers(0, game.m_actions, size=t)
    if dyadic_profiles:
        grains = rng.integers(0, dyadic_profiles + 1,
                              size=(t, game.n_contexts, game.n_actions)).astype(float)
        grains[..., -1] += (grains.sum(axis=2) == 0)
        profiles = grains / grains.sum(axis=2, keepdims=True)
    else:
        profiles = rng.random((t, game.n_contexts, game.n_actions))
        profiles /= profiles.sum(axis=2, keepdims=True)
    ctx = rng.integers(0, game.n_contexts, size=t)
    acts = np.array([
        rng.choice(game.n_actions, p=profiles[k, ctx[k]]) for k in range(t)
    ])
    u_o = game.u_opt[opt, acts, ctx]
    u_l = game.u_learner[opt, acts, ctx]
    return Trace(opt, ctx, acts, u_o, u_l, profiles)
