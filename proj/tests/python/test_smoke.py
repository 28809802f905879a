import os
from pathlib import Path

import numpy as np
import pytest

import tollrl

ROOT = Path(__file__).resolve().parents[2]
SESE = str(ROOT / "configs" / "sese_revmax.json")
LBJ = str(ROOT / "configs" / "lbj_revmax.json")


def test_version():
    assert tollrl.__version__.count(".") == 2


def test_env_shapes():
    env = tollrl.Env(SESE)
    assert env.action_dim == 1
    obs = env.reset(7)
    assert len(obs) == env.obs_dim
    assert env.horizon == 120
    lbj = tollrl.Env(LBJ)
    assert lbj.action_dim == 4
    assert len(lbj.toll_links) == 4


def test_episode_runs_and_is_deterministic():
    def run(seed):
        env = tollrl.Env(SESE)
        env.reset(seed)
        rewards = []
        while not env.done:
            obs, r, done, info = env.step([1.5])
            assert info["tolls"] == [1.5]
            assert r == pytest.approx(info["revenue"])
            assert all(c >= 0 for c in obs)
            rewards.append(r)
        return env.stats(), rewards

    a, ra = run(3)
    b, rb = run(3)
    assert ra == rb
    assert a.revenue == pytest.approx(sum(ra))
    assert a.tstt > 0 and a.throughput > 0
    assert -1.0 <= a.jah2 <= 1.0


def test_step_after_done_raises():
    env = tollrl.Env(SESE)
    env.reset(1)
    while not env.done:
        env.step([0.5])
    with pytest.raises(RuntimeError):
        env.step([0.5])


def test_action_clipped():
    env = tollrl.Env(SESE)
    env.reset(1)
    _, _, _, info = env.step([99.0])
    assert info["tolls"] == [4.0]


def test_gae_matches_reward_to_go_at_lambda_one():
    r = np.array([1.0, -2.0, 3.0])
    v = np.zeros(4)  # bootstrap entry at the end
    adv = tollrl.gae(r, v, gamma=1.0, lam=1.0)
    np.testing.assert_allclose(adv, tollrl.reward_to_go(r))
    np.testing.assert_allclose(tollrl.reward_to_go(r), [2.0, 1.0, 3.0])


def test_missing_config():
    with pytest.raises(RuntimeError):
        tollrl.Env(str(ROOT / "configs" / "nope.json"))


def test_run_simulate(tmp_path):
    status = tollrl.run("simulate", SESE, seed=5, out=str(tmp_path))
    assert status == 0
    lines = (tmp_path / "simulate.csv").read_text().splitlines()
    assert lines[0].startswith("# tollrl ")
    assert lines[1].startswith("episode,revenue,tstt")
    assert len(lines) == 2 + 10  # episodes in the config
