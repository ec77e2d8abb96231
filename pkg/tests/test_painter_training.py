import json

import numpy as np
import pytest
import torch

from stereoid.core import TensorImage, ValueRange
from stereoid.errors import CheckpointError, NumericsError
from stereoid.painter import (
    CriticConfig,
    GeneratorConfig,
    LossWeights,
    StereoPairs,
    TrainConfig,
    build_model,
    generator_forward,
    identity_baseline_l1,
    load_checkpoint,
    save_checkpoint,
    train,
)

torch.set_num_threads(2)

TINY_GEN = GeneratorConfig(ngf=4, depth_levels=2)
TINY_CRITIC = CriticConfig(ndf=4, n_layers=1)


def tiny_pairs(n=12, size=16, seed=0):
    rng = np.random.default_rng(seed)
    left = rng.random((n, 3, size, size), dtype=np.float32) * 2 - 1
    right = np.clip(left + rng.normal(0, 0.05, left.shape).astype(np.float32), -1, 1)
    dl = rng.random((n, 3, size, size), dtype=np.float32) * 2 - 1
    dr = rng.random((n, 3, size, size), dtype=np.float32) * 2 - 1
    return StereoPairs(left, dl, dr, right)


def tiny_model(seed=0):
    return build_model(TINY_GEN, TINY_CRITIC, LossWeights(), seed=seed)


def tiny_cfg(**overrides):
    base = dict(
        batch_size=4,
        learning_rate=1e-3,
        critic_iterations=2,
        max_steps=4,
        early_stop_patience=50,
        seed=3,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestTrainLoop:
    def test_critic_steps_are_multiple_of_generator_steps(self):
        res = train(tiny_model(), tiny_pairs(), tiny_pairs(4, seed=1), tiny_cfg(critic_iterations=5))
        assert res.model.step <= 4
        assert res.critic_steps == 5 * len(res.log)

    def test_seeded_runs_identical(self):
        res_a = train(tiny_model(seed=1), tiny_pairs(), tiny_pairs(4, seed=1), tiny_cfg())
        res_b = train(tiny_model(seed=1), tiny_pairs(), tiny_pairs(4, seed=1), tiny_cfg())
        assert len(res_a.log) == len(res_b.log)
        for ra, rb in zip(res_a.log, res_b.log):
            for key in ("d_loss", "g_adv", "g_l1", "g_wmse", "g_total", "gp"):
                assert ra[key] == rb[key], key

    def test_loss_decomposition(self):
        weights = LossWeights(loss_alpha=100.0, loss_beta=1.0)
        model = build_model(TINY_GEN, TINY_CRITIC, weights, seed=2)
        res = train(model, tiny_pairs(), tiny_pairs(4, seed=1), tiny_cfg())
        for rec in res.log:
            recomputed = rec["g_adv"] + 100.0 * rec["g_l1"] + 1.0 * rec["g_wmse"]
            assert abs(rec["g_total"] - recomputed) <= 1e-6

    def test_log_fields_contract(self, tmp_path):
        log_path = tmp_path / "log.ndjson"
        cfg = tiny_cfg(log_path=str(log_path))
        train(tiny_model(), tiny_pairs(), tiny_pairs(4, seed=1), cfg)
        lines = [json.loads(l) for l in log_path.read_text().splitlines()]
        assert len(lines) == 4
        expected = {"step", "d_loss", "g_adv", "g_l1", "g_wmse", "g_total", "gp", "lr", "wall_ms"}
        assert set(lines[0]) == expected
        assert [l["step"] for l in lines] == [1, 2, 3, 4]

    def test_learns_identity_task(self):
        # right == left: a few steps of L1-dominated training must beat the
        # untrained network
        rng = np.random.default_rng(5)
        left = rng.random((16, 3, 16, 16), dtype=np.float32) * 2 - 1
        pairs = StereoPairs(left, left * 0, left * 0, left)
        val = StereoPairs(left[:4], left[:4] * 0, left[:4] * 0, left[:4])
        model = tiny_model(seed=4)
        before = _val_l1(model, val)
        res = train(model, pairs, val, tiny_cfg(max_steps=30, batch_size=8))
        assert res.best_val_l1 < before

    def test_early_stopping_with_frozen_learning(self):
        cfg = tiny_cfg(learning_rate=1e-12, max_steps=500, early_stop_patience=2)
        res = train(tiny_model(), tiny_pairs(), tiny_pairs(4, seed=1), cfg)
        assert res.stopped_early
        assert res.model.step < 500

    def test_non_finite_data_aborts_with_numerics_error(self, tmp_path):
        pairs = tiny_pairs()
        pairs.right[0, 0, 0, 0] = np.nan
        cfg = tiny_cfg(checkpoint_dir=str(tmp_path))
        with pytest.raises(NumericsError, match="non-finite"):
            train(tiny_model(), pairs, tiny_pairs(4, seed=1), cfg)
        assert (tmp_path / "diagnostic.npz").is_file()

    def test_empty_training_split_rejected(self):
        with pytest.raises(ValueError):
            train(tiny_model(), StereoPairs(*[np.zeros((0, 3, 8, 8), np.float32)] * 4),
                  tiny_pairs(2), tiny_cfg())


def _val_l1(model, pairs):
    model.generator.eval()
    with torch.no_grad():
        cond, target = pairs.batch(np.arange(len(pairs)))
        fake = model.generator(cond)
        return float((fake - target).abs().mean()) / 2.0


class TestIdentityBaseline:
    def test_identical_eyes_zero(self):
        rng = np.random.default_rng(0)
        left = rng.random((4, 3, 8, 8), dtype=np.float32)
        pairs = StereoPairs(left, left, left, left)
        assert identity_baseline_l1(pairs) == 0.0

    def test_unit_range_scale(self):
        left = np.full((1, 3, 4, 4), -1.0, dtype=np.float32)
        right = np.full((1, 3, 4, 4), 1.0, dtype=np.float32)
        pairs = StereoPairs(left, left, left, right)
        assert identity_baseline_l1(pairs) == 1.0  # signed distance 2 -> unit 1


class TestCheckpoints:
    def test_round_trip_forward_identical(self, tmp_path):
        model = tiny_model(seed=7)
        path = tmp_path / "m.npz"
        save_checkpoint(model, path)
        loaded, state = load_checkpoint(path)
        assert state is None
        assert loaded.step == model.step
        rng = np.random.default_rng(1)
        args = [
            TensorImage(rng.random((3, 16, 16), dtype=np.float32) * 2 - 1, ValueRange.SIGNED)
            for _ in range(3)
        ]
        a = generator_forward(model, *args)
        b = generator_forward(loaded, *args)
        assert np.array_equal(a.data, b.data)

    def test_expected_config_mismatch_named(self, tmp_path):
        model = tiny_model()
        path = tmp_path / "m.npz"
        save_checkpoint(model, path)
        with pytest.raises(CheckpointError, match="generator_config"):
            load_checkpoint(path, expect_generator=GeneratorConfig(ngf=8, depth_levels=2))

    def test_version_mismatch_rejected(self, tmp_path):
        model = tiny_model()
        path = tmp_path / "m.npz"
        save_checkpoint(model, path)
        data = dict(np.load(path, allow_pickle=False))
        header = json.loads(bytes(data["__header__"]))
        header["format_version"] = 99
        data["__header__"] = np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)
        with open(path, "wb") as fh:
            np.savez(fh, **data)
        with pytest.raises(CheckpointError, match="format_version"):
            load_checkpoint(path)

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "bad.npz"
        path.write_bytes(b"garbage")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_single_step_replay(self, tmp_path):
        # run A: k+1 steps straight; run B: k steps, checkpoint, resume 1 step
        k = 3
        pairs, val = tiny_pairs(seed=9), tiny_pairs(4, seed=10)

        res_a = train(tiny_model(seed=11), pairs, val, tiny_cfg(max_steps=k + 1))
        model_b = tiny_model(seed=11)
        res_b = train(model_b, pairs, val, tiny_cfg(max_steps=k, checkpoint_dir=str(tmp_path)))
        loaded, state = load_checkpoint(tmp_path / "last.npz")
        assert state is not None
        assert loaded.step == k
        res_c = train(loaded, pairs, val, tiny_cfg(max_steps=k + 1), resume=state)
        assert len(res_c.log) == 1
        last_a, last_c = res_a.log[k], res_c.log[0]
        assert last_a["step"] == last_c["step"] == k + 1
        for key in ("d_loss", "g_adv", "g_l1", "g_wmse", "g_total", "gp"):
            assert last_a[key] == pytest.approx(last_c[key], rel=1e-10), key


class TestMaxStepsZero:
    def test_no_updates(self):
        model = tiny_model(seed=13)
        before = {k: v.clone() for k, v in model.generator.state_dict().items()}
        res = train(model, tiny_pairs(), tiny_pairs(4, seed=1), tiny_cfg(max_steps=0))
        assert res.log == []
        after = res.model.generator.state_dict()
        for k in before:
            assert torch.equal(before[k], after[k])
