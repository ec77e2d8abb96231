"""Alternating WGAN-GP training loop, inference entry point, and checkpoints.

Per generator step the critic takes ``critic_iterations`` updates, each on a
fresh batch, then the generator takes one. Batches follow a seeded per-epoch
permutation (remainder dropped), validation runs once per epoch on the mean
unit-range L1, and the best-validation weights are retained. Checkpoints are
single npz containers: named parameter arrays plus a JSON header (configs,
step counter, optimizer moments, batch cursor, RNG state), written
atomically.
"""

from __future__ import annotations

import copy
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch

from ..core import TensorImage, ValueRange
from ..depth import depth_to_context, normalize_depth
from ..errors import CheckpointError, NumericsError, ShapeError
from .config import CriticConfig, GeneratorConfig, LossWeights, TrainConfig
from .losses import (
    gradient_penalty,
    loss_l1,
    loss_wmse,
    total_generator_loss,
    wgan_critic_loss,
    wgan_generator_loss,
)
from .networks import PatchCritic, UNetGenerator, build_critic, build_generator

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class PainterModel:
    generator: UNetGenerator
    critic: PatchCritic
    generator_config: GeneratorConfig
    critic_config: CriticConfig
    loss_weights: LossWeights
    step: int = 0


def build_model(
    generator_config: GeneratorConfig = GeneratorConfig(),
    critic_config: CriticConfig = CriticConfig(),
    loss_weights: LossWeights = LossWeights(),
    seed: int = 0,
) -> PainterModel:
    torch.manual_seed(seed)
    return PainterModel(
        generator=build_generator(generator_config),
        critic=build_critic(critic_config),
        generator_config=generator_config,
        critic_config=critic_config,
        loss_weights=loss_weights,
    )


def generator_forward(
    model: PainterModel,
    left: TensorImage,
    depth_left: TensorImage,
    depth_right: TensorImage,
) -> TensorImage:
    """Synthesize the right-eye image from the left eye plus both depth contexts."""
    for name, img in (("left", left), ("depth_left", depth_left), ("depth_right", depth_right)):
        if img.value_range is not ValueRange.SIGNED:
            raise ValueError(f"{name} must be in signed range")
        if img.channels != 3:
            raise ShapeError(f"{name} must have 3 channels, got {img.channels}")
        if (img.height, img.width) != (left.height, left.width):
            raise ShapeError(f"{name} size differs from left image")
    cond = np.concatenate([left.data, depth_left.data, depth_right.data], axis=0)
    batch = torch.from_numpy(np.ascontiguousarray(cond, dtype=np.float32))[None]
    model.generator.eval()
    with torch.no_grad():
        out = model.generator(batch)[0].numpy()
    return TensorImage(np.clip(out, -1.0, 1.0), ValueRange.SIGNED)


class StereoPairs:
    """In-memory training arrays, signed range, (N, 3, H, W) each."""

    def __init__(self, left: np.ndarray, depth_left: np.ndarray,
                 depth_right: np.ndarray, right: np.ndarray):
        arrays = [np.asarray(a, dtype=np.float32) for a in (left, depth_left, depth_right, right)]
        shape = arrays[0].shape
        if any(a.shape != shape for a in arrays) or len(shape) != 4 or shape[1] != 3:
            raise ShapeError("all four arrays must share one (N, 3, H, W) shape")
        self.left, self.depth_left, self.depth_right, self.right = arrays

    def __len__(self) -> int:
        return self.left.shape[0]

    def batch(self, idx: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
        cond = np.concatenate(
            [self.left[idx], self.depth_left[idx], self.depth_right[idx]], axis=1
        )
        return torch.from_numpy(cond), torch.from_numpy(self.right[idx])

    @classmethod
    def from_corpus(cls, corpus_frames: Sequence) -> "StereoPairs":
        """Build from synth.CorpusFrame records (analytic depths included)."""
        left, dl, dr, right = [], [], [], []
        for cf in corpus_frames:
            left.append(cf.frame.left.data * 2.0 - 1.0)
            dl.append(depth_to_context(normalize_depth(cf.depth_left)).data * 2.0 - 1.0)
            dr.append(depth_to_context(normalize_depth(cf.depth_right)).data * 2.0 - 1.0)
            right.append(cf.frame.right.data * 2.0 - 1.0)
        return cls(np.stack(left), np.stack(dl), np.stack(dr), np.stack(right))


def identity_baseline_l1(pairs: StereoPairs) -> float:
    """Unit-range L1 of predicting right = left; the floor reference."""
    return float(np.abs(pairs.left - pairs.right).mean() / 2.0)


class _BatchCursor:
    """Seeded per-epoch permutations; remainder batches are dropped."""

    def __init__(self, n: int, batch_size: int, seed: int, epoch: int = 0, pos: int = 0):
        self.n = n
        self.batch_size = min(batch_size, n)
        self.seed = seed
        self.epoch = epoch
        self.pos = pos
        self._perm = self._permutation(epoch)

    def _permutation(self, epoch: int) -> np.ndarray:
        return np.random.default_rng((self.seed, epoch)).permutation(self.n)

    def next_indices(self) -> np.ndarray:
        if self.pos + self.batch_size > self.n:
            self.epoch += 1
            self.pos = 0
            self._perm = self._permutation(self.epoch)
        idx = self._perm[self.pos : self.pos + self.batch_size]
        self.pos += self.batch_size
        return idx


@dataclass
class TrainState:
    """Everything beyond the weights needed to resume a run exactly."""

    opt_g: dict
    opt_d: dict
    cursor_epoch: int
    cursor_pos: int
    gp_rng: torch.Tensor  # torch.Generator state


@dataclass
class TrainResult:
    model: PainterModel
    log: list
    val_history: list  # (epoch, unit-range validation L1)
    best_val_l1: float
    best_step: int
    stopped_early: bool
    critic_steps: int = 0


def _validate(generator: UNetGenerator, pairs: StereoPairs, batch_size: int) -> float:
    generator.eval()
    total, count = 0.0, 0
    with torch.no_grad():
        for start in range(0, len(pairs), batch_size):
            idx = np.arange(start, min(start + batch_size, len(pairs)))
            cond, target = pairs.batch(idx)
            fake = generator(cond)
            total += float((fake - target).abs().sum())
            count += target.numel()
    generator.train()
    return total / count / 2.0  # signed-range L1 halves to unit-range L1


def _abort_with_snapshot(what: str, model: PainterModel, cfg: TrainConfig,
                         state: Optional[TrainState]) -> NumericsError:
    snapshot = None
    if cfg.checkpoint_dir:
        snapshot = Path(cfg.checkpoint_dir) / "diagnostic.npz"
        Path(cfg.checkpoint_dir).mkdir(parents=True, exist_ok=True)
        save_checkpoint(model, snapshot, train_state=state)
    return NumericsError(
        f"non-finite {what} at generator step {model.step}"
        + (f"; diagnostic snapshot at {snapshot}" if snapshot else "")
    )


def _check_finite(value: torch.Tensor, what: str, model: PainterModel,
                  cfg: TrainConfig, state: Optional[TrainState]) -> None:
    if not torch.isfinite(value).all():
        raise _abort_with_snapshot(what, model, cfg, state)


def train(
    model: PainterModel,
    train_pairs: StereoPairs,
    val_pairs: StereoPairs,
    cfg: TrainConfig,
    resume: Optional[TrainState] = None,
) -> TrainResult:
    if len(train_pairs) == 0:
        raise ValueError("empty training split")
    g, d = model.generator, model.critic
    g.train()
    d.train()
    opt_g = torch.optim.Adam(g.parameters(), lr=cfg.learning_rate,
                             betas=(cfg.adam_beta1, cfg.adam_beta2))
    opt_d = torch.optim.Adam(d.parameters(), lr=cfg.learning_rate,
                             betas=(cfg.adam_beta1, cfg.adam_beta2))
    gp_gen = torch.Generator()
    gp_gen.manual_seed(cfg.seed + 1)
    cursor = _BatchCursor(len(train_pairs), cfg.batch_size, cfg.seed)
    if resume is not None:
        opt_g = _load_optimizer(opt_g, resume.opt_g)
        opt_d = _load_optimizer(opt_d, resume.opt_d)
        cursor = _BatchCursor(len(train_pairs), cfg.batch_size, cfg.seed,
                              epoch=resume.cursor_epoch, pos=resume.cursor_pos)
        gp_gen.set_state(resume.gp_rng.clone())

    def current_state() -> TrainState:
        return TrainState(
            opt_g=opt_g.state_dict(),
            opt_d=opt_d.state_dict(),
            cursor_epoch=cursor.epoch,
            cursor_pos=cursor.pos,
            gp_rng=gp_gen.get_state(),
        )

    checkpoint_dir = Path(cfg.checkpoint_dir) if cfg.checkpoint_dir else None
    if checkpoint_dir:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)
    log_fh = open(cfg.log_path, "a") if cfg.log_path else None

    best_g = copy.deepcopy(g.state_dict())
    best_d = copy.deepcopy(d.state_dict())
    best_val = float("inf")
    best_step = model.step
    epochs_without_improvement = 0
    stopped_early = False
    critic_steps = 0
    log: list[dict] = []
    val_history: list[tuple[int, float]] = []
    last_validated_epoch = cursor.epoch

    try:
        while model.step < cfg.max_steps:
            t0 = time.monotonic()
            d_losses, gp_values = [], []
            for _ in range(cfg.critic_iterations):
                cond, target = train_pairs.batch(cursor.next_indices())
                with torch.no_grad():
                    fake = g(cond)
                real_scores = d(cond, target)
                fake_scores = d(cond, fake)
                try:
                    gp = gradient_penalty(d, cond, target, fake, gp_gen)
                except NumericsError:
                    raise _abort_with_snapshot("gradient penalty", model, cfg, current_state())
                d_loss = wgan_critic_loss(real_scores, fake_scores, gp,
                                          model.loss_weights.lambda_gp)
                _check_finite(d_loss, "critic loss", model, cfg, current_state())
                opt_d.zero_grad()
                d_loss.backward()
                opt_d.step()
                d_losses.append(float(d_loss.detach()))
                gp_values.append(float(gp.detach()))
                critic_steps += 1

            cond, target = train_pairs.batch(cursor.next_indices())
            fake = g(cond)
            adv = wgan_generator_loss(d(cond, fake))
            l1 = loss_l1(fake, target)
            wmse = loss_wmse(fake, target)
            # double-precision scalar composition: the logged total then equals
            # the recomputed sum of its logged components exactly
            g_total = total_generator_loss(
                adv.double(), l1.double(), wmse.double(), model.loss_weights
            )
            _check_finite(g_total, "generator loss", model, cfg, current_state())
            opt_g.zero_grad()
            g_total.backward()
            opt_g.step()
            model.step += 1

            record = {
                "step": model.step,
                "d_loss": float(np.mean(d_losses)),
                "g_adv": float(adv.detach()),
                "g_l1": float(l1.detach()),
                "g_wmse": float(wmse.detach()),
                "g_total": float(g_total.detach()),
                "gp": float(np.mean(gp_values)),
                "lr": cfg.learning_rate,
                "wall_ms": (time.monotonic() - t0) * 1000.0,
            }
            log.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")

            if cursor.epoch > last_validated_epoch:
                last_validated_epoch = cursor.epoch
                val_l1 = _validate(g, val_pairs, cfg.batch_size)
                val_history.append((cursor.epoch, val_l1))
                if val_l1 < best_val:
                    best_val = val_l1
                    best_g = copy.deepcopy(g.state_dict())
                    best_d = copy.deepcopy(d.state_dict())
                    best_step = model.step
                    epochs_without_improvement = 0
                    if checkpoint_dir:
                        save_checkpoint(model, checkpoint_dir / "best.npz")
                else:
                    epochs_without_improvement += 1
                    if epochs_without_improvement >= cfg.early_stop_patience:
                        stopped_early = True
                        break
                if cfg.stop_below_val_l1 is not None and val_l1 < cfg.stop_below_val_l1:
                    break
    finally:
        if log_fh:
            log_fh.close()

    if checkpoint_dir:
        save_checkpoint(model, checkpoint_dir / "last.npz", train_state=current_state())

    if not val_history:  # never crossed an epoch boundary; keep final weights
        best_val = _validate(g, val_pairs, cfg.batch_size) if len(val_pairs) else float("nan")
        best_step = model.step
    else:
        g.load_state_dict(best_g)
        d.load_state_dict(best_d)
        model.step = best_step
    if checkpoint_dir:
        save_checkpoint(model, checkpoint_dir / "best.npz")

    return TrainResult(
        model=model,
        log=log,
        val_history=val_history,
        best_val_l1=best_val,
        best_step=best_step,
        stopped_early=stopped_early,
        critic_steps=critic_steps,
    )


def _load_optimizer(opt: torch.optim.Optimizer, state: dict) -> torch.optim.Optimizer:
    fresh = opt.state_dict()
    fresh["state"] = state["state"]
    opt.load_state_dict(fresh)
    return opt


# ---------------------------------------------------------------------------
# checkpoints


def _config_dicts(model: PainterModel) -> dict:
    return {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "generator_config": vars(model.generator_config).copy(),
        "critic_config": vars(model.critic_config).copy(),
        "loss_weights": vars(model.loss_weights).copy(),
        "step": model.step,
    }


def save_checkpoint(model: PainterModel, path: str | Path,
                    train_state: Optional[TrainState] = None) -> None:
    """Atomically write the npz container (temp file + rename)."""
    path = Path(path)
    header = _config_dicts(model)
    arrays: dict[str, np.ndarray] = {}
    for prefix, module in (("G", model.generator), ("D", model.critic)):
        for name, tensor in module.state_dict().items():
            arrays[f"{prefix}.{name}"] = tensor.detach().cpu().numpy()
    if train_state is not None:
        opt_meta: dict[str, dict] = {}
        for role, sd in (("optG", train_state.opt_g), ("optD", train_state.opt_d)):
            steps = {}
            for idx, st in sd["state"].items():
                arrays[f"{role}.{idx}.exp_avg"] = st["exp_avg"].detach().cpu().numpy()
                arrays[f"{role}.{idx}.exp_avg_sq"] = st["exp_avg_sq"].detach().cpu().numpy()
                steps[str(idx)] = float(st["step"])
            opt_meta[role] = steps
        arrays["rng.gp"] = train_state.gp_rng.numpy()
        header["train_state"] = {
            "cursor_epoch": train_state.cursor_epoch,
            "cursor_pos": train_state.cursor_pos,
            "optimizer_steps": opt_meta,
        }
    header_bytes = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"),
                                 dtype=np.uint8)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, __header__=header_bytes, **arrays)
    os.replace(tmp, path)


def _state_dict_from(arrays, prefix: str, module: torch.nn.Module, path: Path) -> dict:
    out = {}
    for name, tensor in module.state_dict().items():
        key = f"{prefix}.{name}"
        if key not in arrays:
            raise CheckpointError(f"{path}: missing parameter {key}")
        arr = arrays[key]
        if tuple(arr.shape) != tuple(tensor.shape):
            raise CheckpointError(
                f"{path}: parameter {key} has shape {tuple(arr.shape)}, "
                f"expected {tuple(tensor.shape)}"
            )
        out[name] = torch.from_numpy(np.array(arr))
    return out


def load_checkpoint(
    path: str | Path,
    expect_generator: Optional[GeneratorConfig] = None,
    expect_critic: Optional[CriticConfig] = None,
) -> tuple[PainterModel, Optional[TrainState]]:
    path = Path(path)
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    with archive:
        if "__header__" not in archive:
            raise CheckpointError(f"{path}: missing header")
        header = json.loads(bytes(archive["__header__"]))
        version = header.get("format_version")
        if version != CHECKPOINT_FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: format_version {version} unsupported "
                f"(expected {CHECKPOINT_FORMAT_VERSION})"
            )
        gen_cfg = GeneratorConfig(**header["generator_config"])
        critic_cfg = CriticConfig(**header["critic_config"])
        weights = LossWeights(**header["loss_weights"])
        if expect_generator is not None and expect_generator != gen_cfg:
            raise CheckpointError(
                f"{path}: generator_config mismatch: checkpoint {gen_cfg}, expected {expect_generator}"
            )
        if expect_critic is not None and expect_critic != critic_cfg:
            raise CheckpointError(
                f"{path}: critic_config mismatch: checkpoint {critic_cfg}, expected {expect_critic}"
            )
        model = PainterModel(
            generator=build_generator(gen_cfg),
            critic=build_critic(critic_cfg),
            generator_config=gen_cfg,
            critic_config=critic_cfg,
            loss_weights=weights,
            step=int(header["step"]),
        )
        model.generator.load_state_dict(_state_dict_from(archive, "G", model.generator, path))
        model.critic.load_state_dict(_state_dict_from(archive, "D", model.critic, path))

        train_state = None
        if "train_state" in header:
            ts = header["train_state"]
            opt_states = {}
            for role in ("optG", "optD"):
                state = {}
                for idx_str, step_count in ts["optimizer_steps"][role].items():
                    idx = int(idx_str)
                    state[idx] = {
                        "step": torch.tensor(step_count),
                        "exp_avg": torch.from_numpy(np.array(archive[f"{role}.{idx}.exp_avg"])),
                        "exp_avg_sq": torch.from_numpy(np.array(archive[f"{role}.{idx}.exp_avg_sq"])),
                    }
                opt_states[role] = {"state": state}
            train_state = TrainState(
                opt_g=opt_states["optG"],
                opt_d=opt_states["optD"],
                cursor_epoch=int(ts["cursor_epoch"]),
                cursor_pos=int(ts["cursor_pos"]),
                gp_rng=torch.from_numpy(np.array(archive["rng.gp"])),
            )
    return model, train_state
