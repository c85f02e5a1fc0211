"""Training loop: RMSprop + binary cross-entropy over the three heads.

With ``freeze_epochs > 0`` the trunk starts frozen and only the heads
learn; the whole network then unfreezes for the remaining epochs. Batch
order is drawn from a dedicated generator seeded by the spec, and data
loading is single-threaded, so runs with the same spec reproduce the
same loss curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .model import SurrogateNet
from .sbt import ShardIndex


@dataclass
class TrainSpec:
    """Everything a training run depends on."""

    train_shards: list
    val_shards: list = field(default_factory=list)
    epochs: int = 10
    learning_rate: float = 1e-4
    dropout: float = 0.2
    l2: float = 1e-3
    batch_size: int = 64
    backbone: str = "compact"
    freeze_epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch size must be at least 1")


@dataclass
class TrainLog:
    """Per-epoch loss trace plus the phase each epoch ran in."""

    entries: list = field(default_factory=list)  # (epoch, phase, train, val)

    def add(self, epoch: int, phase: str, train_loss: float, val_loss):
        self.entries.append((epoch, phase, train_loss, val_loss))

    def train_losses(self):
        return [e[2] for e in self.entries]

    def render(self) -> str:
        lines = ["# epoch phase train_loss val_loss"]
        for epoch, phase, train_loss, val_loss in self.entries:
            val = f"{val_loss:.6f}" if val_loss is not None else "-"
            lines.append(f"{epoch} {phase} {train_loss:.6f} {val}")
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.render())


def _set_trunk_frozen(model: SurrogateNet, frozen: bool) -> None:
    for p in model.trunk.parameters():
        p.requires_grad_(not frozen)


def _epoch_losses(model, index, batch_size, device):
    """Mean BCE over a dataset in eval mode (no grad, no dropout)."""
    model.eval()
    loss_fn = torch.nn.BCELoss(reduction="sum")
    total = 0.0
    n = len(index)
    with torch.no_grad():
        for lo in range(0, n, batch_size):
            idx = np.arange(lo, min(lo + batch_size, n))
            x, y = index.batch(idx)
            probs = model(torch.from_numpy(x).to(device))
            total += float(loss_fn(probs, torch.from_numpy(y).to(device)))
    return total / (3 * n)


def train(spec: TrainSpec, device: str = "cpu"):
    """Fit a surrogate on the train shards; returns (model, TrainLog)."""
    torch.manual_seed(spec.seed)
    model = SurrogateNet(backbone=spec.backbone, dropout=spec.dropout).to(device)
    train_index = ShardIndex(spec.train_shards)
    val_index = ShardIndex(spec.val_shards) if spec.val_shards else None
    if len(train_index) == 0:
        raise ValueError("training shards contain no samples")

    # Channel statistics from an evenly spaced sample of training data.
    probe = np.linspace(0, len(train_index) - 1,
                        min(len(train_index), 256)).astype(int)
    x_probe, _ = train_index.batch(np.unique(probe))
    model.set_input_stats(x_probe.mean(axis=(0, 2, 3)), x_probe.std(axis=(0, 2, 3)))

    loss_fn = torch.nn.BCELoss()
    order_rng = np.random.default_rng(spec.seed)
    log = TrainLog()

    def make_optimizer():
        params = [p for p in model.parameters() if p.requires_grad]
        return torch.optim.RMSprop(params, lr=spec.learning_rate,
                                   weight_decay=spec.l2)

    frozen = spec.freeze_epochs > 0
    _set_trunk_frozen(model, frozen)
    optimizer = make_optimizer()

    n = len(train_index)
    for epoch in range(spec.epochs):
        if frozen and epoch >= spec.freeze_epochs:
            frozen = False
            _set_trunk_frozen(model, False)
            optimizer = make_optimizer()
        model.train()
        order = order_rng.permutation(n)
        running = 0.0
        for lo in range(0, n, spec.batch_size):
            idx = order[lo:lo + spec.batch_size]
            x, y = train_index.batch(idx)
            optimizer.zero_grad()
            probs = model(torch.from_numpy(x).to(device))
            loss = loss_fn(probs, torch.from_numpy(y).to(device))
            loss.backward()
            optimizer.step()
            running += float(loss.detach()) * len(idx)
        train_loss = running / n
        val_loss = (_epoch_losses(model, val_index, spec.batch_size, device)
                    if val_index is not None else None)
        log.add(epoch, "heads-only" if epoch < spec.freeze_epochs else "full",
                train_loss, val_loss)

    train_index.close()
    if val_index is not None:
        val_index.close()
    return model, log


def save_model(model: SurrogateNet, spec: TrainSpec, path) -> None:
    torch.save({"state": model.state_dict(),
                "backbone": spec.backbone,
                "dropout": spec.dropout}, path)


def load_model(path) -> SurrogateNet:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = SurrogateNet(backbone=payload["backbone"], dropout=payload["dropout"])
    model.load_state_dict(payload["state"])
    model.eval()
    return model
