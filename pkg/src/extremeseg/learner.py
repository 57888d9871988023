"""Small 3D fully convolutional segmenter trained with the soft Dice loss.

Fixed architecture: conv3x3x3(2->8) -> ReLU -> conv3x3x3(8->8) -> ReLU ->
conv1x1x1(8->1) -> sigmoid, all spatial dims preserved by zero padding.
Forward and backward passes are written directly on numpy/scipy so every
gradient can be checked against finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .volume import ProbabilityMap

DICE_SMOOTH = 1e-5


class TrainingError(Exception):
    """Non-finite loss or inconsistent training inputs."""


def dice_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Soft Dice loss 1 - 2<y,t>/(|y|^2+|t|^2) and its gradient w.r.t. pred.

    Both numerator and denominator carry a small smoothing constant so the
    all-zero-vs-all-zero case is defined (loss 0).
    """
    if pred.shape != target.shape:
        raise TrainingError(f"dim mismatch: {pred.shape} vs {target.shape}")
    y = pred.astype(np.float64)
    t = target.astype(np.float64)
    num = 2.0 * float(np.sum(y * t)) + DICE_SMOOTH
    den = float(np.sum(y * y) + np.sum(t * t)) + DICE_SMOOTH
    loss = 1.0 - num / den
    grad = (2.0 * y * num - 2.0 * t * den) / (den * den)
    return loss, grad


@dataclass
class LearnerModel:
    """Parameters of the three-layer convolutional segmenter."""

    w1: np.ndarray  # (8, 2, 3, 3, 3)
    b1: np.ndarray  # (8,)
    w2: np.ndarray  # (8, 8, 3, 3, 3)
    b2: np.ndarray  # (8,)
    w3: np.ndarray  # (1, 8)
    b3: np.ndarray  # (1,)
    seed: int = 0
    epochs_trained: int = 0

    HIDDEN = 8
    IN_CHANNELS = 2

    @classmethod
    def initialize(cls, rng_seed: int = 0, zero_final: bool = True) -> "LearnerModel":
        """He-style scaled uniform init; the final layer starts at zero so an
        untrained model predicts a uniform 0.5."""
        rng = np.random.default_rng(rng_seed)
        h, c = cls.HIDDEN, cls.IN_CHANNELS

        def he_uniform(shape, fan_in):
            bound = np.sqrt(6.0 / fan_in)
            return rng.uniform(-bound, bound, size=shape)

        w1 = he_uniform((h, c, 3, 3, 3), c * 27)
        w2 = he_uniform((h, h, 3, 3, 3), h * 27)
        if zero_final:
            w3 = np.zeros((1, h))
            b3 = np.zeros(1)
        else:
            w3 = he_uniform((1, h), h)
            b3 = he_uniform((1,), h)
        return cls(w1=w1, b1=np.zeros(h), w2=w2, b2=np.zeros(h), w3=w3, b3=b3,
                   seed=rng_seed)

    def parameters(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def copy(self) -> "LearnerModel":
        return LearnerModel(*(p.copy() for p in self.parameters()),
                            seed=self.seed, epochs_trained=self.epochs_trained)

    def save(self, path: str | Path) -> None:
        """JSON header + little-endian f32 blob (w1,b1,w2,b2,w3,b3 order)."""
        p = Path(path)
        if p.suffix == ".json":
            p = p.with_suffix("")
        header = {
            "architecture": "conv3(2,8)-relu-conv3(8,8)-relu-conv1(8,1)-sigmoid",
            "seed": self.seed,
            "epoch": self.epochs_trained,
            "shapes": [list(q.shape) for q in self.parameters()],
        }
        p.with_suffix(".json").write_text(json.dumps(header))
        blob = np.concatenate([q.ravel() for q in self.parameters()]).astype("<f4")
        p.with_suffix(".params").write_bytes(blob.tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "LearnerModel":
        p = Path(path)
        if p.suffix == ".json":
            p = p.with_suffix("")
        header = json.loads(p.with_suffix(".json").read_text())
        blob = np.frombuffer(p.with_suffix(".params").read_bytes(), dtype="<f4").astype(np.float64)
        shapes = [tuple(s) for s in header["shapes"]]
        params, off = [], 0
        for s in shapes:
            n = int(np.prod(s))
            params.append(blob[off:off + n].reshape(s).copy())
            off += n
        return cls(*params, seed=int(header.get("seed", 0)),
                   epochs_trained=int(header.get("epoch", 0)))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 50
    rng_seed: int = 0
    momentum: float = 0.9

    def __post_init__(self):
        if self.learning_rate < 0:
            raise TrainingError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if self.epochs < 1:
            raise TrainingError(f"epochs must be >= 1, got {self.epochs}")


def _conv3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Same-size zero-padded cross-correlation; x is (Cin, nx, ny, nz).

    Written as 27 shifted-slice matmuls so BLAS does the channel mixing."""
    nx, ny, nz = x.shape[1:]
    xpad = np.pad(x, ((0, 0), (1, 1), (1, 1), (1, 1)))
    out = np.zeros((w.shape[0], nx, ny, nz), dtype=np.float64)
    for kx in range(3):
        for ky in range(3):
            for kz in range(3):
                shifted = xpad[:, kx:kx + nx, ky:ky + ny, kz:kz + nz]
                out += np.tensordot(w[:, :, kx, ky, kz], shifted, axes=(1, 0))
    return out + b[:, None, None, None]


def _conv3_backward(x: np.ndarray, w: np.ndarray, dout: np.ndarray):
    """Gradients of _conv3: returns (dx, dw, db)."""
    nx, ny, nz = x.shape[1:]
    xpad = np.pad(x, ((0, 0), (1, 1), (1, 1), (1, 1)))
    dpad = np.pad(dout, ((0, 0), (1, 1), (1, 1), (1, 1)))
    dx = np.zeros_like(x)
    dw = np.empty_like(w)
    for kx in range(3):
        for ky in range(3):
            for kz in range(3):
                shifted = xpad[:, kx:kx + nx, ky:ky + ny, kz:kz + nz]
                dw[:, :, kx, ky, kz] = np.tensordot(dout, shifted, axes=([1, 2, 3], [1, 2, 3]))
                # adjoint shift: output gradient slides the opposite way
                dshift = dpad[:, 2 - kx:2 - kx + nx, 2 - ky:2 - ky + ny, 2 - kz:2 - kz + nz]
                dx += np.tensordot(w[:, :, kx, ky, kz], dshift, axes=(0, 0))
    db = dout.sum(axis=(1, 2, 3))
    return dx, dw, db


def _forward_trace(m: LearnerModel, x: np.ndarray) -> dict:
    z1 = _conv3(x, m.w1, m.b1)
    a1 = np.maximum(z1, 0.0)
    z2 = _conv3(a1, m.w2, m.b2)
    a2 = np.maximum(z2, 0.0)
    z3 = np.tensordot(m.w3[0], a2, axes=(0, 0)) + m.b3[0]
    y = 1.0 / (1.0 + np.exp(-z3))
    return {"x": x, "z1": z1, "a1": a1, "z2": z2, "a2": a2, "y": y}


def _backward(m: LearnerModel, trace: dict, dy: np.ndarray) -> list[np.ndarray]:
    y = trace["y"]
    dz3 = dy * y * (1.0 - y)
    dw3 = np.tensordot(dz3, trace["a2"], axes=([0, 1, 2], [1, 2, 3]))[None, :]
    db3 = np.array([dz3.sum()])
    da2 = m.w3[0][:, None, None, None] * dz3[None]
    dz2 = da2 * (trace["z2"] > 0.0)
    da1, dw2, db2 = _conv3_backward(trace["a1"], m.w2, dz2)
    dz1 = da1 * (trace["z1"] > 0.0)
    _, dw1, db1 = _conv3_backward(trace["x"], m.w1, dz1)
    return [dw1, db1, dw2, db2, dw3, db3]


def forward(m: LearnerModel, channels: np.ndarray, spacing=(1.0, 1.0, 1.0)) -> ProbabilityMap:
    """Network prediction on a (2, nx, ny, nz) input; dims preserved."""
    if channels.ndim != 4 or channels.shape[0] != LearnerModel.IN_CHANNELS:
        raise TrainingError(f"expected (2, nx, ny, nz) input, got shape {channels.shape}")
    y = _forward_trace(m, channels.astype(np.float64))["y"]
    return ProbabilityMap(data=np.clip(y, 0.0, 1.0).astype(np.float32), spacing=tuple(spacing))


def sample_loss_and_grads(m: LearnerModel, channels: np.ndarray,
                          target: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Dice loss of one sample and its gradient for every parameter."""
    trace = _forward_trace(m, channels.astype(np.float64))
    loss, dy = dice_loss(trace["y"], target)
    return loss, _backward(m, trace, dy)


def train(m: LearnerModel, dataset, cfg: TrainConfig = TrainConfig(),
          log=None) -> LearnerModel:
    """Momentum SGD over the dataset in fixed order; deterministic.

    dataset: list of (channels (2,nx,ny,nz) ndarray, target ProbabilityMap
    or ndarray). Returns an updated copy; the input model is untouched.
    """
    if not dataset:
        raise TrainingError("training dataset is empty")
    model = m.copy()
    velocity = [np.zeros_like(p) for p in model.parameters()]
    for epoch in range(cfg.epochs):
        total = 0.0
        for channels, target in dataset:
            t = target.data if isinstance(target, ProbabilityMap) else target
            loss, grads = sample_loss_and_grads(model, channels, t)
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss {loss} at epoch {epoch}; lower the learning rate"
                )
            total += loss
            for p, v, g in zip(model.parameters(), velocity, grads):
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                p += v
        model.epochs_trained += 1
        if log is not None:
            log(epoch, total / len(dataset))
    return model
