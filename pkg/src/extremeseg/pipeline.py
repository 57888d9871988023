"""Orchestration of the annotation loop.

seed scribbles -> random-walker initialization -> train the convolutional
segmenter on the pseudo labels -> predict -> random-walker regularization
around the predicted boundary -> repeat until consecutive predictions agree.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import geodesic, learner, morphology, randomwalker
from .points import ExtremePointSet, PointChannelParams, bounding_box, point_channel
from .volume import BoundingBox, Mask, ProbabilityMap, Volume, dice_score


@dataclass(frozen=True)
class PipelineConfig:
    padding_mm: float = 20.0
    r_fg: int = 2
    r_bg: int = 30
    r_rw: int = 4
    beta: float = 130.0
    sigma_mm: float = 3.0
    max_rounds: int = 10
    convergence_dice: float = 0.99
    rw_regularization: bool = True
    point_channel: bool = True
    warm_start: bool = True
    cg_tol: float = 1e-6
    cg_max_iter: int = 2000
    train_epochs: int = 6
    learning_rate: float = 5e-2
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.r_fg, self.r_bg, self.r_rw) < 0:
            raise ValueError("radii must be non-negative")
        if not 0.0 < self.convergence_dice <= 1.0:
            raise ValueError(f"convergence_dice must be in (0,1], got {self.convergence_dice}")
        if self.max_rounds < 1:
            raise ValueError(f"max_rounds must be >= 1, got {self.max_rounds}")

    def rw_config(self) -> randomwalker.RwConfig:
        return randomwalker.RwConfig(beta=self.beta, cg_tol=self.cg_tol,
                                     cg_max_iter=self.cg_max_iter)

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        return cls(**json.loads(text))


@dataclass
class RoundRecord:
    round: int
    mean_dice_gt: float | None
    mean_dice_prev: float | None
    seconds: float
    converged: bool = False
    flagged_cases: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "round": self.round,
            "mean_dice_gt": self.mean_dice_gt,
            "mean_dice_prev": self.mean_dice_prev,
            "seconds": self.seconds,
            "converged": self.converged,
            "flagged_cases": self.flagged_cases,
        })


def initial_pseudo_label(v: Volume, pts: ExtremePointSet,
                         cfg: PipelineConfig = PipelineConfig()
                         ) -> tuple[ProbabilityMap, BoundingBox]:
    """Random-walker labels on the padded crop around the extreme points."""
    box = bounding_box(pts, v, cfg.padding_mm)
    cropped = crop_volume(v, box)
    shifted = shift_points(pts, box)
    seeds = geodesic.build_seed_map(
        cropped, shifted, geodesic.SeedConfig(r_fg=cfg.r_fg, r_bg=cfg.r_bg)
    )
    prob = randomwalker.solve(cropped, seeds, cfg.rw_config())
    return prob, box


def crop_volume(v: Volume, box: BoundingBox) -> Volume:
    from .volume import crop

    return crop(v, box)


def shift_points(pts: ExtremePointSet, box: BoundingBox) -> ExtremePointSet:
    lo = box.lo
    moved = [tuple(c - o for c, o in zip(p, lo)) for p in pts.points]
    return ExtremePointSet(*moved)


def rw_regularize(p: ProbabilityMap, v: Volume,
                  cfg: PipelineConfig = PipelineConfig()) -> tuple[ProbabilityMap, bool]:
    """Re-solve the random walker with an uncertainty band around the current
    boundary: both the thresholded foreground and background are eroded by
    ball(r_rw) and become the new seeds. If erosion empties either class the
    input is returned unchanged with the degenerate flag set."""
    if p.dims != v.dims:
        raise ValueError(f"dim mismatch: {p.dims} vs {v.dims}")
    fg_mask = randomwalker.threshold(p, 0.5)
    bg_mask = Mask(data=(1 - fg_mask.data).astype(np.uint8), spacing=p.spacing)
    el = morphology.ball(cfg.r_rw)
    fg_seed = morphology.erode(fg_mask, el).data.astype(bool)
    bg_seed = morphology.erode(bg_mask, el).data.astype(bool)
    if not fg_seed.any() or not bg_seed.any():
        return p, True
    labels = np.zeros(p.dims, dtype=np.uint8)
    labels[bg_seed] = geodesic.Label.BACKGROUND
    labels[fg_seed] = geodesic.Label.FOREGROUND
    seeds = geodesic.SeedMap(data=labels, spacing=p.spacing)
    return randomwalker.solve(v, seeds, cfg.rw_config()), False


def paste_to_full(mask_data: np.ndarray, box: BoundingBox, dims,
                  spacing) -> Mask:
    """Place a cropped binary array back on the original grid; background
    everywhere outside the bounding box."""
    full = np.zeros(dims, dtype=np.uint8)
    sl = tuple(slice(l, h + 1) for l, h in zip(box.lo, box.hi))
    full[sl] = mask_data
    return Mask(data=full, spacing=spacing)


def evaluate(pred: Mask, gt: Mask) -> float:
    """Dice on the full, uncropped grid."""
    return dice_score(pred, gt)


@dataclass
class _Case:
    volume: Volume
    points: ExtremePointSet
    gt: Mask | None
    box: BoundingBox = None
    cropped: Volume = None
    channels: np.ndarray = None
    pseudo: ProbabilityMap = None
    flagged: bool = False

    def full_mask(self) -> Mask:
        binary = randomwalker.threshold(self.pseudo, 0.5)
        return paste_to_full(binary.data, self.box, self.volume.dims, self.volume.spacing)


def _prepare(case: _Case, cfg: PipelineConfig) -> None:
    case.box = bounding_box(case.points, case.volume, cfg.padding_mm)
    case.cropped = crop_volume(case.volume, case.box)
    shifted = shift_points(case.points, case.box)
    intensity = geodesic.normalize_intensity(case.cropped).data
    if cfg.point_channel:
        extra = point_channel(case.cropped.dims, case.cropped.spacing, shifted,
                              PointChannelParams(sigma_mm=cfg.sigma_mm)).data
    else:
        extra = np.zeros_like(intensity)
    case.channels = np.stack([intensity, extra]).astype(np.float64)


def run(dataset, cfg: PipelineConfig = PipelineConfig(),
        log_path: str | Path | None = None) -> tuple[list[Mask], list[RoundRecord]]:
    """Full loop over a dataset of (Volume, ExtremePointSet[, gt Mask]) tuples.

    Returns the final masks on the original grids and one RoundRecord per
    completed round. Round 0 is the random-walker initialization; each later
    round trains the segmenter on the current pseudo labels, predicts, and
    (optionally) regularizes the prediction with the random walker.
    """
    cases, records = run_detailed(dataset, cfg, log_path)
    return [c.full_mask() for c in cases], records


def run_detailed(dataset, cfg: PipelineConfig = PipelineConfig(),
                 log_path: str | Path | None = None):
    """Like run() but returns the per-case states (crop box, cropped
    probability map, degenerate flag) alongside the round records."""
    if not dataset:
        raise ValueError("dataset is empty")
    cases = []
    for entry in dataset:
        v, pts = entry[0], entry[1]
        gt = entry[2] if len(entry) > 2 else None
        cases.append(_Case(volume=v, points=pts, gt=gt))

    records: list[RoundRecord] = []
    log_file = open(log_path, "w") if log_path else None
    try:
        t0 = time.monotonic()
        for case in cases:
            _prepare(case, cfg)
            case.pseudo, _ = initial_pseudo_label(case.volume, case.points, cfg)
        records.append(_record(0, cases, None, time.monotonic() - t0, cfg, log_file))

        model = learner.LearnerModel.initialize(cfg.rng_seed)
        train_cfg = learner.TrainConfig(learning_rate=cfg.learning_rate,
                                        epochs=cfg.train_epochs, rng_seed=cfg.rng_seed)
        for rnd in range(1, cfg.max_rounds):
            t0 = time.monotonic()
            if not cfg.warm_start:
                model = learner.LearnerModel.initialize(cfg.rng_seed + rnd)
            model = learner.train(model, [(c.channels, c.pseudo) for c in cases], train_cfg)
            prev = [randomwalker.threshold(c.pseudo, 0.5) for c in cases]
            for case in cases:
                pred = learner.forward(model, case.channels, case.cropped.spacing)
                if cfg.rw_regularization:
                    pred, case.flagged = rw_regularize(pred, case.cropped, cfg)
                    if case.flagged:  # degenerate erosion: keep previous label
                        continue
                case.pseudo = pred
            mean_prev = float(np.mean([
                dice_score(randomwalker.threshold(c.pseudo, 0.5), p)
                for c, p in zip(cases, prev)
            ]))
            rec = _record(rnd, cases, mean_prev, time.monotonic() - t0, cfg, log_file)
            records.append(rec)
            if rec.converged:
                break
    finally:
        if log_file:
            log_file.close()
    return cases, records


def _record(rnd, cases, mean_prev, seconds, cfg, log_file) -> RoundRecord:
    dices = [evaluate(c.full_mask(), c.gt) for c in cases if c.gt is not None]
    rec = RoundRecord(
        round=rnd,
        mean_dice_gt=float(np.mean(dices)) if dices else None,
        mean_dice_prev=mean_prev,
        seconds=seconds,
        converged=mean_prev is not None and mean_prev >= cfg.convergence_dice,
        flagged_cases=sum(c.flagged for c in cases),
    )
    if log_file:
        log_file.write(rec.to_json() + "\n")
        log_file.flush()
    return rec
