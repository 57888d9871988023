"""Weakly supervised 3D segmentation from six extreme-point clicks."""

from .volume import (
    BoundingBox,
    Mask,
    ProbabilityMap,
    Volume,
    VolumeError,
    crop,
    dice_score,
    load_volume,
    resample_isotropic,
    save_volume,
)
from .points import ExtremePointSet, PointChannelParams, bounding_box, point_channel
from .pipeline import PipelineConfig, RoundRecord, initial_pseudo_label, run, rw_regularize

__version__ = "0.1.0"
