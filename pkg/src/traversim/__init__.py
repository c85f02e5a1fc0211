"""traversim: procedural-terrain traversability simulation toolkit.

Generates unstructured elevation maps from seeded gradient noise, sweeps a
skid-steer rover over a fixed library of arc trajectories to label step /
obstacle / tilt failures, rasterizes terrain-trajectory pairs into
129x129x3 sample tensors, and assembles balanced supervised-learning
datasets together with the confusion-matrix metrics used to score
surrogate predictors.
"""

from .noise import NoiseSource
from .terrain import (
    ElevationMap,
    InvalidParams,
    NegativeBase,
    OutOfBounds,
    TerrainParams,
    generate_map,
    intrp,
    list_presets,
    load_preset,
)
from .robot import Pose, RobotConfig, WheelContacts, solve_pose, wheel_positions
from .actions import (
    PrimitiveSpec,
    Trajectory,
    build_action_space,
    default_action_space,
    discretize,
)
from .simulate import FailureLabel, TraverseResult, simulate, simulate_all
from .raster import SampleTensor, rasterize
from .metrics import ConfusionMatrix, EventScores, confusion, overall, scores

__version__ = "0.1.0"

__all__ = [
    "NoiseSource",
    "TerrainParams",
    "ElevationMap",
    "InvalidParams",
    "NegativeBase",
    "OutOfBounds",
    "generate_map",
    "intrp",
    "list_presets",
    "load_preset",
    "RobotConfig",
    "Pose",
    "WheelContacts",
    "wheel_positions",
    "solve_pose",
    "PrimitiveSpec",
    "Trajectory",
    "build_action_space",
    "default_action_space",
    "discretize",
    "FailureLabel",
    "TraverseResult",
    "simulate",
    "simulate_all",
    "SampleTensor",
    "rasterize",
    "ConfusionMatrix",
    "EventScores",
    "confusion",
    "scores",
    "overall",
]
