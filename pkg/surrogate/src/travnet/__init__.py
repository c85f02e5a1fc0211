"""travnet: CNN surrogate trainer for traversability failure prediction.

Trains a compact convolutional network on SBT v1 sample shards (129 x
129 x 3 terrain/trajectory tensors with step/obstacle/tilt labels) and
emits prediction CSVs for the simulator-side metrics tooling.
"""

from .model import EVENTS, SurrogateNet
from .predict import labels_csv_from_shards, predict, write_predictions_csv
from .sbt import FormatError, ShapeError, ShardIndex
from .train import TrainLog, TrainSpec, load_model, save_model, train

__version__ = "0.1.0"

__all__ = [
    "EVENTS",
    "SurrogateNet",
    "ShardIndex",
    "FormatError",
    "ShapeError",
    "TrainSpec",
    "TrainLog",
    "train",
    "save_model",
    "load_model",
    "predict",
    "write_predictions_csv",
    "labels_csv_from_shards",
]
