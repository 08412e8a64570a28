"""Reference external trainer speaking the network-IR wire protocol."""

from .data import SyntheticDataset, augment_volume, generate_synthetic_dataset
from .ir import IRError, ParsedIR, activation_footprint_bytes, parse_ir
from .metrics import compute_mean_dice
from .model import GraphNet, trainable_parameter_count
from .serve import handle_request, train_model, validate_model

__version__ = "0.1.0"
