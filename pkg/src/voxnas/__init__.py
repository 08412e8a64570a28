"""Derivative-free architecture search engine for 3D segmentation networks."""

from .blocks import (
    LegalityVerdict,
    OperationMatrix,
    matrix_from_ops,
    operation_param_count,
    render_matrix,
    validate_structure,
)
from .crs import (
    CrsConfig,
    Population,
    SearchResult,
    population_size,
    run_random_search,
    run_search,
)
from .evaluators import (
    AnalyticLandscape,
    ArchitectureSurrogate,
    ExternalTrainerEvaluator,
    TrainerProtocolConfig,
    TrainSettings,
    external_trainer_evaluate,
    make_evaluator,
)
from .network import (
    ArchConfig,
    NetworkIR,
    ResourceEstimate,
    build_network,
    count_parameters,
    estimate_peak_memory,
    parse_ir,
    serialize_ir,
    tensor_bytes,
)
from .objective import (
    BuildSettings,
    EvalCache,
    EvalRecord,
    EvaluationOutcome,
    dice_to_objective,
    evaluate_point,
    penalty_value,
    write_trajectory_csv,
)
from .spaces import (
    DecodedConfig,
    HyperparameterSpec,
    SearchSpace,
    canonical_key,
    load_space_file,
    space_preset,
)

__version__ = "0.1.0"
