"""Calibration of sensor networks from pairwise colocation data.

Thin Python wrapper around the C++ core. See the project README for the
model description and the CLI for file-based workflows.
"""

from ._calnet import (  # noqa: F401
    CalibKind,
    CalibratedMeasurement,
    CalibrationFunction,
    CalibrationPrediction,
    CalibrationQuery,
    CategoricalDataset,
    CategoricalObservationModel,
    CategoricalScenario,
    ColocationRecord,
    ConfigError,
    DataError,
    GridSearchResult,
    IndexPoint,
    ItemLabel,
    KernelAssignment,
    KernelGroup,
    KernelSpec,
    LabelRecord,
    LabelRow,
    LikelihoodConfig,
    MultihopParams,
    MultihopQuery,
    NumericalError,
    ObservationModel,
    PairObservationModel,
    PollutionDataset,
    PollutionScenario,
    PollutionTruth,
    ScalingTable,
    SensorInfo,
    SensorKind,
    SensorTable,
    SpeciesPrior,
    TrainOptions,
    TrainResult,
    VariationalState,
    VoteBaselines,
    VoteMode,
    accuracy,
    build_graph,
    calibrate_measurement,
    confusion_from_latents,
    gen_categorical,
    gen_pollution,
    grid_search_multihop,
    labels_by_item,
    load_checkpoint,
    mae,
    make_inducing_grid,
    make_label_pairs,
    nlpd_categorical,
    nlpd_gaussian,
    nmse,
    pair_loglik,
    predict_calibration,
    predict_multihop,
    predict_species,
    save_checkpoint,
    train_vi,
    window_of,
)

__version__ = "0.1.0"
