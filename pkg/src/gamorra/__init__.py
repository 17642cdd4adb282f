"""Trace-driven workload modeling and frame time estimation for raster pipelines."""

from .baselines import ArState, FcmModel, FrqState, fcm_calibrate, run_ar, run_fcm, run_frq
from .bench import BenchHarness, BenchmarkError, run_suite
from .configio import ConfigError, load_config
from .experiment import MODEL_NAMES, compare_models, fit_offline
from .ilasm import IlError, MissingOpcodeCost, ShaderProgram, complexity, parse_program
from .metrics import ModelResult, emit_report, error_stats, mfr
from .mlr import (
    InsufficientData,
    ModelWeights,
    ObservationSet,
    fit_svd,
    predict_batch,
    predict_frame,
    rmse,
    sliding_rmse,
)
from .perf import (
    PerfFunction,
    PerfModel,
    PerfModelError,
    build_perf_function,
    eval_perf,
    load_perf_model,
    save_perf_model,
)
from .scenario import ScenarioConfig, generate_sequence, load_scenario, read_actuals, write_actuals
from .simulator import DriftEvent, GpuProfile, SimSession, game_profile, load_profile, reference_profile
from .stages import CS_STAGE, PERF_STAGES, REGRESSOR_STAGES, model_dim, regressor_stages
from .trace import (
    BatchRecord,
    FrameRecord,
    FrameSequence,
    TraceFormatError,
    load_trace,
    parse_trace,
    save_trace,
    write_trace,
)
from .trainer import (
    FrameDataset,
    RunLog,
    TrainConfig,
    TrainerState,
    frame_dataset,
    offline_train,
    run_hybrid,
)
from .workload import FrameAnalyzer, StageLoads, explanatory_vector, stage_loads

__version__ = "0.1.0"

__all__ = [
    "ArState", "BatchRecord", "BenchHarness", "BenchmarkError", "ConfigError",
    "CS_STAGE", "DriftEvent", "FcmModel", "FrameAnalyzer", "FrameDataset",
    "FrameRecord", "FrameSequence", "FrqState", "GpuProfile", "IlError",
    "InsufficientData", "MissingOpcodeCost", "MODEL_NAMES", "ModelResult",
    "ModelWeights", "ObservationSet", "PERF_STAGES", "PerfFunction", "PerfModel",
    "PerfModelError", "REGRESSOR_STAGES", "RunLog", "ScenarioConfig",
    "ShaderProgram", "SimSession", "StageLoads", "TraceFormatError",
    "TrainConfig", "TrainerState", "build_perf_function", "compare_models",
    "complexity", "emit_report", "error_stats", "eval_perf", "explanatory_vector",
    "fcm_calibrate", "fit_offline", "fit_svd", "frame_dataset", "game_profile",
    "generate_sequence", "load_config", "load_perf_model", "load_profile",
    "load_scenario", "load_trace", "mfr", "model_dim", "offline_train",
    "parse_program", "parse_trace", "predict_batch", "predict_frame",
    "read_actuals", "reference_profile", "regressor_stages", "rmse", "run_ar",
    "run_fcm", "run_frq", "run_hybrid", "run_suite", "save_perf_model",
    "save_trace", "sliding_rmse", "stage_loads", "write_actuals", "write_trace",
]
