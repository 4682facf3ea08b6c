"""Adaptive experience replay for class-incremental continual learning."""

from .errors import (ConfigError, DataError, EmptyBufferError, IdxFormatError,
                     IncompleteRunError, InsufficientDataError, NumericError,
                     UndefinedMetricError)
from .estimator import ContinualClassifier
from .harness import (RunConfig, RunRecord, build_stream, config_from_dict,
                      first_task_curve, load_config, run_experiment, run_joint,
                      sweep, write_results)
from .memory import ENTROPY_BALANCED, RESERVOIR, MemoryBuffer
from .metrics import ResultMatrix
from .nn import (LossReport, Params, accuracy, backward, forward_loss,
                 init_network, sgd_step)
from .replay import (ReplayPlan, Strategy, allocate_task_quota, build_plan,
                     compute_scores, default_policy, select_interfered,
                     train_step, virtual_step)
from .streams import (TaskSpec, TaskStream, load_idx, load_synthetic,
                      make_synthetic, save_synthetic, split_stream)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DataError", "EmptyBufferError", "IdxFormatError",
    "IncompleteRunError", "InsufficientDataError", "NumericError",
    "UndefinedMetricError",
    "ContinualClassifier",
    "RunConfig", "RunRecord", "build_stream", "config_from_dict",
    "first_task_curve", "load_config", "run_experiment", "run_joint",
    "sweep", "write_results",
    "ENTROPY_BALANCED", "RESERVOIR", "MemoryBuffer",
    "ResultMatrix",
    "LossReport", "Params", "accuracy", "backward", "forward_loss",
    "init_network", "sgd_step",
    "ReplayPlan", "Strategy", "allocate_task_quota", "build_plan",
    "compute_scores", "default_policy", "select_interfered", "train_step",
    "virtual_step",
    "TaskSpec", "TaskStream", "load_idx", "load_synthetic", "make_synthetic",
    "save_synthetic", "split_stream",
]
