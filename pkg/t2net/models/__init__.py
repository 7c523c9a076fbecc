from t2net.models.configs import ModelConfig, QueryMode, TrainConfig, Variant
from t2net.models.mri import Ellipse, PhantomSpec
from t2net.models.reports import (
    AblationRow,
    EvaluationReport,
    MetricReport,
    StepRecord,
    TrainLog,
)

__all__ = [
    "ModelConfig",
    "QueryMode",
    "TrainConfig",
    "Variant",
    "Ellipse",
    "PhantomSpec",
    "AblationRow",
    "EvaluationReport",
    "MetricReport",
    "StepRecord",
    "TrainLog",
]
