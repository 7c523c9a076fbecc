"""Joint-loss training, evaluation and ablation runs."""

from t2net.training.ablation import ablation_trend, format_ablation, run_ablation
from t2net.training.evaluate import evaluate, format_evaluation, target_predictor
from t2net.training.loss import LossTerms, loss_terms, multitask_loss
from t2net.training.trainer import Trainer, batch_schedule, train

__all__ = [
    "LossTerms",
    "Trainer",
    "ablation_trend",
    "batch_schedule",
    "evaluate",
    "format_ablation",
    "format_evaluation",
    "loss_terms",
    "multitask_loss",
    "run_ablation",
    "target_predictor",
    "train",
]
