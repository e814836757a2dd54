"""Trainable scoring heads, objectives, optimizer and tree ensembles."""

from faqkit.learn.forest import ForestClassifier, TreeEnsemble, fit_forest, predict_proba
from faqkit.learn.losses import hinge_pair_loss, smoothed_ce_loss, softmax
from faqkit.learn.models import RankModel, load_model, save_model
from faqkit.learn.optim import OptimizerState, Schedule, adamw_step, lr_at
from faqkit.learn.rankers import (
    DenseClassifier,
    PairwiseRanker,
    PointwiseRanker,
    TrainConfig,
    faq_features,
    train_pairwise,
    train_pointwise,
)

__all__ = [
    "DenseClassifier", "ForestClassifier", "OptimizerState", "PairwiseRanker", "PointwiseRanker",
    "RankModel", "Schedule", "TrainConfig", "TreeEnsemble", "adamw_step", "faq_features",
    "fit_forest", "hinge_pair_loss", "load_model", "lr_at", "predict_proba", "save_model",
    "smoothed_ce_loss", "softmax", "train_pairwise", "train_pointwise",
]
