"""Imbalance-aware multiclass learning."""

from .boost import (
    BoostModel,
    NoValidRoundError,
    RamoConfig,
    adaboost_train,
    predict,
    ramoboost_train,
)
from .sampling import adasyn_sample
from .tree import DecisionTree, TreeConfig, train_tree

__all__ = [
    "BoostModel",
    "DecisionTree",
    "NoValidRoundError",
    "RamoConfig",
    "TreeConfig",
    "adaboost_train",
    "adasyn_sample",
    "predict",
    "ramoboost_train",
    "train_tree",
]
