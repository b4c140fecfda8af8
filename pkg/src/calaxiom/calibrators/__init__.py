"""Calibration methods: decision tree (DT), isotonic regression (IR) and Platt
scaling (PS), plus the base scorer the latter two post-process.
"""

from __future__ import annotations

import json

import numpy as np

from .isotonic import IsotonicModel, fit_isotonic, pava
from .logistic import ExternalScorer, LogisticScorer, fit_base_scorer
from .platt import ConvergenceError, PlattModel, fit_platt, platt_gradient, platt_objective
from .tree import (TreeModel, collapse_alphas, fit_tree, grow_tree, prune, pruning_path,
                   select_alpha)

__all__ = [
    "TreeModel", "IsotonicModel", "PlattModel", "LogisticScorer", "ExternalScorer",
    "ConvergenceError", "fit_tree", "grow_tree", "prune", "pruning_path", "collapse_alphas",
    "select_alpha", "fit_isotonic", "pava", "fit_platt", "platt_objective", "platt_gradient",
    "fit_base_scorer", "predict", "save_model", "load_model", "model_to_json",
    "model_from_json",
]

_KINDS = {cls.kind: cls for cls in (TreeModel, IsotonicModel, PlattModel, LogisticScorer)}


def predict(model, inputs) -> np.ndarray:
    """Scores of ``model`` on ``inputs``: feature rows for a tree, base scores otherwise."""
    return model.predict(inputs)


def model_to_json(model) -> str:
    return json.dumps(model.to_dict(), indent=1, sort_keys=True)


def model_from_json(text: str):
    d = json.loads(text)
    try:
        cls = _KINDS[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown model kind {d.get('kind')!r}") from None
    return cls.from_dict(d)


def save_model(model, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))


def load_model(path):
    with open(path) as fh:
        return model_from_json(fh.read())
