"""Evaluation metrics."""

import numpy as np


def relative_l2(pred, ref):
    """||pred - ref||_2 / ||ref||_2 over all grid nodes (flattened)."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    ref = np.asarray(ref, dtype=np.float64).ravel()
    if pred.shape != ref.shape:
        raise ValueError(f"grid mismatch: {pred.shape} vs {ref.shape}")
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise ValueError("relative L2 undefined for a zero reference field")
    return float(np.linalg.norm(pred - ref) / denom)


def mean_relative_l2(preds, refs):
    """Per-case relative errors and their mean over the leading axis."""
    errs = [relative_l2(p, r) for p, r in zip(preds, refs)]
    return float(np.mean(errs)), errs
