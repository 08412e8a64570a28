"""Segmentation overlap metric."""

from __future__ import annotations

import numpy as np


def compute_mean_dice(prediction, truth, classes):
    """Mean Dice 2|P∩T| / (|P|+|T|) over the foreground classes.

    A class absent from both the prediction and the truth scores 1.
    """
    prediction = np.asarray(prediction)
    truth = np.asarray(truth)
    if prediction.shape != truth.shape:
        raise ValueError(
            f"shape mismatch: {prediction.shape} vs {truth.shape}"
        )
    scores = []
    for label in range(1, classes):
        p = prediction == label
        t = truth == label
        denominator = p.sum() + t.sum()
        if denominator == 0:
            scores.append(1.0)
        else:
            scores.append(2.0 * np.logical_and(p, t).sum() / denominator)
    return float(np.mean(scores))
