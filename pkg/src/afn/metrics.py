"""Log loss and ROC AUC."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def logloss(labels, logits) -> float:
    """Mean binary cross-entropy of sigmoid(logits), evaluated on the logit scale."""
    y = np.asarray(labels, dtype=np.float64)
    z = np.asarray(logits, dtype=np.float64)
    if y.shape != z.shape:
        raise ValueError(f"labels and logits differ in shape: {y.shape} vs {z.shape}")
    if y.size == 0:
        raise ValueError("logloss of an empty batch")
    # max(z, 0) - z*y + ln(1 + exp(-|z|))
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def auc(labels, scores) -> float:
    """Mann-Whitney estimate of P(score_pos > score_neg); ties count one half."""
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    if y.shape != s.shape:
        raise ValueError("labels and scores differ in shape")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    ranks = rankdata(s)  # average ranks for ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
