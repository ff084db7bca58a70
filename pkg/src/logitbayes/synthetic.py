"""Synthetic logit exports for experiments and demos.

Logit vectors are drawn per class from overlapping multivariate Gaussians.
Classes are imbalanced and the majority class's logit carries a constant
offset for every object, as happens when a network is trained on skewed
data; softmax then over-predicts the majority class.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CLASS_NAMES", "make_logits", "make_splits"]

CLASS_NAMES = ("Car", "Cyclist", "Pedestrian")

_PROPORTIONS = (0.82, 0.05, 0.13)
_MEANS = ((5.0, 0.0, 0.0), (1.0, 4.0, 1.0), (1.0, 1.0, 4.0))
_COV = ((1.5, 0.3, 0.3), (0.3, 1.5, 0.3), (0.3, 0.3, 1.5))


def make_logits(n, rng, proportions=_PROPORTIONS, means=_MEANS, cov=_COV, majority_bias=0.5):
    """Draw ``n`` labelled logit vectors.

    Returns
    -------
    logits : ndarray, shape (n, nc)
    labels : ndarray of int, shape (n,)
    """
    proportions = np.asarray(proportions, dtype=float)
    means = np.asarray(means, dtype=float)
    nc = proportions.size
    labels = rng.choice(nc, size=n, p=proportions / proportions.sum())
    logits = np.empty((n, nc))
    for c in range(nc):
        idx = labels == c
        logits[idx] = rng.multivariate_normal(means[c], cov, size=int(idx.sum()))
    logits[:, int(np.argmax(proportions))] += majority_bias
    return logits, labels


def make_splits(seed=0, sizes=(5000, 1000, 2000), **kwargs):
    """Independent train / validation / test draws from one seeded stream."""
    rng = np.random.default_rng(seed)
    return tuple(make_logits(n, rng, **kwargs) for n in sizes)
