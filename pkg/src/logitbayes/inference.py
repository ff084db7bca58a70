"""Bayesian decision rules over classifier logits.

A :class:`BayesScorer` replaces the softmax read-out of a trained network.
For every class ``i`` it holds a Gaussian-KDE likelihood and, for the MAP
rule, a normalized-histogram prior, both fitted on the ``i``-th logit of
training objects of that class. A test vector ``z`` is scored by evaluating
class ``i``'s CDFs at ``z[i]``::

    ML :  s_i = (L_i + lam) / sum_j (L_j + lam)
    MAP:  s_i = (L_i * P_i + lam) / sum_j (L_j * P_j + lam)

and the decision is the arg-max of ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .density import KdeModel, NhModel, fit_histogram, fit_kde, kde_cdf, nh_cdf
from .exceptions import FitError, NotFittedError, ParameterError

__all__ = [
    "LogitSample",
    "BayesScorer",
    "MODES",
    "fit_scorer",
    "softmax",
    "smoothed_normalize",
    "ml_score",
    "map_score",
    "predict",
    "stack_samples",
]

MODES = ("ml", "map")
_CONDITIONS = ("label", "prediction")


@dataclass(frozen=True)
class LogitSample:
    """One classified object: its logit vector and, if known, its class."""

    id: object
    logits: np.ndarray
    label: Optional[int] = None

    def __post_init__(self):
        z = np.asarray(self.logits, dtype=float).ravel()
        if not np.all(np.isfinite(z)):
            raise ParameterError(f"sample {self.id!r}: logits must be finite")
        object.__setattr__(self, "logits", z)
        if self.label is not None:
            object.__setattr__(self, "label", int(self.label))


def stack_samples(samples: Sequence[LogitSample]):
    """Return ``(logits, labels)`` arrays; missing labels become -1."""
    if len(samples) == 0:
        return np.empty((0, 0)), np.empty(0, dtype=int)
    nc = samples[0].logits.size
    for s in samples:
        if s.logits.size != nc:
            raise ParameterError(
                f"sample {s.id!r} has {s.logits.size} logits, expected {nc}"
            )
    logits = np.vstack([s.logits for s in samples])
    labels = np.array([-1 if s.label is None else s.label for s in samples], dtype=int)
    return logits, labels


def _logit_matrix(logits, nc=None):
    z = np.asarray(logits, dtype=float)
    if z.ndim == 1:
        z = z[None, :]
    if z.ndim != 2:
        raise ParameterError(f"logits must be a vector or a matrix, got shape {z.shape}")
    if nc is not None and z.shape[1] != nc:
        raise ParameterError(f"expected {nc} logits per sample, got {z.shape[1]}")
    if not np.all(np.isfinite(z)):
        raise ParameterError("logits must be finite")
    return z


def _restore(rows, logits):
    return rows[0] if np.ndim(logits) == 1 else rows


@dataclass(frozen=True, eq=False)
class BayesScorer:
    """Fitted ML/MAP decision rule.

    Attributes
    ----------
    likelihoods : tuple of KdeModel
        One KDE per class, queried at that class's logit.
    priors : tuple of NhModel or None
        One histogram per class; required in MAP mode.
    lam : float
        Additive smoothing added to every class term before normalizing.
    mode : {"ml", "map"}
        Rule applied by :meth:`score` and :func:`predict`.
    class_names : tuple of str
    """

    likelihoods: tuple
    priors: Optional[tuple]
    lam: float
    mode: str = "ml"
    class_names: Optional[tuple] = None

    def __post_init__(self):
        likelihoods = tuple(self.likelihoods)
        if len(likelihoods) < 1 or not all(isinstance(m, KdeModel) for m in likelihoods):
            raise ParameterError("likelihoods must be a non-empty sequence of KdeModel")
        nc = len(likelihoods)
        priors = None if self.priors is None else tuple(self.priors)
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if priors is not None and (
            len(priors) != nc or not all(isinstance(m, NhModel) for m in priors)
        ):
            raise ParameterError(f"priors must hold exactly {nc} NhModel entries")
        if self.mode == "map" and priors is None:
            raise ParameterError("MAP mode needs one prior per class")
        lam = float(self.lam)
        if not (np.isfinite(lam) and lam >= 0):
            raise ParameterError(f"lambda must be finite and >= 0, got {self.lam!r}")
        names = self.class_names
        if names is None:
            names = tuple(f"class{i}" for i in range(nc))
        names = tuple(str(n) for n in names)
        if len(names) != nc:
            raise ParameterError(f"{len(names)} class names for {nc} classes")
        object.__setattr__(self, "likelihoods", likelihoods)
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "class_names", names)

    @property
    def nc(self) -> int:
        return len(self.likelihoods)

    @property
    def h(self):
        return tuple(m.h for m in self.likelihoods)

    @property
    def nbins(self):
        return None if self.priors is None else tuple(m.nbins for m in self.priors)

    def likelihood_terms(self, logits):
        """``L[n, i] = kde_cdf(likelihoods[i], logits[n, i])``."""
        z = _logit_matrix(logits, self.nc)
        out = np.column_stack([kde_cdf(m, z[:, i]) for i, m in enumerate(self.likelihoods)])
        return _restore(out, logits)

    def prior_terms(self, logits):
        if self.priors is None:
            raise NotFittedError("scorer was fitted without priors; refit in MAP mode")
        z = _logit_matrix(logits, self.nc)
        out = np.column_stack([nh_cdf(m, z[:, i]) for i, m in enumerate(self.priors)])
        return _restore(out, logits)

    def score(self, logits):
        return map_score(self, logits) if self.mode == "map" else ml_score(self, logits)

    def predict(self, logits):
        return predict(self, logits)


def _check_per_class(values, nc, what):
    arr = np.asarray(values).ravel()
    if arr.size != nc:
        raise ParameterError(f"{what} has {arr.size} entries, expected one per class ({nc})")
    return arr


def fit_scorer(
    train,
    h,
    nbins=None,
    lam=1e-7,
    mode="ml",
    labels=None,
    class_names=None,
    condition="label",
) -> BayesScorer:
    """Fit per-class likelihoods (and priors in MAP mode) on training logits.

    Parameters
    ----------
    train : array_like, shape (n, nc), or sequence of LogitSample
        Training logits.
    h : sequence of float
        KDE bandwidth per class.
    nbins : sequence of int, optional
        Histogram bins per class; required when ``mode="map"``.
    lam : float
        Additive smoothing.
    mode : {"ml", "map"}
    labels : array_like of int, optional
        Ground-truth classes; taken from the samples when ``train`` is a
        sequence of :class:`LogitSample`.
    condition : {"label", "prediction"}
        Which objects feed class ``i``'s densities: those labelled ``i``
        (default) or those the network itself classified as ``i``.

    Raises
    ------
    FitError
        If a class has fewer than two training values.
    ParameterError
        On malformed parameter vectors.
    """
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if condition not in _CONDITIONS:
        raise ParameterError(f"condition must be one of {_CONDITIONS}, got {condition!r}")
    if len(train) and isinstance(train[0], LogitSample):
        train, sample_labels = stack_samples(train)
        if labels is None:
            labels = sample_labels
    z = _logit_matrix(train)
    nc = z.shape[1]

    if condition == "label":
        if labels is None:
            raise FitError("ground-truth conditioning needs training labels")
        groups = np.asarray(labels, dtype=int).ravel()
        if groups.size != z.shape[0]:
            raise ParameterError(f"{groups.size} labels for {z.shape[0]} training samples")
        if np.any(groups < 0):
            raise FitError("every training sample must be labelled")
        if np.any(groups >= nc):
            raise FitError(f"labels must lie in [0, {nc})")
    else:
        groups = np.argmax(z, axis=1)

    h = _check_per_class(h, nc, "h").astype(float)
    if mode == "map":
        if nbins is None:
            raise ParameterError("MAP mode needs nbins per class")
        nbins = _check_per_class(nbins, nc, "nbins")

    names = tuple(class_names) if class_names is not None else None
    likelihoods, priors = [], []
    for i in range(nc):
        values = z[groups == i, i]
        if values.size < 2:
            name = names[i] if names else f"class {i}"
            raise FitError(f"{name} has {values.size} training samples; at least 2 are needed")
        likelihoods.append(fit_kde(values, h[i]))
        if mode == "map":
            priors.append(fit_histogram(values, nbins[i]))
    return BayesScorer(
        tuple(likelihoods),
        tuple(priors) if mode == "map" else None,
        lam,
        mode,
        names,
    )


def softmax(logits):
    """Exp-normalize along the last axis, shifted by the maximum."""
    z = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ParameterError("logits must be finite")
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def smoothed_normalize(terms, lam):
    """``(terms + lam) / sum(terms + lam)`` along the last axis.

    Rows whose smoothed terms are all equal map to exactly ``1 / nc``; this
    covers the all-zero row possible with ``lam = 0`` (the ``lam -> 0+``
    limit).
    """
    t = np.asarray(terms, dtype=float) + lam
    total = t.sum(axis=-1, keepdims=True)
    nc = t.shape[-1]
    uniform = np.all(t == t[..., :1], axis=-1, keepdims=True) | (total <= 0)
    safe = np.where(uniform, 1.0, total)
    return np.where(uniform, 1.0 / nc, t / safe)


def ml_score(scorer: BayesScorer, logits):
    """Normalized, lambda-smoothed likelihood CDFs."""
    z = _logit_matrix(logits, scorer.nc)
    out = smoothed_normalize(scorer.likelihood_terms(z), scorer.lam)
    return _restore(out, logits)


def map_score(scorer: BayesScorer, logits):
    """Normalized, lambda-smoothed products of likelihood and prior CDFs."""
    if scorer.priors is None:
        raise NotFittedError("MAP scoring requested on a scorer fitted without priors")
    z = _logit_matrix(logits, scorer.nc)
    terms = scorer.likelihood_terms(z) * scorer.prior_terms(z)
    out = smoothed_normalize(terms, scorer.lam)
    return _restore(out, logits)


def predict(rule, logits):
    """Return ``(class_index, scores)`` under ``rule``.

    ``rule`` is ``"softmax"``, a :class:`BayesScorer` (its own mode), or a
    ``(scorer, "ml" | "map")`` pair. A matrix of logits gives arrays back.
    Ties go to the lowest class index.
    """
    if isinstance(rule, str):
        if rule != "softmax":
            raise ParameterError(f"unknown rule {rule!r}; pass 'softmax' or a BayesScorer")
        scores = softmax(_logit_matrix(logits))
    elif isinstance(rule, BayesScorer):
        scores = rule.score(logits)
    else:
        scorer, mode = rule
        if mode == "ml":
            scores = ml_score(scorer, logits)
        elif mode == "map":
            scores = map_score(scorer, logits)
        else:
            raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    scores = np.atleast_2d(scores)
    cls = np.argmax(scores, axis=1)
    if np.ndim(logits) == 1:
        return int(cls[0]), scores[0]
    return cls, scores
