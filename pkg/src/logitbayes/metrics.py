"""Confusion matrix, one-vs-rest FPR / F-score and the tuning cost."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError

__all__ = ["EvalReport", "confusion_matrix", "evaluate", "format_comparison"]


def _indices(values, nc, what):
    arr = np.asarray(values)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ParameterError(f"{what} must be integer class indices")
    arr = arr.astype(int)
    bad = (arr < 0) | (arr >= nc)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        raise ParameterError(f"{what}[{first}] = {arr[first]} is outside [0, {nc})")
    return arr


def confusion_matrix(predictions, labels, nc) -> np.ndarray:
    """Counts with rows = ground truth and columns = prediction."""
    nc = int(nc)
    if nc < 1:
        raise ParameterError("nc must be >= 1")
    p = _indices(predictions, nc, "predictions")
    t = _indices(labels, nc, "labels")
    if p.size != t.size:
        raise ParameterError(f"{p.size} predictions for {t.size} labels")
    cm = np.zeros((nc, nc), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Classification summary; FPR and F1 are fractions in [0, 1]."""

    confusion: np.ndarray
    fpr_per_class: np.ndarray
    fpr_macro: float
    f1_per_class: np.ndarray
    f1_macro: float
    cost: float

    @property
    def nc(self) -> int:
        return int(self.confusion.shape[0])

    @property
    def n_samples(self) -> int:
        return int(self.confusion.sum())

    def to_dict(self, class_names=None):
        names = list(class_names) if class_names is not None else [str(i) for i in range(self.nc)]
        return {
            "classes": names,
            "n_samples": self.n_samples,
            "confusion": self.confusion.tolist(),
            "fpr_per_class": [float(v) for v in self.fpr_per_class],
            "f1_per_class": [float(v) for v in self.f1_per_class],
            "fpr_macro": float(self.fpr_macro),
            "f1_macro": float(self.f1_macro),
            "cost": float(self.cost),
        }


def evaluate(predictions, labels, nc) -> EvalReport:
    """One-vs-rest FPR and F1 per class, their macro means and the cost.

    ``cost = (1 - f1_macro) + fpr_macro``. A class with no true or predicted
    members gets F1 = 0; a class with ``FP + TN = 0`` gets FPR = 0.
    """
    cm = confusion_matrix(predictions, labels, nc)
    total = cm.sum()
    tp = np.diag(cm).astype(float)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    tn = total - tp - fp - fn

    with np.errstate(divide="ignore", invalid="ignore"):
        fpr = np.where(fp + tn > 0, fp / (fp + tn), 0.0)
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
        pr = precision + recall
        f1 = np.where(pr > 0, 2 * precision * recall / pr, 0.0)

    fpr_macro = float(np.mean(fpr))
    f1_macro = float(np.mean(f1))
    return EvalReport(cm, fpr, fpr_macro, f1, f1_macro, (1.0 - f1_macro) + fpr_macro)


def format_comparison(reports, class_names=None) -> str:
    """Aligned text table of macro FPR / F-score (percent) per rule.

    ``reports`` maps a rule name to its :class:`EvalReport`.
    """
    rows = [("rule", "FPR %", "F-score %", "cost")]
    for name, rep in reports.items():
        rows.append((name, f"{100 * rep.fpr_macro:.4f}", f"{100 * rep.f1_macro:.2f}", f"{rep.cost:.6f}"))
    if class_names is not None:
        for name, rep in reports.items():
            for i, cname in enumerate(class_names):
                rows.append(
                    (f"{name}:{cname}", f"{100 * rep.fpr_per_class[i]:.4f}",
                     f"{100 * rep.f1_per_class[i]:.2f}", "")
                )
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    lines = ["  ".join(cell.rjust(w) if c else cell.ljust(w) for c, (cell, w) in enumerate(zip(r, widths))).rstrip()
             for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
