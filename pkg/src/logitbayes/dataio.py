"""Logit tables, model files and tuning outputs.

Logit CSV layout::

    id,label,logit_<class0>,logit_<class1>,...

``label`` holds a class index (or class name) and may be empty for
unlabelled rows. Models and reports are JSON; floats are written with
``repr`` precision so reloading reproduces them exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .density import KdeModel, NhModel
from .exceptions import FitError, ModelFormatError, ParameterError, ParseError
from .inference import BayesScorer, LogitSample

__all__ = [
    "LogitTable",
    "read_logits",
    "write_logits",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
    "write_json",
    "file_digest",
    "MODEL_FORMAT",
    "MODEL_VERSION",
]

MODEL_FORMAT = "logitbayes-model"
MODEL_VERSION = 1
_PREFIX = "logit_"


@dataclass(frozen=True, eq=False)
class LogitTable:
    """Logit vectors with their ids and labels (-1 where unknown)."""

    class_names: tuple
    ids: tuple
    logits: np.ndarray
    labels: np.ndarray

    @property
    def nc(self) -> int:
        return len(self.class_names)

    def __len__(self):
        return len(self.ids)

    @property
    def is_labelled(self) -> bool:
        return bool(len(self) and np.all(self.labels >= 0))

    def samples(self):
        return [
            LogitSample(i, z, None if y < 0 else int(y))
            for i, z, y in zip(self.ids, self.logits, self.labels)
        ]

    def split(self):
        """``(logits, labels)`` for the tuner and ``fit_scorer``."""
        return self.logits, self.labels


def _parse_label(raw, names, lineno, path):
    raw = raw.strip()
    if raw == "":
        return -1
    if raw in names:
        return names.index(raw)
    try:
        value = int(raw)
    except ValueError:
        raise ParseError(f"label {raw!r} is neither a class index nor a class name", lineno, path) from None
    if not 0 <= value < len(names):
        raise ParseError(f"label {value} is outside [0, {len(names)})", lineno, path)
    return value


def read_logits(path, class_names=None) -> LogitTable:
    """Parse a logit CSV; diagnostics carry the offending line number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1, path) from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "id" or header[1] != "label" or not all(
            h.startswith(_PREFIX) and len(h) > len(_PREFIX) for h in header[2:]
        ):
            raise ParseError(f"header must be 'id,label,{_PREFIX}<class>,...', got {','.join(header)!r}", 1, path)
        names = [h[len(_PREFIX):] for h in header[2:]]
        if class_names is not None and list(class_names) != names:
            raise ParseError(f"classes {names} do not match expected {list(class_names)}", 1, path)
        width = len(header)
        ids, rows, labels = [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} columns, got {len(row)}", lineno, path)
            try:
                z = [float(v) for v in row[2:]]
            except ValueError:
                raise ParseError("non-numeric logit value", lineno, path) from None
            if not all(math.isfinite(v) for v in z):
                raise ParseError("non-finite logit value", lineno, path)
            ids.append(row[0])
            rows.append(z)
            labels.append(_parse_label(row[1], names, lineno, path))
    logits = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return LogitTable(tuple(names), tuple(ids), logits, np.array(labels, dtype=int))


def write_logits(table: LogitTable, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"] + [_PREFIX + n for n in table.class_names])
        for i, z, y in zip(table.ids, table.logits, table.labels):
            writer.writerow([i, "" if y < 0 else int(y)] + [repr(float(v)) for v in z])


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _timestamp():
    # reproducible-builds convention; absent means no timestamp is recorded
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    return int(epoch) if epoch and epoch.isdigit() else None


def model_to_dict(scorer: BayesScorer, provenance: Optional[dict] = None) -> dict:
    prov = {"inputs": {}, "seed": None, "timestamp": _timestamp()}
    prov.update(provenance or {})
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": scorer.mode,
        "nc": scorer.nc,
        "class_names": list(scorer.class_names),
        "lambda": scorer.lam,
        "likelihoods": [
            {"h": m.h, "observations": m.observations.tolist()} for m in scorer.likelihoods
        ],
        "priors": None if scorer.priors is None else [
            {"edges": m.edges.tolist(), "masses": m.masses.tolist()} for m in scorer.priors
        ],
        "provenance": prov,
    }


def model_from_dict(doc) -> BayesScorer:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a logitbayes model file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}; this reader handles {MODEL_VERSION}")
    try:
        nc = int(doc["nc"])
        likelihoods = tuple(KdeModel(np.array(m["observations"], dtype=float), m["h"]) for m in doc["likelihoods"])
        priors = doc.get("priors")
        if priors is not None:
            priors = tuple(NhModel(np.array(m["edges"], dtype=float), np.array(m["masses"], dtype=float)) for m in priors)
        scorer = BayesScorer(likelihoods, priors, doc["lambda"], doc["mode"], tuple(doc["class_names"]))
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"model file is missing or mistypes a field: {exc}") from None
    except (FitError, ParameterError) as exc:
        raise ModelFormatError(f"model file violates an invariant: {exc}") from None
    if scorer.nc != nc:
        raise ModelFormatError(f"model declares nc={nc} but holds {scorer.nc} likelihoods")
    return scorer


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, allow_nan=False)
        fh.write("\n")


def save_model(scorer: BayesScorer, path, provenance: Optional[dict] = None):
    write_json(model_to_dict(scorer, provenance), path)


def load_model(path) -> BayesScorer:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(doc)
