"""Softmax, ML and MAP scores for a handful of logit vectors.

Run with ``python3 demos/bayes_rules.py``.
"""

import numpy as np

from logitbayes import fit_scorer, predict
from logitbayes.synthetic import CLASS_NAMES, make_splits

(train_z, train_y), _, (test_z, test_y) = make_splits(seed=3, sizes=(3000, 1, 8))

scorer = fit_scorer(train_z, h=(0.6, 0.4, 0.5), nbins=(12, 8, 8), lam=1e-7, mode="map",
                    labels=train_y, class_names=CLASS_NAMES)

np.set_printoptions(precision=3, suppress=True)
for rule in ("softmax", (scorer, "ml"), (scorer, "map")):
    name = rule if isinstance(rule, str) else rule[1]
    cls, scores = predict(rule, test_z)
    print(f"\n{name}")
    for z, y, c, s in zip(test_z, test_y, cls, scores):
        mark = " " if c == y else "*"
        print(f"  logits {z}  true {CLASS_NAMES[y]:<10} -> {CLASS_NAMES[c]:<10}{mark} {s}")

# Far below every training value all likelihood terms vanish, so lambda
# alone decides and the scores are uniform.
print("\nfar below the data:", scorer.score([-50.0, -50.0, -50.0]))
