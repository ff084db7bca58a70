"""Tune ML and MAP hyper-parameters and compare them against softmax.

The synthetic logits come from an imbalanced three-class problem in which
the majority class is over-confident. A reduced generation budget keeps the
run to about a minute; pass ``--full`` for 100 generations per variable.
"""

import logging
import sys

from logitbayes import GaConfig, evaluate, fit_scorer, format_comparison, predict, tune
from logitbayes.synthetic import CLASS_NAMES, make_splits

logging.basicConfig(level=logging.WARNING)
generations = None if "--full" in sys.argv else 50

train, val, test = make_splits(seed=0)
reports = {"softmax": evaluate(predict("softmax", test[0])[0], test[1], 3)}

for mode in ("ml", "map"):
    result = tune(train, val, mode, config=GaConfig(max_generations=generations, seed=0),
                  class_names=CLASS_NAMES)
    p = result.params
    print(f"{mode}: {p.to_dict(CLASS_NAMES)}")
    print(f"    validation cost {result.history[0]:.4f} -> {result.history[-1]:.4f}")
    scorer = fit_scorer(train[0], p.h, p.nbins, p.lam, mode, labels=train[1])
    reports[mode] = evaluate(predict(scorer, test[0])[0], test[1], 3)

print()
print(format_comparison(reports, CLASS_NAMES))
