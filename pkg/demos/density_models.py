"""Kernel and histogram CDFs on one sample of logit values.

Run with ``python3 demos/density_models.py``.
"""

import numpy as np

from logitbayes import fit_histogram, fit_kde, kde_cdf, nh_cdf

rng = np.random.default_rng(0)
values = np.concatenate([rng.normal(2.0, 0.6, 300), rng.normal(5.0, 1.0, 100)])

queries = np.array([0.0, 1.5, 2.0, 3.0, 4.5, 6.0, 9.0])
print("query   " + "  ".join(f"{q:6.2f}" for q in queries))

# Small bandwidths follow the sample closely; large ones smear it out.
for h in (0.05, 0.3, 2.0):
    cdf = kde_cdf(fit_kde(values, h), queries)
    print(f"kde {h:<4}" + "  ".join(f"{v:6.3f}" for v in cdf))

# The histogram CDF is piecewise linear and exactly 0 / 1 outside its edges.
for nbins in (4, 16):
    nh = fit_histogram(values, nbins)
    print(f"nh {nbins:<5}" + "  ".join(f"{v:6.3f}" for v in nh_cdf(nh, queries)))

empirical = np.searchsorted(np.sort(values), queries, side="right") / values.size
print("ecdf    " + "  ".join(f"{v:6.3f}" for v in empirical))
