"""One-dimensional density models over logit values.

Two families are provided, both evaluated through their cumulative
distribution function:

* :class:`KdeModel`, a Gaussian kernel density estimate. Its CDF is the
  average of normal CDFs centred on each observation.
* :class:`NhModel`, an equal-width normalized histogram with a
  piecewise-linear CDF.

Models are immutable once fitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .exceptions import FitError, ParameterError

__all__ = [
    "KdeModel",
    "NhModel",
    "fit_kde",
    "kde_cdf",
    "kde_pdf",
    "fit_histogram",
    "nh_cdf",
]

# Beyond this many bandwidths a Gaussian CDF term is 1.0 in float64 on the
# upper side and below 1e-17 on the lower side.
_TAIL_Z = 8.5
# Observations are grouped in boxes of _BOX * h; with 16 expansion terms the
# truncation error per observation is below 1e-17.
_BOX = 0.5
_ORDER = 16
_DIRECT_MAX = 4
_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _as_finite_1d(values, what):
    arr = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{what} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class KdeModel:
    """Gaussian KDE over scalar observations with bandwidth ``h``.

    ``observations`` are kept in the order given. A sorted copy is cached
    for evaluation.
    """

    observations: np.ndarray
    h: float
    _sorted: np.ndarray = field(init=False, repr=False)
    _boxes: tuple = field(init=False, repr=False)

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float).ravel()
        if obs.size == 0:
            raise FitError("KDE needs at least one observation")
        if not np.all(np.isfinite(obs)):
            raise FitError("KDE observations must be finite")
        h = float(self.h)
        if not (math.isfinite(h) and h > 0):
            raise ParameterError(f"bandwidth must be finite and > 0, got {self.h!r}")
        obs = obs.copy()
        obs.flags.writeable = False
        srt = np.sort(obs)
        srt.flags.writeable = False
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "_sorted", srt)
        object.__setattr__(self, "_boxes", _build_boxes(srt, h, _BOX * h, _ORDER))

    @property
    def n(self) -> int:
        return int(self.observations.size)

    def cdf(self, d):
        return kde_cdf(self, d)

    def pdf(self, d):
        return kde_pdf(self, d)


@dataclass(frozen=True, eq=False)
class NhModel:
    """Equal-width normalized histogram.

    Attributes
    ----------
    edges : ndarray, shape (nbins + 1,)
        Strictly increasing bin boundaries.
    masses : ndarray, shape (nbins,)
        Probability mass per bin; sums to one.
    cumulative : ndarray, shape (nbins,)
        Running sums of ``masses``.
    """

    edges: np.ndarray
    masses: np.ndarray
    cumulative: np.ndarray = field(init=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float).ravel().copy()
        masses = np.asarray(self.masses, dtype=float).ravel().copy()
        if masses.size < 1 or edges.size != masses.size + 1:
            raise FitError(
                f"histogram needs nbins >= 1 and nbins + 1 edges, got "
                f"{edges.size} edges for {masses.size} masses"
            )
        if not (np.all(np.isfinite(edges)) and np.all(np.isfinite(masses))):
            raise FitError("histogram edges and masses must be finite")
        if np.any(np.diff(edges) <= 0):
            raise FitError("histogram edges must be strictly increasing")
        if np.any(masses < 0):
            raise FitError("histogram masses must be non-negative")
        total = math.fsum(masses)
        if abs(total - 1.0) > 1e-12:
            raise FitError(f"histogram masses sum to {total!r}, expected 1")
        cumulative = np.cumsum(masses)
        for arr in (edges, masses, cumulative):
            arr.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "cumulative", cumulative)

    @property
    def nbins(self) -> int:
        return int(self.masses.size)

    def cdf(self, d):
        return nh_cdf(self, d)


def fit_kde(values, h) -> KdeModel:
    """Store ``values`` and bandwidth ``h`` as a Gaussian KDE.

    Raises
    ------
    FitError
        If ``values`` is empty or contains non-finite entries.
    ParameterError
        If ``h`` is not a finite positive number.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise FitError("cannot fit a KDE on an empty sample")
    return KdeModel(values, h)


@numba.njit(cache=True)
def _build_boxes(sorted_obs, h, width, order):
    """Group sorted observations into boxes of ``width`` and take moments.

    Returns box centres, start offsets into ``sorted_obs`` (with a trailing
    sentinel) and ``moments[b, k] = sum(((x - c_b) / h) ** k / k!)`` for
    ``k = 1 .. order - 1``.
    """
    n = sorted_obs.size
    half = 0.5 * width
    starts = np.empty(n + 1, dtype=np.int64)
    centers = np.empty(n)
    nbox = 0
    for i in range(n):
        # greedy boxes anchored at their first point keep |x - c| <= width / 2
        if nbox == 0 or sorted_obs[i] - centers[nbox - 1] > half:
            starts[nbox] = i
            centers[nbox] = sorted_obs[i] + half
            nbox += 1
    starts[nbox] = n
    moments = np.zeros((nbox, order))
    for b in range(nbox):
        c = centers[b]
        for i in range(starts[b], starts[b + 1]):
            s = (sorted_obs[i] - c) / h
            term = 1.0
            for k in range(1, order):
                term *= s / k
                moments[b, k] += term
    return centers[:nbox].copy(), starts[: nbox + 1].copy(), moments


@numba.njit(cache=True)
def _gauss_cdf_mean(sorted_obs, centers, starts, moments, queries, h, reach, direct_max):
    n = sorted_obs.size
    order = moments.shape[1]
    out = np.empty(queries.size)
    for j in range(queries.size):
        d = queries[j]
        lo = np.searchsorted(centers, d - reach * h)
        hi = np.searchsorted(centers, d + reach * h, side="right")
        # boxes entirely left of the window contribute exactly one per point
        acc = float(starts[lo])
        for b in range(lo, hi):
            first = starts[b]
            last = starts[b + 1]
            if last - first <= direct_max:
                for i in range(first, last):
                    acc += 0.5 * math.erfc((sorted_obs[i] - d) / h * _INV_SQRT2)
                continue
            t = (d - centers[b]) / h
            # Phi(t - s) = Phi(t) - phi(t) * sum_k s^k / k! He_{k-1}(t)
            he_prev = 1.0
            he = t
            series = moments[b, 1]
            for k in range(2, order):
                series += moments[b, k] * he
                he, he_prev = t * he - (k - 1) * he_prev, he
            pdf = math.exp(-0.5 * t * t) * _INV_SQRT2PI
            acc += (last - first) * 0.5 * math.erfc(-t * _INV_SQRT2) - pdf * series
        out[j] = acc / n
    return out


def _scalar_or_array(arr, like):
    if np.ndim(like) == 0:
        return float(arr[0])
    return arr.reshape(np.shape(like))


def kde_cdf(model: KdeModel, d):
    """CDF of the Gaussian KDE at ``d`` (scalar or array).

    Computes ``mean_i Phi((d - x_i) / h)``. Terms more than 8.5 bandwidths
    away are taken as their float64 limit and dense groups of nearby
    observations are summed through a Hermite expansion of ``Phi``; the
    result agrees with the term-by-term sum to about 1e-15.
    """
    q = _as_finite_1d(d, "query point")
    centers, starts, moments = model._boxes
    out = _gauss_cdf_mean(
        model._sorted, centers, starts, moments, q, model.h,
        _TAIL_Z + _BOX, _DIRECT_MAX,
    )
    return _scalar_or_array(out, d)


def kde_pdf(model: KdeModel, d):
    """Density of the Gaussian KDE at ``d``; used for plotting and checks."""
    q = _as_finite_1d(d, "query point")
    z = (q[:, None] - model.observations[None, :]) / model.h
    out = np.exp(-0.5 * z * z).sum(axis=1) / (model.n * model.h * math.sqrt(2 * math.pi))
    return _scalar_or_array(out, d)


def _nominal_width(value):
    return max(1e-9, abs(value) * 1e-9)


def fit_histogram(values, nbins) -> NhModel:
    """Equal-width histogram over ``[min(values), max(values)]``.

    When every value is identical a single bin of width
    ``max(1e-9, |v| * 1e-9)`` centred on the value is used instead.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise FitError("cannot fit a histogram on an empty sample")
    if not np.all(np.isfinite(values)):
        raise FitError("histogram values must be finite")
    if isinstance(nbins, bool) or int(nbins) != nbins or nbins < 1:
        raise ParameterError(f"nbins must be an integer >= 1, got {nbins!r}")
    nbins = int(nbins)

    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        half = 0.5 * _nominal_width(lo)
        return NhModel(np.array([lo - half, lo + half]), np.array([1.0]))

    edges = np.linspace(lo, hi, nbins + 1)
    if np.any(np.diff(edges) <= 0):
        raise FitError(f"range [{lo!r}, {hi!r}] is too narrow for {nbins} bins")
    counts, _ = np.histogram(values, bins=edges)
    return NhModel(edges, counts / values.size)


def nh_cdf(model: NhModel, d):
    """Piecewise-linear CDF of a normalized histogram at ``d``.

    Zero at or below the first edge, one at or above the last edge, and
    linear inside each bin.
    """
    q = _as_finite_1d(d, "query point")
    edges, masses, cum = model.edges, model.masses, model.cumulative
    k = np.clip(np.searchsorted(edges, q, side="right") - 1, 0, masses.size - 1)
    before = np.where(k > 0, cum[k - 1], 0.0)
    frac = (q - edges[k]) / (edges[k + 1] - edges[k])
    out = np.minimum(before + masses[k] * frac, 1.0)
    out = np.where(q <= edges[0], 0.0, out)
    out = np.where(q >= edges[-1], 1.0, out)
    return _scalar_or_array(out, d)
