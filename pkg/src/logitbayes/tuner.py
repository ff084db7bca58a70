"""Genetic-algorithm search for per-class bandwidths, bin counts and lambda.

The chromosome is a real vector ``[h_1..h_nc, (nbins_1..nbins_nc,) lam]``.
Bin-count genes stay real during search and are rounded when decoded, so
every emitted :class:`HyperParams` holds integers inside the bounds.

One generation keeps ``elite_count`` incumbents, fills
``crossover_fraction`` of the remaining slots with scattered crossover of
two tournament winners and the rest with Gaussian mutation of a single
tournament winner.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import LogitBayesError, ParameterError
from .inference import MODES, _logit_matrix, fit_scorer, predict
from .metrics import EvalReport, evaluate

__all__ = ["HyperParams", "Bounds", "GaConfig", "TuneResult", "fitness", "tune", "n_variables"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperParams:
    """Per-class bandwidths, per-class bin counts (MAP only) and lambda."""

    h: tuple
    lam: float
    nbins: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))
        object.__setattr__(self, "lam", float(self.lam))
        if self.nbins is not None:
            object.__setattr__(self, "nbins", tuple(int(v) for v in self.nbins))

    @property
    def mode(self) -> str:
        return "ml" if self.nbins is None else "map"

    def to_dict(self, class_names=None):
        names = list(class_names) if class_names is not None else [str(i) for i in range(len(self.h))]
        out = {"mode": self.mode, "h": dict(zip(names, self.h)), "lambda": self.lam}
        if self.nbins is not None:
            out["nbins"] = dict(zip(names, self.nbins))
        return out


@dataclass(frozen=True)
class Bounds:
    """Search intervals; the defaults bracket every published setting."""

    h: tuple = (0.01, 5.0)
    lam: tuple = (1e-9, 1e-5)
    nbins: tuple = (2, 64)

    def __post_init__(self):
        for name in ("h", "lam", "nbins"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ParameterError(f"{name} bounds must be finite with lower <= upper, got ({lo}, {hi})")
        if self.h[0] <= 0:
            raise ParameterError("bandwidth lower bound must be > 0")
        if self.lam[0] < 0:
            raise ParameterError("lambda lower bound must be >= 0")
        if self.nbins[0] < 1 or int(self.nbins[0]) != self.nbins[0] or int(self.nbins[1]) != self.nbins[1]:
            raise ParameterError("nbins bounds must be integers >= 1")

    def vectors(self, nc, mode):
        lo = [self.h[0]] * nc
        hi = [self.h[1]] * nc
        if mode == "map":
            lo += [self.nbins[0]] * nc
            hi += [self.nbins[1]] * nc
        lo.append(self.lam[0])
        hi.append(self.lam[1])
        return np.array(lo, dtype=float), np.array(hi, dtype=float)


def n_variables(nc, mode) -> int:
    return 2 * nc + 1 if mode == "map" else nc + 1


@dataclass(frozen=True)
class GaConfig:
    """Genetic-algorithm settings.

    ``max_generations=None`` means 100 times the number of variables.
    ``mutation_scale`` is the Gaussian standard deviation as a fraction of
    each gene's bound range. ``stall_generations`` enables early stopping
    after that many generations without an improvement above ``stall_tol``.
    """

    population_size: int = 200
    crossover_fraction: float = 0.8
    max_generations: Optional[int] = None
    elite_count: int = 2
    mutation_scale: float = 0.1
    tournament_size: int = 2
    stall_generations: Optional[int] = None
    stall_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ParameterError("population_size must be >= 2")
        if not 0.0 <= self.crossover_fraction <= 1.0:
            raise ParameterError("crossover_fraction must lie in [0, 1]")
        if self.max_generations is not None and self.max_generations < 1:
            raise ParameterError("max_generations must be >= 1")
        if self.elite_count < 0 or self.tournament_size < 1 or self.mutation_scale < 0:
            raise ParameterError("elite_count, tournament_size and mutation_scale must be non-negative")

    def generations_for(self, nvars) -> int:
        return self.max_generations if self.max_generations is not None else 100 * nvars


class TuneResult(NamedTuple):
    params: HyperParams
    report: EvalReport
    history: list


def _split(data, labels=None):
    """Accept ``(logits, labels)`` pairs or a logits matrix plus labels."""
    if labels is None:
        data, labels = data
    z = _logit_matrix(data)
    y = np.asarray(labels, dtype=int).ravel()
    if z.shape[0] == 0:
        raise ParameterError("empty data split")
    if y.size != z.shape[0]:
        raise ParameterError(f"{y.size} labels for {z.shape[0]} samples")
    if np.any(y < 0) or np.any(y >= z.shape[1]):
        raise ParameterError("every sample in a tuning split needs a label in [0, nc)")
    return z, y


def fitness(params: HyperParams, train, val, mode=None, class_names=None, condition="label") -> float:
    """Validation cost of a scorer fitted on ``train`` with ``params``.

    ``train`` and ``val`` are ``(logits, labels)`` pairs. Parameter sets
    that cannot be fitted score ``+inf``.
    """
    mode = mode or params.mode
    ztr, ytr = _split(train)
    zva, yva = _split(val)
    return _Problem(ztr, ytr, zva, yva, mode, class_names, condition).cost(params)


class _Problem:
    def __init__(self, ztr, ytr, zva, yva, mode, class_names, condition):
        if mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
        if ztr.shape[1] != zva.shape[1]:
            raise ParameterError("train and validation splits have different class counts")
        self.ztr, self.ytr, self.zva, self.yva = ztr, ytr, zva, yva
        self.nc = ztr.shape[1]
        self.mode = mode
        self.class_names = class_names
        self.condition = condition

    def scorer(self, params):
        return fit_scorer(
            self.ztr, params.h, params.nbins, params.lam, self.mode,
            labels=self.ytr, class_names=self.class_names, condition=self.condition,
        )

    def report(self, params) -> EvalReport:
        pred, _ = predict(self.scorer(params), self.zva)
        return evaluate(pred, self.yva, self.nc)

    def cost(self, params) -> float:
        try:
            return self.report(params).cost
        except LogitBayesError:
            return math.inf


def _decode(x, nc, mode, lo, hi) -> HyperParams:
    x = np.clip(x, lo, hi)
    h = tuple(float(v) for v in x[:nc])
    nbins = None
    if mode == "map":
        nbins = tuple(int(np.clip(np.rint(v), lo[nc], hi[nc])) for v in x[nc:2 * nc])
    return HyperParams(h, float(x[-1]), nbins)


def _tournament(rng, costs, k, size):
    picks = rng.integers(0, costs.size, size=(k, size))
    # lowest cost wins; ties go to the earlier entrant
    return picks[np.arange(k), np.argmin(costs[picks], axis=1)]


def tune(train, val, mode="ml", bounds: Bounds = None, config: GaConfig = None,
         class_names=None, condition="label") -> TuneResult:
    """Minimize ``(1 - F1) + FPR`` on ``val`` over scorer hyper-parameters.

    Parameters
    ----------
    train, val : tuple
        ``(logits, labels)`` pairs; densities are fitted on ``train`` and
        the cost is measured on ``val``.
    mode : {"ml", "map"}
    bounds : Bounds, optional
    config : GaConfig, optional

    Returns
    -------
    TuneResult
        Best parameters, their validation report, and the best cost after
        the initial population and after every generation.
    """
    bounds = bounds or Bounds()
    config = config or GaConfig()
    ztr, ytr = _split(train)
    zva, yva = _split(val)
    problem = _Problem(ztr, ytr, zva, yva, mode, class_names, condition)
    nc = problem.nc
    lo, hi = bounds.vectors(nc, mode)
    span = hi - lo
    nvars = lo.size
    pop_size = config.population_size
    n_elite = min(config.elite_count, pop_size)
    n_cross = int(round(config.crossover_fraction * (pop_size - n_elite)))
    n_mut = pop_size - n_elite - n_cross
    generations = config.generations_for(nvars)

    cache = {}

    def evaluate_population(pop):
        out = np.empty(len(pop))
        for i, x in enumerate(pop):
            params = _decode(x, nc, mode, lo, hi)
            if params not in cache:
                cache[params] = problem.cost(params)
            out[i] = cache[params]
        return out

    seeds = np.random.SeedSequence(config.seed)
    rng = np.random.default_rng(seeds.spawn(1)[0])
    pop = lo + rng.random((pop_size, nvars)) * span
    costs = evaluate_population(pop)
    best = int(np.argmin(costs))
    best_x, best_cost = pop[best].copy(), float(costs[best])
    history = [best_cost]
    log.info("generation 0: best cost %.6f", best_cost)

    stall = 0
    gen_seeds = seeds.spawn(generations)
    for gen in range(1, generations + 1):
        rng = np.random.default_rng(gen_seeds[gen - 1])
        order = np.argsort(costs, kind="stable")
        children = [pop[order[:n_elite]]]
        if n_cross:
            a = pop[_tournament(rng, costs, n_cross, config.tournament_size)]
            b = pop[_tournament(rng, costs, n_cross, config.tournament_size)]
            mask = rng.random((n_cross, nvars)) < 0.5
            children.append(np.where(mask, a, b))
        if n_mut:
            parents = pop[_tournament(rng, costs, n_mut, config.tournament_size)]
            noise = rng.standard_normal((n_mut, nvars)) * (config.mutation_scale * span)
            children.append(np.clip(parents + noise, lo, hi))
        pop = np.vstack(children)
        costs = evaluate_population(pop)

        gbest = int(np.argmin(costs))
        improved = costs[gbest] < best_cost - config.stall_tol
        if costs[gbest] < best_cost:
            best_x, best_cost = pop[gbest].copy(), float(costs[gbest])
        history.append(best_cost)
        log.info("generation %d: best cost %.6f", gen, best_cost)

        stall = 0 if improved else stall + 1
        if config.stall_generations is not None and stall >= config.stall_generations:
            log.info("stopping after %d stalled generations", stall)
            break

    params = _decode(best_x, nc, mode, lo, hi)
    return TuneResult(params, problem.report(params), history)
