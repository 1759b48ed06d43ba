"""NSGA-II, an equal-weight single-objective baseline, and fuzzy best-compromise selection.

Everything here minimizes.  Randomness comes from one `numpy` generator per
generation, spawned from the master seed, and objective evaluation never
touches the generator; results therefore do not depend on how many workers
evaluate a generation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .avrloop import AvrModel
from .fracops import FopidParams, OustaloupConfig, Regime
from .objectives import CaseEvaluator, CaseSpec, ObjectiveVector

GAIN_BOUNDS = (0.0, 10.0)
# open lower bounds of the order ranges are approached to within this
ORDER_EPS = 1e-6


@dataclass(frozen=True)
class MooConfig:
    population: int = 100
    generations: int = 1200
    pareto_fraction: float = 0.7
    crossover_fraction: float = 0.8
    mutation_fraction: float = 0.2
    seed: int = 0
    sbx_index: float = 15.0
    mutation_index: float = 20.0
    workers: int = 1

    def __post_init__(self):
        if self.population < 4 or self.population % 2:
            raise ValueError("population must be an even number >= 4")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not (0 < self.pareto_fraction <= 1):
            raise ValueError("pareto_fraction must lie in (0, 1]")
        for name in ("crossover_fraction", "mutation_fraction"):
            if not (0 <= getattr(self, name) <= 1):
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


DESK_SCALE = dict(population=40, generations=60)
PAPER_SCALE = dict(population=100, generations=1200)


@dataclass(frozen=True)
class Individual:
    genome: FopidParams
    objectives: ObjectiveVector
    rank: int = 1
    crowding: float = math.inf


@dataclass(frozen=True)
class CompromiseReport:
    memberships: np.ndarray  # (n_solutions, n_objectives)
    satisfaction: np.ndarray  # normalized, sums to 1
    selected: int


# -- sorting and diversity ---------------------------------------------------


def _values(points) -> np.ndarray:
    rows = [getattr(p, "values", p) for p in points]
    if not rows:
        return np.empty((0, 0))
    return np.asarray(rows, dtype=float).reshape(len(rows), -1)


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_sort(points) -> list[list[int]]:
    """Partition `points` into Pareto fronts (lists of indices, best first)."""
    F = _values(points)
    n = len(F)
    if n == 0:
        return []
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(count == 0)
    while current.size:
        fronts.append(current.tolist())
        count = count - dom[current].sum(axis=0)
        count[current] = -1
        current = np.flatnonzero(count == 0)
    return fronts


def crowding_distance(front) -> np.ndarray:
    """NSGA-II crowding distance; the extreme members of each objective get inf."""
    F = _values(front)
    n, m = F.shape
    d = np.zeros(n)
    if n <= 2:
        d[:] = math.inf
        return d
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        f = F[order, k]
        d[order[0]] = d[order[-1]] = math.inf
        span = f[-1] - f[0]
        if span > 0:
            d[order[1:-1]] += (f[2:] - f[:-2]) / span
    return d


def hypervolume(points, ref) -> float:
    """Dominated hypervolume of a minimization front w.r.t. reference `ref`."""
    P = _values(points)
    ref = np.asarray(ref, dtype=float)
    if P.size == 0:
        return 0.0
    P = P[np.all(P < ref, axis=1)]
    if P.size == 0:
        return 0.0
    if P.shape[1] == 1:
        return float(ref[0] - P[:, 0].min())
    # slice along the last objective
    P = P[np.argsort(P[:, -1], kind="stable")]
    hv = 0.0
    for i in range(len(P)):
        upper = P[i + 1, -1] if i + 1 < len(P) else ref[-1]
        depth = upper - P[i, -1]
        if depth > 0:
            hv += depth * hypervolume(P[: i + 1, :-1], ref[:-1])
    return float(hv)


# -- fuzzy selection ----------------------------------------------------------


def fuzzy_membership(f: float, f_min: float, f_max: float) -> float:
    """Linear decreasing membership: 1 at or below `f_min`, 0 at or above `f_max`."""
    if f_min > f_max:
        raise ValueError("f_min must not exceed f_max")
    if f_min == f_max:
        return 1.0
    if f <= f_min:
        return 1.0
    if f >= f_max:
        return 0.0
    return (f_max - f) / (f_max - f_min)


def best_compromise(front) -> CompromiseReport:
    """Pick the member with the largest normalized fuzzy satisfaction.

    Memberships are taken per objective against the front's own minimum and
    maximum; ties go to the lowest index.
    """
    F = _values(front)
    if F.shape[0] == 0:
        raise ValueError("best_compromise needs a nonempty front")
    lo = F.min(axis=0)
    hi = F.max(axis=0)
    mu = np.array([[fuzzy_membership(F[k, i], lo[i], hi[i]) for i in range(F.shape[1])] for k in range(F.shape[0])])
    per = mu.sum(axis=1)
    sat = per / per.sum()
    return CompromiseReport(mu, sat, int(np.argmax(sat)))


# -- variation ----------------------------------------------------------------


def _sbx_pair(x1, x2, lo, hi, eta, rng):
    """Bounded simulated binary crossover of two parents, gene by gene."""
    c1, c2 = x1.copy(), x2.copy()
    for j in range(len(x1)):
        if hi[j] <= lo[j] or rng.random() > 0.5 or abs(x1[j] - x2[j]) < 1e-14:
            continue
        y1, y2 = min(x1[j], x2[j]), max(x1[j], x2[j])
        u = rng.random()
        span = y2 - y1

        def beta_q(beta):
            alpha = 2.0 - beta ** (-(eta + 1.0))
            if u <= 1.0 / alpha:
                return (u * alpha) ** (1.0 / (eta + 1.0))
            return (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))

        b1 = beta_q(1.0 + 2.0 * (y1 - lo[j]) / span)
        b2 = beta_q(1.0 + 2.0 * (hi[j] - y2) / span)
        a = 0.5 * ((y1 + y2) - b1 * span)
        b = 0.5 * ((y1 + y2) + b2 * span)
        a = min(max(a, lo[j]), hi[j])
        b = min(max(b, lo[j]), hi[j])
        if rng.random() <= 0.5:
            a, b = b, a
        c1[j], c2[j] = a, b
    return c1, c2


def _poly_mutate(x, lo, hi, eta, p_gene, rng):
    y = x.copy()
    for j in range(len(x)):
        if hi[j] <= lo[j] or rng.random() >= p_gene:
            continue
        span = hi[j] - lo[j]
        d1 = (y[j] - lo[j]) / span
        d2 = (hi[j] - y[j]) / span
        u = rng.random()
        mp = 1.0 / (eta + 1.0)
        if u < 0.5:
            v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            dq = v**mp - 1.0
        else:
            v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            dq = 1.0 - v**mp
        y[j] = min(max(y[j] + dq * span, lo[j]), hi[j])
    return y


def _tournament(rank, crowd, n, rng):
    picks = np.empty(n, dtype=int)
    for k in range(n):
        a, b = rng.integers(0, len(rank), size=2)
        if rank[a] != rank[b]:
            picks[k] = a if rank[a] < rank[b] else b
        elif crowd[a] != crowd[b]:
            picks[k] = a if crowd[a] > crowd[b] else b
        else:
            picks[k] = min(a, b)
    return picks


def _offspring(X, parents, lo, hi, cfg, n_genes, rng):
    kids = []
    p_mut = cfg.mutation_fraction / n_genes
    for k in range(0, len(parents), 2):
        x1, x2 = X[parents[k]], X[parents[k + 1]]
        if rng.random() < cfg.crossover_fraction:
            c1, c2 = _sbx_pair(x1, x2, lo, hi, cfg.sbx_index, rng)
        else:
            c1, c2 = x1.copy(), x2.copy()
        kids.append(_poly_mutate(c1, lo, hi, cfg.mutation_index, p_mut, rng))
        kids.append(_poly_mutate(c2, lo, hi, cfg.mutation_index, p_mut, rng))
    return np.array(kids)


# -- evaluation -----------------------------------------------------------------


class _Evaluator:
    """Order-preserving map, serial or over a process pool."""

    def __init__(self, fn, workers: int):
        self.fn = fn
        self.pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        self.workers = workers

    def __call__(self, items):
        items = list(items)
        if self.pool is None:
            return [self.fn(x) for x in items]
        chunk = max(1, len(items) // (4 * self.workers))
        return list(self.pool.map(self.fn, items, chunksize=chunk))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _rank_and_crowd(F):
    fronts = nondominated_sort(F)
    rank = np.empty(len(F), dtype=int)
    crowd = np.empty(len(F))
    for r, fr in enumerate(fronts, start=1):
        rank[fr] = r
        crowd[fr] = crowding_distance(F[fr])
    return fronts, rank, crowd


def _environmental_selection(F, n, pareto_fraction):
    """Indices of the `n` survivors of a combined parent+offspring pool.

    At most ``floor(pareto_fraction * n)`` rank-1 members survive while later
    fronts can fill the remainder; any shortfall is topped up from the
    left-over rank-1 members.  Within a front, larger crowding wins.
    """
    fronts, rank, crowd = _rank_and_crowd(F)
    cap = max(1, int(math.floor(pareto_fraction * n + 1e-9)))

    def by_crowding(idx):
        idx = np.asarray(idx)
        return idx[np.argsort(-crowd[idx], kind="stable")].tolist()

    first = by_crowding(fronts[0])
    chosen = first[:cap]
    spare = first[cap:]
    for fr in fronts[1:]:
        room = n - len(chosen)
        if room <= 0:
            break
        chosen += by_crowding(fr)[:room]
    if len(chosen) < n:
        chosen += spare[: n - len(chosen)]
    return np.array(chosen[:n]), rank, crowd


@dataclass
class RunResult:
    """Final population of a generic NSGA-II run."""

    X: np.ndarray
    F: np.ndarray
    results: list
    rank: np.ndarray
    crowding: np.ndarray

    def front_indices(self) -> list[int]:
        return np.flatnonzero(self.rank == 1).tolist()


def nsga2(
    evaluate: Callable,
    lower: Sequence[float],
    upper: Sequence[float],
    cfg: MooConfig,
    n_genes: int | None = None,
    sampler: Callable | None = None,
) -> RunResult:
    """Generic bounded NSGA-II.

    `evaluate` maps a genome array to its objective values, or to an object
    with a ``values`` attribute.  Genes with equal lower and upper bounds are
    held fixed.  `sampler(rng, n)` draws the initial population; uniform
    within the bounds by default.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    n_genes = n_genes or len(lo)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.generations + 1)
    N = cfg.population

    with _Evaluator(evaluate, cfg.workers) as ev:
        rng = np.random.default_rng(seeds[0])
        X = sampler(rng, N) if sampler is not None else lo + (hi - lo) * rng.random((N, len(lo)))
        results = ev(list(X))
        F = _values(results)
        _, rank, crowd = _rank_and_crowd(F)

        for gen in range(cfg.generations):
            rng = np.random.default_rng(seeds[gen + 1])
            parents = _tournament(rank, crowd, N, rng)
            kids = _offspring(X, parents, lo, hi, cfg, n_genes, rng)
            kid_results = ev(list(kids))
            X_all = np.vstack([X, kids])
            F_all = np.vstack([F, _values(kid_results)])
            R_all = results + kid_results
            keep, rank_all, crowd_all = _environmental_selection(F_all, N, cfg.pareto_fraction)
            X, F = X_all[keep], F_all[keep]
            results = [R_all[i] for i in keep]
            rank, crowd = rank_all[keep], crowd_all[keep]

    _, rank, crowd = _rank_and_crowd(F)
    return RunResult(X, F, results, rank, crowd)


# -- AVR drivers -------------------------------------------------------------------


def regime_bounds(regime: Regime):
    """Gene bounds ``(kp, ki, kd, tf, lam, mu)``; open lower order bounds nudged inward."""

    def order(b):
        if b[0] == b[1]:
            return b
        return (b[0] + ORDER_EPS, b[1])

    lam, mu = order(regime.lam_bounds), order(regime.mu_bounds)
    lower = [GAIN_BOUNDS[0]] * 4 + [lam[0], mu[0]]
    upper = [GAIN_BOUNDS[1]] * 4 + [lam[1], mu[1]]
    return np.array(lower), np.array(upper)


@dataclass(frozen=True)
class GainSampler:
    """Initial genomes with log-uniform gains and filter constant.

    Uniform draws over ``[0, 10]`` almost never stabilize the high-gain AVR
    loop, so the flat penalty would leave the search blind.  Orders are drawn
    uniformly within the regime.
    """

    lower: tuple
    upper: tuple
    log_floor: float = 1e-4

    def __call__(self, rng, n):
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        X = lo + (hi - lo) * rng.random((n, len(lo)))
        a, b = math.log10(self.log_floor), math.log10(GAIN_BOUNDS[1])
        X[:, :4] = 10.0 ** rng.uniform(a, b, size=(n, 4))
        return X


@dataclass(frozen=True)
class _GenomeEvaluator:
    evaluator: CaseEvaluator

    def __call__(self, x):
        return self.evaluator(FopidParams.from_array(x))


def _individuals(run: RunResult, idx) -> list[Individual]:
    return [
        Individual(FopidParams.from_array(run.X[i]), run.results[i], int(run.rank[i]), float(run.crowding[i]))
        for i in idx
    ]


def nsga2_run(
    spec: CaseSpec,
    cfg: MooConfig = MooConfig(),
    model: AvrModel = AvrModel(),
    ora: OustaloupConfig = OustaloupConfig(),
    evaluator: CaseEvaluator | None = None,
) -> list[Individual]:
    """Run NSGA-II on one AVR trade-off case and return the final rank-1 set.

    Crowding distances of the returned individuals are recomputed within
    the returned front.
    """
    evaluator = evaluator or CaseEvaluator(spec, model, ora)
    lower, upper = regime_bounds(spec.regime)
    sampler = GainSampler(tuple(lower), tuple(upper))
    run = nsga2(_GenomeEvaluator(evaluator), lower, upper, cfg, len(FopidParams.GENE_NAMES), sampler)
    idx = run.front_indices()
    crowd = crowding_distance(run.F[idx])
    return [replace(ind, crowding=float(c)) for ind, c in zip(_individuals(run, idx), crowd)]


def _normalized_scores(F: np.ndarray, feasible: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    scores = np.full(len(F), math.inf)
    span = np.where(hi > lo, hi - lo, 1.0)
    scores[feasible] = ((F[feasible] - lo) / span).sum(axis=1) / F.shape[1]
    return scores


class _RunningRange:
    """Componentwise min and max over every feasible point seen so far."""

    def __init__(self, m: int):
        self.lo = np.full(m, math.inf)
        self.hi = np.full(m, -math.inf)

    def update(self, F: np.ndarray, feasible: np.ndarray) -> None:
        if feasible.any():
            self.lo = np.minimum(self.lo, F[feasible].min(axis=0))
            self.hi = np.maximum(self.hi, F[feasible].max(axis=0))

    def scores(self, F: np.ndarray, feasible: np.ndarray) -> np.ndarray:
        return _normalized_scores(F, feasible, self.lo, self.hi)


def soo_weighted_run(
    spec: CaseSpec,
    cfg: MooConfig = MooConfig(),
    model: AvrModel = AvrModel(),
    ora: OustaloupConfig = OustaloupConfig(),
    evaluator: CaseEvaluator | None = None,
) -> Individual:
    """Equal-weight scalarized GA baseline for the margin cases.

    Each objective is min-max normalized over every feasible genome sampled
    so far in the run before averaging.  The returned individual's
    ``objectives.feasible`` is False when no feasible genome was ever found.
    """
    if spec.case_id not in (11, 12):
        raise ValueError("the weighted single-objective baseline is defined for cases 11 and 12")
    evaluator = evaluator or CaseEvaluator(spec, model, ora)
    fn = _GenomeEvaluator(evaluator)
    lo, hi = regime_bounds(spec.regime)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.generations + 1)
    N = cfg.population
    n_genes = len(FopidParams.GENE_NAMES)

    with _Evaluator(fn, cfg.workers) as ev:
        rng = np.random.default_rng(seeds[0])
        X = GainSampler(tuple(lo), tuple(hi))(rng, N)
        results = ev(list(X))
        feas = np.array([r.feasible for r in results])
        seen = _RunningRange(len(spec.objectives))
        seen.update(_values(results), feas)
        for gen in range(cfg.generations):
            rng = np.random.default_rng(seeds[gen + 1])
            score = seen.scores(_values(results), feas)
            parents = _tournament(score, np.zeros(N), N, rng)
            kids = _offspring(X, parents, lo, hi, cfg, n_genes, rng)
            kid_results = ev(list(kids))
            X_all = np.vstack([X, kids])
            R_all = results + kid_results
            F_all = _values(R_all)
            feas_all = np.array([r.feasible for r in R_all])
            seen.update(F_all, feas_all)
            keep = np.argsort(seen.scores(F_all, feas_all), kind="stable")[:N]
            X = X_all[keep]
            results = [R_all[i] for i in keep]
            feas = feas_all[keep]

    score = seen.scores(_values(results), feas)
    best = int(np.argmin(score)) if feas.any() else 0
    return Individual(FopidParams.from_array(X[best]), results[best], 1, math.inf)
