"""Personalized PageRank weights, their integral over the restart parameter,
and a random-walk simulator used to cross-check global assortativity.

Walk orientation: ``M[i, j] = A[j, i] / k_out[j]`` is column stochastic and the
restart walk seeded at ``l`` has fixed point ``w = alpha * M w + (1 - alpha) e_l``.
Nodes without out-edges send their mass back to the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ComputationError, ConvergenceError, DegenerateAttribute, InputError
from .graphcore import (
    CategoricalColumn,
    Column,
    Graph,
    ScalarColumn,
    WeightVector,
    stationary_distribution,
)


@dataclass(frozen=True)
class WalkerConfig:
    alpha: float = 0.85
    tol: float = 1e-10
    max_iter: int = 100_000
    eta_max: int = 10_000
    multi_tol: float = 1e-9
    tail_average: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError("alpha must lie in [0,1]")
        if self.tol <= 0 or self.multi_tol <= 0:
            raise InputError("tolerances must be positive")
        if self.max_iter < 1 or self.eta_max < 1:
            raise InputError("max_iter and eta_max must be at least 1")


def seed_index(graph: Graph, seed: int | str) -> int:
    if isinstance(seed, (int, np.integer)):
        if not 0 <= seed < graph.n_nodes:
            raise InputError(f"seed {seed} out of range")
        return int(seed)
    try:
        return graph.index[seed]
    except KeyError:
        raise InputError(f"unknown seed node {seed!r}") from None


def walk_matrix(graph: Graph) -> sp.csr_matrix:
    """Column-stochastic walk operator; columns of dangling nodes are zero."""
    k = graph.out_degree.astype(np.float64)
    inv = np.divide(1.0, k, out=np.zeros_like(k), where=k > 0)
    return (graph.in_adj @ sp.diags(inv)).tocsr()


def _adjoint_matrix(graph: Graph) -> sp.csr_matrix:
    """Row-stochastic transpose of :func:`walk_matrix`, with a self-loop on
    every node lacking out-edges (valid when no such node is reachable)."""
    k = graph.out_degree.astype(np.float64)
    inv = np.divide(1.0, k, out=np.zeros_like(k), where=k > 0)
    p = sp.diags(inv) @ graph.out_adj
    return (p + sp.diags((k == 0).astype(np.float64))).tocsr()


def _seed_block(n: int, seeds: np.ndarray) -> np.ndarray:
    e = np.zeros((n, len(seeds)))
    e[seeds, np.arange(len(seeds))] = 1.0
    return e


def _step(m: sp.csr_matrix, dangling: np.ndarray, e: np.ndarray, v: np.ndarray) -> np.ndarray:
    """One plain walk step with dangling mass returned to each column's seed."""
    out = m @ v
    if dangling.any():
        out += e * v[dangling].sum(axis=0)
    return out


def ppr_matrix(graph: Graph, seeds, config: WalkerConfig) -> np.ndarray:
    """Personalized PageRank vectors for several seeds, one per column."""
    seeds = np.asarray([seed_index(graph, s) for s in seeds], dtype=np.int64)
    n, alpha = graph.n_nodes, config.alpha
    e = _seed_block(n, seeds)
    if alpha == 0.0:
        return e
    if alpha == 1.0:
        if graph.directed:
            raise InputError("alpha = 1 is not supported for directed graphs")
        pi = stationary_distribution(graph).values
        return np.repeat(pi[:, None], len(seeds), axis=1)
    m = walk_matrix(graph)
    dangling = graph.out_degree == 0
    w = e.copy()
    restart = (1.0 - alpha) * e
    residual = np.inf
    for _ in range(config.max_iter):
        nxt = alpha * _step(m, dangling, e, w) + restart
        residual = float(np.abs(nxt - w).sum(axis=0).max()) if len(seeds) else 0.0
        w = nxt
        if residual < config.tol:
            return w
    raise ConvergenceError("power method did not converge", residual)


def ppr(graph: Graph, seed: int | str, config: WalkerConfig) -> WeightVector:
    """Stationary distribution of the walk that restarts at ``seed`` w.p. ``1 - alpha``."""
    ell = seed_index(graph, seed)
    if config.alpha == 1.0:
        if graph.directed:
            raise InputError("alpha = 1 is not supported for directed graphs")
        pi = stationary_distribution(graph)
        return WeightVector(pi.values, kind="stationary", seed=ell, alpha=1.0)
    w = ppr_matrix(graph, [ell], config)[:, 0]
    return WeightVector(w, kind="ppr", seed=ell, alpha=config.alpha)


def _oscillating(prev_diff: np.ndarray | None, diff: np.ndarray) -> bool:
    # consecutive walk increments pointing in opposite directions: periodic walk
    return prev_diff is not None and float(np.sum(prev_diff * diff)) < 0.0


def multiscale_matrix(graph: Graph, seeds, config: WalkerConfig) -> tuple[np.ndarray, dict]:
    """Integral of the personalized PageRank vector over ``alpha`` in [0, 1].

    Uses ``w = e_l + sum_s (v_s - v_{s-1}) / (s + 1)`` with ``v_s`` the
    ``s``-step walk distribution. The sum stops once every column's term has
    L1 norm below ``multi_tol``. If ``eta_max`` is hit on an oscillating
    (periodic) walk, the last two partial sums are averaged.
    """
    seeds = np.asarray([seed_index(graph, s) for s in seeds], dtype=np.int64)
    n = graph.n_nodes
    e = _seed_block(n, seeds)
    m = walk_matrix(graph)
    dangling = graph.out_degree == 0
    acc = e.copy()
    v = e
    diff = prev = None
    steps = 0
    norm = 0.0
    for s in range(1, config.eta_max + 1):
        nxt = _step(m, dangling, e, v)
        prev, diff = diff, nxt - v
        v = nxt
        acc += diff / (s + 1)
        steps = s
        norm = float(np.abs(diff).sum(axis=0).max()) / (s + 1) if len(seeds) else 0.0
        if norm < config.multi_tol:
            return acc, {"steps": steps, "truncated": False, "tail_estimate": norm}
    averaged = False
    if config.tail_average and diff is not None and _oscillating(prev, diff):
        acc -= diff / (2 * (steps + 1))
        averaged = True
    return acc, {
        "steps": steps,
        "truncated": True,
        "averaged_tail": averaged,
        "tail_estimate": norm * (steps + 1) / (steps + 2),
    }


def multiscale_weights(graph: Graph, seed: int | str, config: WalkerConfig) -> WeightVector:
    ell = seed_index(graph, seed)
    w, diag = multiscale_matrix(graph, [ell], config)
    return WeightVector(w[:, 0], kind="multiscale", seed=ell, diagnostics=diag)


def multiscale_alpha0(graph: Graph, seed: int | str, alpha0: float, eta: int) -> np.ndarray:
    """Multiscale weights accumulated from fixed-``alpha0`` power iterates.

    Kept as a cross-check of :func:`multiscale_weights`; divides by
    ``alpha0**s`` so only short series (small ``eta``) are numerically sound.
    """
    ell = seed_index(graph, seed)
    n = graph.n_nodes
    e = _seed_block(n, np.array([ell]))
    m = walk_matrix(graph)
    dangling = graph.out_degree == 0
    w_prev = e
    acc = e.copy()
    for s in range(1, eta + 1):
        w = alpha0 * _step(m, dangling, e, w_prev) + (1.0 - alpha0) * e
        acc += (w - w_prev) / ((s + 1) * alpha0**s)
        w_prev = w
    return acc[:, 0]


def adjoint_available(graph: Graph) -> bool:
    """Whether :func:`seed_scores` applies (no reachable node lacks out-edges)."""
    return not graph.has_dangling()


def seed_scores(
    graph: Graph,
    f: np.ndarray,
    config: WalkerConfig,
    multiscale: bool = False,
) -> np.ndarray:
    """Compute ``sum_i w(i; l) f[i]`` for every seed ``l`` at once.

    ``f`` is ``(n,)`` or ``(n, c)``. The result has the same shape, row ``l``
    holding the weighted sums for seed ``l``. Runs a single iteration with the
    transposed walk operator instead of one per seed.
    """
    if not adjoint_available(graph):
        raise InputError("seed_scores requires a graph without reachable dangling nodes")
    f = np.asarray(f, dtype=np.float64)
    alpha = config.alpha
    if not multiscale:
        if alpha == 0.0:
            return f.copy()
        if alpha == 1.0:
            if graph.directed:
                raise InputError("alpha = 1 is not supported for directed graphs")
            pi = stationary_distribution(graph).values
            total = pi @ f
            return np.broadcast_to(total, f.shape).copy()
    p = _adjoint_matrix(graph)
    scale = max(float(np.abs(f).max()) if f.size else 0.0, 1e-300)
    if not multiscale:
        u = f.copy()
        restart = (1.0 - alpha) * f
        residual = np.inf
        for _ in range(config.max_iter):
            nxt = alpha * (p @ u) + restart
            residual = float(np.abs(nxt - u).max()) / scale
            u = nxt
            if residual < config.tol:
                return u
        raise ConvergenceError("power method did not converge", residual)

    acc = f.copy()
    v = f
    diff = prev = None
    steps = 0
    for s in range(1, config.eta_max + 1):
        nxt = p @ v
        prev, diff = diff, nxt - v
        v = nxt
        acc += diff / (s + 1)
        steps = s
        if float(np.abs(diff).max()) / (s + 1) < config.multi_tol * scale:
            return acc
    if config.tail_average and diff is not None and _oscillating(prev, diff):
        acc -= diff / (2 * (steps + 1))
    return acc


def _chain(graph: Graph, steps: int, rng: np.random.Generator) -> np.ndarray:
    pi = stationary_distribution(graph).values
    indptr, indices = graph.out_adj.indptr, graph.out_adj.indices
    deg = graph.degree
    u = rng.random(steps)
    path = np.empty(steps + 1, dtype=np.int64)
    cur = int(rng.choice(graph.n_nodes, p=pi))
    path[0] = cur
    indptr_l = indptr.tolist()
    indices_l = indices.tolist()
    deg_l = deg.tolist()
    u_l = u.tolist()
    for t in range(steps):
        k = deg_l[cur]
        cur = indices_l[indptr_l[cur] + int(u_l[t] * k)]
        path[t + 1] = cur
    return path


def _categorical_autocorr(y: np.ndarray, n_cat: int) -> float:
    a, b = y[:-1], y[1:]
    fa = np.bincount(a, minlength=n_cat) / len(a)
    fb = np.bincount(b, minlength=n_cat) / len(b)
    same = float(np.mean(a == b))
    q_max = 1.0 - float(fa @ fb)
    if q_max <= 1e-12:
        raise DegenerateAttribute("attribute takes a single value along the walk")
    return (same - float(fa @ fb)) / q_max


def _scalar_autocorr(x: np.ndarray) -> float:
    a, b = x[:-1], x[1:]
    sa, sb = a.std(), b.std()
    if sa <= 0 or sb <= 0:
        raise DegenerateAttribute("attribute has zero variance along the walk")
    return float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb))


def simulate_walk_autocorrelation(
    graph: Graph,
    column: Column,
    steps: int,
    rng_seed: int,
    n_batches: int = 50,
) -> tuple[float, float]:
    """Lag-1 autocorrelation of the attribute seen by a stationary simple walk.

    Returns the whole-chain estimate and a batch-means standard error.
    """
    if graph.directed:
        raise InputError("walk simulation requires an undirected graph")
    if not graph.is_connected():
        raise ComputationError("walk simulation requires a connected graph")
    if steps < 10_000:
        raise InputError("steps must be at least 10^4")
    if column.missing.any():
        raise InputError("walk simulation requires a column without missing values")
    if isinstance(column, CategoricalColumn):
        vals = column.codes
        if len(np.unique(vals[graph.degree > 0])) < 2:
            raise DegenerateAttribute("attribute is constant")
        est_fn = lambda seg: _categorical_autocorr(seg, column.n_categories)  # noqa: E731
    elif isinstance(column, ScalarColumn):
        vals = column.values
        if np.ptp(vals[graph.degree > 0]) == 0:
            raise DegenerateAttribute("attribute is constant")
        est_fn = _scalar_autocorr
    else:
        raise InputError("unsupported column type")

    rng = np.random.default_rng(rng_seed)
    path = _chain(graph, steps, rng)
    series = vals[path]
    estimate = est_fn(series)
    size = len(series) // n_batches
    batch = [est_fn(series[b * size : (b + 1) * size + 1]) for b in range(n_batches)]
    std_error = float(np.std(batch, ddof=1) / np.sqrt(n_batches))
    return float(estimate), std_error
