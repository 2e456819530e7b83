"""Mixing matrices and global, local, categorical and scalar assortativity.

Edge terms touching a node with a missing attribute value are skipped. The
retained share of edge-term mass is reported as the confidence weight ``z``
and local mixing matrices are renormalized to sum to one.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import DegenerateAttribute, EmptyMixing, InputError
from .graphcore import (
    MISSING,
    CategoricalColumn,
    Column,
    Graph,
    ScalarColumn,
    WeightVector,
)
from .walker import (
    WalkerConfig,
    adjoint_available,
    multiscale_matrix,
    multiscale_weights,
    ppr_matrix,
    seed_index,
    seed_scores,
)

DEGENERATE_EPS = 1e-12


class BoundWarning(UserWarning):
    """r_min fell below -1 (the marginals make sum(e_gg) = 0 unattainable)."""


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    e: np.ndarray
    a: np.ndarray
    b: np.ndarray
    observed_mass: float
    directed: bool
    categories: tuple[str, ...] = ()

    @property
    def omega_in(self) -> float:
        return float(np.trace(self.e))

    @property
    def expected_in(self) -> float:
        return float(self.a @ self.b)

    @property
    def q(self) -> float:
        return self.omega_in - self.expected_in

    @property
    def q_max(self) -> float:
        return 1.0 - self.expected_in


@dataclass(frozen=True)
class LocalMixingResult:
    node: str
    r: float | None
    z: float
    kind: str
    attribute: str
    alpha: float | None = None

    @property
    def defined(self) -> bool:
        return self.r is not None


def _arc_terms(graph: Graph, weights) -> np.ndarray:
    """Per-arc walk mass ``w(i) / k_out(i)`` (``pi`` when ``weights`` is None)."""
    src, _ = graph.arcs
    if weights is None:
        return np.full(src.size, 1.0 / max(src.size, 1))
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (graph.n_nodes,):
        raise InputError("weight vector length does not match the graph")
    if abs(w.sum() - 1.0) > 1e-9:
        raise InputError("weights must sum to 1")
    return w[src] / graph.out_degree[src]


def mixing_matrix(
    graph: Graph, column: CategoricalColumn, weights: WeightVector | np.ndarray | None = None
) -> MixingMatrix:
    """Joint distribution of endpoint categories over (re)weighted edges.

    Without weights every arc carries ``1 / (number of arcs)``; with a node
    distribution ``w`` the arc ``i -> j`` carries ``w(i) / k_out(i)``.
    ``observed_mass`` is the fraction of that mass on arcs with both ends known.
    """
    if not isinstance(column, CategoricalColumn):
        raise InputError(f"column {column.name!r} is not categorical")
    src, dst = graph.arcs
    terms = _arc_terms(graph, weights)
    available = float(terms.sum())
    y = column.codes
    known = (y[src] != MISSING) & (y[dst] != MISSING)
    observed = float(terms[known].sum())
    if observed <= 0.0 or available <= 0.0:
        raise EmptyMixing("no edge with both attribute values known carries weight")
    g = column.n_categories
    flat = np.bincount(y[src[known]] * g + y[dst[known]], weights=terms[known], minlength=g * g)
    e = flat.reshape(g, g) / observed
    return MixingMatrix(
        e=e,
        a=e.sum(axis=1),
        b=e.sum(axis=0),
        observed_mass=observed / available,
        directed=graph.directed,
        categories=column.categories,
    )


def _check_q_max(mix: MixingMatrix) -> float:
    q_max = mix.q_max
    if q_max <= DEGENERATE_EPS:
        raise DegenerateAttribute("attribute has a single effective category (Q_max = 0)")
    return q_max


def global_assort_cat(mix: MixingMatrix) -> float:
    q_max = _check_q_max(mix)
    return (mix.omega_in - mix.expected_in) / q_max


def r_min(mix: MixingMatrix) -> float:
    """Lowest attainable-in-principle value ``-sum(a b) / (1 - sum(a b))``.

    Not clamped: marginals with ``sum(a b) > 1/2`` give values below -1, which
    is signalled with a :class:`BoundWarning`.
    """
    q_max = _check_q_max(mix)
    value = -mix.expected_in / q_max
    if value < -1.0:
        warnings.warn(f"r_min = {value:.6g} lies below -1", BoundWarning, stacklevel=2)
    return value


def local_assort_cat(
    graph: Graph,
    column: CategoricalColumn,
    seed: int | str,
    weights: WeightVector | np.ndarray,
    global_mix: MixingMatrix,
) -> LocalMixingResult:
    ell = seed_index(graph, seed)
    q_max = _check_q_max(global_mix)
    kind, alpha = _kind_of(weights)
    try:
        local = mixing_matrix(graph, column, weights)
    except EmptyMixing:
        return LocalMixingResult(graph.node_ids[ell], None, 0.0, kind, column.name, alpha)
    r = (local.omega_in - global_mix.expected_in) / q_max
    return LocalMixingResult(graph.node_ids[ell], r, local.observed_mass, kind, column.name, alpha)


def _kind_of(weights) -> tuple[str, float | None]:
    if isinstance(weights, WeightVector):
        return weights.kind, weights.alpha
    return "custom", None


@dataclass(frozen=True, eq=False)
class ScalarStandardization:
    mean: float
    sigma: float
    values: np.ndarray  # standardized, NaN where missing


def standardize(graph: Graph, column: ScalarColumn) -> ScalarStandardization:
    """Degree-weighted standardization over nodes with known values."""
    if graph.directed:
        raise InputError("scalar assortativity is implemented for undirected graphs only")
    x = column.values
    known = ~np.isnan(x)
    k = np.where(known, graph.degree, 0).astype(np.float64)
    if k.sum() <= 0:
        raise EmptyMixing("no edge touches a node with a known value")
    pi = k / k.sum()
    xk = np.where(known, x, 0.0)
    mean = float(pi @ xk)
    var = float(pi @ (xk - mean) ** 2)
    scale = max(1.0, float(np.abs(xk[k > 0]).max()))
    if var <= (DEGENERATE_EPS * scale) ** 2:
        raise DegenerateAttribute(f"column {column.name!r} has zero degree-weighted variance")
    sigma = math.sqrt(var)
    z = np.where(known, (x - mean) / sigma, np.nan)
    return ScalarStandardization(mean, sigma, z)


def global_assort_scalar(graph: Graph, column: ScalarColumn) -> float:
    """Edge-endpoint Pearson correlation of a scalar attribute."""
    xt = standardize(graph, column).values
    src, dst = graph.arcs
    prod = xt[src] * xt[dst]
    keep = ~np.isnan(prod)
    if not keep.any():
        raise EmptyMixing("no edge with both attribute values known")
    return float(prod[keep].sum() / keep.sum())


def local_assort_scalar(
    graph: Graph,
    column: ScalarColumn,
    seed: int | str,
    weights: WeightVector | np.ndarray,
    standardization: ScalarStandardization | None = None,
) -> LocalMixingResult:
    ell = seed_index(graph, seed)
    xt = (standardization or standardize(graph, column)).values
    kind, alpha = _kind_of(weights)
    src, dst = graph.arcs
    terms = _arc_terms(graph, weights)
    prod = xt[src] * xt[dst]
    keep = ~np.isnan(prod)
    available = float(terms.sum())
    observed = float(terms[keep].sum())
    if observed <= 0 or available <= 0:
        return LocalMixingResult(graph.node_ids[ell], None, 0.0, kind, column.name, alpha)
    r = float(terms[keep] @ prod[keep]) / observed
    return LocalMixingResult(graph.node_ids[ell], r, observed / available, kind, column.name, alpha)


def local_assort_multiscale(
    graph: Graph, column: Column, seed: int | str, config: WalkerConfig | None = None
) -> LocalMixingResult:
    config = config or WalkerConfig()
    w = multiscale_weights(graph, seed, config)
    if isinstance(column, CategoricalColumn):
        return local_assort_cat(graph, column, seed, w, mixing_matrix(graph, column))
    return local_assort_scalar(graph, column, seed, w)


def _node_terms(graph: Graph, column: Column) -> tuple[np.ndarray, float, float]:
    """Per-node vectors whose walk-weighted sums give a node's local value.

    Returns ``F`` with columns (same-type/product mass, observed mass,
    available mass) plus the global offset and scale so that
    ``r = (F0 / F1 - offset) / scale``.
    """
    n = graph.n_nodes
    src, dst = graph.arcs
    inv_k = np.divide(1.0, graph.out_degree, out=np.zeros(n), where=graph.out_degree > 0)
    per_arc = inv_k[src]
    if isinstance(column, CategoricalColumn):
        y = column.codes
        known = (y[src] != MISSING) & (y[dst] != MISSING)
        same = known & (y[src] == y[dst])
        hit = per_arc * same
        global_mix = mixing_matrix(graph, column)
        offset, scale = global_mix.expected_in, _check_q_max(global_mix)
    else:
        xt = standardize(graph, column).values
        prod = xt[src] * xt[dst]
        known = ~np.isnan(prod)
        hit = np.where(known, per_arc * np.nan_to_num(prod), 0.0)
        offset, scale = 0.0, 1.0
    f = np.zeros((n, 3))
    np.add.at(f[:, 0], src, hit)
    np.add.at(f[:, 1], src, per_arc * known)
    # summed the same way as column 1 so that z is exactly 1 without missing values
    np.add.at(f[:, 2], src, per_arc)
    return f, offset, scale


def iter_local_assortativity(
    graph: Graph,
    column: Column,
    config: WalkerConfig | None = None,
    multiscale: bool = False,
    seeds: Sequence[int | str] | None = None,
    jobs: int = 1,
    batch_size: int | None = None,
) -> Iterator[list[LocalMixingResult]]:
    """Yield local assortativity results in seed order, one batch at a time.

    Equivalent to calling :func:`local_assort_cat` / :func:`local_assort_scalar`
    per seed. When no reachable node lacks out-edges all seeds are evaluated
    together by one transposed-walk iteration; otherwise seeds are processed
    in batches of forward iterations, ``jobs`` batches concurrently.
    """
    config = config or WalkerConfig()
    if seeds is None:
        idx = np.arange(graph.n_nodes)
    else:
        idx = np.array([seed_index(graph, s) for s in seeds], dtype=np.int64)
    f, offset, scale = _node_terms(graph, column)
    kind = "multiscale" if multiscale else ("stationary" if config.alpha == 1.0 else "ppr")
    alpha = None if multiscale else config.alpha

    def finish(rows: np.ndarray, totals: np.ndarray) -> list[LocalMixingResult]:
        out = []
        for ell, (hit, observed, available) in zip(rows, totals):
            node = graph.node_ids[ell]
            if observed <= 0.0 or available <= 0.0:
                out.append(LocalMixingResult(node, None, 0.0, kind, column.name, alpha))
                continue
            r = (hit / observed - offset) / scale
            z = min(1.0, observed / available)
            out.append(LocalMixingResult(node, float(r), float(z), kind, column.name, alpha))
        return out

    if adjoint_available(graph):
        yield finish(idx, seed_scores(graph, f, config, multiscale=multiscale)[idx])
        return

    if batch_size is None:
        batch_size = max(1, min(512, 2**22 // max(graph.n_nodes, 1)))
    chunks = [idx[i : i + batch_size] for i in range(0, len(idx), batch_size)]

    def run(chunk: np.ndarray) -> list[LocalMixingResult]:
        if multiscale:
            w, _ = multiscale_matrix(graph, chunk, config)
        else:
            w = ppr_matrix(graph, chunk, config)
        return finish(chunk, w.T @ f)

    if jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(run, chunks)
    else:
        for chunk in chunks:
            yield run(chunk)


def local_assortativity(
    graph: Graph,
    column: Column,
    config: WalkerConfig | None = None,
    multiscale: bool = False,
    seeds: Sequence[int | str] | None = None,
    jobs: int = 1,
    batch_size: int | None = None,
) -> list[LocalMixingResult]:
    """Local assortativity of every requested seed (all nodes by default)."""
    batches = iter_local_assortativity(graph, column, config, multiscale, seeds, jobs, batch_size)
    return [res for batch in batches for res in batch]


def _weighted_pearson(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> float:
    w = w / w.sum()
    mx, my = w @ x, w @ y
    cov = w @ ((x - mx) * (y - my))
    vx, vy = w @ (x - mx) ** 2, w @ (y - my) ** 2
    if vx <= 0 or vy <= 0:
        raise DegenerateAttribute("local assortativity is constant; correlation undefined")
    return float(cov / math.sqrt(vx * vy))


def assort_correlation(
    results_a: Sequence[LocalMixingResult],
    results_b: Sequence[LocalMixingResult],
    weighted: bool = True,
) -> tuple[float, float]:
    """Correlation of two local-assortativity profiles over their shared nodes.

    Returns the Pearson correlation and the fraction of nodes with
    ``r_a > r_b``, both weighted by ``min(z_a, z_b)`` unless ``weighted`` is
    False.
    """
    by_node = {res.node: res for res in results_b if res.defined}
    xa, xb, wts = [], [], []
    for res in results_a:
        other = by_node.get(res.node)
        if not res.defined or other is None:
            continue
        wt = min(res.z, other.z) if weighted else 1.0
        if wt <= 0:
            continue
        xa.append(res.r)
        xb.append(other.r)
        wts.append(wt)
    if len(xa) < 3:
        raise DegenerateAttribute(f"need at least 3 comparable nodes, found {len(xa)}")
    xa, xb, wts = map(np.asarray, (xa, xb, wts))
    pearson = _weighted_pearson(xa, xb, wts)
    frac = float(wts[xa > xb].sum() / wts.sum())
    return pearson, frac
