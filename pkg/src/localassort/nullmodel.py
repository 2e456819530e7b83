"""Degree-, label- and assortativity-preserving rewiring ensembles.

Double-edge swaps over the stub-labeled configuration model, filtered by a
Metropolis step on the binomial log-likelihood of the number of same-type
edges, under a geometric annealing schedule.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateAttribute, InputError
from .graphcore import MISSING, CategoricalColumn, Graph, write_edge_list
from .mixing import local_assortativity, mixing_matrix
from .summary import WeightedHistogram, weighted_histogram
from .walker import WalkerConfig


@dataclass(frozen=True)
class NullModelConfig:
    """Sampler settings. ``None`` spacings default to ``10 m`` and ``100 m``."""

    n_samples: int = 100
    swaps_per_sample: int | None = None
    burn_in: int | None = None
    t0: float = 1.0
    t_min: float = 1e-3
    cooling: float = 0.9999
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_samples < 0:
            raise InputError("n_samples must be nonnegative")
        if not 0 < self.t_min <= self.t0:
            raise InputError("temperatures must satisfy 0 < t_min <= t0")
        if not 0 < self.cooling <= 1:
            raise InputError("cooling must lie in (0, 1]")
        if self.swaps_per_sample is not None and self.swaps_per_sample < 1:
            raise InputError("swaps_per_sample must be at least 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise InputError("burn_in must be nonnegative")

    def resolved(self, m: int) -> "NullModelConfig":
        return NullModelConfig(
            n_samples=self.n_samples,
            swaps_per_sample=self.swaps_per_sample if self.swaps_per_sample is not None else 10 * m,
            burn_in=self.burn_in if self.burn_in is not None else 100 * m,
            t0=self.t0,
            t_min=self.t_min,
            cooling=self.cooling,
            rng_seed=self.rng_seed,
        )


@dataclass(frozen=True, eq=False)
class NullSample:
    graph: Graph
    m_in: int
    loglik: float
    index: int
    proposals: int
    accepted: int
    invalid: int
    temperature: float

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0


def loglik_m_in(m_in: int, m: int, omega_in: float) -> float:
    """Binomial log-likelihood of ``m_in`` same-type edges out of ``m``."""
    if not 0 <= m_in <= m:
        raise InputError("m_in must lie in [0, m]")
    if not 0.0 <= omega_in <= 1.0:
        raise InputError("omega_in must lie in [0, 1]")
    log_binom = gammaln(m + 1) - gammaln(m_in + 1) - gammaln(m - m_in + 1)
    if omega_in == 0.0:
        return 0.0 if m_in == 0 else -math.inf
    if omega_in == 1.0:
        return 0.0 if m_in == m else -math.inf
    return float(log_binom + m_in * math.log(omega_in) + (m - m_in) * math.log1p(-omega_in))


def _same(y: np.ndarray, u: int, v: int) -> int:
    return int(y[u] != MISSING and y[u] == y[v])


def _labeled(y: np.ndarray, u: int, v: int) -> int:
    return int(y[u] != MISSING and y[v] != MISSING)


class SwapChain:
    """State of one stub-labeled MCMC chain. Advance with :meth:`propose`."""

    def __init__(self, graph: Graph, column: CategoricalColumn, config: NullModelConfig):
        if graph.directed:
            raise InputError("the null model supports undirected graphs only")
        if not isinstance(column, CategoricalColumn):
            raise InputError("the null model needs a categorical column")
        edges = graph.edge_array()
        m = len(edges)
        if m < 2:
            raise InputError("the null model needs at least two edges")
        y = column.codes
        incident = np.zeros(graph.n_nodes, dtype=bool)
        incident[edges.ravel()] = True
        present = np.unique(y[incident & (y != MISSING)])
        if present.size < 2:
            raise DegenerateAttribute("attribute has a single category on the edge set")

        self.graph = graph
        self.y = y
        self.config = config
        self.n = graph.n_nodes
        self.edges = [(int(u), int(v)) for u, v in edges]
        self.edge_set = {self._key(u, v) for u, v in self.edges}
        self.m_known = sum(_labeled(y, u, v) for u, v in self.edges)
        self.m_in = sum(_same(y, u, v) for u, v in self.edges)
        self.omega_in = self.m_in / self.m_known if self.m_known else 0.0
        self.loglik = loglik_m_in(self.m_in, self.m_known, self.omega_in)
        self.temperature = config.t0
        self.rng = np.random.default_rng(config.rng_seed)
        self.proposals = 0
        self.accepted = 0
        self.invalid = 0

    def _key(self, u: int, v: int) -> int:
        return u * self.n + v if u < v else v * self.n + u

    def propose(self, count: int, trace: list[int] | None = None) -> None:
        """Run ``count`` proposals; optionally append ``m_in`` after each."""
        rng, y, edges, edge_set = self.rng, self.y, self.edges, self.edge_set
        m = len(edges)
        omega = self.omega_in
        t_min, cooling = self.config.t_min, self.config.cooling
        first = rng.integers(0, m, size=count)
        second = rng.integers(0, m - 1, size=count)
        flips = rng.random(count) < 0.5
        coins = rng.random(count)
        for k in range(count):
            i, j = int(first[k]), int(second[k])
            if j >= i:
                j += 1
            self.proposals += 1
            t = self.temperature
            self.temperature = max(t_min, cooling * t)
            a, b = edges[i]
            c, d = edges[j]
            if flips[k]:
                e1, e2 = (a, d), (c, b)
            else:
                e1, e2 = (a, c), (b, d)
            k1, k2 = self._key(*e1), self._key(*e2)
            if e1[0] == e1[1] or e2[0] == e2[1] or k1 in edge_set or k2 in edge_set or k1 == k2:
                self.invalid += 1
                if trace is not None:
                    trace.append(self.m_in)
                continue
            delta = _same(y, *e1) + _same(y, *e2) - _same(y, a, b) - _same(y, c, d)
            # swaps can move missing-label stubs, so the labeled edge count may change
            delta_known = (
                _labeled(y, *e1) + _labeled(y, *e2) - _labeled(y, a, b) - _labeled(y, c, d)
            )
            if delta or delta_known:
                new_ll = loglik_m_in(self.m_in + delta, self.m_known + delta_known, omega)
                diff = new_ll - self.loglik
                accept = diff >= 0 or (
                    diff != -math.inf and coins[k] < math.exp(diff / t)
                )
            else:
                new_ll, accept = self.loglik, True
            if accept:
                edge_set.discard(self._key(a, b))
                edge_set.discard(self._key(c, d))
                edge_set.add(k1)
                edge_set.add(k2)
                edges[i], edges[j] = e1, e2
                self.m_in += delta
                self.m_known += delta_known
                self.loglik = new_ll
                self.accepted += 1
            if trace is not None:
                trace.append(self.m_in)

    def snapshot(self, index: int) -> NullSample:
        g = Graph.from_edges(self.graph.node_ids, self.edges, directed=False)
        return NullSample(
            graph=g,
            m_in=self.m_in,
            loglik=self.loglik,
            index=index,
            proposals=self.proposals,
            accepted=self.accepted,
            invalid=self.invalid,
            temperature=self.temperature,
        )


def sample_null(graph: Graph, column: CategoricalColumn, config: NullModelConfig) -> Iterator[NullSample]:
    """Yield ``config.n_samples`` rewired graphs.

    Every proposal (valid or not) advances the temperature schedule and counts
    toward ``burn_in`` and ``swaps_per_sample``.
    """
    chain = SwapChain(graph, column, config.resolved(graph.n_edges))
    cfg = chain.config
    chain.propose(cfg.burn_in)
    for s in range(cfg.n_samples):
        chain.propose(cfg.swaps_per_sample)
        yield chain.snapshot(s)


@dataclass
class NullDistribution:
    histogram: WeightedHistogram
    samples: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def null_distribution(
    graph: Graph,
    column: CategoricalColumn,
    config: NullModelConfig,
    walker_config: WalkerConfig | None = None,
    bins: int = 50,
    jobs: int = 1,
) -> NullDistribution:
    """Pooled, ``z``-weighted distribution of multiscale local assortativity
    over the null ensemble."""
    walker_config = walker_config or WalkerConfig()
    if config.n_samples == 0:
        return NullDistribution(
            weighted_histogram([], [], bins=bins),
            diagnostics=["n_samples = 0: null histogram is empty"],
        )
    values: list[float | None] = []
    weights: list[float] = []
    records = []
    for sample in sample_null(graph, column, config):
        res = local_assortativity(sample.graph, column, walker_config, multiscale=True, jobs=jobs)
        total_z = sum(r.z for r in res)
        for r in res:
            values.append(r.r)
            # each sample contributes equal total mass
            weights.append(r.z / total_z if total_z > 0 else 0.0)
        records.append(
            {
                "index": sample.index,
                "m_in": sample.m_in,
                "loglik": sample.loglik,
                "acceptance_rate": sample.acceptance_rate,
                "proposals": sample.proposals,
                "invalid": sample.invalid,
                "temperature": sample.temperature,
            }
        )
    return NullDistribution(weighted_histogram(values, weights, bins=bins), records)


def write_ensemble(
    samples, directory: str | os.PathLike, config: NullModelConfig, extra: dict | None = None
) -> Path:
    """Persist samples as numbered edge lists plus ``manifest.json``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for sample in samples:
        name = f"sample_{sample.index:05d}.edges"
        write_edge_list(sample.graph, out / name)
        entries.append(
            {
                "file": name,
                "m_in": sample.m_in,
                "loglik": sample.loglik,
                "acceptance_rate": sample.acceptance_rate,
            }
        )
    manifest = {"config": asdict(config), "samples": entries, **(extra or {})}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path

