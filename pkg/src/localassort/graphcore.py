"""Graph and attribute data model, parsers, and basic derived quantities."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import (
    DuplicateEdge,
    InputError,
    ParseError,
    RaggedRow,
    SelfLoop,
    UnknownNode,
)

Source = Union[str, os.PathLike, IO[str]]

MISSING = -1


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple graph in compressed sparse row form.

    ``out_adj[i, j] == 1`` iff there is an edge (undirected) or an arc
    ``i -> j`` (directed). For undirected graphs ``in_adj`` is the same
    matrix, for directed graphs it is the transpose, so a walker can follow
    out-edges while sums over arcs stay cheap.
    """

    node_ids: tuple[str, ...]
    directed: bool
    out_adj: sp.csr_matrix
    in_adj: sp.csr_matrix
    out_degree: np.ndarray
    in_degree: np.ndarray
    component_id: np.ndarray

    @classmethod
    def from_edges(
        cls,
        node_ids: Sequence[str] | int,
        edges: Iterable[tuple[int, int]],
        directed: bool = False,
    ) -> "Graph":
        """Build a graph from integer edge pairs, rejecting loops and duplicates."""
        if isinstance(node_ids, int):
            node_ids = [str(i) for i in range(node_ids)]
        node_ids = tuple(str(x) for x in node_ids)
        n = len(node_ids)
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InputError("edge endpoint out of range")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise SelfLoop("self-loops are not allowed")
        if directed:
            src, dst = arr[:, 0], arr[:, 1]
        else:
            src = np.concatenate([arr[:, 0], arr[:, 1]])
            dst = np.concatenate([arr[:, 1], arr[:, 0]])
        keys = src * n + dst
        if np.unique(keys).size != keys.size:
            raise DuplicateEdge("parallel edges are not allowed")
        data = np.ones(src.size, dtype=np.float64)
        out_adj = sp.csr_matrix((data, (src, dst)), shape=(n, n))
        out_adj.sort_indices()
        in_adj = out_adj if not directed else out_adj.T.tocsr()
        in_adj.sort_indices()
        out_deg = np.diff(out_adj.indptr).astype(np.int64)
        in_deg = np.diff(in_adj.indptr).astype(np.int64)
        _, labels = connected_components(out_adj, directed=True, connection="weak")
        for a in (out_deg, in_deg, labels):
            a.setflags(write=False)
        return cls(
            node_ids=node_ids,
            directed=directed,
            out_adj=out_adj,
            in_adj=in_adj,
            out_degree=out_deg,
            in_degree=in_deg,
            component_id=labels.astype(np.int64),
        )

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        nnz = self.out_adj.nnz
        return nnz if self.directed else nnz // 2

    @property
    def degree(self) -> np.ndarray:
        """Out-degree; for undirected graphs simply the degree."""
        return self.out_degree

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.node_ids)}

    @cached_property
    def arcs(self) -> tuple[np.ndarray, np.ndarray]:
        """All directed arcs (both orientations of every undirected edge)."""
        coo = self.out_adj.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64)

    def edge_array(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` array; undirected edges listed once with ``i < j``."""
        src, dst = self.arcs
        if not self.directed:
            keep = src < dst
            src, dst = src[keep], dst[keep]
        return np.column_stack([src, dst])

    def neighbors(self, i: int) -> np.ndarray:
        a = self.out_adj
        return a.indices[a.indptr[i] : a.indptr[i + 1]]

    @property
    def n_components(self) -> int:
        return int(self.component_id.max()) + 1 if self.n_nodes else 0

    def is_connected(self) -> bool:
        return self.n_components <= 1

    def has_dangling(self) -> bool:
        """True if some node with no out-edges can be reached from another node."""
        return bool(np.any((self.out_degree == 0) & (self.in_degree > 0)))


@dataclass(frozen=True, eq=False)
class CategoricalColumn:
    name: str
    codes: np.ndarray
    categories: tuple[str, ...]

    kind = "categorical"

    @classmethod
    def from_labels(cls, name: str, labels: Sequence[object | None]) -> "CategoricalColumn":
        """Encode labels (``None`` or ``""`` meaning missing) with sorted category order."""
        cats = sorted({str(x) for x in labels if x is not None and str(x) != ""})
        lookup = {c: i for i, c in enumerate(cats)}
        codes = np.array(
            [MISSING if x is None or str(x) == "" else lookup[str(x)] for x in labels],
            dtype=np.int64,
        )
        codes.setflags(write=False)
        return cls(name, codes, tuple(cats))

    @property
    def missing(self) -> np.ndarray:
        return self.codes == MISSING

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def counts(self) -> dict[str, int]:
        known = self.codes[self.codes != MISSING]
        tally = np.bincount(known, minlength=self.n_categories)
        return {c: int(k) for c, k in zip(self.categories, tally)}

    def labels(self) -> list[str | None]:
        return [None if c == MISSING else self.categories[c] for c in self.codes]


@dataclass(frozen=True, eq=False)
class ScalarColumn:
    name: str
    values: np.ndarray

    kind = "scalar"

    @classmethod
    def from_values(cls, name: str, values: Sequence[float | None]) -> "ScalarColumn":
        arr = np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
        arr.setflags(write=False)
        return cls(name, arr)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)


Column = Union[CategoricalColumn, ScalarColumn]


@dataclass(frozen=True, eq=False)
class AttributeTable:
    node_ids: tuple[str, ...]
    columns: Mapping[str, Column] = field(default_factory=dict)

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    def __getitem__(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise InputError(f"no attribute column named {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def with_column(self, column: Column) -> "AttributeTable":
        n = len(column.codes if isinstance(column, CategoricalColumn) else column.values)
        if n != self.node_count:
            raise InputError(f"column {column.name!r} has length {n}, expected {self.node_count}")
        cols = dict(self.columns)
        cols[column.name] = column
        return AttributeTable(self.node_ids, cols)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """A probability distribution over nodes.

    ``kind`` is one of ``"stationary"``, ``"ppr"``, ``"multiscale"`` or
    ``"custom"``; ``diagnostics`` carries iteration counts and truncation info.
    """

    values: np.ndarray
    kind: str
    seed: int | None = None
    alpha: float | None = None
    diagnostics: Mapping[str, object] = field(default_factory=dict)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _read_text(source: Source) -> str:
    if hasattr(source, "read"):
        return source.read()
    return Path(source).read_text(encoding="utf-8")


def parse_edge_list(text: str, directed: bool = False, strict: bool = True) -> Graph:
    """Parse whitespace-separated ``u v`` pairs into a :class:`Graph`.

    Lines starting with ``#`` and blank lines are skipped. A line holding a
    single token declares an isolated node. In strict mode a repeated edge
    raises :class:`DuplicateEdge`; otherwise repeats are dropped.
    """
    index: dict[str, int] = {}
    ids: list[str] = []
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()

    def node(tok: str) -> int:
        if tok not in index:
            index[tok] = len(ids)
            ids.append(tok)
        return index[tok]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) == 1:
            node(toks[0])
            continue
        if len(toks) != 2:
            raise ParseError(f"expected two node ids, got {len(toks)} fields", lineno)
        u, v = toks
        if u == v:
            raise SelfLoop(f"self-loop on node {u!r}", lineno)
        i, j = node(u), node(v)
        key = (i, j) if directed else (min(i, j), max(i, j))
        if key in seen:
            if strict:
                raise DuplicateEdge(f"duplicate edge {u} {v}", lineno)
            continue
        seen.add(key)
        edges.append((i, j))
    return Graph.from_edges(ids, edges, directed=directed)


def load_edge_list(source: Source, directed: bool = False, strict: bool = True) -> Graph:
    return parse_edge_list(_read_text(source), directed=directed, strict=strict)


def format_edge_list(graph: Graph) -> str:
    buf = io.StringIO()
    edges = graph.edge_array()
    touched = np.zeros(graph.n_nodes, dtype=bool)
    touched[edges.ravel()] = True
    for i in np.flatnonzero(~touched):
        buf.write(f"{graph.node_ids[i]}\n")
    for i, j in edges:
        buf.write(f"{graph.node_ids[i]} {graph.node_ids[j]}\n")
    return buf.getvalue()


def write_edge_list(graph: Graph, path: str | os.PathLike) -> None:
    Path(path).write_text(format_edge_list(graph), encoding="utf-8")


def _is_number(tok: str) -> bool:
    try:
        return math.isfinite(float(tok))
    except ValueError:
        return False


def parse_attributes(
    text: str,
    graph: Graph,
    types: Mapping[str, str] | None = None,
) -> AttributeTable:
    """Parse a CSV attribute file aligned to ``graph``'s node index.

    The first column holds node ids. Empty fields are missing values. A
    column whose non-empty values are all numeric is read as scalar unless
    ``types`` maps its name to ``"categorical"`` (or vice versa).
    """
    types = dict(types or {})
    rows = list(csv.reader(io.StringIO(text)))
    # csv line numbers: header is line 1
    numbered = [(k + 1, r) for k, r in enumerate(rows) if r and any(f.strip() for f in r)]
    if not numbered:
        raise ParseError("attribute file is empty", 1)
    header_line, header = numbered[0]
    header = [h.strip() for h in header]
    names = header[1:]
    if not names:
        raise ParseError("attribute header has no columns", header_line)
    if len(set(names)) != len(names):
        raise ParseError("duplicate column names in header", header_line)
    for name, t in types.items():
        if name not in names:
            raise InputError(f"no attribute column named {name!r}")
        if t not in ("categorical", "scalar"):
            raise InputError(f"unknown column type {t!r}")

    n = graph.n_nodes
    raw: dict[str, list[str]] = {name: [""] * n for name in names}
    seen: set[int] = set()
    for lineno, row in numbered[1:]:
        if len(row) != len(header):
            raise RaggedRow(f"expected {len(header)} fields, got {len(row)}", lineno)
        node_id = row[0].strip()
        if node_id not in graph.index:
            raise UnknownNode(f"unknown node {node_id!r}", lineno)
        i = graph.index[node_id]
        if i in seen:
            raise ParseError(f"node {node_id!r} listed twice", lineno)
        seen.add(i)
        for name, value in zip(names, row[1:]):
            raw[name][i] = value.strip()

    columns: dict[str, Column] = {}
    for name in names:
        values = raw[name]
        present = [v for v in values if v != ""]
        kind = types.get(name)
        if kind is None:
            kind = "scalar" if present and all(_is_number(v) for v in present) else "categorical"
        if kind == "scalar":
            bad = [v for v in present if not _is_number(v)]
            if bad:
                raise InputError(f"column {name!r} forced scalar but holds {bad[0]!r}")
            columns[name] = ScalarColumn.from_values(name, [float(v) if v else None for v in values])
        else:
            columns[name] = CategoricalColumn.from_labels(name, values)
    return AttributeTable(graph.node_ids, columns)


def load_attributes(
    source: Source, graph: Graph, types: Mapping[str, str] | None = None
) -> AttributeTable:
    return parse_attributes(_read_text(source), graph, types)


def format_attributes(table: AttributeTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = list(table.columns)
    writer.writerow(["node", *names])
    for i, node_id in enumerate(table.node_ids):
        row = [node_id]
        for name in names:
            col = table.columns[name]
            if isinstance(col, CategoricalColumn):
                row.append("" if col.codes[i] == MISSING else col.categories[col.codes[i]])
            else:
                v = col.values[i]
                row.append("" if np.isnan(v) else repr(float(v)))
        writer.writerow(row)
    return buf.getvalue()


def stationary_distribution(graph: Graph) -> WeightVector:
    """Degree-proportional stationary distribution ``k_i / 2m``."""
    if graph.directed:
        raise InputError("stationary distribution is only defined here for undirected graphs")
    if graph.n_edges < 1:
        raise InputError("graph has no edges")
    k = graph.degree.astype(np.float64)
    return WeightVector(k / k.sum(), kind="stationary", alpha=1.0)
