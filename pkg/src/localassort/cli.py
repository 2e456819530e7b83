"""``assort`` command line interface.

Exit codes: 0 success, 2 input or usage error, 3 degenerate computation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .errors import AssortError, ComputationError, DegenerateAttribute, InputError
from .graphcore import (
    AttributeTable,
    CategoricalColumn,
    Graph,
    ScalarColumn,
    format_attributes,
    format_edge_list,
    load_attributes,
    load_edge_list,
)
from .mixing import (
    BoundWarning,
    LocalMixingResult,
    assort_correlation,
    global_assort_cat,
    global_assort_scalar,
    iter_local_assortativity,
    mixing_matrix,
    r_min,
    standardize,
)
from .nullmodel import NullModelConfig, null_distribution, sample_null, write_ensemble
from .summary import summarize_results, weighted_histogram
from .synthgen import generate_block_network, get_preset, load_block_spec
from .walker import WalkerConfig

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seeds: dict[str, int] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    duration_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def hash_input(self, path: str | os.PathLike) -> None:
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        self.inputs[str(path)] = digest

    def write(self, path: str | os.PathLike, started: float) -> Path:
        self.duration_s = round(time.perf_counter() - started, 6)
        path = Path(path)
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def manifest_path(output: str | os.PathLike) -> Path:
    return Path(f"{output}.manifest.json")


def write_local_csv(results, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["node", "r", "z"])
    for res in results:
        writer.writerow([res.node, "" if res.r is None else repr(res.r), repr(res.z)])


def read_local_csv(path: str | os.PathLike, attribute: str = "") -> list[LocalMixingResult]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(f"local results file not found: {path}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0][:3]] != ["node", "r", "z"]:
        raise InputError(f"{path}: expected header node,r,z")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) < 3:
            raise InputError(f"{path}: line {lineno}: expected 3 fields")
        try:
            r = float(row[1]) if row[1].strip() else None
            z = float(row[2])
        except ValueError:
            raise InputError(f"{path}: line {lineno}: non-numeric value") from None
        out.append(LocalMixingResult(row[0], r, z, "file", attribute))
    return out


def _jobs_default() -> int:
    try:
        return max(1, int(os.environ.get("ASSORT_JOBS", "1")))
    except ValueError:
        return 1


def _load_inputs(args, manifest: RunManifest) -> tuple[Graph, AttributeTable]:
    edge_path = Path(args.edges)
    if not edge_path.is_file():
        raise InputError(f"edge file not found: {edge_path}")
    if not Path(args.attributes).is_file():
        raise InputError(f"attribute file not found: {args.attributes}")
    if args.kind and args.column is None:
        raise InputError("--scalar/--categorical need --column")
    graph = load_edge_list(edge_path, directed=args.directed, strict=not args.lenient)
    types = {args.column: args.kind} if args.kind else None
    table = load_attributes(args.attributes, graph, types)
    manifest.hash_input(edge_path)
    manifest.hash_input(args.attributes)
    return graph, table


def _column(args, table: AttributeTable):
    if args.column is None:
        if len(table.columns) != 1:
            raise InputError("attribute file has several columns; pick one with --column")
        return next(iter(table.columns.values()))
    return table[args.column]


def _walker_config(args, alpha: float | None = None) -> WalkerConfig:
    return WalkerConfig(
        alpha=0.85 if alpha is None else alpha,
        tol=args.tol,
        eta_max=args.eta_max,
    )


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_global(args) -> int:
    started = time.perf_counter()
    manifest = RunManifest("global")
    graph, table = _load_inputs(args, manifest)
    col = _column(args, table)
    report: dict = {
        "column": col.name,
        "kind": col.kind,
        "directed": graph.directed,
        "n_nodes": graph.n_nodes,
        "n_edges": graph.n_edges,
    }
    if isinstance(col, ScalarColumn):
        std = standardize(graph, col)
        report.update(r_global=global_assort_scalar(graph, col), mean=std.mean, sigma=std.sigma)
    else:
        mix = mixing_matrix(graph, col)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", BoundWarning)
            low = r_min(mix)
        report.update(
            r_global=global_assort_cat(mix),
            q=mix.q,
            q_max=mix.q_max,
            r_min=low,
            r_min_below_minus_one=any(issubclass(w.category, BoundWarning) for w in caught),
            observed_mass=mix.observed_mass,
            marginals={c: float(a) for c, a in zip(mix.categories, mix.a)},
        )
        if graph.directed:
            report["in_marginals"] = {c: float(b) for c, b in zip(mix.categories, mix.b)}

    if args.format == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key, value in report.items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    writer.writerow([f"{key}.{sub}", v])
            else:
                writer.writerow([key, value])
        text = buf.getvalue()
    else:
        lines = [f"{k}: {v}" for k, v in report.items()]
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    if args.output:
        manifest.outputs.append(args.output)
        manifest.config = {"column": col.name, "directed": graph.directed}
        manifest.write(manifest_path(args.output), started)
    return EXIT_OK


def cmd_local(args) -> int:
    started = time.perf_counter()
    if args.alpha is not None and not 0.0 <= args.alpha <= 1.0:
        raise InputError("alpha must lie in [0,1]")
    manifest = RunManifest("local")
    graph, table = _load_inputs(args, manifest)
    col = _column(args, table)
    config = _walker_config(args, args.alpha)
    batches = iter_local_assortativity(graph, col, config, multiscale=args.multiscale, jobs=args.jobs)
    stream = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["node", "r", "z"])
        for batch in batches:
            for res in batch:
                writer.writerow([res.node, "" if res.r is None else repr(res.r), repr(res.z)])
            stream.flush()
    finally:
        if stream is not sys.stdout:
            stream.close()
    if args.output:
        manifest.outputs.append(args.output)
        manifest.config = {
            "column": col.name,
            "kind": col.kind,
            "multiscale": args.multiscale,
            **asdict(config),
        }
        manifest.write(manifest_path(args.output), started)
    return EXIT_OK


def cmd_null(args) -> int:
    started = time.perf_counter()
    manifest = RunManifest("null")
    graph, table = _load_inputs(args, manifest)
    col = _column(args, table)
    if not isinstance(col, CategoricalColumn):
        raise InputError("the null model needs a categorical column")
    config = NullModelConfig(
        n_samples=args.samples,
        swaps_per_sample=args.swaps_per_sample,
        burn_in=args.burn_in,
        t0=args.t0,
        t_min=args.t_min,
        cooling=args.cooling,
        rng_seed=args.seed,
    )
    wcfg = _walker_config(args)
    dist = null_distribution(graph, col, config, wcfg, bins=args.bins, jobs=args.jobs)
    observed = list(
        r for b in iter_local_assortativity(graph, col, wcfg, multiscale=True, jobs=args.jobs) for r in b
    )
    obs_hist = summarize_results(observed, bins=args.bins)
    for msg in dist.diagnostics:
        print(f"diagnostic: {msg}", file=sys.stderr)
    _emit(dist.histogram.to_csv(), args.output)
    report = {
        "null": dist.histogram.summary(),
        "observed": obs_hist.summary(),
        "omega_in": mixing_matrix(graph, col).omega_in,
        "diagnostics": dist.diagnostics,
    }
    if args.ensemble_dir and config.n_samples:
        write_ensemble(
            sample_null(graph, col, config),
            args.ensemble_dir,
            config.resolved(graph.n_edges),
            extra={"seeds": {"rng_seed": args.seed}},
        )
    if args.output:
        print(json.dumps(report, indent=2, sort_keys=True))
        manifest.outputs.append(args.output)
        manifest.config = {
            **asdict(config.resolved(graph.n_edges)),
            "walker": asdict(wcfg),
            "bins": args.bins,
            "bin_policy": "[-1, 1] widened to the data range",
        }
        manifest.seeds = {"rng_seed": args.seed}
        manifest.extra = {
            "acceptance_rates": [s["acceptance_rate"] for s in dist.samples],
            "m_in_trace": [s["m_in"] for s in dist.samples],
            "summary": report,
        }
        manifest.write(manifest_path(args.output), started)
    return EXIT_OK


def cmd_generate(args) -> int:
    started = time.perf_counter()
    manifest = RunManifest("generate")
    if args.spec:
        if not Path(args.spec).is_file():
            raise InputError(f"spec file not found: {args.spec}")
        spec = load_block_spec(args.spec, rng_seed=args.seed)
        manifest.hash_input(args.spec)
    else:
        spec = get_preset(args.preset, rng_seed=args.seed if args.seed is not None else 0)
    graph, table = generate_block_network(spec)
    prefix = Path(args.prefix)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True)
    edges_out = Path(f"{prefix}.edges")
    attrs_out = Path(f"{prefix}.attrs.csv")
    edges_out.write_text(format_edge_list(graph), encoding="utf-8")
    attrs_out.write_text(format_attributes(table), encoding="utf-8")
    manifest.outputs += [str(edges_out), str(attrs_out)]
    manifest.config = {
        "preset": args.preset,
        "group_sizes": list(spec.group_sizes),
        "block_edges": [list(r) for r in spec.block_edges],
        "type_of_group": list(spec.type_of_group),
    }
    manifest.seeds = {"rng_seed": spec.rng_seed}
    manifest.write(Path(f"{prefix}.manifest.json"), started)
    print(json.dumps({"edges": str(edges_out), "attributes": str(attrs_out),
                      "n_nodes": graph.n_nodes, "n_edges": graph.n_edges}))
    return EXIT_OK


def cmd_compare(args) -> int:
    a = read_local_csv(args.local_a)
    b = read_local_csv(args.local_b)
    nodes_b = {r.node for r in b}
    if not any(r.node in nodes_b for r in a):
        raise DegenerateAttribute("the two files share no nodes")
    pearson, frac = assort_correlation(a, b, weighted=not args.unweighted)
    report = {"pearson": pearson, "frac_a_gt_b": frac, "weighted": not args.unweighted}
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def cmd_summary(args) -> int:
    results = read_local_csv(args.local)
    hist = weighted_histogram([r.r for r in results], [r.z for r in results], bins=args.bins)
    if args.format == "json":
        payload = {
            "summary": hist.summary(),
            "bin_edges": [float(x) for x in hist.edges],
            "mass": [float(x) for x in hist.mass],
        }
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output)
    else:
        _emit(hist.to_csv(), args.output)
        if args.output:
            print(json.dumps(hist.summary(), indent=2, sort_keys=True))
    return EXIT_OK


def _common_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("edges", help="edge list file")
    p.add_argument("attributes", help="attribute CSV file")
    p.add_argument("--column", help="attribute column to analyse")
    kind = p.add_mutually_exclusive_group()
    kind.add_argument("--scalar", dest="kind", action="store_const", const="scalar")
    kind.add_argument("--categorical", dest="kind", action="store_const", const="categorical")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--lenient", action="store_true", help="drop duplicate edges instead of failing")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--eta-max", type=int, default=10_000)
    p.add_argument("--jobs", type=int, default=_jobs_default())
    p.add_argument("--output", "-o")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="assort", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("global", help="global assortativity")
    _common_graph_args(p)
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.set_defaults(func=cmd_global)

    p = sub.add_parser("local", help="per-node local assortativity CSV")
    _common_graph_args(p)
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--alpha", type=float)
    mode.add_argument("--multiscale", action="store_true")
    p.set_defaults(func=cmd_local)

    p = sub.add_parser("null", help="null-model histogram of multiscale local assortativity")
    _common_graph_args(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--swaps-per-sample", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--t0", type=float, default=1.0)
    p.add_argument("--t-min", type=float, default=1e-3)
    p.add_argument("--cooling", type=float, default=0.9999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--ensemble-dir", help="also write sampled graphs and a manifest here")
    p.set_defaults(func=cmd_null)

    p = sub.add_parser("generate", help="synthetic block networks")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset")
    src.add_argument("--spec", help="JSON block spec")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("prefix", help="output prefix for .edges / .attrs.csv")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compare", help="correlate two local-assortativity CSVs")
    p.add_argument("local_a")
    p.add_argument("local_b")
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("summary", help="z-weighted histogram and percentiles")
    p.add_argument("local")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_summary)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ComputationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except AssortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
