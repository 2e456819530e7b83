import csv
import json
import subprocess
import sys

import pytest

from localassort.cli import main, read_local_csv, write_local_csv
from localassort.graphcore import format_attributes, format_edge_list, load_edge_list
from localassort.mixing import LocalMixingResult
from localassort.synthgen import BlockSpec, generate_block_network

from _graphs import cat, complete_bipartite, table, triangle


def _write(tmp_path, name, graph, *columns):
    edges = tmp_path / f"{name}.edges"
    attrs = tmp_path / f"{name}.csv"
    edges.write_text(format_edge_list(graph))
    attrs.write_text(format_attributes(table(graph, *columns)))
    return str(edges), str(attrs)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def tri(tmp_path):
    return _write(tmp_path, "tri", triangle(), cat(["g", "g", "h"]))


def test_global_triangle_json(tri, capsys):
    assert main(["global", *tri, "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["r_global"] == pytest.approx(-0.5, abs=1e-14)
    assert report["marginals"] == pytest.approx({"g": 2 / 3, "h": 1 / 3})
    assert report["q_max"] == pytest.approx(4 / 9)
    assert "r_min" in report


def test_global_text_and_manifest(tri, tmp_path, capsys):
    out = tmp_path / "g.txt"
    assert main(["global", *tri, "--output", str(out)]) == 0
    assert "r_global: -0.5" in out.read_text()
    manifest = json.loads((tmp_path / "g.txt.manifest.json").read_text())
    assert manifest["command"] == "global"
    assert len(manifest["inputs"]) == 2
    assert all(len(h) == 64 for h in manifest["inputs"].values())


def test_missing_attribute_file(tri, capsys):
    assert main(["global", tri[0], "/nonexistent.csv"]) == 2
    assert "attribute file not found" in capsys.readouterr().err


def test_parse_error_names_line(tmp_path, tri, capsys):
    bad = tmp_path / "bad.edges"
    bad.write_text("a b\nb c\nc c\n")
    assert main(["global", str(bad), tri[1]]) == 2
    assert "line 3" in capsys.readouterr().err


def test_degenerate_exit_three(tmp_path, capsys):
    paths = _write(tmp_path, "mono", triangle(), cat(["g", "g", "g"]))
    assert main(["global", *paths]) == 3


def test_unknown_column(tri, capsys):
    assert main(["global", *tri, "--column", "nope"]) == 2


def test_local_alpha_one_equals_global(tmp_path, capsys):
    g, col = generate_block_network(BlockSpec((6, 6), ((10, 8), (8, 9)), ("a", "b"), rng_seed=2))
    paths = _write(tmp_path, "blk", g, col["type"])
    main(["global", *paths, "--format", "json"])
    r_glob = json.loads(capsys.readouterr().out)["r_global"]
    out = tmp_path / "local.csv"
    assert main(["local", *paths, "--alpha", "1.0", "--output", str(out)]) == 0
    rows = _rows(out)
    assert len(rows) == g.n_nodes
    for row in rows:
        assert float(row["r"]) == pytest.approx(r_glob, abs=1e-12)
        assert float(row["z"]) == 1.0
    assert (tmp_path / "local.csv.manifest.json").exists()


def test_local_multiscale_bipartite(tmp_path, capsys):
    g, col = complete_bipartite(3, 3)
    paths = _write(tmp_path, "k33", g, col)
    assert main(["local", *paths, "--multiscale", "--jobs", "2"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    # rows follow the edge file's node order
    assert [r["node"] for r in rows] == list(load_edge_list(paths[0]).node_ids)
    assert all(float(r["r"]) == pytest.approx(-1.0) and float(r["z"]) == 1.0 for r in rows)


def test_local_bad_alpha(tri, capsys):
    assert main(["local", *tri, "--alpha", "1.5"]) == 2
    assert "alpha must lie in [0,1]" in capsys.readouterr().err


def test_local_undefined_is_empty(tmp_path, capsys):
    from localassort.graphcore import Graph

    g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    paths = _write(tmp_path, "mis", g, cat(["g", "h", "g", None, None]))
    assert main(["local", *paths, "--multiscale"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert rows[3]["r"] == "" and float(rows[3]["z"]) == 0.0


def test_generate_preset(tmp_path, capsys):
    prefix = tmp_path / "out" / "hom"
    assert main(["generate", "--preset", "fig2-homogeneous", "--seed", "4", str(prefix)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (info["n_nodes"], info["n_edges"]) == (40, 160)
    assert main(["global", info["edges"], info["attributes"], "--format", "json"]) == 0
    assert abs(json.loads(capsys.readouterr().out)["r_global"]) <= 1e-12
    assert (tmp_path / "out" / "hom.manifest.json").exists()


def test_generate_errors(tmp_path, capsys):
    assert main(["generate", "--preset", "nope", str(tmp_path / "x")]) == 2
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({
        "group_names": ["c1", "d1"],
        "group_sizes": [10, 10],
        "block_edges": [[100, 0], [0, 5]],
        "type_of_group": ["c", "d"],
    }))
    assert main(["generate", "--spec", str(spec), str(tmp_path / "y")]) == 3
    assert "c1-c1" in capsys.readouterr().err


def _planted(tmp_path):
    spec = BlockSpec(
        (25, 25, 25, 25),
        ((80, 5, 0, 5), (5, 0, 5, 150), (0, 5, 80, 5), (5, 150, 5, 0)),
        ("c", "c", "d", "d"),
        rng_seed=1,
    )
    g, t = generate_block_network(spec)
    return _write(tmp_path, "planted", g, t["type"])


def test_null_zero_samples(tri, tmp_path, capsys):
    out = tmp_path / "null.csv"
    assert main(["null", *tri, "--samples", "0", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,mass"
    assert all(float(l.split(",")[2]) == 0.0 for l in lines[1:])
    assert "n_samples = 0" in capsys.readouterr().err


def test_null_deterministic_and_narrower(tmp_path, capsys):
    paths = _planted(tmp_path)
    outs = []
    for k in range(2):
        out = tmp_path / f"null{k}.csv"
        assert main(["null", *paths, "--samples", "8", "--seed", "5", "--output", str(out)]) == 0
        outs.append(out.read_bytes())
        report = json.loads(capsys.readouterr().out)
    assert outs[0] == outs[1]
    null, obs = report["null"]["percentiles"], report["observed"]["percentiles"]
    assert null["p90"] - null["p10"] < obs["p90"] - obs["p10"]
    manifest = json.loads((tmp_path / "null1.csv.manifest.json").read_text())
    assert manifest["seeds"] == {"rng_seed": 5}
    assert len(manifest["extra"]["m_in_trace"]) == 8


def test_null_ensemble_dir(tmp_path, capsys):
    g, _ = complete_bipartite(3, 3)
    extra = tmp_path / "more"
    paths = _write(tmp_path, "k33", g, cat(["a", "b", "a", "b", "a", "b"]))
    assert main(["null", *paths, "--samples", "2", "--ensemble-dir", str(extra)]) == 0
    manifest = json.loads((extra / "manifest.json").read_text())
    assert len(manifest["samples"]) == 2


def _local_file(tmp_path, name, values):
    path = tmp_path / name
    with open(path, "w", newline="") as fh:
        write_local_csv([LocalMixingResult(str(i), v, 1.0, "x", "t") for i, v in enumerate(values)], fh)
    return str(path)


def test_compare(tmp_path, capsys):
    a = _local_file(tmp_path, "a.csv", [0.1, 0.2, 0.3])
    b = _local_file(tmp_path, "b.csv", [0.3, 0.2, 0.1])
    assert main(["compare", a, a]) == 0
    assert json.loads(capsys.readouterr().out)["pearson"] == pytest.approx(1.0)
    assert main(["compare", a, b]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pearson"] == pytest.approx(-1.0)
    assert report["frac_a_gt_b"] == pytest.approx(1 / 3)


def test_compare_disjoint(tmp_path, capsys):
    a = _local_file(tmp_path, "a.csv", [0.1, 0.2, 0.3])
    path = tmp_path / "c.csv"
    path.write_text("node,r,z\nx,0.1,1\ny,0.2,1\nz,0.3,1\n")
    assert main(["compare", a, str(path)]) == 3


def test_summary(tmp_path, capsys):
    path = tmp_path / "l.csv"
    path.write_text("node,r,z\na,0.5,1.0\nb,-0.5,0.25\nc,,0.0\n")
    assert main(["summary", str(path), "--bins", "4", "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["summary"]["count"] == 2
    assert sum(payload["mass"]) == pytest.approx(1.0)
    assert payload["mass"] == pytest.approx([0.0, 0.2, 0.0, 0.8])
    assert main(["summary", str(path), "--bins", "4"]) == 0
    assert capsys.readouterr().out.startswith("bin_left,bin_right,mass")


def test_local_csv_roundtrip(tmp_path):
    res = [LocalMixingResult("a", 0.1 / 3, 1.0, "x", "t"), LocalMixingResult("b", None, 0.0, "x", "t")]
    path = tmp_path / "rt.csv"
    with open(path, "w", newline="") as fh:
        write_local_csv(res, fh)
    back = read_local_csv(path)
    assert [(r.node, r.r, r.z) for r in back] == [("a", 0.1 / 3, 1.0), ("b", None, 0.0)]


def test_jobs_env(monkeypatch):
    from localassort.cli import _jobs_default

    monkeypatch.setenv("ASSORT_JOBS", "3")
    assert _jobs_default() == 3


def test_console_entry_point(tri):
    proc = subprocess.run(
        [sys.executable, "-m", "localassort.cli", "global", *tri, "--format", "csv"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert "r_global,-0.5" in proc.stdout
