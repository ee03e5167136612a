import json

import numpy as np
import pytest

from spacelike.cli import main
from spacelike.config import build_mesh, load_config, validate_keys
from spacelike.errors import ConfigError

TORUS_SLICE = """
[model]
kind = "minkowski"
dim = 4

[mesh]
axes = [{nodes = 16, length = 1.0, periodic = true}, {nodes = 16, length = 1.0, periodic = true}]

[immersion]
map = ["0", "x1", "x2", "0"]

[output]
csv = "nodes.csv"
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def report_of(out_dir):
    return json.loads((out_dir / "report.json").read_text())


def test_unknown_key_rejected(tmp_path):
    cfg = write(tmp_path, "bad.toml", "[model]\nkind = 'minkowski'\nwarp = 2\n")
    with pytest.raises(ConfigError, match="warp"):
        load_config(cfg)


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match="top-level"):
        validate_keys({"modle": {}})


def test_mesh_validation():
    with pytest.raises(ConfigError, match="axes"):
        build_mesh({})


def test_malformed_toml_exits_4(tmp_path, capsys):
    cfg = write(tmp_path, "broken.toml", "[model\nkind = ")
    code = main(["classify", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 4
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_exits_4(tmp_path):
    assert main(["classify", "--config", str(tmp_path / "none.toml")]) == 4


def test_classify_extremal_slice(tmp_path):
    cfg = write(tmp_path, "slice.toml", TORUS_SLICE)
    code = main(["classify", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["schema"] == "v1"
    assert rep["report"]["global_tag"] == "extremal"
    csv_text = (tmp_path / "nodes.csv").read_text().splitlines()
    assert csv_text[0].startswith("node_index,x1,x2,")
    assert len(csv_text) == 1 + 16 * 16


def test_classify_nonspacelike_exits_2(tmp_path, capsys):
    cfg = write(
        tmp_path, "bad.toml",
        TORUS_SLICE.replace('map = ["0", "x1", "x2", "0"]', 'map = ["x1", "x1", "x2", "0"]'),
    )
    code = main(["classify", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 2
    assert "hypothesis violated" in capsys.readouterr().err


def test_classify_report_deterministic_across_threads(tmp_path):
    cfg = write(tmp_path, "slice.toml", TORUS_SLICE)
    blobs = []
    for threads in ("1", "2", "8"):
        out = tmp_path / f"out{threads}"
        code = main(["classify", "--config", str(cfg), "--out", str(out), "--threads", threads])
        assert code == 0
        blobs.append((out / "report.json").read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


SOLVE_INFEASIBLE = """
[mesh]
axes = [{nodes = 16, length = 1.0}, {nodes = 16, length = 1.0}]

[graph]
h = "1 + 0.3*sin(2*pi*x1)"
g0 = [["1", "0"], ["0", "1"]]

[problem]
domain = "closed"
H = "0.5"
"""


def test_solve_infeasible_exits_0_with_verdict(tmp_path):
    cfg = write(tmp_path, "solve.toml", SOLVE_INFEASIBLE)
    code = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["result"]["verdict"] == "infeasible_by_necessary_condition"


def test_solve_rigidity_roundtrip(tmp_path):
    cfg = write(
        tmp_path, "rig.toml",
        SOLVE_INFEASIBLE.replace('H = "0.5"', 'H = "0"\nu_init = "random"\namplitude = 0.05')
        + '\n[output]\ncsv = "u.csv"\n',
    )
    code = main(["solve", "--config", str(cfg), "--out", str(tmp_path), "--seed", "3"])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["result"]["verdict"] == "converged"
    assert rep["result"]["u_max"] - rep["result"]["u_min"] <= 1e-8
    assert (tmp_path / "u.csv").exists()


def test_solve_nonconvergent_exits_3(tmp_path):
    # Zero weighted mean (flat warp) passes the necessary test, but the
    # amplitude admits no spacelike solution; the margin guard stalls Newton.
    text = SOLVE_INFEASIBLE.replace('h = "1 + 0.3*sin(2*pi*x1)"', 'h = "1"').replace(
        'H = "0.5"', 'H = "12*sin(2*pi*x1)"\nmax_newton = 6'
    )
    cfg = write(tmp_path, "hard.toml", text)
    code = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 3
    assert report_of(tmp_path)["result"]["verdict"] == "nonconvergent"


def test_solve_inequality_checker(tmp_path):
    text = """
[mesh]
axes = [{nodes = 16, length = 1.0, periodic = false}, {nodes = 16, length = 1.0, periodic = false}]

[graph]
h = "1"
g0 = [["1", "0"], ["0", "1"]]

[problem]
domain = "dirichlet"
H = "0"
u0 = 2.0
u_check = "2.0"
"""
    cfg = write(tmp_path, "check.toml", text)
    code = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["inequality_check"]["all_conditions_hold"]
    assert rep["inequality_check"]["is_constant"]


GRAPH_CFG = """
[mesh]
axes = [{nodes = 16, length = 1.0}, {nodes = 16, length = 1.0}]

[graph]
h = "1 + 0.3*sin(2*pi*x1)"
g0 = [["1", "0"], ["0", "1"]]
u = "0.03*sin(2*pi*x1)"
"""


def test_graph_subcommand(tmp_path):
    cfg = write(tmp_path, "graph.toml", GRAPH_CFG)
    code = main(["graph", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["spacelike"] is True
    assert rep["hyperbolic_angle"]["min"] >= 1.0


def test_identities_subcommand(tmp_path):
    text = TORUS_SLICE + """
[field]
components = ["1", "0", "0", "0"]
"""
    cfg = write(tmp_path, "ident.toml", text.replace('csv = "nodes.csv"', ""))
    code = main(["identities", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert abs(rep["div_S"]["sup"]) < 1e-12
    assert abs(rep["integral_report"]["integral_value"]) < 1e-12


INITIAL_DATA = """
[mesh]
axes = [{nodes = 8, length = 1.0}, {nodes = 8, length = 1.0}]

[initial_data]
g = [["1", "0"], ["0", "1"]]
A = [["-6", "0"], ["0", "-6"]]
phi = "72"

[submanifold]
map = ["0.5 + 0.2*cos(2*pi*s)", "0.5 + 0.2*sin(2*pi*s)"]

[submanifold.mesh]
axes = [{nodes = 32, length = 1.0}]
names = ["s"]

[development]
kind = "orthogonal_splitted"
base_coords = ["x1", "x2"]
beta = "1"
g_t = [["exp(2*t)", "0"], ["0", "exp(2*t)"]]
"""


def test_initial_data_subcommand(tmp_path):
    cfg = write(tmp_path, "data.toml", INITIAL_DATA)
    code = main(["initial-data", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["constraints"]["hamiltonian_residual"]["sup"] <= 1e-9
    assert rep["definiteness"]["global_tag"] == "negative_definite"
    assert rep["obstruction"]["conclusion"] == "excludes_stationary_development"


SYMMETRY_CFG = """
[model]
kind = "standard_static"
base_coords = ["x1", "x2"]
h = "1 + 0.3*sin(x1)"
g0 = [["1", "0"], ["0", "1"]]

[field]
components = ["1", "0", "0"]

[region]
n_points = 100
n_random_vectors = 20

[region.bounds]
t = [-1.0, 1.0]
x1 = [0.0, 1.0]
x2 = [0.0, 1.0]
"""


def test_symmetry_subcommand(tmp_path):
    cfg = write(tmp_path, "sym.toml", SYMMETRY_CFG)
    code = main(["symmetry", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["report"]["classification"] == "killing"
    assert any(
        v["theorem"] == "strictly_causal_killing" and v["applies"]
        for v in rep["applicability"]
    )


def test_json_config_accepted(tmp_path):
    payload = {
        "model": {"kind": "minkowski", "dim": 4},
        "mesh": {"axes": [{"nodes": 16, "length": 1.0}, {"nodes": 16, "length": 1.0}]},
        "immersion": {"map": ["0", "x1", "x2", "0"]},
    }
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(payload))
    code = main(["classify", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    assert report_of(tmp_path)["report"]["global_tag"] == "extremal"


def test_initial_data_gridded_csv(tmp_path):
    import csv as _csv

    n = 16
    rows = []
    for i in range(n):
        for j in range(n):
            x1 = i / n
            g11 = 1 + 0.3 * np.sin(2 * np.pi * x1)
            rows.append([g11, 0.0, 1.0, 0.1, 0.0, 0.0, 0.1, 0.0])
    csv_path = tmp_path / "data.csv"
    with csv_path.open("w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["g_11", "g_12", "g_22", "A_11", "A_12", "A_21", "A_22", "phi"])
        w.writerows(rows)
    cfg = write(
        tmp_path, "gridded.toml", f"""
[mesh]
axes = [{{nodes = {n}, length = 1.0}}, {{nodes = {n}, length = 1.0}}]

[initial_data]
csv = "{csv_path}"
""",
    )
    code = main(["initial-data", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    rep = report_of(tmp_path)
    assert rep["gridded"] is True
    assert rep["definiteness"]["global_tag"] == "positive_definite"
    # A = 0.1 Id on a 2-manifold: -tr(A^2) + tr(A)^2 = 0.01; phi = 0 in the
    # table, so the Hamiltonian residual is R + 0.01 with R the FD scalar
    # curvature of the sampled metric; just require finiteness and size.
    assert rep["constraints"]["momentum_residual"]["sup"] <= 1e-8


def test_classify_immersion_from_csv(tmp_path):
    import csv as _csv

    n = 16
    csv_path = tmp_path / "nodes.csv"
    with csv_path.open("w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["t", "x1", "x2", "x3"])
        for i in range(n):
            for j in range(n):
                w.writerow([0.0, i / n, j / n, 0.0])
    cfg = write(
        tmp_path, "csvimm.toml", f"""
[model]
kind = "minkowski"
dim = 4

[mesh]
axes = [{{nodes = {n}, length = 1.0}}, {{nodes = {n}, length = 1.0}}]

[immersion]
csv = "{csv_path}"
winding = [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
""",
    )
    code = main(["classify", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 0
    assert report_of(tmp_path)["report"]["global_tag"] == "extremal"
