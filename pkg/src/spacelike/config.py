"""Run configuration: TOML/JSON ingestion, strict validation, object building.

Unknown keys are rejected so typos fail fast, before any computation.
Expression strings are parsed here so syntax errors surface as
configuration errors with their offsets.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .chart import VectorField
from .errors import ConfigError, ExprSyntaxError
from .immersion import ImmersedSubmanifold
from .initialdata import GriddedInitialData, InitialDataSet
from .mesh import Axis, ParamMesh
from .spacetime import MetricModel, custom_model, minkowski, orthogonal_splitted, standard_static
from .staticgraph import GraphFunction, StaticModel
from .elliptic import ProblemSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_TOP_KEYS = {
    "schema", "seed", "threads", "model", "mesh", "immersion", "field", "graph",
    "problem", "initial_data", "submanifold", "development", "normal_flow",
    "region", "output", "tolerances", "suite",
}
_SECTION_KEYS = {
    "model": {"kind", "dim", "coords", "components", "future_field", "base_coords",
              "h", "g0", "beta", "g_t", "time_coord"},
    "mesh": {"axes", "names"},
    "immersion": {"map", "csv", "winding", "mesh"},
    "field": {"components"},
    "graph": {"h", "g0", "u", "csv"},
    "problem": {"domain", "H", "u0", "u_init", "amplitude", "tol_residual",
                "max_newton", "necessary_tol", "u_check", "delta_margin"},
    "initial_data": {"g", "A", "phi", "X", "csv"},
    "submanifold": {"map", "mesh", "winding"},
    "normal_flow": {"t_range", "steps", "max_samples"},
    "region": {"bounds", "n_points", "n_random_vectors"},
    "output": {"json", "csv"},
    "tolerances": {"eps_causal", "classify", "delta_margin"},
    "suite": {"criteria"},
}


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        if path.suffix.lower() == ".toml":
            with path.open("rb") as fh:
                raw = tomllib.load(fh)
        elif path.suffix.lower() == ".json":
            raw = json.loads(path.read_text())
        else:
            raise ConfigError(f"config must be .toml or .json, got '{path.suffix}'")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"JSON parse error in {path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    validate_keys(raw)
    return raw


def validate_keys(raw: dict):
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a table")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for section, allowed in _SECTION_KEYS.items():
        if section in raw:
            body = raw[section]
            if not isinstance(body, dict):
                raise ConfigError(f"section [{section}] must be a table")
            bad = set(body) - allowed
            if bad:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(bad)}")


def _require(raw, section):
    if section not in raw:
        raise ConfigError(f"missing required section [{section}]")
    return raw[section]


def build_mesh(body: dict) -> ParamMesh:
    if "axes" not in body:
        raise ConfigError("mesh needs an 'axes' list")
    axes = []
    for k, ax in enumerate(body["axes"]):
        bad = set(ax) - {"nodes", "length", "periodic", "start"}
        if bad:
            raise ConfigError(f"unknown keys in mesh axis {k}: {sorted(bad)}")
        try:
            axes.append(
                Axis(
                    nodes=int(ax["nodes"]),
                    length=float(ax["length"]),
                    periodic=bool(ax.get("periodic", True)),
                    start=float(ax.get("start", 0.0)),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"mesh axis {k} missing key {exc}") from exc
    names = tuple(body["names"]) if "names" in body else None
    return ParamMesh(tuple(axes), names)


def build_model(body: dict) -> MetricModel:
    kind = body.get("kind")
    try:
        if kind == "minkowski":
            return minkowski(int(body.get("dim", 4)), tuple(body["coords"]) if "coords" in body else None)
        if kind == "standard_static":
            return standard_static(
                tuple(body["base_coords"]), body["g0"], body["h"],
                body.get("time_coord", "t"),
            )
        if kind == "orthogonal_splitted":
            return orthogonal_splitted(
                tuple(body["base_coords"]), body["g_t"], body["beta"],
                body.get("time_coord", "t"),
            )
        if kind == "custom":
            return custom_model(tuple(body["coords"]), body["components"], tuple(body["future_field"]))
    except KeyError as exc:
        raise ConfigError(f"model kind '{kind}' missing key {exc}") from exc
    except ExprSyntaxError as exc:
        raise ConfigError(f"bad expression in [model]: {exc}") from exc
    raise ConfigError(f"unknown model kind {kind!r}")


def _read_node_csv(path, mesh, width):
    import csv as _csv

    rows = []
    with Path(path).open() as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, r)) for r in reader]
    total = int(np.prod(mesh.shape))
    if len(rows) != total:
        raise ConfigError(f"CSV {path} has {len(rows)} rows, mesh needs {total}")
    vals = np.array(rows)[:, -width:]
    return vals.reshape(mesh.shape + (width,)), header


def build_immersion(raw: dict, model, mesh=None) -> ImmersedSubmanifold:
    body = _require(raw, "immersion")
    mesh = build_mesh(body["mesh"]) if "mesh" in body else mesh
    if mesh is None:
        mesh = build_mesh(_require(raw, "mesh"))
    winding = np.asarray(body["winding"], dtype=float) if "winding" in body else None
    try:
        if "map" in body:
            return ImmersedSubmanifold.from_exprs(mesh, model, tuple(body["map"]), winding)
        if "csv" in body:
            vals, _ = _read_node_csv(body["csv"], mesh, model.dim)
            return ImmersedSubmanifold.from_values(mesh, model, vals[..., 0:model.dim], winding)
    except ExprSyntaxError as exc:
        raise ConfigError(f"bad expression in [immersion]: {exc}") from exc
    raise ConfigError("immersion needs 'map' expressions or a 'csv' path")


def build_field(raw: dict, model) -> VectorField:
    body = _require(raw, "field")
    comps = body.get("components")
    if not comps or len(comps) != model.dim:
        raise ConfigError(f"field needs {model.dim} components")
    try:
        return VectorField(tuple(comps))
    except ExprSyntaxError as exc:
        raise ConfigError(f"bad expression in [field]: {exc}") from exc


def build_static_model(raw: dict) -> StaticModel:
    body = _require(raw, "graph")
    mesh = build_mesh(_require(raw, "mesh"))
    try:
        return StaticModel(mesh, body["g0"], body["h"])
    except KeyError as exc:
        raise ConfigError(f"[graph] missing key {exc}") from exc
    except ExprSyntaxError as exc:
        raise ConfigError(f"bad expression in [graph]: {exc}") from exc


def build_graph_function(raw: dict, model: StaticModel) -> GraphFunction:
    body = _require(raw, "graph")
    if "u" in body:
        try:
            return GraphFunction.from_expr(model, body["u"])
        except ExprSyntaxError as exc:
            raise ConfigError(f"bad expression for u: {exc}") from exc
    if "csv" in body:
        vals, _ = _read_node_csv(body["csv"], model.mesh, 1)
        return GraphFunction(model, vals[..., 0])
    raise ConfigError("[graph] needs 'u' (expression) or 'csv'")


def build_problem(raw: dict, model: StaticModel, seed=0) -> ProblemSpec:
    body = _require(raw, "problem")
    domain = body.get("domain", "closed")
    H = body.get("H", "0")
    kw = {}
    for key in ("tol_residual", "max_newton", "necessary_tol", "delta_margin"):
        if key in body:
            kw[key] = body[key]
    u0 = body.get("u0", 0.0)
    u_init = body.get("u_init")
    mesh = model.mesh
    if u_init is None:
        init = None
    elif u_init == "random":
        rng = np.random.default_rng(seed)
        amp = float(body.get("amplitude", 0.05))
        grids = mesh.grids
        s = np.zeros(mesh.shape)
        for k in range(1, 3):
            coeff = rng.normal(size=2 * len(grids))
            for i, g in enumerate(grids):
                L = mesh.axes[i].length
                s += coeff[2 * i] * np.sin(2 * np.pi * k * g / L)
                s += coeff[2 * i + 1] * np.cos(2 * np.pi * k * g / L)
        init = amp * s / max(1e-30, float(np.max(np.abs(s))))
        if domain == "dirichlet":
            init = init * 0.0 + float(u0) if np.isscalar(u0) else init
    elif isinstance(u_init, str):
        init = GraphFunction.from_expr(model, u_init).u
    else:
        init = float(u_init) * np.ones(mesh.shape)
    try:
        return ProblemSpec.from_exprs(model, domain, H, u0=u0, u_init=init, **kw)
    except ExprSyntaxError as exc:
        raise ConfigError(f"bad expression in [problem]: {exc}") from exc


def build_initial_data(raw: dict):
    body = _require(raw, "initial_data")
    mesh = build_mesh(_require(raw, "mesh"))
    if "csv" in body:
        return _build_gridded_initial_data(body["csv"], mesh)
    try:
        return InitialDataSet(
            mesh,
            body["g"],
            body["A"],
            phi=body.get("phi", "0"),
            X=VectorField(tuple(body["X"])) if "X" in body else None,
        )
    except KeyError as exc:
        raise ConfigError(f"[initial_data] missing key {exc}") from exc
    except ExprSyntaxError as exc:
        raise ConfigError(f"bad expression in [initial_data]: {exc}") from exc


def _build_gridded_initial_data(path, mesh) -> GriddedInitialData:
    """CSV with a declared column schema: header names g_ij, A_ij, phi, X_i
    (1-based indices, upper triangle suffices for g); rows in C node order."""
    import csv as _csv

    n = mesh.ndim
    with Path(path).open() as fh:
        reader = _csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [list(map(float, r)) for r in reader]
    total = int(np.prod(mesh.shape))
    if len(rows) != total:
        raise ConfigError(f"CSV {path} has {len(rows)} rows, mesh needs {total}")
    cols = {name: np.array([r[k] for r in rows]).reshape(mesh.shape) for k, name in enumerate(header)}

    def need(name):
        if name not in cols:
            raise ConfigError(f"gridded initial data missing column '{name}'")
        return cols[name]

    g = np.zeros(mesh.shape + (n, n))
    A = np.zeros(mesh.shape + (n, n))
    for i in range(n):
        for j in range(n):
            gkey = f"g_{min(i, j) + 1}{max(i, j) + 1}"
            g[..., i, j] = need(gkey)
            akey = f"A_{i + 1}{j + 1}"
            A[..., i, j] = cols.get(akey, np.zeros(mesh.shape))
    phi = cols.get("phi", np.zeros(mesh.shape))
    X = np.zeros(mesh.shape + (n,))
    for i in range(n):
        X[..., i] = cols.get(f"X_{i + 1}", np.zeros(mesh.shape))
    return GriddedInitialData(mesh, g, A, phi, X)
