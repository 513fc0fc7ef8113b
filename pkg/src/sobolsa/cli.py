"""Command-line driver: sample, run, analyze, plot and reproduce.

Exit codes: 0 success, 2 configuration error, 3 model error, 4 alignment error.
"""
from __future__ import annotations

import argparse
import copy
import io
import itertools
import json
import os
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from . import ode, testfunctions
from .bootstrap import BootConfig
from .distributions import MarginalSpec, transform
from .errors import (AlignmentError, ConfigError, DivergenceError, InvalidOutputError, ModelError,
                     SensitivityError)
from .estimators import EstimatorConfig, IndexTable, required_blocks, sobol_dummy, sobol_indices
from .sampling import SampleDesign, SampleMatrix, read_matrix_csv, sobol_matrices, vars_matrices
from .vars import vars_to

EXIT_OK, EXIT_CONFIG, EXIT_MODEL, EXIT_ALIGNMENT = 0, 2, 3, 4


# --------------------------------------------------------------------------- #
# Built-in models                                                             #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class BuiltinModel:
    """A model callable on transformed sample values plus its default inputs."""

    evaluate: Callable
    params: tuple[str, ...] | None
    marginals: tuple[MarginalSpec, ...] | None = None
    group_by: tuple[str, ...] | None = None


def _uniform(names, a=0.0, b=1.0):
    return tuple(MarginalSpec(n, "uniform", (a, b)) for n in names)


def _logistic(values, options):
    steps = int(options.get("steps", 20))
    return ode.logistic_map(values[:, 0], values[:, 1], values[:, 2], steps)


def _budworm(values, options):
    time_output = np.asarray(options.get("time_output", [25, 50, 75, 100, 125, 150]), dtype=float)
    state0 = tuple(options.get("state0", ode.BUDWORM_INITIAL))
    workers = int(options.get("workers", 1))
    traj = ode.budworm_sample(values, time_output, state0, workers=workers)
    return ode.trajectory_table(traj, time_output)


def _metafunction(values, options):
    spec = options.get("spec")
    if spec is not None:
        return testfunctions.MetafunctionSpec.from_json(json.dumps(spec)).evaluate(values)
    return testfunctions.metafunction(values, seed=options.get("seed"))


_SOBOL_G_PARAMS = tuple(f"X{i}" for i in range(1, 9))
BUILTINS = {
    "sobol_g": BuiltinModel(lambda v, o: testfunctions.sobol_g(v), _SOBOL_G_PARAMS, _uniform(_SOBOL_G_PARAMS)),
    "ishigami": BuiltinModel(lambda v, o: testfunctions.ishigami(v), ("X1", "X2", "X3"),
                             _uniform(("X1", "X2", "X3"), -np.pi, np.pi)),
    "bratley1992": BuiltinModel(lambda v, o: testfunctions.bratley1992(v), None),
    "bratley1988": BuiltinModel(lambda v, o: testfunctions.bratley1988(v), None),
    "oakley": BuiltinModel(lambda v, o: testfunctions.oakley(v), tuple(f"X{i}" for i in range(1, 16)),
                           tuple(MarginalSpec(f"X{i}", "normal", (0.0, 1.0)) for i in range(1, 16))),
    "polynomial_demo": BuiltinModel(lambda v, o: testfunctions.polynomial_demo(v), ("X1", "X2", "X3"),
                                    _uniform(("X1", "X2", "X3"))),
    "metafunction": BuiltinModel(_metafunction, None),
    "logistic": BuiltinModel(_logistic, ("r", "K", "N0"),
                             (MarginalSpec("r", "normal", (1.7, 0.3)), MarginalSpec("K", "normal", (40.0, 1.0)),
                              MarginalSpec("N0", "uniform", (10.0, 50.0)))),
    "budworm": BuiltinModel(_budworm, ode.BUDWORM_PARAMS,
                            tuple(MarginalSpec(n, "uniform", r) for n, r in ode.BUDWORM_RANGES.items()),
                            group_by=("variable", "time")),
}


# --------------------------------------------------------------------------- #
# Configuration                                                               #
# --------------------------------------------------------------------------- #

@dataclass
class AnalysisConfig:
    design: SampleDesign
    marginals: tuple[MarginalSpec, ...]
    estimators: EstimatorConfig
    boot: BootConfig | None
    dummy: bool
    model: dict
    group_by: tuple[str, ...] | None
    vars: dict
    raw: dict

    @property
    def params(self) -> tuple[str, ...]:
        return self.design.params


def _set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted!r}: {key!r} is not an object")
    node[keys[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(raw: dict) -> AnalysisConfig:
    """Validate a configuration dictionary."""
    raw = copy.deepcopy(raw)
    model = raw.get("model") or {}
    if isinstance(model, str):
        model = {"builtin": model}
    builtin = BUILTINS.get(model.get("builtin")) if "builtin" in model else None
    if "builtin" in model and builtin is None:
        raise ConfigError(f"unknown builtin model {model['builtin']!r}; choose from {sorted(BUILTINS)}")

    if raw.get("marginals"):
        marginals = tuple(MarginalSpec.from_dict(m) for m in raw["marginals"])
    elif raw.get("params"):
        marginals = _uniform(raw["params"])
    elif builtin is not None and builtin.marginals is not None:
        marginals = builtin.marginals
    else:
        raise ConfigError("config needs 'marginals' or 'params'")
    params = tuple(m.name for m in marginals)
    if raw.get("params") and tuple(raw["params"]) != params:
        raise ConfigError("'params' and 'marginals' name different inputs")

    d = raw.get("design", {})
    try:
        design = SampleDesign(n_base=int(d.get("N", 2**10)), params=params,
                              blocks=frozenset(d.get("blocks", ["A", "B", "AB"])),
                              order=d.get("order", "first"), generator=d.get("generator", "QRN"),
                              seed=d.get("seed"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid design: {exc}") from None
    e = raw.get("estimators", {})
    estimators = EstimatorConfig(first=e.get("first", "saltelli"), total=e.get("total", "jansen"),
                                 order=e.get("order"), center=bool(e.get("center", True)))
    b = raw.get("boot")
    boot = None
    if b:
        boot = BootConfig(R=int(b.get("R", 1000)), ci_type=b.get("ci_type", "normal"),
                          conf=float(b.get("conf", 0.95)), seed=b.get("seed"))
    group_by = raw.get("group_by")
    if group_by is None and builtin is not None and builtin.group_by is not None:
        group_by = builtin.group_by
    if "external" in model and not str(model["external"]).strip():
        raise ConfigError("external model command is empty")
    return AnalysisConfig(design=design, marginals=marginals, estimators=estimators, boot=boot,
                          dummy=bool(raw.get("dummy", False)), model=model,
                          group_by=tuple(group_by) if group_by else None,
                          vars=raw.get("vars", {}), raw=raw)


def load_config(args) -> AnalysisConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    flag_keys = {"N": "design.N", "order": "design.order", "generator": "design.generator",
                 "seed": "design.seed", "first": "estimators.first", "total": "estimators.total",
                 "R": "boot.R", "ci_type": "boot.ci_type", "conf": "boot.conf", "boot_seed": "boot.seed",
                 "model": "model.builtin", "n_star": "vars.n_star", "h": "vars.h"}
    for attr, key in flag_keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            if attr == "model":
                raw["model"] = {"builtin": value}
            else:
                _set_path(raw, key, value)
    if getattr(args, "blocks", None):
        _set_path(raw, "design.blocks", args.blocks.split(","))
    if getattr(args, "dummy", False):
        raw["dummy"] = True
    if getattr(args, "group_by", None):
        raw["group_by"] = args.group_by.split(",")
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        _set_path(raw, key.strip(), _parse_value(value))
    return build_config(raw)


# --------------------------------------------------------------------------- #
# File helpers                                                                #
# --------------------------------------------------------------------------- #

def write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename; ``-`` is stdout."""
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(writer) -> str:
    buf = io.StringIO()
    writer(buf)
    return buf.getvalue()


def _frame_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")


def make_matrix(cfg: AnalysisConfig) -> SampleMatrix:
    """Design rows with the marginals applied, in emission order."""
    unit = sobol_matrices(cfg.design)
    return SampleMatrix(values=transform(unit.values, cfg.marginals), labels=unit.labels,
                        base_row=unit.base_row, params=unit.params)


# --------------------------------------------------------------------------- #
# Model execution                                                             #
# --------------------------------------------------------------------------- #

def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_model_output(text: str, n_rows: int) -> pd.DataFrame:
    """Parse one line per row (comma separated), with an optional header line."""
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    header = None
    if lines and not all(_is_number(tok) for tok in lines[0].split(",")):
        header = [tok.strip() for tok in lines[0].split(",")]
        lines = lines[1:]
    rows = []
    for i, line in enumerate(lines, start=1):
        tokens = line.split(",")
        try:
            rows.append([float(tok) for tok in tokens])
        except ValueError:
            raise ModelError(f"model output row {i}: cannot parse {line!r} as numbers") from None
    if len(rows) != n_rows:
        gap = n_rows - len(rows)
        what = f"missing {gap} rows" if gap > 0 else f"{-gap} rows too many"
        raise AlignmentError(f"model produced {len(rows)} output rows for {n_rows} inputs ({what})")
    width = {len(r) for r in rows}
    if len(width) > 1:
        raise ModelError("model output rows have differing numbers of columns")
    ncol = width.pop() if rows else (len(header) if header else 1)
    if header is None:
        header = ["y"] if ncol == 1 else [f"y{j + 1}" for j in range(ncol)]
    if len(header) != ncol:
        raise ModelError(f"model output header names {len(header)} columns, rows have {ncol}")
    return pd.DataFrame(np.array(rows, dtype=float).reshape(len(rows), ncol), columns=header)


def run_external(command: str, values: np.ndarray, params) -> pd.DataFrame:
    """Feed ``values`` (with a header line) to ``command`` and parse its stdout."""
    payload = _csv_text(lambda fh: _write_plain(fh, params, values))
    try:
        proc = subprocess.run(command, shell=True, input=payload, capture_output=True, text=True)
    except OSError as exc:
        raise ModelError(f"cannot start model command: {exc}") from None
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-5:]
        raise ModelError(f"model command exited with status {proc.returncode}: " + " | ".join(tail))
    return parse_model_output(proc.stdout, values.shape[0])


def _write_plain(fh, params, values):
    fh.write(",".join(params) + "\n")
    for row in values:
        fh.write(",".join(format(float(x), ".17g") for x in row) + "\n")


def run_model(cfg: AnalysisConfig, values: np.ndarray) -> pd.DataFrame:
    """Evaluate the configured model; univariate outputs come back as column ``y``."""
    model = cfg.model
    if "external" in model:
        return run_external(model["external"], values, cfg.params)
    if "builtin" not in model:
        raise ConfigError("config needs model.builtin or model.external")
    builtin = BUILTINS[model["builtin"]]
    try:
        out = builtin.evaluate(values, model.get("options", {}))
    except (DivergenceError, ArithmeticError) as exc:
        raise ModelError(f"builtin model {model['builtin']!r} failed: {exc}") from exc
    if isinstance(out, pd.DataFrame):
        return out
    return pd.DataFrame({"y": np.asarray(out, dtype=float)})


# --------------------------------------------------------------------------- #
# Analysis                                                                    #
# --------------------------------------------------------------------------- #

def _value_column(frame: pd.DataFrame, exclude) -> str:
    candidates = [c for c in frame.columns if c not in exclude and c != "row"]
    if "value" in candidates:
        return "value"
    if "y" in candidates:
        return "y"
    if len(candidates) != 1:
        raise ConfigError(f"cannot tell which column holds the output among {candidates}; use group_by")
    return candidates[0]


def split_groups(frame: pd.DataFrame, group_by) -> list[tuple[dict, np.ndarray]]:
    """Per-group output vectors in row order.

    A ``variable`` group that is not a column melts the remaining numeric
    columns into ``variable``/``value``.
    """
    group_by = list(group_by or [])
    if "variable" in group_by and "variable" not in frame.columns:
        id_cols = [c for c in frame.columns if c == "row" or c in group_by]
        states = [c for c in frame.columns if c not in id_cols]
        frame = frame.melt(id_vars=id_cols, value_vars=states, var_name="variable", value_name="value")
    unknown = [g for g in group_by if g not in frame.columns]
    if unknown:
        raise ConfigError(f"unknown group columns {unknown}; available: {list(frame.columns)}")
    column = _value_column(frame, group_by)
    if not group_by:
        return [({}, _ordered(frame)[column].to_numpy(dtype=float))]
    levels = [list(pd.unique(frame[g])) for g in group_by]
    out = []
    for combo in itertools.product(*levels):
        mask = np.ones(len(frame), dtype=bool)
        for g, v in zip(group_by, combo):
            mask &= (frame[g] == v).to_numpy()
        if not mask.any():
            raise ConfigError(f"group {dict(zip(group_by, combo))} is empty")
        out.append((dict(zip(group_by, combo)), _ordered(frame[mask])[column].to_numpy(dtype=float)))
    return out


def _ordered(frame):
    return frame.sort_values("row", kind="stable") if "row" in frame.columns else frame


def _jsonable(value):
    return value.item() if isinstance(value, np.generic) else value


def analyze_frame(cfg: AnalysisConfig, frame: pd.DataFrame, tags: SampleMatrix | None = None):
    """One IndexTable (and optional dummy table) per group."""
    results = []
    for key, y in split_groups(frame, cfg.group_by):
        table = sobol_indices(y, cfg.design, cfg.estimators, cfg.boot, tags=tags)
        dummy = sobol_dummy(y, cfg.design, cfg.boot, tags=tags) if cfg.dummy else None
        results.append(({k: _jsonable(v) for k, v in key.items()}, table, dummy))
    return results


def _combined(results, which: int) -> pd.DataFrame:
    frames = []
    for key, *tables in results:
        table = tables[which - 1]
        if table is None:
            continue
        frame = table.results.copy()
        for pos, (k, v) in enumerate(key.items()):
            frame.insert(pos, k, v)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def write_analysis(results, outdir, stream=None) -> None:
    stream = stream or sys.stdout
    outdir = Path(outdir)
    write_text(outdir / "indices.csv", _frame_csv(_combined(results, 1)))
    payload = [{"group": key, **json.loads(table.to_json())} for key, table, _ in results]
    write_text(outdir / "indices.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if results and results[0][2] is not None:
        write_text(outdir / "dummy.csv", _frame_csv(_combined(results, 2)))
        dummy_payload = [{"group": key, **json.loads(d.to_json())} for key, _, d in results]
        write_text(outdir / "dummy.json", json.dumps(dummy_payload, indent=2, sort_keys=True) + "\n")
    for key, table, dummy in results:
        if key:
            stream.write("\n" + " | ".join(f"{k}: {v}" for k, v in key.items()) + "\n")
        stream.write(str(table) + "\n")
        if dummy is not None:
            stream.write(str(dummy.results.to_string()) + "\n")


def read_tables(path) -> list[tuple[dict, IndexTable]]:
    """Load the ``indices.json``/``dummy.json`` written by ``analyze``."""
    raw = json.loads(Path(path).read_text())
    if isinstance(raw, dict):
        raw = [raw]
    out = []
    for entry in raw:
        key = entry.pop("group", {})
        out.append((key, IndexTable.from_json(json.dumps(entry))))
    return out


def read_outputs(path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise ModelError(f"{path}: cannot read outputs ({exc})") from None
    return frame


# --------------------------------------------------------------------------- #
# Subcommands                                                                 #
# --------------------------------------------------------------------------- #

def cmd_sample(args) -> int:
    cfg = load_config(args)
    write_text(args.output, _csv_text(make_matrix(cfg).to_csv))
    return EXIT_OK


def _load_matrix(path) -> SampleMatrix:
    with open(path, newline="") as fh:
        return read_matrix_csv(fh)


def cmd_run(args) -> int:
    cfg = load_config(args)
    matrix = _load_matrix(args.matrix) if args.matrix else make_matrix(cfg)
    if tuple(matrix.params) != cfg.params:
        raise ConfigError(f"matrix columns {matrix.params} differ from config params {cfg.params}")
    out = run_model(cfg, matrix.values)
    if "row" not in out.columns and len(out.columns) > 1:
        out.insert(0, "row", np.arange(len(out)))
    bad = ~np.isfinite(out.select_dtypes("number").to_numpy()).all(axis=1)
    if bad.any():
        sys.stderr.write(f"warning: {int(bad.sum())} rows with non-finite outputs\n")
    write_text(args.output, _frame_csv(out))
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_config(args)
    frame = read_outputs(args.y)
    tags = _load_matrix(args.matrix) if args.matrix else None
    results = analyze_frame(cfg, frame, tags)
    write_analysis(results, args.outdir)
    return EXIT_OK


def cmd_dummy(args) -> int:
    cfg = load_config(args)
    frame = read_outputs(args.y)
    tags = _load_matrix(args.matrix) if args.matrix else None
    rows = []
    for key, y in split_groups(frame, cfg.group_by):
        table = sobol_dummy(y, cfg.design, cfg.boot, tags=tags)
        res = table.results.copy()
        for pos, (k, v) in enumerate(key.items()):
            res.insert(pos, k, _jsonable(v))
        rows.append(res)
    combined = pd.concat(rows, ignore_index=True)
    write_text(args.output, _frame_csv(combined))
    return EXIT_OK


def _star(cfg: AnalysisConfig):
    v = cfg.vars
    try:
        star = vars_matrices(int(v.get("n_star", 100)), float(v.get("h", 0.1)), cfg.params,
                             v.get("generator", "QRN"), v.get("seed"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid vars settings: {exc}") from None
    return star


def cmd_vars_sample(args) -> int:
    cfg = load_config(args)
    star = _star(cfg)
    star.points = transform(star.points, cfg.marginals)
    write_text(args.output, _csv_text(star.to_csv))
    return EXIT_OK


def cmd_vars_analyze(args) -> int:
    cfg = load_config(args)
    star = _star(cfg)
    frame = read_outputs(args.y)
    y = frame[_value_column(frame, [])].to_numpy(dtype=float)
    result = vars_to(y, star, lag=cfg.vars.get("lag", "all"))
    write_text(args.output, _csv_text(result.to_csv))
    sys.stdout.write(str(result) + "\n")
    return EXIT_OK


def cmd_testfun(args) -> int:
    first, total = args.first or "saltelli", args.total or "jansen"
    raw = {"model": {"builtin": args.name},
           "design": {"N": args.N or 2**10, "order": args.order or "first", "generator": args.generator or "QRN",
                      "blocks": sorted(required_blocks(first, total))},
           "estimators": {"first": first, "total": total}}
    if args.k:
        raw["params"] = [f"X{i}" for i in range(1, args.k + 1)]
    cfg = build_config(raw)
    frame = run_model(cfg, make_matrix(cfg).values)
    results = analyze_frame(cfg, frame)
    for _, table, _ in results:
        sys.stdout.write(str(table) + "\n")
    if args.analytic:
        exact = testfunctions.analytic_indices(args.name)
        sys.stdout.write("\nAnalytic Si: " + " ".join(f"{v:.4f}" for v in exact.first)
                         + "\nAnalytic Ti: " + " ".join(f"{v:.4f}" for v in exact.total) + "\n")
    return EXIT_OK


def cmd_plot(args) -> int:
    from . import plotting

    kind = args.kind
    if kind == "indices":
        if not args.table:
            raise ConfigError("plot indices needs --table")
        tables = read_tables(args.table)
        dummies = read_tables(args.dummy_table) if args.dummy_table else [None] * len(tables)
        out = Path(args.output)
        for n, ((key, table), dummy) in enumerate(zip(tables, dummies)):
            fig = plotting.plot_indices(table, dummy[1] if dummy else None)
            target = out if len(tables) == 1 else out.with_name(f"{out.stem}-{n + 1}{out.suffix}")
            plotting.save_svg(fig, target)
        return EXIT_OK
    if not (args.matrix and args.y):
        raise ConfigError(f"plot {kind} needs --matrix and --y")
    matrix = _load_matrix(args.matrix)
    frame = read_outputs(args.y)
    y = frame[_value_column(frame, [])].to_numpy(dtype=float)
    if y.shape[0] != len(matrix):
        raise AlignmentError(f"{y.shape[0]} outputs for {len(matrix)} matrix rows")
    a_rows = matrix.labels == "A"
    if kind == "uncertainty":
        fig = plotting.plot_uncertainty(y[a_rows])
    elif kind == "scatter":
        fig = plotting.plot_scatter(matrix.values[a_rows], y[a_rows], matrix.params, args.bins, args.method)
    elif kind == "multiscatter":
        fig = plotting.plot_multiscatter(matrix.values[a_rows], y[a_rows], matrix.params, args.smpl, args.seed)
    else:
        raise ConfigError(f"unknown plot kind {kind!r}")
    plotting.save_svg(fig, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------- #
# Reproduction of the worked examples                                         #
# --------------------------------------------------------------------------- #

EXAMPLES = {
    "example1": {
        "model": {"builtin": "sobol_g"},
        "design": {"N": 2**10, "blocks": ["A", "B", "AB"], "order": "first", "generator": "QRN"},
        # raw product forms, as in the original worked example
        "estimators": {"first": "saltelli", "total": "jansen", "center": False},
        "boot": {"R": 1000, "ci_type": "normal", "conf": 0.95, "seed": 1},
        "dummy": True,
    },
    "example2": {
        "model": {"builtin": "logistic", "options": {"steps": 20}},
        "design": {"N": 2**13, "blocks": ["A", "B", "AB", "BA"], "order": "second", "generator": "LHS",
                   "seed": 2},
        "estimators": {"first": "azzini", "total": "azzini"},
        "boot": {"R": 1000, "ci_type": "percentile", "conf": 0.95, "seed": 2},
        "dummy": True,
    },
    "example3": {
        "model": {"builtin": "budworm", "options": {"time_output": [25, 50, 75, 100, 125, 150]}},
        "design": {"N": 2**9, "blocks": ["A", "B", "AB"], "order": "first", "generator": "QRN"},
        "estimators": {"first": "jansen", "total": "jansen"},
        "boot": {"R": 1000, "ci_type": "normal", "conf": 0.95, "seed": 3},
        "dummy": True,
        "group_by": ["variable", "time"],
    },
    "annex-vars": {
        "model": {"builtin": "sobol_g"},
        "vars": {"n_star": 100, "h": 0.1, "generator": "QRN"},
    },
}


def reproduce(name: str, outdir, workers: int = 1, boot_R: int | None = None, stream=None):
    """Run one worked example end to end and write its artifacts to ``outdir``."""
    stream = stream or sys.stdout
    if name not in EXAMPLES:
        raise ConfigError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    from . import plotting

    raw = copy.deepcopy(EXAMPLES[name])
    if boot_R is not None and raw.get("boot"):
        raw["boot"]["R"] = boot_R
    if name == "example3":
        raw["model"]["options"]["workers"] = workers
    cfg = build_config(raw)
    outdir = Path(outdir)
    write_text(outdir / "config.json", json.dumps(raw, indent=2, sort_keys=True) + "\n")

    if name == "annex-vars":
        star = _star(cfg)
        y = run_model(cfg, transform(star.points, cfg.marginals))["y"].to_numpy()
        result = vars_to(y, star)
        write_text(outdir / "star.csv", _csv_text(star.to_csv))
        write_text(outdir / "vars_to.csv", _csv_text(result.to_csv))
        stream.write(str(result) + "\n")
        return result

    matrix = make_matrix(cfg)
    frame = run_model(cfg, matrix.values)
    write_text(outdir / "matrix.csv", _csv_text(matrix.to_csv))
    if "row" not in frame.columns and len(frame.columns) > 1:
        frame.insert(0, "row", np.arange(len(frame)))
    write_text(outdir / "outputs.csv", _frame_csv(frame))
    results = analyze_frame(cfg, frame)
    write_analysis(results, outdir, stream)

    if "y" in frame.columns:
        y = frame["y"].to_numpy()
        a_rows = matrix.labels == "A"
        plotting.save_svg(plotting.plot_uncertainty(y[a_rows]), outdir / "uncertainty.svg")
        plotting.save_svg(plotting.plot_scatter(matrix.values[a_rows], y[a_rows], matrix.params),
                          outdir / "scatter.svg")
        if len(matrix.params) <= 4:
            plotting.save_svg(plotting.plot_multiscatter(matrix.values[a_rows], y[a_rows], matrix.params,
                                                         smpl=1000, seed=0), outdir / "multiscatter.svg")
    for n, (key, table, dummy) in enumerate(results):
        suffix = "" if not key else "-" + "-".join(f"{v:g}" if isinstance(v, float) else str(v)
                                                   for v in key.values())
        plotting.save_svg(plotting.plot_indices(table, dummy), outdir / f"indices{suffix}.svg")
    return results


def cmd_reproduce(args) -> int:
    outdir = args.outdir or f"reproduce-{args.example}"
    reproduce(args.example, outdir, workers=args.workers, boot_R=args.R)
    return EXIT_OK


# --------------------------------------------------------------------------- #
# Entry point                                                                 #
# --------------------------------------------------------------------------- #

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--N", type=int, help="base sample size")
    p.add_argument("--order", choices=["first", "second", "third"])
    p.add_argument("--generator", choices=["QRN", "LHS", "R"])
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--blocks", help="comma-separated blocks, e.g. A,B,AB,BA")
    p.add_argument("--first", help="first-order estimator")
    p.add_argument("--total", help="total-order estimator")
    p.add_argument("--R", type=int, help="bootstrap replicates")
    p.add_argument("--ci-type", dest="ci_type", choices=["normal", "percentile"])
    p.add_argument("--conf", type=float, help="confidence level")
    p.add_argument("--boot-seed", dest="boot_seed", type=int)
    p.add_argument("--model", help="builtin model name")
    p.add_argument("--dummy", action="store_true", help="append dummy-parameter indices")
    p.add_argument("--group-by", dest="group_by", help="comma-separated group columns")
    p.add_argument("--n-star", dest="n_star", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key, e.g. design.N=2048 (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sobolsa", description="Variance-based global sensitivity analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="write the block-tagged sample matrix")
    _add_common(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("run", help="evaluate the model on a sample matrix")
    _add_common(p)
    p.add_argument("--matrix", help="matrix CSV (default: regenerate from config)")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="compute Sobol' indices from model outputs")
    _add_common(p)
    p.add_argument("--y", required=True, help="output CSV")
    p.add_argument("--matrix", help="matrix CSV whose block tags align the outputs")
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dummy", help="dummy-parameter indices")
    _add_common(p)
    p.add_argument("--y", required=True)
    p.add_argument("--matrix")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_dummy)

    p = sub.add_parser("vars-sample", help="write the star sample")
    _add_common(p)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_vars_sample)

    p = sub.add_parser("vars-analyze", help="compute VARS-TO from star outputs")
    _add_common(p)
    p.add_argument("--y", required=True)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_vars_analyze)

    p = sub.add_parser("testfun", help="run a builtin test function end to end")
    p.add_argument("name", choices=sorted(BUILTINS))
    p.add_argument("--N", type=int)
    p.add_argument("--k", type=int, help="dimension for functions of arbitrary k")
    p.add_argument("--order", choices=["first", "second", "third"])
    p.add_argument("--generator", choices=["QRN", "LHS", "R"])
    p.add_argument("--first")
    p.add_argument("--total")
    p.add_argument("--analytic", action="store_true", help="also print analytic indices")
    p.set_defaults(func=cmd_testfun)

    p = sub.add_parser("plot", help="write an SVG figure")
    p.add_argument("kind", choices=["uncertainty", "scatter", "multiscatter", "indices"])
    p.add_argument("--matrix")
    p.add_argument("--y")
    p.add_argument("--table", help="indices.json from analyze")
    p.add_argument("--dummy-table", dest="dummy_table", help="dummy.json from analyze")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--method", choices=["point", "bin"], default="point")
    p.add_argument("--smpl", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("reproduce", help="rerun a worked example")
    p.add_argument("example", choices=sorted(EXAMPLES))
    p.add_argument("--outdir")
    p.add_argument("--workers", type=int, default=1, help="processes for the budworm model")
    p.add_argument("--R", type=int, help="override bootstrap replicates")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AlignmentError as exc:
        sys.stderr.write(f"alignment error: {exc}\n")
        return EXIT_ALIGNMENT
    except (ModelError, InvalidOutputError, DivergenceError) as exc:
        sys.stderr.write(f"model error: {exc}\n")
        return EXIT_MODEL
    except (SensitivityError, ValueError, OSError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
