"""Command-line front end: verification suites, curve traces and reports.

Configuration comes from defaults, then the flat ``key = value`` file named
by ``COASSOC_CONFIG``, then command-line flags.  Every number written to a
CSV uses 17 significant digits so that re-ingested samples are exact.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import solutions
from .charts import ChartId, TotalPoint, make_point
from .cohomogeneity import (
    PARAM_NAMES,
    PathState,
    conserved,
    integrate,
    random_state,
    sweep_report,
)
from .errors import CoassocError, ConfigError, NoRootError
from .g2 import (
    CONE_R_MIN,
    PHI0,
    G2Params,
    g_lambda_matrix,
    metric_from_phi,
    phi_lambda,
    torsion_residual,
)
from .groups import Case, data_tables, orbit_info, to_slice
from .level_sets import COLUMNS, asymptotic_curve, level_residual, trace_level

CONFIG_ENV = "COASSOC_CONFIG"
TOLERANCE_NAMES = ("fd_step", "ode_tol", "quad_tol", "residual_tol")
DEFAULT_TOLERANCES = {"fd_step": 1e-4, "ode_tol": 1e-10, "quad_tol": 1e-13, "residual_tol": 1e-6}
FORMATS = ("csv", "json")
HEADER = "# case,lambda,constants,stratum"
LEMMA_CASES = (Case.SO3xSO2, Case.U2, Case.SO3_STD, Case.SO3_IRR)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    lam: float = 1.0
    cone: bool = False
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    out: Path | None = None
    format: str = "csv"

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigError("lambda must be a non-negative number")
        if self.lam == 0 and not self.cone:
            raise ConfigError("lambda = 0 is the cone; enable cone mode to use it")
        unknown = set(self.tolerances) - set(TOLERANCE_NAMES)
        if unknown:
            raise ConfigError(f"unknown tolerances: {', '.join(sorted(unknown))}")
        for name, value in self.tolerances.items():
            if not value > 0:
                raise ConfigError(f"tolerance {name} must be positive")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def tol(self, name: str) -> float:
        return self.tolerances[name]

    @property
    def params(self) -> G2Params:
        return G2Params(self.lam, cone=self.cone)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _apply(settings: dict, key: str, value: str) -> None:
    key = key.strip().replace("-", "_")
    value = value.strip()
    try:
        if key == "lambda":
            settings["lam"] = float(value)
        elif key == "cone":
            settings["cone"] = _parse_bool(value)
        elif key == "seed":
            settings["seed"] = int(value)
        elif key == "out":
            settings["out"] = Path(value)
        elif key == "format":
            settings["format"] = value.lower()
        elif key.startswith("tol."):
            name = key[4:]
            if name not in TOLERANCE_NAMES:
                raise ConfigError(f"unknown tolerance {name!r}")
            settings["tolerances"][name] = float(value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def parse_config_text(text: str, settings: dict | None = None) -> dict:
    """Read flat ``key = value`` lines; ``#`` starts a comment."""
    settings = settings if settings is not None else _default_settings()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {n}: expected key = value")
        key, value = line.split("=", 1)
        _apply(settings, key, value)
    return settings


def _default_settings() -> dict:
    return {"tolerances": dict(DEFAULT_TOLERANCES)}


def load_config(args: argparse.Namespace | None = None, environ=None) -> RunConfig:
    """Defaults, then the config file, then flags."""
    environ = os.environ if environ is None else environ
    settings = _default_settings()
    path = environ.get(CONFIG_ENV)
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        parse_config_text(text, settings)
    if args is not None:
        for key in ("lambda", "cone", "seed", "out", "format"):
            value = getattr(args, key.replace("lambda", "lam"), None)
            if value is not None:
                _apply(settings, key, str(value))
        for name in TOLERANCE_NAMES:
            value = getattr(args, f"tol_{name}", None)
            if value is not None:
                _apply(settings, f"tol.{name}", str(value))
    return RunConfig(**settings)


# -- serialisation ---------------------------------------------------------------------


def fmt(x: float) -> str:
    return "%.17g" % x


def _plain(obj):
    # numpy scalars and arrays to JSON-ready Python values
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def csv_text(case: Case, lam: float, constants, stratum: str, columns, ts, rows) -> str:
    lines = [
        HEADER,
        "# " + ",".join([case.value, fmt(lam), ";".join(fmt(c) for c in constants), stratum]),
        ",".join(["t", *columns]),
    ]
    for t, row in zip(ts, rows):
        lines.append(",".join(fmt(v) for v in (t, *row)))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Table:
    case: Case
    lam: float
    constants: tuple
    stratum: str
    columns: tuple
    ts: np.ndarray
    rows: np.ndarray

    def record(self) -> dict:
        return {
            "case": self.case.value,
            "lambda": self.lam,
            "constants": list(self.constants),
            "stratum": self.stratum,
            "columns": ["t", *self.columns],
            "rows": [[t, *row] for t, row in zip(self.ts, self.rows)],
        }


def parse_csv(text: str) -> Table:
    lines = text.splitlines()
    if len(lines) < 3 or lines[0].strip() != HEADER or not lines[1].startswith("# "):
        raise ConfigError("not a coassoc CSV report")
    case, lam, consts, stratum = lines[1][2:].split(",", 3)
    columns = tuple(lines[2].split(","))
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[3:] if ln.strip()])
    data = data.reshape(-1, len(columns))
    constants = tuple(float(c) for c in consts.split(";") if c)
    return Table(Case.parse(case), float(lam), constants, stratum, columns[1:], data[:, 0], data[:, 1:])


def parse_json(text: str) -> list[Table]:
    doc = json.loads(text)
    out = []
    for rec in doc.get("components", []):
        data = np.array(rec["rows"], dtype=float).reshape(-1, len(rec["columns"]))
        out.append(
            Table(
                Case.parse(rec["case"]),
                float(rec["lambda"]),
                tuple(rec["constants"]),
                rec["stratum"],
                tuple(rec["columns"][1:]),
                data[:, 0],
                data[:, 1:],
            )
        )
    return out


def write_tables(cfg: RunConfig, stem: str, tables: list[Table], summary: dict) -> list[str]:
    """One CSV per table plus ``<stem>_summary.json``; or a single JSON document."""
    out = cfg.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    names = []
    if cfg.format == "csv":
        for i, tab in enumerate(tables):
            name = f"{stem}_{i}.csv" if len(tables) > 1 else f"{stem}.csv"
            text = csv_text(tab.case, tab.lam, tab.constants, tab.stratum, tab.columns, tab.ts, tab.rows)
            (out / name).write_text(text)
            names.append(name)
        summary = {**summary, "files": names}
        (out / f"{stem}_summary.json").write_text(dumps(summary))
        names.append(f"{stem}_summary.json")
    else:
        doc = {**summary, "components": [t.record() for t in tables]}
        (out / f"{stem}.json").write_text(dumps(doc))
        names.append(f"{stem}.json")
    return names


def _emit(summary: dict) -> None:
    sys.stdout.write(dumps(summary))


# -- random samples ------------------------------------------------------------------------


def random_total_point(rng: np.random.Generator, x5_max: float = 0.8, r_max: float = 3.0, r_min: float = 0.0):
    x5 = rng.uniform(-x5_max, x5_max)
    u = rng.normal(size=4)
    base = np.concatenate([np.sqrt(1 - x5 * x5) * u / np.linalg.norm(u), [x5]])
    d = rng.normal(size=3)
    fiber = rng.uniform(r_min, r_max) * d / np.linalg.norm(d)
    return make_point(base, fiber)


# -- commands -----------------------------------------------------------------------------


def cmd_verify_g2(cfg: RunConfig, n_points: int = 100) -> tuple[int, dict]:
    """Torsion of ``phi_lam`` and metric recovery at random points."""
    rng = cfg.rng()
    params = cfg.params
    h, tol = cfg.tol("fd_step"), cfg.tol("residual_tol")
    flat = float(np.max(np.abs(metric_from_phi(PHI0) - np.eye(7))))
    worst_t, worst_m, worst_point = 0.0, 0.0, None
    r_min = 1e5 * CONE_R_MIN if cfg.lam == 0 else 0.0
    for _ in range(n_points):
        p = random_total_point(rng, r_min=r_min)
        res = torsion_residual(p, params, h=h, tol=tol).value
        gram = g_lambda_matrix(p, params)
        rec = metric_from_phi(phi_lambda(p, params))
        merr = float(np.max(np.abs(rec - gram)) / np.max(np.abs(gram)))
        if res > worst_t or worst_point is None:
            worst_t, worst_point = max(worst_t, res), p
        worst_m = max(worst_m, merr)
    passed = worst_t < tol and worst_m < tol and flat < tol
    summary = {
        "command": "verify-g2",
        "lambda": cfg.lam,
        "n_points": n_points,
        "fd_step": h,
        "max_torsion": worst_t,
        "max_metric_error": worst_m,
        "flat_metric_error": flat,
        "pass": passed,
    }
    if not passed and worst_point is not None:
        summary["worst"] = {"base": worst_point.base, "fiber": worst_point.fiber, "torsion": worst_t}
    return (EXIT_OK if passed else EXIT_FAIL), summary


def lemma_points(case: Case, rng: np.random.Generator, n: int) -> list[TotalPoint]:
    """``n`` random points moved onto the case's canonical slice."""
    out = []
    while len(out) < n:
        _, q = to_slice(case, random_total_point(rng))
        if q.chart is ChartId.FRAME:
            out.append(q)
    return out


def cmd_verify_lemmas(cfg: RunConfig, n_points: int = 50) -> tuple[int, dict]:
    """Closed-form data tables against the frame-level recomputation."""
    rng = cfg.rng()
    tol = cfg.tol("residual_tol")
    per_case = {}
    for case in LEMMA_CASES:
        per_case[case.value] = max(data_tables(case, q).max_discrepancy() for q in lemma_points(case, rng, n_points))
    worst = max(per_case, key=per_case.get)
    passed = per_case[worst] < tol
    summary = {
        "command": "verify-lemmas",
        "n_points": n_points,
        "max_discrepancy": per_case,
        "pass": passed,
    }
    if not passed:
        summary["worst"] = worst
    return (EXIT_OK if passed else EXIT_FAIL), summary


def cmd_trace(cfg: RunConfig, case: Case, constants, resolution: int = 200, box=None) -> tuple[int, dict, list]:
    summary = {"command": "trace", "case": case.value, "lambda": cfg.lam, "constants": list(constants)}
    with solutions.quad_tolerance(cfg.tol("quad_tol")):
        try:
            curves = trace_level(case, constants, cfg.lam, resolution, box)
        except NoRootError as exc:
            summary.update(n_components=0, components=[], note=str(exc))
            return EXIT_OK, summary, []
    tables = [Table(case, cfg.lam, c.constants, c.stratum, c.columns, c.arclength(), c.polyline) for c in curves]
    summary.update(
        n_components=len(curves),
        components=[
            {"stratum": c.stratum, "endpoints": list(c.endpoints), "topology": c.topology, "n_points": len(c)}
            for c in curves
        ],
    )
    return EXIT_OK, summary, tables


def _subsample(states, limit: int):
    step = max(1, len(states) // limit)
    picked = list(states[::step])
    if picked[-1] is not states[-1]:
        picked.append(states[-1])
    return picked


def cmd_integrate(cfg: RunConfig, case: Case, state=None, v=None, length: float = 10.0, direction: int = 1,
                  n_sweep: int = 40) -> tuple[int, dict, list]:
    rng = cfg.rng()
    params = cfg.params
    if state is None:
        s0 = random_state(case, rng)
    else:
        s0 = PathState(case, state, v) if v is not None else PathState(case, state)
    with solutions.quad_tolerance(cfg.tol("quad_tol")):
        traj = integrate(s0, params, length, tol=cfg.tol("ode_tol"), direction=direction)
        start = np.array(conserved(traj.states[0], params), dtype=float)
        drift = 0.0
        for s in traj.states:
            drift = max(drift, float(np.max(np.abs(np.array(conserved(s, params)) - start), initial=0.0)))
        rep = sweep_report(_subsample(traj.states, n_sweep), params, n_group_samples=2, rng=rng)
    summary = {
        "command": "integrate",
        "case": case.value,
        "lambda": cfg.lam,
        "initial_state": dict(zip(PARAM_NAMES[case], traj.states[0].params)),
        "stop_reason": traj.stop_reason,
        "n_points": len(traj),
        "length": float(traj.ts[-1]),
        "conserved_initial": start,
        "conserved_drift": drift,
        "max_coassoc_residual": rep.max_residual,
        "sweep_checked": rep.n_checked,
        "sweep_excluded": rep.n_excluded,
    }
    if case is Case.SU2:
        summary["fiber_direction"] = traj.states[0].v
    table = Table(case, cfg.lam, tuple(start), "trajectory", PARAM_NAMES[case], traj.ts, traj.params)
    return EXIT_OK, summary, [table]


def cmd_classify(cfg: RunConfig, case: Case, base, fiber, chart: ChartId | None = None) -> tuple[int, dict]:
    base = np.asarray(base, dtype=float)
    if chart is None:
        if abs(abs(base[4]) - 1.0) < 1e-12:
            chart = ChartId.POLE_PLUS if base[4] > 0 else ChartId.POLE_MINUS
        else:
            chart = ChartId.FRAME
    p = make_point(base, fiber, chart)
    info = orbit_info(case, p)
    return EXIT_OK, {"command": "classify", "case": case.value, "dimension": info.dimension, "label": info.label}


def cmd_asymptote(cfg: RunConfig, case: Case, C: float, window=None, resolution: int = 200):
    summary = {"command": "asymptote", "case": case.value, "constants": [C]}
    try:
        curve = asymptotic_curve(case, C, window, resolution)
    except NoRootError as exc:
        summary.update(n_points=0, note=str(exc))
        return EXIT_OK, summary, []
    summary["n_points"] = len(curve)
    return EXIT_OK, summary, [Table(case, 0.0, (C,), "cone", COLUMNS[case], curve.arclength(), curve.polyline)]


def table_residual(tab: Table) -> float:
    """Largest violation of the defining equation over the table's rows."""
    case = tab.case
    if tab.stratum == "cone":
        C = tab.constants[0]
        if case is Case.SO3xSO2:
            vals = [abs(solutions.G_cone(a1, x1) - C) for a1, x1 in tab.rows]
        else:
            vals = [abs(solutions.F_cone(r, x5) - C) for x5, r in tab.rows]
        return float(max(vals, default=0.0))
    if tab.stratum == "trajectory":
        params = G2Params(tab.lam)
        states = [PathState(case, row) for row in tab.rows]
        if tab.constants:
            ref = np.asarray(tab.constants)
            return float(max(np.max(np.abs(np.array(conserved(s, params)) - ref)) for s in states))
        states = _subsample(states, 40)
        return sweep_report(states, params, n_group_samples=0).max_residual
    return float(max((level_residual(case, tab.constants, tab.lam, row) for row in tab.rows), default=0.0))


def cmd_roundtrip(cfg: RunConfig, paths) -> tuple[int, dict]:
    tol = cfg.tol("residual_tol")
    results = {}
    for path in paths:
        text = Path(path).read_text()
        tables = parse_json(text) if str(path).endswith(".json") else [parse_csv(text)]
        for i, tab in enumerate(tables):
            key = str(path) if len(tables) == 1 else f"{path}#{i}"
            results[key] = {"rows": int(tab.rows.shape[0]), "max_residual": table_residual(tab)}
    worst = max((r["max_residual"] for r in results.values()), default=0.0)
    passed = worst < tol
    summary = {"command": "roundtrip", "files": results, "max_residual": worst, "pass": passed}
    return (EXIT_OK if passed else EXIT_FAIL), summary


# -- argument parsing -------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _case_arg(text: str) -> Case:
    try:
        return Case.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float, help="size parameter of the G2 metric")
    common.add_argument("--cone", action="store_const", const=True, help="allow lambda = 0 (the cone)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output directory or file")
    common.add_argument("--format", choices=FORMATS, help="output format")
    for name in TOLERANCE_NAMES:
        common.add_argument(f"--tol.{name}", dest=f"tol_{name}", type=float, metavar="X")

    parser = argparse.ArgumentParser(prog="coassoc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-g2", parents=[common], help="torsion and metric recovery suite")
    p.add_argument("--points", type=int, default=100)

    p = sub.add_parser("verify-lemmas", parents=[common], help="data table cross-check")
    p.add_argument("--points", type=int, default=50)

    p = sub.add_parser("trace", parents=[common], help="trace a level set")
    p.add_argument("case", type=_case_arg)
    p.add_argument("--C", dest="C", type=float, required=True)
    p.add_argument("--D", dest="D", type=float)
    p.add_argument("--E", dest="E", type=float)
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--box", type=float)

    p = sub.add_parser("integrate", parents=[common], help="integrate the reduced ODE")
    p.add_argument("case", type=_case_arg)
    p.add_argument("--state", type=_floats, help="initial parameters (random interior state if omitted)")
    p.add_argument("--v", type=_floats, help="SU2 fiber direction")
    p.add_argument("--length", type=float, default=10.0)
    p.add_argument("--direction", type=int, choices=(-1, 1), default=1)

    p = sub.add_parser("classify", parents=[common], help="orbit type through a point")
    p.add_argument("case", type=_case_arg)
    p.add_argument("--point", type=_floats, required=True, help="x1,...,x5 on the unit sphere")
    p.add_argument("--fiber", type=_floats, default=[0.0, 0.0, 0.0])
    p.add_argument("--chart", choices=[c.value for c in ChartId])

    p = sub.add_parser("asymptote", parents=[common], help="sample a lambda = 0 level curve")
    p.add_argument("case", type=_case_arg)
    p.add_argument("--C", dest="C", type=float, required=True)
    p.add_argument("--window", type=_floats)
    p.add_argument("--resolution", type=int, default=200)

    p = sub.add_parser("roundtrip", parents=[common], help="re-validate emitted reports")
    p.add_argument("files", nargs="+")
    return parser


def _run(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    cmd = args.command
    if cmd in ("verify-g2", "verify-lemmas", "classify", "roundtrip"):
        if cmd == "verify-g2":
            code, summary = cmd_verify_g2(cfg, args.points)
        elif cmd == "verify-lemmas":
            code, summary = cmd_verify_lemmas(cfg, args.points)
        elif cmd == "classify":
            if len(args.point) != 5 or len(args.fiber) != 3:
                raise ConfigError("--point needs 5 numbers and --fiber 3")
            chart = ChartId(args.chart) if args.chart else None
            code, summary = cmd_classify(cfg, args.case, args.point, args.fiber, chart)
        else:
            code, summary = cmd_roundtrip(cfg, args.files)
        if cfg.out is not None:
            cfg.out.parent.mkdir(parents=True, exist_ok=True)
            cfg.out.write_text(dumps(summary))
        _emit(summary)
        return code
    if cmd == "trace":
        extra = [c for c in (args.D, args.E) if c is not None]
        if args.case is Case.SO3_STD and len(extra) != 2:
            raise ConfigError("the SO(3) case needs --C, --D and --E")
        constants = (args.C, *extra) if args.case is Case.SO3_STD else (args.C,)
        code, summary, tables = cmd_trace(cfg, args.case, constants, args.resolution, args.box)
        stem = f"trace_{args.case.value}"
    elif cmd == "integrate":
        code, summary, tables = cmd_integrate(cfg, args.case, args.state, args.v, args.length, args.direction)
        stem = f"integrate_{args.case.value}"
    else:
        window = tuple(args.window) if args.window else None
        if window is not None and len(window) != 2:
            raise ConfigError("--window needs lo,hi")
        code, summary, tables = cmd_asymptote(cfg, args.case, args.C, window, args.resolution)
        stem = f"asymptote_{args.case.value}"
    summary = {**summary, "written": write_tables(cfg, stem, tables, summary)}
    _emit(summary)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"coassoc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CoassocError, ValueError) as exc:
        print(f"coassoc: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
