"""Batch command line: load a scenario file, run it, write reports.

    motforge <kind> --input scenario.json [--output-dir DIR] [--seed N] [--format json|csv|both]
    motforge suite --input manifest.json [--jobs N] ...

Exit status is 0 when every assertion of every scenario passes, 1 when a
scenario fails (the failure list is printed as JSON), 2 for invalid input
and 3 when the reports cannot be written.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import costs, transforms
from .measures import (DiscreteMeasure, MeasureError, barycenter, convex_order_leq,
                       is_martingale, make_coupling, make_measure, wasserstein1)
from .monotone import is_finitely_monotone
from .motlp import (check_left_monotone, check_monotone_graphs, check_right_monotone,
                    graph_witness, random_instance, solve_mot, violation_mass)
from .sepsim import montecarlo
from .sepsim.dp import embed
from .sepsim.fitting import fit_right_barrier, fit_two_sided
from .sepsim.lattice import Lattice, make_lattice, snap
from .sepsim.stopgo import PathFunctional, Sigma, StoppedPath, check_stop_go

log = logging.getLogger("motforge")

KINDS = ("mot_solve", "monotone_check", "transform_apply", "transform_classify", "sep_fit",
         "sep_compare", "stop_go", "symmetry_suite")
REF_KEYS = ("mu", "nu", "coupling", "cost", "transform")


class ScenarioError(Exception):
    """Invalid scenario input.  ``pointer`` locates the offending value."""

    def __init__(self, message: str, pointer: str = "", source: str = ""):
        self.pointer = pointer
        self.source = source
        where = ":".join(p for p in (source, pointer) if p)
        super().__init__(f"{where}: {message}" if where else message)


@dataclass
class Scenario:
    kind: str
    name: str
    seed: int | None
    data: dict
    source: str = ""
    measures: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# loading


def _schema(name: str) -> dict:
    text = resources.files("motforge").joinpath("schemas", name).read_text()
    return json.loads(text)


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def validate(doc: dict, schema_name: str = "scenario.schema.json", source: str = ""):
    validator = Draft202012Validator(_schema(schema_name))
    errors = list(validator.iter_errors(doc))
    if errors:
        # report the deepest error: it names the concrete offending value
        err = max(errors, key=lambda e: len(e.absolute_path))
        raise ScenarioError(err.message, _pointer(err.absolute_path), source)


def _read_json(path: Path, source: str = "") -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"file not found: {path}", source=source) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON ({exc.msg} at line {exc.lineno})", source=str(path)) from None


def _resolve_refs(doc: dict, base: Path, source: str) -> dict:
    out = dict(doc)
    for key in REF_KEYS:
        v = out.get(key)
        if isinstance(v, dict) and set(v) == {"ref"} and isinstance(v["ref"], str):
            out[key] = _read_json(base / v["ref"], source=f"{source}/{key}")
    return out


def _measure(obj: dict, pointer: str, source: str) -> DiscreteMeasure:
    try:
        return DiscreteMeasure.from_json(obj)
    except MeasureError as exc:
        raise ScenarioError(str(exc), pointer, source) from None


def _require_convex_order(mu, nu, pointer: str, source: str):
    v = convex_order_leq(mu, nu)
    if not v:
        raise ScenarioError(f"marginals are not in convex order: {v.detail} "
                            f"(witness point {v.witness!r})", pointer, source)


def load_problem(path, seed: int | None = None, kind: str | None = None) -> Scenario:
    """Read, resolve, validate and canonicalize a scenario file."""
    path = Path(path)
    source = str(path)
    doc = _read_json(path)
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object", "", source)
    doc = _resolve_refs(doc, path.parent, source)
    if kind is not None:
        if "kind" in doc and doc["kind"] != kind:
            raise ScenarioError(f"file declares kind {doc['kind']!r}, command is {kind!r}", "/kind", source)
        doc["kind"] = kind
    if seed is not None:
        doc["seed"] = seed
    doc.setdefault("name", re.sub(r"[^A-Za-z0-9_.-]", "_", path.stem))
    validate(doc, source=source)
    return _build(doc, source)


def _build(doc: dict, source: str) -> Scenario:
    kind = doc["kind"]
    s = Scenario(kind, doc["name"], doc.get("seed"), doc, source)
    for key in ("mu", "nu"):
        if key in doc:
            s.measures[key] = _measure(doc[key], f"/{key}", source)
    if kind in ("mot_solve", "monotone_check") or (kind == "transform_apply" and "coupling" not in doc):
        if "mu" not in s.measures or "nu" not in s.measures or "cost" not in doc:
            raise ScenarioError("needs a coupling, or mu, nu and cost to solve for one", "", source)
        _require_convex_order(s.measures["mu"], s.measures["nu"], "/nu", source)
    if kind == "symmetry_suite":
        inst = doc["instances"]
        if isinstance(inst, dict) and s.seed is None:
            raise ScenarioError("random instances need a seed", "/seed", source)
        if isinstance(inst, list):
            pairs = []
            for i, pair in enumerate(inst):
                mu = _measure(pair["mu"], f"/instances/{i}/mu", source)
                nu = _measure(pair["nu"], f"/instances/{i}/nu", source)
                _require_convex_order(mu, nu, f"/instances/{i}/nu", source)
                pairs.append((mu, nu))
            s.measures["instances"] = pairs
    if "transform" in doc:
        try:
            s.measures["transform"] = transforms.from_json(doc["transform"])
        except (ValueError, KeyError) as exc:
            raise ScenarioError(str(exc), "/transform", source) from None
    if "cost" in doc:
        try:
            s.measures["cost"] = costs.from_json(doc["cost"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ScenarioError(str(exc), "/cost", source) from None
    return s


# ---------------------------------------------------------------------------
# running


class _Report:
    def __init__(self, s: Scenario):
        self.s = s
        self.results: dict = {}
        self.tables: dict = {}
        self.failures: list[str] = []

    def table(self, name: str, columns: list[str], rows):
        self.tables[name] = {"columns": columns, "rows": [list(r) for r in rows]}

    def check(self, ok: bool, message: str):
        if not ok:
            self.failures.append(message)

    def as_dict(self) -> dict:
        return {
            "scenario": self.s.name,
            "kind": self.s.kind,
            "seed": self.s.seed,
            "passed": not self.failures,
            "failures": list(self.failures),
            "results": _plain(self.results),
            "tables": _plain(self.tables),
        }


def _plain(obj):
    """Convert to JSON-ready builtins."""
    if hasattr(obj, "to_json") and not isinstance(obj, type):
        return _plain(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def _tol(s: Scenario, key: str, default: float) -> float:
    return float(s.data.get("tolerances", {}).get(key, default))


def _verdict_json(v) -> dict:
    return {"ok": bool(v), "witness": _plain(v.witness), "detail": v.detail}


def _coupling_rows(q):
    return [(x, y, m) for x, y, m in q.entries]


def _run_mot_solve(s: Scenario, r: _Report):
    sol = solve_mot(s.measures["mu"], s.measures["nu"], s.measures["cost"], s.data.get("sense", "min"))
    r.results.update(status=sol.status, value=sol.value)
    r.table("coupling", ["x", "y", "mass"], _coupling_rows(sol.coupling))
    r.check(sol.optimal, f"solver status {sol.status}")
    exp = s.data.get("expect", {})
    if "value" in exp and sol.optimal:
        tol = _tol(s, "value", 1e-9)
        r.check(abs(sol.value - exp["value"]) <= tol,
                f"value {sol.value!r} differs from expected {exp['value']!r} by more than {tol:g}")


_CHECKS = {
    "left": lambda sup: check_left_monotone(sup),
    "right": lambda sup: check_right_monotone(sup),
    "graphs_increasing": lambda sup: check_monotone_graphs(sup, "increasing"),
    "graphs_decreasing": lambda sup: check_monotone_graphs(sup, "decreasing"),
}


def _run_monotone_check(s: Scenario, r: _Report):
    cost = s.measures["cost"]
    sol = solve_mot(s.measures["mu"], s.measures["nu"], cost, s.data.get("sense", "min"))
    r.check(sol.optimal, f"solver status {sol.status}")
    if not sol.optimal:
        return
    sup = sol.coupling.support()
    r.results.update(value=sol.value, support_size=len(sup))
    r.table("coupling", ["x", "y", "mass"], _coupling_rows(sol.coupling))
    exp = s.data.get("expect", {})
    out = {}
    for name in s.data.get("checks", ["left", "finite"]):
        if name == "finite":
            # a maximisation is the minimisation of -c
            c = cost if s.data.get("sense", "min") == "min" else costs.custom(lambda x, y: -cost(x, y), "neg")
            v = is_finitely_monotone(sup, c, s.data.get("max_support", 4),
                                     s.data.get("trials", 200), s.seed)
            out[name] = _verdict_json(v)
            out[name]["budget"] = v.extra.get("budget")
            ok = bool(v)
        else:
            res = _CHECKS[name](sup)
            ok = res is None if name in ("left", "right") else bool(res)
            out[name] = {"ok": ok, "witness": _plain(res if name in ("left", "right") else res.witness)}
        want = bool(exp.get(name, True))
        r.check(ok == want, f"check {name} returned {ok}, expected {want}")
    r.results["checks"] = out


def _run_transform_apply(s: Scenario, r: _Report):
    spec = s.measures["transform"]
    if "coupling" in s.data:
        pi = make_coupling(*zip(*s.data["coupling"]["entries"]))
        value = None
    else:
        sol = solve_mot(s.measures["mu"], s.measures["nu"], s.measures["cost"], s.data.get("sense", "min"))
        r.check(sol.optimal, f"solver status {sol.status}")
        if not sol.optimal:
            return
        pi, value = sol.coupling, sol.value
    image = transforms.transform_measure(spec, pi)
    r.results["image_mass"] = image.total_mass
    r.results["martingale"] = _verdict_json(is_martingale(image))
    if spec.variant == "numeraire":
        mass, v = transforms.numeraire_mass_check(pi, spec)
        r.results["numeraire_mass"] = mass
        r.results["mass_condition"] = _verdict_json(v)
    if value is not None and "cost" in s.measures:
        cp = transforms.transform_cost(spec, s.measures["cost"])
        r.results["value_original"] = value
        r.results["value_image"] = image.integrate(cp)
    r.table("coupling", ["x", "y", "mass"], _coupling_rows(image))
    exp = s.data.get("expect", {})
    if "martingale" in exp:
        got = r.results["martingale"]["ok"]
        r.check(got == bool(exp["martingale"]), f"martingale check returned {got}")
    if "mass" in exp:
        tol = _tol(s, "mass", 1e-9)
        r.check(abs(image.total_mass - exp["mass"]) <= tol,
                f"image mass {image.total_mass!r} differs from {exp['mass']!r}")


def _run_transform_classify(s: Scenario, r: _Report):
    tol = _tol(s, "residual", 1e-9)
    c = transforms.classify(s.measures["transform"], s.data["x_grid"], s.data["y_grid"],
                            s.data.get("trials", 1000), s.seed, tol)
    r.results["classification"] = c.to_json()
    exp = s.data.get("expect", {})
    if "case" in exp:
        r.check(c.case == exp["case"], f"classified as {c.case}, expected {exp['case']}")
    ptol = _tol(s, "params", 1e-9)
    for k, v in exp.get("params", {}).items():
        got = c.params.get(k)
        r.check(got is not None and abs(got - v) <= ptol, f"parameter {k} = {got!r}, expected {v!r}")


def _run_sep_fit(s: Scenario, r: _Report):
    delta = s.data["delta"]
    mu, nu = s.measures["mu"], s.measures["nu"]
    lat = make_lattice(delta, mu, nu, margin=s.data.get("margin", 10), seed=s.seed or 0)
    if s.data.get("snap", True):
        mu, dmu = snap(mu, lat)
        nu, dnu = snap(nu, lat)
        r.results["snap_distance"] = {"mu": dmu, "nu": dnu}
    kind = s.data["barrier_kind"]
    ezt = s.data.get("exclude_time_zero", True)
    tol = _tol(s, "residual", 2 * delta)
    if kind == "right":
        rep = fit_right_barrier(mu, nu, lat, exclude_time_zero=ezt, tol=tol)
    else:
        rep = fit_two_sided(mu, nu, lat, kind, exclude_time_zero=ezt, tol=tol)
    e = embed(rep.barrier, mu)
    w1 = wasserstein1(e.law, nu)
    if kind == "right":
        viol = violation_mass(e.coupling, check_left_monotone)
    else:
        direction = "increasing" if kind == "inner" else "decreasing"
        viol = violation_mass(e.coupling, lambda sup: check_monotone_graphs(sup, direction), graph_witness)
    r.results.update(residual=rep.residual, sweeps=rep.sweeps, evaluations=rep.evaluations,
                     truncated=e.truncated, w1=w1, structure_violation_mass=viol,
                     barrier=rep.barrier.to_json())
    r.table("embedded_law", ["y", "mass"], e.law.atoms)
    r.table("coupling", ["x", "y", "mass"], _coupling_rows(e.coupling))
    b = rep.barrier
    p2 = b.threshold(2) if b.psi2 is not None else np.full(lat.size, np.nan)
    r.table("barrier", ["y", "psi", "psi2"], zip(lat.y_grid, b.threshold(1), p2))
    r.check(w1 <= tol, f"embedded law is {w1:g} from the target (limit {tol:g})")
    r.check(e.truncated <= _tol(s, "truncation", 1e-6), f"truncated mass {e.truncated:g}")
    smax = _tol(s, "structure_mass", 0.01)
    r.check(viol <= smax, f"structure violated on mass {viol:g} (limit {smax:g})")


def _run_sep_compare(s: Scenario, r: _Report):
    name = s.data["profile"]
    prof = montecarlo.FLAT_PROFILE if name == "flat" else montecarlo.CONTINUOUS_PROFILES[name]
    rows = []
    worst_trunc = 0.0
    for delta in s.data.get("deltas", [0.1, 0.05, 0.025]):
        lat = montecarlo.corpus_lattice(delta, seed=s.seed)
        barrier = montecarlo.profile_barrier(prof, lat)
        mu = montecarlo.flat_mu(lat) if name == "flat" else montecarlo.corpus_mu(lat)
        cmp = montecarlo.compare_open_closed(barrier, mu, lat, s.data.get("n_paths", 10_000),
                                             s.data.get("epsilon_steps", 4) * delta, s.seed)
        rows.append((delta, cmp.fraction, cmp.stderr))
        worst_trunc = max(worst_trunc, cmp.truncated_open, cmp.truncated_closed)
    fr = [f for _, f, _ in rows]
    r.results.update(profile=name, fractions=fr, truncation=worst_trunc)
    r.table("refinement", ["delta", "fraction", "stderr"], rows)
    r.check(worst_trunc <= _tol(s, "truncation", 1e-3), f"truncated paths {worst_trunc:g}")
    exp = s.data.get("expect", {})
    if exp.get("non_increasing"):
        r.check(all(b <= a for a, b in zip(fr, fr[1:])), f"fractions increase under refinement: {fr}")
    if "final_max" in exp:
        r.check(fr[-1] <= exp["final_max"], f"finest fraction {fr[-1]:g} above {exp['final_max']:g}")
    if "min_fraction" in exp:
        r.check(min(fr) >= exp["min_fraction"], f"fraction {min(fr):g} below {exp['min_fraction']:g}")


def _functional(obj: dict) -> PathFunctional:
    if obj["family"] == "terminal_cost":
        return PathFunctional.terminal_cost(costs.from_json(obj["cost"]))
    return PathFunctional(obj["family"])


def _run_stop_go(s: Scenario, r: _Report):
    d = s.data
    delta = d.get("delta", 0.05)
    lat = Lattice(delta, -1, 1, seed=s.seed)
    g2 = _functional(d["gamma2"]) if "gamma2" in d else None
    res = check_stop_go(StoppedPath(**d["f"]), StoppedPath(**d["g"]), _functional(d["gamma"]), g2,
                        Sigma(**d["sigma"]), lat, d.get("n_samples", 10_000), s.seed)
    r.results.update(res.to_json())
    exp = d.get("expect", {})
    if "verdict" in exp:
        r.check(res.verdict == exp["verdict"], f"verdict {res.verdict}, expected {exp['verdict']}")
    if "within_se" in exp and res.exact_gap is not None:
        k = exp["within_se"]
        r.check(abs(res.gap - res.exact_gap) <= k * res.stderr,
                f"estimate {res.gap:g} is more than {k} standard errors from {res.exact_gap:g}")


def symmetry_instances(spec, n: int, seed: int):
    """Random convex-ordered pairs suited to ``spec``: for a change of
    numeraire the atoms are positive with mean 1/c + b, the level at which
    the transformed measures have unit mass."""
    out = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        if spec.variant == "numeraire":
            mu, nu = random_instance(rng, lo=0.2, hi=3.0)
            p = spec.params
            scale = (1.0 / p["c"] + p["b"]) / barycenter(mu)
            mu = make_measure(mu.positions * scale, mu.masses)
            nu = make_measure(nu.positions * scale, nu.masses)
        else:
            mu, nu = random_instance(rng)
        out.append((mu, nu))
    return out


def _run_symmetry_suite(s: Scenario, r: _Report):
    spec = s.measures["transform"]
    inst = s.data["instances"]
    pairs = s.measures.get("instances") or symmetry_instances(spec, inst["random"], s.seed)
    tol = _tol(s, "value", 1e-9)
    rows = []
    for i, (mu, nu) in enumerate(pairs):
        out = transforms.symmetry_pipeline(spec, mu, nu, s.measures["cost"], s.data.get("sense", "min"))
        rows.append((i, out["value_original"], out["value_direct"], out["value_gap"],
                     bool(out["support_match"])))
        r.check(out["value_gap"] <= tol, f"instance {i}: value gap {out['value_gap']:g}")
        r.check(out["support_match"], f"instance {i}: supports do not correspond under T")
    r.results.update(variant=spec.variant, instances=len(rows),
                     max_value_gap=max(row[3] for row in rows),
                     all_supports_match=all(row[4] for row in rows))
    r.table("pairs", ["instance", "value_original", "value_direct", "value_gap", "support_match"], rows)


_RUNNERS = {
    "mot_solve": _run_mot_solve,
    "monotone_check": _run_monotone_check,
    "transform_apply": _run_transform_apply,
    "transform_classify": _run_transform_classify,
    "sep_fit": _run_sep_fit,
    "sep_compare": _run_sep_compare,
    "stop_go": _run_stop_go,
    "symmetry_suite": _run_symmetry_suite,
}


def run_scenario(s: Scenario) -> dict:
    r = _Report(s)
    log.info("running %s (%s)", s.name, s.kind)
    try:
        _RUNNERS[s.kind](s, r)
    except Exception as exc:  # module errors become a failed report for this scenario
        log.debug("scenario %s raised", s.name, exc_info=True)
        r.failures.append(f"{s.kind} {s.name}: {type(exc).__name__}: {exc}")
    return r.as_dict()


# ---------------------------------------------------------------------------
# output


def _num(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return format(v, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with sorted keys and floats written with 17 significant
    digits, so equal reports give equal bytes."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float)):
        if isinstance(obj, float) and not math.isfinite(obj):
            raise ValueError("non-finite float in report")
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return _num(v)


def table_csv(table: dict) -> str:
    lines = [",".join(table["columns"])]
    lines += [",".join(_csv_cell(v) for v in row) for row in table["rows"]]
    return "\n".join(lines) + "\n"


def emit_report(report: dict, out_dir, fmt: str = "both") -> list[Path]:
    """Write ``<scenario>_report.json`` and/or ``<scenario>_<table>.csv``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        name = report["scenario"]
        if fmt in ("json", "both"):
            p = out / f"{name}_report.json"
            p.write_text(dumps(report) + "\n")
            written.append(p)
        if fmt in ("csv", "both"):
            for tname in sorted(report["tables"]):
                p = out / f"{name}_{tname}.csv"
                p.write_text(table_csv(report["tables"][tname]))
                written.append(p)
        return written
    except OSError as exc:
        raise OSError(f"cannot write reports to {out}: {exc}") from exc


# ---------------------------------------------------------------------------
# entry point


def _configure_logging():
    level = os.environ.get("MOTFORGE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for kind in KINDS + ("suite",):
        sp = sub.add_parser(kind, help=f"run a {kind} scenario" if kind != "suite" else "run a manifest")
        sp.add_argument("--input", required=True, help="scenario (or manifest) JSON file")
        sp.add_argument("--output-dir", default="motforge_out", help="report directory")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--jobs", type=int, default=1, help="scenarios run concurrently (suite)")
        sp.add_argument("--format", choices=("json", "csv", "both"), default="both")
    return p


def _load_manifest(path: Path) -> list[Path]:
    doc = _read_json(path)
    validate(doc, "suite.schema.json", str(path))
    return [path.parent / p for p in doc["scenarios"]]


def main(argv=None) -> int:
    _configure_logging()
    args = _parser().parse_args(argv)
    try:
        if args.command == "suite":
            files = _load_manifest(Path(args.input))
            scenarios = [load_problem(f, args.seed) for f in files]
        else:
            scenarios = [load_problem(args.input, args.seed, args.command)]
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(run_scenario, scenarios))
    try:
        for rep in reports:
            emit_report(rep, args.output_dir, args.format)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    summary = {"passed": all(r["passed"] for r in reports),
               "scenarios": [{"scenario": r["scenario"], "kind": r["kind"], "passed": r["passed"],
                              "failures": r["failures"]} for r in reports]}
    print(dumps(summary))
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
