"""Command-line front end: ``steerkit <command> ...``.

Results are JSON on stdout (or ``--out``); sweeps write CSV. Exit codes:
0 computed, 1 usage error, 2 invalid input data, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from steerkit import conic, criteria, incompatibility, radius, sdp, serialization, states
from steerkit.errors import SolverError, ValidationError
from steerkit.operators import (
    Assemblage,
    MeasurementSet,
    assemblage_from_state,
    bloch_decompose,
    pauli_measurements,
    swap_parties,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SOLVER = 0, 1, 2, 3
SWEEP_COLUMNS = ("sdp", "three-pauli", "linear", "chsh", "entropic", "ccnr", "lur", "weight", "robustness")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def parse_measurements(source: str) -> MeasurementSet:
    """``paulis:xz``, ``paulis:xyz``, ``axes:icosa6``, ``axes:dodeca-icosa15``, ``axes:fib:N`` or a JSON file."""
    if source.startswith("paulis:"):
        axes = source.split(":", 1)[1]
        if not axes or set(axes) - set("xyz") or len(set(axes)) != len(axes):
            raise UsageError(f"bad Pauli shorthand {source!r}")
        return pauli_measurements(axes)
    if source.startswith("axes:"):
        try:
            dirs = radius.DirectionSet.from_scheme(source.split(":", 1)[1])
        except (ValidationError, ValueError) as exc:
            raise UsageError(f"bad axes shorthand {source!r}: {exc}") from exc
        return dirs.measurements()
    obj = serialization.read(source)
    if not isinstance(obj, MeasurementSet):
        raise ValidationError(f"{source} is not a measurements document")
    return obj


def _read_state(path: str):
    obj = serialization.read(path)
    if not isinstance(obj, tuple):
        raise ValidationError(f"{path} is not a state document")
    return obj


def _read_kind(path: str, cls):
    obj = serialization.read(path)
    if not isinstance(obj, cls):
        raise ValidationError(f"{path} does not hold a {cls.__name__}")
    return obj


def _assemblage(args) -> Assemblage:
    if args.assemblage:
        return _read_kind(args.assemblage, Assemblage)
    if args.state and args.measurements:
        rho, dims = _read_state(args.state)
        return assemblage_from_state(rho, parse_measurements(args.measurements), dims)
    raise UsageError("give --assemblage FILE, or --state FILE with --measurements SET")


def _finite(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _finite(obj.item())
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _emit(args, payload: dict) -> None:
    payload = {"command": args.command, "seed": args.seed, **payload}
    text = json.dumps(_finite(payload), sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solver_fields(info: dict | None) -> dict:
    info = info or {}
    return {"solver": info.get("solver", conic.solver_name()), "solver_status": info.get("status")}


def cmd_detect(args) -> None:
    asm = _assemblage(args)
    verdict = sdp.lhs_feasibility(asm, args.tol)
    out = {
        "steerable": verdict.steerable,
        "status": verdict.status,
        "mu": verdict.mu,
        "tol": args.tol,
        **_solver_fields(verdict.diagnostics["primal"]),
    }
    if verdict.inequality is not None:
        out["inequality"] = serialization.to_document(verdict.inequality)
        out["inequality_value"] = verdict.inequality.value(asm)
        out["dual_solver_status"] = verdict.diagnostics["dual"]["status"]
    if verdict.model is not None:
        out["model_residual"] = verdict.model.residual(asm.members)
    _emit(args, out)


def cmd_quantify(args) -> None:
    asm = _assemblage(args)
    if args.measure == "weight":
        res = sdp.steering_weight(asm)
        value = res.weight
    else:
        res = sdp.steering_robustness(asm)
        value = res.robustness
    _emit(args, {"measure": args.measure, "value": value, "tol": args.tol, **_solver_fields(res.info.as_dict())})


def cmd_inequality(args) -> None:
    asm = _assemblage(args)
    ineq = sdp.dual_inequality(asm)
    _emit(
        args,
        {
            "value": ineq.value(asm),
            "violated": ineq.value(asm) < -args.tol,
            "certificate_min_eigenvalue": ineq.min_eigenvalue(),
            "normalization": ineq.normalization,
            "tol": args.tol,
            "solver": conic.solver_name(),
            "solver_status": "optimal",
            "inequality": serialization.to_document(ineq),
        },
    )


def cmd_jm(args) -> None:
    if args.assemblage:
        ms = incompatibility.normalize_assemblage(_read_kind(args.assemblage, Assemblage))
    elif args.measurements:
        ms = parse_measurements(args.measurements)
    else:
        raise UsageError("give --measurements SET or --assemblage FILE")
    res = incompatibility.is_jointly_measurable(ms, args.tol)
    out = {
        "jointly_measurable": res.jointly_measurable,
        "margin": res.margin,
        "tol": args.tol,
        **_solver_fields(res.diagnostics["primal"]),
    }
    if args.robustness:
        out["incompatibility_robustness"] = incompatibility.incompatibility_robustness(ms)
        out["white_noise_threshold"] = incompatibility.white_noise_threshold(ms)
    _emit(args, out)


def cmd_radius(args) -> None:
    rho, dims = _read_state(args.state)
    if tuple(dims) != (2, 2):
        raise ValidationError("radius needs a two-qubit state")
    dirs = radius.DirectionSet.from_scheme(args.dirs)
    bracket = radius.radius_bracket(rho, dirs, args.tol)
    out = {**bracket.as_dict()}
    out["solver_status"] = out.pop("status")
    if radius.is_tstate(rho):
        T = bloch_decompose(rho).T
        out["tstate_radius"] = radius.tstate_critical_radius(T, args.quad_points, allow_singular=True)
        out["quad_points"] = args.quad_points
    _emit(args, out)


def cmd_criteria(args) -> None:
    if args.covariance:
        gc = _read_kind(args.covariance, criteria.GaussianCovariance)
        verdicts = [criteria.gaussian_steering(gc, d).as_dict() for d in ("A->B", "B->A")]
        _emit(args, {"gaussian": verdicts, "tol": criteria.GAUSSIAN_TOL, "solver": None, "solver_status": "closed-form"})
        return
    if not args.state:
        raise UsageError("give --state FILE or --covariance FILE")
    rho, dims = _read_state(args.state)
    if tuple(dims) != (2, 2):
        raise ValidationError("the criteria battery needs a two-qubit state")
    results = [r.as_dict() for r in criteria.pauli_battery(rho)]
    _emit(args, {"criteria": results, "tol": criteria.CRITERION_TOL, "solver": None, "solver_status": "closed-form"})


def cmd_make(args) -> None:
    what = args.what
    if what in ("werner", "isotropic"):
        rho = (states.werner if what == "werner" else states.isotropic)(args.d, args.eta)
        doc = serialization.to_document(rho, (args.d, args.d))
    elif what == "one-way":
        rho = states.one_way_state(args.alpha, np.deg2rad(args.theta_deg))
        doc = serialization.to_document(rho, (2, 2))
    elif what == "assemblage":
        if not (args.state and args.measurements):
            raise UsageError("make assemblage needs --state and --measurements")
        rho, dims = _read_state(args.state)
        doc = serialization.to_document(assemblage_from_state(rho, parse_measurements(args.measurements), dims))
    elif what == "measurements":
        if not args.measurements:
            raise UsageError("make measurements needs --measurements")
        doc = serialization.to_document(parse_measurements(args.measurements))
    elif what == "tmsv":
        doc = serialization.to_document(criteria.two_mode_squeezed_vacuum(args.r))
    else:
        doc = serialization.to_document(criteria.vacuum())
    text = serialization.dumps(doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_thresholds(args) -> None:
    q = states.ThresholdQuery(args.family, args.measurement_class, args.d)
    _emit(
        args,
        {
            "family": q.family,
            "class": q.measurement_class,
            "d": q.d,
            "threshold": states.threshold(q),
            "tol": 0.0,
            "solver": None,
            "solver_status": "closed-form",
        },
    )


def grid(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("step must be positive")
    if stop < start:
        return []
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 12) for k in range(n)]


def _family_row(task) -> dict:
    family, d, eta, columns, source, tol = task
    rho = (states.werner if family == "werner" else states.isotropic)(d, eta)
    row = {"eta": eta}
    status = "n/a"
    battery = {}
    if set(columns) & {"three-pauli", "linear", "chsh", "entropic", "lur"}:
        battery = {r.name: r for r in criteria.pauli_battery(rho)}
    if any(c in columns for c in ("sdp", "weight", "robustness")):
        asm = assemblage_from_state(rho, parse_measurements(source), (d, d))
    for col in columns:
        if col == "sdp":
            v = sdp.lhs_feasibility(asm, tol)
            row["sdp_verdict"], row["sdp_mu"] = v.status, v.mu
            status = v.diagnostics["primal"]["status"]
        elif col == "weight":
            res = sdp.steering_weight(asm)
            row["weight"], status = res.weight, res.info.status
        elif col == "robustness":
            res = sdp.steering_robustness(asm)
            row["robustness"], status = res.robustness, res.info.status
        elif col == "ccnr":
            r = criteria.ccnr_steering(rho, d)
            row["ccnr"], row["ccnr_violated"] = r.value, r.violated
        else:
            r = battery[col]
            key = col.replace("-", "_")
            row[key], row[f"{key}_violated"] = r.value, r.violated
    row["tol"], row["solver_status"] = tol, status
    return row


def _one_way_row(task) -> dict:
    alpha, theta_deg, source, tol = task
    rho = states.one_way_state(alpha, np.deg2rad(theta_deg))
    ms = parse_measurements(source)
    forward = sdp.lhs_feasibility(assemblage_from_state(rho, ms, (2, 2)), tol)
    backward = sdp.lhs_feasibility(assemblage_from_state(swap_parties(rho, (2, 2)), ms, (2, 2)), tol)
    model = states.one_way_reverse_unsteerable(alpha, np.deg2rad(theta_deg))
    labels = []
    if forward.steerable:
        labels.append("A->B-detected")
    if model:
        labels.append("B->A-model-exists")
    return {
        "alpha": alpha,
        "theta_deg": theta_deg,
        "a_to_b": forward.status,
        "a_to_b_mu": forward.mu,
        "b_to_a_sdp": backward.status,
        "b_to_a_mu": backward.mu,
        "b_to_a_model": model,
        "label": "+".join(labels) or "none",
        "tol": tol,
        "solver_status": backward.diagnostics["primal"]["status"],
    }


def _header(family: str, columns) -> list[str]:
    if family == "one-way":
        return ["alpha", "theta_deg", "a_to_b", "a_to_b_mu", "b_to_a_sdp", "b_to_a_mu", "b_to_a_model", "label", "tol", "solver_status"]
    head = ["eta"]
    for col in columns:
        if col == "sdp":
            head += ["sdp_verdict", "sdp_mu"]
        elif col in ("weight", "robustness"):
            head.append(col)
        else:
            key = col.replace("-", "_")
            head += [key, f"{key}_violated"]
    return head + ["tol", "solver_status"]


def sweep_rows(family: str, tasks, jobs: int = 1) -> list[dict]:
    fn = _one_way_row if family == "one-way" else _family_row
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def cmd_sweep(args) -> None:
    if args.family == "one-way":
        alphas = grid(*args.alpha)
        thetas = grid(*args.theta_deg)
        if any(t <= 0 or t > 45 for t in thetas):
            raise UsageError("theta must lie in (0, 45] degrees")
        source = args.measurements or "axes:icosa6"
        tasks = [(a, t, source, args.tol) for a in alphas for t in thetas]
        columns = ()
    else:
        columns = tuple(c.strip() for c in args.columns.split(",") if c.strip())
        unknown = set(columns) - set(SWEEP_COLUMNS)
        if unknown:
            raise UsageError(f"unknown columns {sorted(unknown)}; choose from {SWEEP_COLUMNS}")
        if args.d != 2 and set(columns) & {"three-pauli", "linear", "chsh", "entropic", "lur"}:
            raise UsageError("Pauli-based columns need --d 2")
        source = args.measurements or "paulis:xyz"
        if any(c in columns for c in ("sdp", "weight", "robustness")):
            parse_measurements(source)
        tasks = [(args.family, args.d, eta, columns, source, args.tol) for eta in grid(args.start, args.stop, args.step)]
    rows = sweep_rows(args.family, tasks, args.jobs)
    buf = io.StringIO(newline="")
    writer = csv.DictWriter(buf, fieldnames=_header(args.family, columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(v) for k, v in row.items()})
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _csv_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="steerkit", description="Quantum steering detection, quantification and thresholds.")
    common = _Parser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="recorded in every output (default 0)")
    common.add_argument("--tol", type=float, default=sdp.DEFAULT_TOL, help="decision tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    def source(p):
        p.add_argument("--assemblage", help="assemblage JSON file")
        p.add_argument("--state", help="state JSON file")
        p.add_argument("--measurements", help="measurement shorthand or JSON file")

    p = sub.add_parser("detect", parents=[common], help="LHS feasibility with dual certificate")
    source(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("quantify", parents=[common], help="steering weight or robustness")
    source(p)
    p.add_argument("--measure", choices=("weight", "robustness"), default="weight")
    p.set_defaults(func=cmd_quantify)

    p = sub.add_parser("inequality", parents=[common], help="optimal steering inequality")
    source(p)
    p.set_defaults(func=cmd_inequality)

    p = sub.add_parser("jm", parents=[common], help="joint measurability")
    p.add_argument("--measurements", help="measurement shorthand or JSON file")
    p.add_argument("--assemblage", help="normalize this assemblage into POVMs first")
    p.add_argument("--robustness", action="store_true", help="also report robustness and white-noise threshold")
    p.set_defaults(func=cmd_jm)

    p = sub.add_parser("radius", parents=[common], help="critical radius bracket for a two-qubit state")
    p.add_argument("--state", required=True)
    p.add_argument("--dirs", default="icosa6", help="icosa6, dodeca-icosa15, fib:N, xz, xyz")
    p.add_argument("--quad-points", type=int, default=radius.DEFAULT_QUAD_POINTS)
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("criteria", parents=[common], help="closed-form steering criteria")
    p.add_argument("--state")
    p.add_argument("--covariance")
    p.set_defaults(func=cmd_criteria)

    p = sub.add_parser("make", parents=[common], help="write a state, assemblage, measurement or covariance document")
    p.add_argument("what", choices=("werner", "isotropic", "one-way", "assemblage", "measurements", "tmsv", "vacuum"))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--theta-deg", type=float, default=45.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--state")
    p.add_argument("--measurements")
    p.set_defaults(func=cmd_make)

    p = sub.add_parser("thresholds", parents=[common], help="closed-form unsteerability thresholds")
    p.add_argument("--family", choices=states.FAMILIES, required=True)
    p.add_argument("--class", dest="measurement_class", choices=states.MEASUREMENT_CLASSES, required=True)
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("sweep", parents=[common], help="CSV parameter sweep")
    p.add_argument("family", choices=("werner", "isotropic", "one-way"))
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.05)
    p.add_argument("--columns", default="three-pauli,sdp,ccnr")
    p.add_argument("--alpha", type=float, nargs=3, metavar=("START", "STOP", "STEP"), default=(0.0, 1.0, 0.1))
    p.add_argument("--theta-deg", type=float, nargs=3, metavar=("START", "STOP", "STEP"), default=(5.0, 45.0, 5.0))
    p.add_argument("--measurements")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    try:
        args.func(args)
    except UsageError as exc:
        print(f"steerkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ValueError) as exc:
        print(f"steerkit: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"steerkit: solver failure ({exc.status}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
