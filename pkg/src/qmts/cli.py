"""Command-line front end.

Every subcommand accepts ``--config FILE`` (plain ``key = value`` lines whose
keys are the long flag names) and ``--out PATH``. Flags given on the command
line override the config file. CSV goes to ``--out`` (written atomically) or
to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import itertools
import json
import math
import operator
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from qmts.classicality import is_jCL, is_jM
from qmts.coherence import cgd_amount_sweep, classify_map, iterate_map_classification
from qmts.dephasing import (
    GaussianMixture,
    Lorentzian,
    cgd_measure_N,
    decoherence_function,
    dilation_for,
    kolmogorov_gap_K,
    load_spectral_grid_csv,
    q2_exact_analytic,
    q2_markov_analytic,
)
from qmts.dynamics import (
    SingularPropagatorError,
    dephasing_propagator_family,
    lindbladian_superoperator,
    pure_dephasing_generator,
    random_lindblad_generator,
    semigroup_family,
    unitary_family,
)
from qmts.leggett_garg import dichotomic_basis, lgti_scan
from qmts.models import (
    GAUSSIAN_MIX_EXAMPLE,
    LORENTZIAN_EXAMPLE,
    dephasing_hierarchies,
    fixture_text,
    initial_state,
    load_config,
    sigma_y_hierarchy,
)
from qmts.multitime import exact_hierarchy, markov_hierarchy
from qmts.operators import (
    NORM_CONVENTIONS,
    SIGMA_Y,
    MeasurementBasis,
    random_basis,
    sigma_x_basis,
    sigma_z_basis,
    superoperator_from_json,
)

PROG = "qmts"


class UsageError(Exception):
    """Bad or missing flags; reported like an argparse error (exit code 2)."""


# -- parsing helpers -----------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_NAMES = {"pi": math.pi, "e": math.e}


def _eval(node: ast.AST) -> float:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    raise ValueError("unsupported expression")


def parse_number(text: str) -> float:
    """A float, or simple arithmetic on numbers and ``pi`` such as ``pi/6``."""
    try:
        value = _eval(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text!r}")
    return value


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop included when hit) or a comma-separated list; empty means no points."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"range grid must be start:stop:step, got {text!r}")
        a, b, h = (parse_number(p) for p in parts)
        if h <= 0:
            raise argparse.ArgumentTypeError("grid step must be positive")
        if b < a:
            return ()
        n = int(math.floor((b - a) / h + 1e-9)) + 1
        return tuple(a + i * h for i in range(n))
    return tuple(parse_number(p) for p in text.split(",") if p.strip())


def _positive(text: str) -> float:
    v = parse_number(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def _label(text: str):
    """Outcome labels: integers when they look like integers, strings otherwise."""
    try:
        return int(text)
    except ValueError:
        return text


def threads() -> int:
    raw = os.environ.get("QMTS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"QMTS_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"QMTS_THREADS must be a positive integer, got {raw!r}")
    return n


def ordered_map(fn: Callable, items: Iterable) -> list:
    """``map`` that keeps input order, threaded when ``QMTS_THREADS > 1``."""
    items = list(items)
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# -- output --------------------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def render_json(data) -> str:
    return json.dumps(_jsonable(data), indent=2) + "\n"


def emit(text: str, out: str | None) -> None:
    """Write to stdout, or atomically replace ``out`` via a temp file in the same directory."""
    if out is None or out == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent if str(target.parent) else ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def warn(msg: str) -> None:
    print(f"{PROG}: warning: {msg}", file=sys.stderr)


# -- model selection -----------------------------------------------------------


def _spectrum(args):
    kind = args.spectrum
    if kind == "lorentzian":
        if args.gamma is None:
            raise UsageError("--gamma is required for the lorentzian spectrum")
        return Lorentzian(args.gamma, args.p0)
    if kind == "gaussian-mix":
        missing = [f"--{n}" for n in ("atheta", "sigma", "p1", "p2") if getattr(args, n) is None]
        if missing:
            raise UsageError(f"{', '.join(missing)} required for the gaussian-mix spectrum")
        return GaussianMixture(args.atheta, args.sigma, args.p1, args.p2)
    if kind == "file":
        if args.spectrum_file is None:
            raise UsageError("--spectrum-file is required for the file spectrum")
        return load_spectral_grid_csv(args.spectrum_file)
    raise UsageError(f"unknown spectrum {kind!r}")


def _basis(name: str) -> MeasurementBasis:
    return {"x": sigma_x_basis(), "z": sigma_z_basis()}[name]


def _hierarchy_pair(args):
    """Exact and regression hierarchies of the selected model."""
    model = args.model
    if model == "sigma-y":
        basis = _basis(args.basis or "z")
        init = _label(args.initial or "-1")
        return sigma_y_hierarchy(init, basis), sigma_y_hierarchy(init, basis, exact=False)
    if model == "dephasing":
        gamma = 1.0 if args.gamma is None else args.gamma
        basis = _basis(args.basis or "x")
        rho0 = initial_state(args.initial or "plus")
        L = lindbladian_superoperator(pure_dephasing_generator(args.p0, gamma))
        h = markov_hierarchy(rho0, L, basis)
        return h, h
    if model in ("lorentzian", "gaussian-mix"):
        args.spectrum = model
        basis = _basis(args.basis or "x")
        rho0 = initial_state(args.initial or "plus")
        return dephasing_hierarchies(_spectrum(args), rho0, basis)
    raise UsageError(f"unknown model {model!r}")


def _add_model_flags(p: argparse.ArgumentParser, models: Sequence[str]) -> None:
    p.add_argument("--model", choices=models, default=None, help=f"model (default {models[0]})")
    p.add_argument("--initial", default=None, help="initial state: a basis label, or plus/minus/mixed/up/down")
    p.add_argument("--basis", choices=("x", "z"), default=None, help="measurement basis (sigma_x or sigma_z eigenbasis)")
    p.add_argument("--gamma", type=_positive, default=None)
    p.add_argument("--p0", type=parse_number, default=0.0)
    p.add_argument("--atheta", type=parse_number, default=None)
    p.add_argument("--sigma", type=_positive, default=None)
    p.add_argument("--p1", type=parse_number, default=None)
    p.add_argument("--p2", type=parse_number, default=None)


# -- commands ------------------------------------------------------------------


def cmd_dephasing(args) -> str:
    spectrum = _spectrum(args)
    k = decoherence_function(spectrum)
    t = args.t
    if t is None:
        raise UsageError("--t is required")
    grid = args.s_grid if args.s_grid is not None else parse_grid(f"0:{t}:{t / 100}")
    bad = [s for s in grid if not 0 <= s <= t]
    if bad:
        raise ValueError(f"s-grid values must lie in [0, t]; first offender {bad[0]}")

    def row(s):
        qe = q2_exact_analytic(k, t, s)
        kp = kolmogorov_gap_K(k, t, s)
        try:
            qm = q2_markov_analytic(k, t, s, args.eps)
            n = cgd_measure_N(k, t, s, args.eps)
        except SingularPropagatorError:
            qm = n = math.nan
        return (s, qe, qm, kp, n)

    rows = ordered_map(row, grid)
    if any(math.isnan(r[2]) for r in rows):
        warn("k(s) vanishes on part of the grid; q2_markov and N reported as nan there")
    return render_csv(("s", "q2_exact", "q2_markov", "K_plus", "N"), rows)


def cmd_classify(args) -> str:
    if args.map is not None and args.fixture is not None:
        raise UsageError("give either --map or --fixture, not both")
    if args.map is not None:
        text = sys.stdin.read() if args.map == "-" else Path(args.map).read_text()
    else:
        text = fixture_text(args.fixture or "rounded_channel.json")
    try:
        lam = superoperator_from_json(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed superoperator JSON: {exc}") from None
    if args.basis_labels is not None:
        basis = MeasurementBasis.computational(lam.dim, [_label(x) for x in args.basis_labels.split(",")])
    else:
        basis = MeasurementBasis.computational(lam.dim)
    if not lam.is_trace_preserving(1e-6):
        warn("map is not trace preserving; classification reported anyway")
    result = classify_map(lam, basis, args.norm, args.tol, tp_tol=None).to_dict()
    out = {"dim": lam.dim, "classification": result}
    if args.iterations:
        seq = iterate_map_classification(lam, basis, args.iterations, args.norm, args.tol, tp_tol=None)
        out["iterations"] = [
            {"n": n, "residual_ncgd": c.residual_ncgd, "residual_mio": c.residual_mio, "residual_cna": c.residual_cna}
            for n, c in enumerate(seq, 1)
        ]
        last = seq[-1]
        out["final"] = dict(last.to_dict(), n=args.iterations)
        peak = max(range(len(seq)), key=lambda i: seq[i].residual_mio)
        out["peak_mio"] = {"n": peak + 1, "residual_mio": seq[peak].residual_mio}
    return render_json(out)


def cmd_lgti(args) -> str:
    model = args.model or "sigma-y"
    args.model = model
    exact, _ = _hierarchy_pair(args)
    # default: X = 1 on the starting state, so <X(0)> = 1
    one = _label(args.one) if args.one is not None else (_label(args.initial or "-1") if model == "sigma-y" else "+")
    h = exact.relabeled(dichotomic_basis(exact.basis, one))
    grid = args.grid if args.grid is not None else parse_grid("0:pi/2:pi/400")
    results = ordered_map(lambda t: lgti_scan(h, [t], args.tol)[0], grid)
    n_bad = sum(r.violated for r in results)
    if n_bad:
        warn(f"{n_bad} of {len(results)} grid points violate the inequality")
    return render_csv(("t", "C(t)", "C(2t)", "x0_mean", "residual", "violated"), (r.row() for r in results))


def cmd_kolmogorov(args) -> str:
    args.model = args.model or "sigma-y"
    exact, regression = _hierarchy_pair(args)
    grid = args.grid if args.grid is not None else ()
    if len(grid) < 1:
        raise UsageError("--grid needs at least one time")
    if args.check == "classicality":
        report = is_jCL(exact, args.level, grid, args.tol, args.violation_tol)
    else:
        report = is_jM(exact, regression, args.level, grid, args.tol, args.violation_tol)
    d = report.to_dict()
    d["model"] = args.model
    print(f"{d['verdict']} max_residual={report.max_residual:.12g}", file=sys.stderr)
    return render_json(d)


def cmd_cgd(args) -> str:
    model = args.model or "dephasing"
    if model == "dephasing":
        gamma = 1.0 if args.gamma is None else args.gamma
        family = semigroup_family(lindbladian_superoperator(pure_dephasing_generator(args.p0, gamma)))
        basis = _basis(args.basis or "x")
    elif model == "sigma-y":
        family = unitary_family(SIGMA_Y)
        basis = _basis(args.basis or "z")
    elif model in ("lorentzian", "gaussian-mix"):
        args.spectrum = model
        family = dephasing_propagator_family(decoherence_function(_spectrum(args)))
        basis = _basis(args.basis or "x")
    elif model == "random":
        rng = np.random.default_rng(args.seed)
        gen = random_lindblad_generator(args.dim, rng)
        basis = random_basis(args.dim, rng)
        family = semigroup_family(lindbladian_superoperator(gen))
    else:
        raise UsageError(f"unknown model {model!r}")
    grid = args.grid if args.grid is not None else (0.0,) + tuple(np.geomspace(1e-2, 10.0, 8))
    pts = sorted(set(grid))
    if any(t < 0 for t in pts):
        raise ValueError("grid times must be non-negative")
    triples = [(t, s, r) for r, s, t in itertools.combinations(pts, 3)]
    rows = ordered_map(lambda trip: cgd_amount_sweep(family, basis, [trip], args.norm)[0], triples)
    if any(r.singular for r in rows):
        warn("singular propagator on part of the grid; witness reported as nan there")
    return render_csv(("t", "s", "r", "witness"), ((r.t, r.s, r.r, r.witness) for r in rows))


def cmd_oracle_check(args) -> str:
    """Closed-form ``Q_2{+, t; +, s}`` against the discretized dilation."""
    basis = sigma_x_basis()
    rho0 = basis.projector("+")
    ts = np.linspace(args.t_max / args.points, args.t_max, args.points)
    report = {"grid_points": args.grid_points, "tol": args.tol, "spectra": {}}
    ok = True
    for name, spectrum in (("lorentzian", LORENTZIAN_EXAMPLE), ("gaussian-mix", GAUSSIAN_MIX_EXAMPLE)):
        k = decoherence_function(spectrum)
        h = exact_hierarchy(dilation_for(spectrum, args.grid_points), rho0, basis)
        pairs = [(t, t * j / args.points) for t in ts for j in range(args.points)]

        def err(pair):
            t, s = pair
            return abs(q2_exact_analytic(k, t, s) - h((s, t), ("+", "+")))

        worst = max(ordered_map(err, pairs))
        report["spectra"][name] = {"max_abs_error": worst, "pass": worst <= args.tol}
        ok &= worst <= args.tol
    report["pass"] = ok
    if not ok:
        raise ValueError("oracle mismatch above tolerance:\n" + render_json(report))
    return render_json(report)


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Multi-time statistics, classicality and coherence tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key = value file; flags override it")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for random-ensemble models")

    p = sub.add_parser("dephasing", parents=[common], help="two-time statistics of a dephasing qubit (CSV)")
    p.add_argument("--spectrum", choices=("lorentzian", "gaussian-mix", "file"), default="lorentzian")
    p.add_argument("--spectrum-file", default=None, help="CSV with columns p, weight")
    p.add_argument("--gamma", type=_positive, default=None)
    p.add_argument("--p0", type=parse_number, default=0.0)
    p.add_argument("--atheta", type=parse_number, default=None)
    p.add_argument("--sigma", type=_positive, default=None)
    p.add_argument("--p1", type=parse_number, default=None)
    p.add_argument("--p2", type=parse_number, default=None)
    p.add_argument("--t", type=parse_number, default=None)
    p.add_argument("--s-grid", type=parse_grid, default=None)
    p.add_argument("--eps", type=_positive, default=1e-12, help="threshold below which k(s) counts as zero")
    p.set_defaults(func=cmd_dephasing)

    p = sub.add_parser("classify", parents=[common], help="coherence classes of a map given as JSON")
    p.add_argument("--map", default=None, help="superoperator JSON file, or - for stdin")
    p.add_argument("--fixture", default=None, help="bundled map (default rounded_channel.json)")
    p.add_argument("--iterations", type=int, default=0, help="also classify the powers 1..N")
    p.add_argument("--norm", choices=NORM_CONVENTIONS, default="column-sum")
    p.add_argument("--tol", type=_positive, default=1e-6)
    p.add_argument("--basis-labels", default=None, help="comma-separated labels of the computational basis")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("lgti", parents=[common], help="Leggett-Garg-type inequality scan (CSV)")
    _add_model_flags(p, ("sigma-y", "dephasing", "lorentzian", "gaussian-mix"))
    p.add_argument("--one", default=None, help="basis label read as X = 1")
    p.add_argument("--grid", type=parse_grid, default=None)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.set_defaults(func=cmd_lgti)

    p = sub.add_parser("kolmogorov", parents=[common], help="j-classicality or j-Markovianity verdict (JSON)")
    _add_model_flags(p, ("sigma-y", "dephasing", "lorentzian", "gaussian-mix"))
    p.add_argument("--check", choices=("classicality", "markovianity"), default="classicality")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--grid", type=parse_grid, default=None)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.add_argument("--violation-tol", type=_positive, default=1e-6)
    p.set_defaults(func=cmd_kolmogorov)

    p = sub.add_parser("cgd", parents=[common], help="CGD witness over (t, s, r) triples (CSV)")
    _add_model_flags(p, ("dephasing", "sigma-y", "lorentzian", "gaussian-mix", "random"))
    p.add_argument("--dim", type=int, default=2, help="dimension of the random model")
    p.add_argument("--grid", type=parse_grid, default=None, help="times; rows for every r < s < t")
    p.add_argument("--norm", choices=NORM_CONVENTIONS, default="column-sum")
    p.set_defaults(func=cmd_cgd)

    p = sub.add_parser("oracle-check", parents=[common], help="closed forms against the dilation oracle (JSON)")
    p.add_argument("--grid-points", type=int, default=2001)
    p.add_argument("--points", type=int, default=20, help="t and s values per axis")
    p.add_argument("--t-max", type=_positive, default=2.0)
    p.add_argument("--tol", type=_positive, default=1e-3)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def _config_argv(path: str) -> list[str]:
    out = []
    for key, value in load_config(path).items():
        if key in ("config", "out"):
            raise UsageError(f"config key {key!r} is only accepted as a flag")
        out += [f"--{key}", value]
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            i = argv.index(args.command)
            args = parser.parse_args(argv[: i + 1] + _config_argv(args.config) + argv[i + 1:])
        text = args.func(args)
        emit(text, args.out)
    except UsageError as exc:
        parser.exit(2, f"{PROG} {args.command}: error: {exc}\n")
    except (ValueError, ArithmeticError, OSError, KeyError) as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
