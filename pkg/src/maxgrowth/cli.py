"""Command-line interface.

Subcommands: ``growth``, ``henrici``, ``spectrum``, ``bench`` and ``fixture``.
Exit codes are 0 on success, 2 for usage errors, 3 for numerical failures
and 4 for I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .bench import run_bench
from .diagnostics import henrici, spectrum
from .errors import DenseGuardError, MaxGrowthError, ParseError
from .growth import SvdIterConfig, max_growth
from .io import read_manifest, read_matrix_market, write_dae_bundle, write_growth_csv, write_result_json
from .linalg import DENSE_GUARD, SparseMatrix
from .models import FixtureId, energy_norm_weight, fixture, speed_weight
from .operators import DaeBlocks, PropagatorConfig, WeightSpec, dense_system

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class Model:
    """A loaded model source with whatever metadata it carries."""

    system: object
    n: int
    labels: list | None = None
    network: object = None
    speed_indices: list | None = None
    inertias: list | None = None
    source: str = ""


def load_model(args):
    given = [s for s in (args.model, args.bundle) if s]
    if len(given) != 1:
        raise UsageError("give exactly one model source: --model fixture:ID|path.mtx or --bundle manifest.json")
    if args.bundle:
        man = read_manifest(args.bundle)
        blocks = man.load_blocks()
        return Model(blocks, blocks.n, list(man.state_labels) if man.state_labels else None,
                     speed_indices=list(man.speed_indices) if man.speed_indices else None,
                     inertias=list(man.inertias) if man.inertias else None, source=str(args.bundle))
    src = args.model
    if src.startswith("fixture:"):
        fid = src.split(":", 1)[1]
        try:
            fid = FixtureId(fid)
        except ValueError:
            raise UsageError(f"unknown fixture {fid!r}; known: {', '.join(f.value for f in FixtureId)}") from None
        fx = fixture(fid)
        md = fx.metadata
        return Model(fx.A, fx.A.shape[0], md.get("labels"), md.get("network"), md.get("speed_indices"),
                     md.get("inertias"), source=src)
    A = read_matrix_market(src)
    if A.nrows != A.ncols:
        raise UsageError(f"{src}: state matrix must be square, got {A.nrows}x{A.ncols}")
    return Model(A, A.nrows, source=src)


def _weights_doc(text):
    p = Path(text)
    if text.lstrip().startswith("{"):
        return json.loads(text)
    if p.exists():
        try:
            return json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", p, exc.lineno) from None
    raise UsageError(f"--weights {text!r} is neither 'speeds', inline JSON nor an existing file")


def build_weights(args, model):
    norm = args.norm
    if norm == "euclidean":
        if args.weights:
            raise UsageError("--weights is not used with --norm euclidean")
        return WeightSpec()
    if norm == "energy":
        if model.network is None:
            raise UsageError("--norm energy needs a classical-network model (stiffness and inertia); "
                             "use fixture:oscillator_2bus, fixture:classical_custom or fixture:two_machine_lossy")
        return energy_norm_weight(model.network)
    if not args.weights:
        raise UsageError(f"--norm {norm} needs --weights")
    if norm == "weighted" and args.weights == "speeds":
        if model.speed_indices is None or model.inertias is None:
            raise UsageError("--weights speeds needs a model that declares speed_indices and inertias")
        return speed_weight(model.inertias, model.speed_indices, model.n)
    doc = _weights_doc(args.weights)
    if not isinstance(doc, dict):
        raise UsageError("weights JSON must be an object")
    try:
        if norm == "weighted":
            if "indices" in doc:
                return WeightSpec("norm_pair", indices=doc["indices"], weights=doc.get("weights"))
            return WeightSpec("norm_pair", C=doc.get("C"), B=doc.get("B"))
        return WeightSpec("io_map", C=doc.get("C"), B=doc.get("B"))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad weights: {exc}") from None


def _grid(args):
    if not args.tmax > 0:
        raise UsageError("--tmax must be positive")
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    return args.tmax / args.steps, args.steps


def growth_config(args):
    """Everything that determines the result, recorded in the JSON output."""
    return {
        "model": args.model or args.bundle,
        "tmax": args.tmax,
        "steps": args.steps,
        "backend": args.backend,
        "norm": args.norm,
        "weights": args.weights,
        "step": args.step,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "seed": args.seed,
    }


def run_growth(args, model, W):
    """The library call behind ``growth``; also used to check CLI/library equivalence."""
    dT, n = _grid(args)
    svd_cfg = SvdIterConfig(tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    prop_cfg = None
    if args.backend == "matfree" and args.step is not None:
        prop_cfg = PropagatorConfig.for_system(model.system, dT * n, step=args.step)
    return max_growth(model.system, W, dT=dT, n=n, backend=args.backend, prop_cfg=prop_cfg,
                      svd_cfg=svd_cfg, override_guard=args.override_dense_guard)


def _top_components(vec, labels, k=5):
    order = np.argsort(-np.abs(vec), kind="stable")[:k]
    names = labels if labels is not None and len(labels) == vec.size else [f"x[{i}]" for i in range(vec.size)]
    return [(names[i], float(vec[i])) for i in order]


def cmd_growth(args, out):
    model = load_model(args)
    W = build_weights(args, model)
    res = run_growth(args, model, W)
    print(f"model      {model.source} (n = {model.n}, weights: {W.describe()}, backend {args.backend})", file=out)
    print(f"s_max      {res.s_max:.10g}", file=out)
    print(f"peak G     {res.peak_growth:.10g}", file=out)
    print(f"t_star     {res.t_star:.6g} s", file=out)
    vec, labels = (res.x_max, model.labels) if res.x_max is not None else (res.v_max, None)
    print("top components of the optimal perturbation:", file=out)
    for name, val in _top_components(vec, labels):
        print(f"  {name:<12}{val: .6f}", file=out)
    if args.out:
        prefix = Path(args.out)
        if prefix.parent != Path(""):
            prefix.parent.mkdir(parents=True, exist_ok=True)
        write_growth_csv(res.curve, f"{prefix}.csv")
        write_result_json(res, f"{prefix}.json", growth_config(args))
        print(f"wrote {prefix}.csv and {prefix}.json", file=out)
    return EXIT_OK


def cmd_henrici(args, out):
    model = load_model(args)
    if model.n > DENSE_GUARD and not args.override_dense_guard:
        print(f"nu         unavailable above the dense guard (n = {model.n} > {DENSE_GUARD})", file=out)
        return EXIT_OK
    A = dense_system(model.system, args.override_dense_guard)
    rep = henrici(A)
    print(f"||A||_F^2        {rep.frobenius_sq:.10g}", file=out)
    print(f"sum |lambda|^2   {rep.eig_sq_sum:.10g}", file=out)
    print(f"nu               {rep.nu:.10g}", file=out)
    return EXIT_OK


def cmd_spectrum(args, out):
    model = load_model(args)
    A = dense_system(model.system, args.override_dense_guard)
    if args.k is not None and not 0 <= args.k <= model.n:
        raise UsageError(f"--k must lie in [0, {model.n}]")
    rep = spectrum(A, args.k)
    print(f"abscissa   {rep.abscissa:.10g}", file=out)
    kv = "unavailable (numerically defective)" if rep.kappa_V is None else f"{rep.kappa_V:.10g}"
    print(f"kappa(V)   {kv}", file=out)
    print("eigenvalues (slowest first):", file=out)
    for lam in rep.eigenvalues:
        print(f"  {lam.real: .6f} {'+' if lam.imag >= 0 else '-'} {abs(lam.imag):.6f}j", file=out)
    return EXIT_OK


def cmd_bench(args, out):
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError("--sizes must be a comma-separated list of integers") from None
    backends = [b.strip() for b in args.backends.split(",") if b.strip()]
    bad = [b for b in backends if b not in ("dense", "matfree")]
    if bad or not sizes or any(n < 1 for n in sizes):
        raise UsageError("--sizes must be positive integers and --backends a subset of dense,matfree")
    svd_cfg = SvdIterConfig(tol=args.tol, max_iter=args.max_iter, seed=args.seed)
    rep = run_bench(sizes, backends, seed=args.seed, svd_cfg=svd_cfg, override_guard=args.override_dense_guard)
    print(rep.to_text(), file=out)
    if args.out:
        path = Path(f"{args.out}.json")
        path.write_text(json.dumps(rep.to_dicts(), indent=2) + "\n")
        print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_fixture(args, out):
    if args.action == "list":
        for fid in FixtureId:
            print(f"{fid.value:<20}{fixture(fid).metadata['description']}", file=out)
        return EXIT_OK
    if not args.id:
        raise UsageError("fixture emit needs an id")
    try:
        fid = FixtureId(args.id)
    except ValueError:
        raise UsageError(f"unknown fixture {args.id!r}") from None
    fx = fixture(fid)
    md = fx.metadata
    n = fx.A.shape[0]
    # an explicit system as a DAE with one decoupled algebraic variable
    blocks = DaeBlocks(
        f_x=SparseMatrix.from_dense(fx.A),
        f_y=SparseMatrix.zeros(n, 1),
        g_x=SparseMatrix.zeros(1, n),
        g_y=SparseMatrix.identity(1),
    )
    path = write_dae_bundle(blocks, args.dir, name=fid.value, state_labels=md.get("labels"),
                            speed_indices=md.get("speed_indices"), inertias=md.get("inertias"))
    print(f"wrote {path}", file=out)
    return EXIT_OK


def _add_model(p):
    p.add_argument("--model", help="fixture:ID or a Matrix Market file holding the state matrix")
    p.add_argument("--bundle", help="DAE bundle manifest (JSON)")
    p.add_argument("--override-dense-guard", action="store_true",
                   help=f"allow dense matrices above n = {DENSE_GUARD}")


def _add_iter(p):
    p.add_argument("--tol", type=float, default=1e-8, help="singular value iteration tolerance")
    p.add_argument("--max-iter", type=int, default=300, help="bidiagonalization step budget")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = argparse.ArgumentParser(prog="maxgrowth", description="Maximum transient growth of linearized dynamics.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("growth", help="growth curve, its peak and the optimal perturbation")
    _add_model(g)
    g.add_argument("--tmax", type=float, default=2.0, help="time horizon [s]")
    g.add_argument("--steps", type=int, default=200, help="number of grid intervals")
    g.add_argument("--backend", choices=("dense", "matfree"), default="dense")
    g.add_argument("--norm", choices=("euclidean", "energy", "weighted", "io"), default="euclidean")
    g.add_argument("--weights", help="'speeds', a JSON file, or inline JSON")
    g.add_argument("--step", type=float, help="RK4 step override for the matrix-free backend")
    _add_iter(g)
    g.add_argument("--out", help="output prefix for .csv and .json")
    g.set_defaults(func=cmd_growth)

    h = sub.add_parser("henrici", help="departure from normality")
    _add_model(h)
    h.set_defaults(func=cmd_henrici)

    s = sub.add_parser("spectrum", help="slowest eigenvalues, abscissa and eigenbasis conditioning")
    _add_model(s)
    s.add_argument("--k", type=int, help="number of slowest modes to print")
    s.set_defaults(func=cmd_spectrum)

    b = sub.add_parser("bench", help="scalability benchmark on synthetic DAEs")
    b.add_argument("--sizes", default="50,200")
    b.add_argument("--backends", default="dense,matfree")
    b.add_argument("--override-dense-guard", action="store_true")
    _add_iter(b)
    b.add_argument("--out", help="output prefix for the JSON report")
    b.set_defaults(func=cmd_bench)

    f = sub.add_parser("fixture", help="list built-in fixtures or emit one as a bundle")
    f.add_argument("action", choices=("list", "emit"))
    f.add_argument("id", nargs="?")
    f.add_argument("--dir", default=".", help="target directory for emit")
    f.set_defaults(func=cmd_fixture)
    return ap


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"maxgrowth: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"maxgrowth: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DenseGuardError as exc:
        print(f"maxgrowth: {exc} (pass --override-dense-guard or use --backend matfree)", file=sys.stderr)
        return EXIT_NUMERIC
    except (MaxGrowthError, ArithmeticError) as exc:
        print(f"maxgrowth: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"maxgrowth: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
