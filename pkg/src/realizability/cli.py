"""Command-line interface.

Exit codes: 0 when every check passes, 2 when a well-posed realizability
check answers no, 1 on usage or computation errors.  Machine-readable output
goes to ``--out`` (or stdout); the human summary goes to stderr.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .alpha import (
    alpha_spec,
    bernoulli_deletion_sample,
    bounds_csv,
    bounds_table,
    grid,
    r_b,
    r_s,
    superposition_sample,
)
from .bounds import (
    as_radius,
    leeyang_b,
    leeyang_xi_all,
    leeyang_z_bound,
    stability_constants,
    triplet_radius,
)
from .conditions import check_all, pairing_value, verify_certificate
from .core import DomainError, subset_pair_products, subset_products
from .exact import (
    ConvergenceError,
    PairAnsatzOracle,
    TripletAnsatzOracle,
    inclusion_exclusion_measure,
    lp_feasible,
    maxent_gibbs,
)
from .montecarlo import compare, estimate_correlations, masks_to_array, sample_measure
from .serialization import (
    certificate_from_dict,
    certificate_to_dict,
    dump_json,
    load_json,
    load_spec,
    measure_from_dict,
    measure_to_dict,
    potentials_to_dict,
    samples_from_text,
    samples_to_text,
)

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def _grid_arg(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected A:B:STEP")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("expected numeric A:B:STEP") from None
    return a, b, step


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


# --------------------------------------------------------------------------- #
# I/O helpers
# --------------------------------------------------------------------------- #

def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _say(msg):
    print(msg, file=sys.stderr)


def _validate_paths(args):
    for name in ("spec", "measure", "samples", "certificate"):
        path = getattr(args, name, None)
        if path is not None and not os.path.isfile(path):
            raise UsageError(f"--{name}: no such file {path!r}")
    for name in ("out", "potentials"):
        path = getattr(args, name, None)
        if path is not None:
            parent = os.path.dirname(os.path.abspath(path))
            if not os.path.isdir(parent):
                raise UsageError(f"--{name}: directory {parent!r} does not exist")


def _spec(args, need=True):
    """Spec from ``--spec`` or from ``--alpha/--rho/--ring``."""
    if getattr(args, "spec", None) is not None:
        spec = load_spec(args.spec)
        if getattr(args, "rho", None) is not None:
            spec = spec.with_rho(args.rho)
        return spec
    if getattr(args, "alpha", None) is not None and getattr(args, "rho", None) is not None:
        return alpha_spec(args.alpha, args.rho, args.ring)
    if need:
        raise UsageError("give --spec PATH, or --alpha with --rho (and --ring)")
    return None


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #

def cmd_check(args):
    spec = _spec(args)
    rows = [(r.condition, r.detail, r.value, r.bound, r.passed)
            for r in check_all(spec, max_window=args.max_window)]
    if args.exact:
        out = lp_feasible(spec, tol=args.tol)
        value = 0.0 if out.feasible else pairing_value(out.certificate, spec)
        rows.append(("lp_feasible", "exact linear feasibility", value, 0.0, out.feasible))
    _emit(_csv(("condition", "detail", "value", "bound", "pass"), rows), args.out)
    failed = [r[0] for r in rows if not r[4]]
    _say(f"check: {len(rows) - len(failed)}/{len(rows)} conditions pass"
         + (f"; failing: {', '.join(dict.fromkeys(failed))}" if failed else ""))
    return EXIT_FAIL if failed else EXIT_OK


def _write_certificate(cert, spec, path):
    text = dump_json(certificate_to_dict(cert))
    _emit(text, path)
    _say(f"not realizable: certificate pairs to {pairing_value(cert, spec):.6g} < 0")


def cmd_build_exact(args):
    spec = _spec(args)
    if args.method == "lp":
        out = lp_feasible(spec, tol=args.tol)
        if not out.feasible:
            _write_certificate(out.certificate, spec, args.out)
            return EXIT_FAIL
        measure = out.measure
        _say(f"build-exact: feasible, constraint residual {out.residual:.3g}")
    else:
        oracle = TripletAnsatzOracle(spec) if spec.triplet is not None else PairAnsatzOracle(spec)
        measure = inclusion_exclusion_measure(oracle, spec.domain)
        if measure.signed:
            _say("build-exact: the product ansatz gives a signed measure (not realizable this way)")
            return EXIT_FAIL
        _say("build-exact: product ansatz measure is nonnegative")
    _emit(dump_json(measure_to_dict(measure)), args.out)
    return EXIT_OK


def cmd_maxent(args):
    spec = _spec(args)
    out = lp_feasible(spec, tol=args.tol)
    if not out.feasible:
        _say("maxent: spec is not realizable")
        if args.certificate_out:
            dump_json(certificate_to_dict(out.certificate), args.certificate_out)
        return EXIT_FAIL
    measure, pot = maxent_gibbs(spec, tol=args.tol)
    if args.out is not None:
        dump_json(measure_to_dict(measure), args.out)
    text = dump_json(potentials_to_dict(pot))
    if args.potentials is not None:
        _emit(text, args.potentials)
    elif args.out is None:
        _emit(text, None)
    _say(f"maxent: logZ = {pot.logZ:.17g}")
    return EXIT_OK


def cmd_radius(args):
    if args.spec is not None:
        spec = load_spec(args.spec)
        g, g3 = spec.pair, spec.triplet
        inputs = os.path.basename(args.spec)
    elif args.alpha is not None:
        spec = None
        g, g3 = alpha_spec(args.alpha, 0.0, 3).pair, None
        inputs = f"alpha={_fmt(args.alpha)}"
    else:
        raise UsageError("radius needs --spec or --alpha")
    if not g.translation_invariant_kind:
        raise DomainError("radius needs a translation-invariant g")
    k = stability_constants(g, g3)
    rows = [("C", k.C, inputs), ("b", k.b, inputs), ("D", k.D, inputs),
            ("rho_AS", as_radius(g, k.b), inputs)]
    if g3 is not None:
        rows += [("C3", k.C3, inputs), ("b3", k.b3, inputs), ("D3", k.D3, inputs),
                 ("rho_3", triplet_radius(k), inputs)]
    _emit(_csv(("quantity", "value", "inputs"), rows), args.out)
    _say("radius: " + ", ".join(f"{q}={v:.6g}" for q, v, _ in rows))
    return EXIT_OK


def cmd_leeyang(args):
    spec = _spec(args)
    G = spec.G2()
    b = leeyang_b(G)
    xi = leeyang_xi_all(spec)
    prefactor = subset_products(spec.rho1) * subset_pair_products(G)
    live = prefactor > 0
    xi_min = float(xi[live].min())
    inputs = args.spec and os.path.basename(args.spec) or (
        f"alpha={_fmt(args.alpha)};rho={_fmt(args.rho)};ring={args.ring}")
    rows = [("b", b, inputs), ("threshold", 1 / b, inputs),
            ("z_bound", leeyang_z_bound(spec), inputs), ("min_Xi", xi_min, inputs),
            ("all_positive", xi_min > 0, inputs)]
    _emit(_csv(("quantity", "value", "inputs"), rows), args.out)
    _say(f"leeyang: b = {b:.6g}, min Xi = {xi_min:.6g}")
    return EXIT_OK if xi_min > 0 else EXIT_FAIL


def cmd_bounds_alpha(args):
    a, b, step = args.grid
    rows = bounds_table(grid(a, b, step), max_window=args.max_window)
    _emit(bounds_csv(rows), args.out)
    _say(f"bounds-alpha: {len(rows)} rows")
    return EXIT_OK


def cmd_sample(args):
    if args.measure is not None:
        measure = measure_from_dict(load_json(args.measure))
        masks = sample_measure(measure, args.count, seed=args.seed)
        arr = masks_to_array(masks, measure.domain.size)
        boundary = measure.domain.boundary
    elif args.alpha is not None:
        n = args.sites if args.sites is not None else args.ring
        if args.construction == "superposition":
            arr = superposition_sample(args.alpha, n, args.count, seed=args.seed)
        else:
            arr = bernoulli_deletion_sample(args.alpha, n, args.count, seed=args.seed)
        # windows of a process on Z, not ring configurations
        boundary = "free"
    else:
        raise UsageError("sample needs --measure PATH or --alpha")
    _emit(samples_to_text(arr, boundary), args.out)
    _say(f"sample: {arr.shape[0]} configurations on {arr.shape[1]} sites (seed {args.seed})")
    return EXIT_OK


def _targets(args):
    if args.spec is not None:
        spec = load_spec(args.spec)
        if not spec.translation_invariant:
            raise DomainError("estimate targets need a translation-invariant spec")
        return spec.rho, spec.pair
    if args.alpha is not None:
        if args.rho is not None:
            rho = args.rho
        elif args.construction == "superposition":
            rho = r_s(args.alpha)
        else:
            rho = r_b(args.alpha)
        return rho, alpha_spec(args.alpha, rho, 3).pair
    return None


def cmd_estimate(args):
    with open(args.samples) as fh:
        arr, boundary = samples_from_text(fh.read(), n=args.sites)
    periodic = boundary == "periodic" if args.boundary is None else args.boundary == "periodic"
    report = estimate_correlations(arr, args.max_lag, periodic=periodic, seed=args.seed)
    targets = _targets(args)
    ok = True
    if targets is not None:
        ok = compare(report, *targets, threshold=args.z_max)
    _emit(report.to_csv(), args.out)
    _say(f"estimate: rho = {report.rho:.6g} +- {report.rho_se:.2g} from {report.count} samples"
         + ("" if targets is None else ("; all |z| <= %g" % args.z_max if ok else "; |z| too large")))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_certify(args):
    spec = _spec(args)
    if args.certificate is not None:
        cert = certificate_from_dict(load_json(args.certificate))
        admissible = verify_certificate(cert, spec.domain, tol=args.tol)
        value = pairing_value(cert, spec)
        rows = [("admissible", admissible, ""), ("pairing_value", value, "")]
        _emit(_csv(("quantity", "value", "inputs"), rows), args.out)
        refutes = admissible and value < -args.tol
        _say(f"certify: admissible={admissible}, pairing value {value:.6g}"
             + (" (spec not realizable)" if refutes else ""))
        return EXIT_FAIL if refutes else EXIT_OK
    out = lp_feasible(spec, tol=args.tol)
    if out.feasible:
        _say("certify: spec is realizable; no certificate exists")
        return EXIT_OK
    _write_certificate(out.certificate, spec, args.out)
    return EXIT_FAIL


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #

def build_parser():
    p = _Parser(prog="realizability", description="Realizability of lattice correlation functions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        return sp

    def spec_args(sp, rho=True):
        sp.add_argument("--spec", metavar="PATH", help="spec JSON (or measure JSON)")
        sp.add_argument("--alpha", type=float, help="use g_alpha instead of --spec")
        if rho:
            sp.add_argument("--rho", type=float, help="density (overrides the file's)")
        sp.add_argument("--ring", type=int, default=12, metavar="L", help="ring length (default 12)")

    sp = add("check", cmd_check, "run the necessary conditions on a spec")
    spec_args(sp)
    sp.add_argument("--max-window", type=int, default=64)
    sp.add_argument("--exact", action="store_true", help="also decide exact linear feasibility")
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("build-exact", cmd_build_exact, "construct a realizing measure")
    spec_args(sp)
    sp.add_argument("--method", choices=("lp", "ansatz"), default="lp")
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = add("maxent", cmd_maxent, "maximum-entropy 2-Gibbsian realization")
    spec_args(sp)
    sp.add_argument("--potentials", metavar="PATH", help="potentials JSON output")
    sp.add_argument("--certificate-out", metavar="PATH")
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = add("radius", cmd_radius, "cluster-expansion realizability radii")
    spec_args(sp, rho=False)

    sp = add("leeyang", cmd_leeyang, "Lee-Yang bound and exact Xi positivity")
    spec_args(sp)

    sp = add("bounds-alpha", cmd_bounds_alpha, "bounds table for the g_alpha family")
    sp.add_argument("--grid", type=_grid_arg, default=(0.0, 2.0, 0.01), metavar="A:B:STEP")
    sp.add_argument("--max-window", type=int, default=64)

    sp = add("sample", cmd_sample, "draw configurations")
    sp.add_argument("--measure", metavar="PATH", help="measure JSON to sample from")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--construction", choices=("superposition", "deletion"), default="deletion")
    sp.add_argument("--ring", type=int, default=12, metavar="L")
    sp.add_argument("--sites", type=int, help="configuration length (default: --ring)")
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--seed", type=_u64, default=0)

    sp = add("estimate", cmd_estimate, "estimate rho and g(r) from samples")
    sp.add_argument("--samples", metavar="PATH", required=True)
    sp.add_argument("--max-lag", type=int, default=3)
    sp.add_argument("--sites", type=int, help="site count for header-less sample files")
    sp.add_argument("--boundary", choices=("periodic", "free"))
    sp.add_argument("--spec", metavar="PATH", help="spec JSON giving the targets")
    sp.add_argument("--alpha", type=float, help="g_alpha targets")
    sp.add_argument("--rho", type=float, help="target density for --alpha")
    sp.add_argument("--construction", choices=("superposition", "deletion"), default="deletion")
    sp.add_argument("--seed", type=_u64, help="recorded in the report only")
    sp.add_argument("--z-max", type=float, default=4.0)

    sp = add("certify", cmd_certify, "produce or verify a non-realizability certificate")
    spec_args(sp)
    sp.add_argument("--certificate", metavar="PATH", help="certificate JSON to verify")
    sp.add_argument("--tol", type=float, default=1e-9)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _validate_paths(args)
        return args.func(args)
    except UsageError as exc:
        _say(f"usage error: {exc}")
        return EXIT_ERROR
    except (DomainError, ConvergenceError, OSError, ValueError, json.JSONDecodeError) as exc:
        _say(f"error: {type(exc).__name__}: {exc}")
        return EXIT_ERROR
    except SystemExit as exc:
        # --help / --version
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
