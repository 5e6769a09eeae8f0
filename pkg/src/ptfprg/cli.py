"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 malformed or
invalid input, 4 enumeration cap exceeded, 5 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import jsonschema
import numpy as np

from . import generators as gens
from . import plotting, report, robp, stats
from .sample_spaces import Seed
from .threshold import (CapExceeded, Halfspace, PTF, loads_halfspace, loads_polynomial)

EXIT_RUNTIME, EXIT_USAGE, EXIT_INVALID, EXIT_CAP, EXIT_IO = 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _unit_interval(s: str) -> float:
    v = float(s)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {s}")
    return v


def _emit(text: str, out: str | None) -> None:
    if out:
        report.atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _load_function(path: str):
    text = _read(path)
    body = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if body and "|" in body[0]:
        return loads_halfspace(text)
    theta = 0
    for ln in text.splitlines():
        if ln.startswith("#") and "theta=" in ln:
            theta = float(ln.split("theta=")[1].split()[0])
    return PTF(loads_polynomial(text), theta)


def _spec_from_args(args, n: int):
    if getattr(args, "spec", None):
        d = json.loads(_read(args.spec))
        if d.get("type") == "derandomized-generator":
            raise UsageError("derandomized descriptors are produced with --derand, not loaded")
        return gens.GeneratorSpec.from_dict(d)
    if getattr(args, "derand", False):
        return gens.derand_params(n, args.eps, block_bits=args.block_bits)
    if args.mode is None:
        raise UsageError("give --mode, --spec or --derand")
    return gens.profile_params(args.mode, n, args.d, args.eps, c=args.c, t=args.t)


# ---------------------------------------------------------------- commands
def cmd_params(args) -> int:
    if not args.derand and args.mode is None:
        raise UsageError("give --mode or --derand")
    spec = (gens.derand_params(args.n, args.eps, block_bits=args.block_bits) if args.derand
            else gens.profile_params(args.mode, args.n, args.d, args.eps, c=args.c, t=args.t))
    base = spec.base if args.derand else spec
    text = f"t = {base.t}\nseed_length = {spec.seed_length}\n" + report.dumps(spec.to_dict())
    _emit(text, args.out)
    return 0


def cmd_gen(args) -> int:
    spec = _spec_from_args(args, args.n)
    rng = np.random.default_rng(args.seed)
    X = spec.sample(rng, args.count)
    _emit("".join(" ".join(str(int(v)) for v in row) + "\n" for row in X), args.out)
    return 0


def cmd_sphere(args) -> int:
    spec = gens.sphere_params(args.n, args.eps)
    rng = np.random.default_rng(args.seed)
    V = spec.sample(rng, args.count)
    _emit("".join(" ".join(format(float(v), ".17g") for v in row) + "\n" for row in V), args.out)
    return 0


def cmd_fool(args) -> int:
    f = _load_function(args.function)
    n = f.n
    spec = _spec_from_args(args, n)
    method = "exact" if args.exact else "monte-carlo"
    rep = stats.fooling_error(f, spec, method=method, budget=args.budget, seed=args.seed,
                              input_cap=args.input_cap, seed_cap=args.seed_cap,
                              threads=args.threads, function_id=os.path.basename(args.function),
                              generator_id=getattr(spec, "mode", "derandomized"),
                              eps_target=args.eps)
    doc = report.make_report("fooling", [rep], _config(args))
    report.validate(doc)
    _emit(report.render(doc, args.format), args.out)
    return 0


def cmd_verify(args) -> int:
    checks = stats.lemma_checks(args.suite)
    doc = report.make_report("lemmas", checks, _config(args))
    report.validate(doc)
    _emit(report.render(doc, args.format), args.out)
    return 0 if all(c.passed for c in checks) else EXIT_RUNTIME


def cmd_report(args) -> int:
    os.makedirs(args.outdir, exist_ok=True)
    written = []
    for path in args.inputs:
        doc = report.load(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        csv_path = os.path.join(args.outdir, stem + ".csv")
        report.atomic_write(csv_path, report.to_csv(doc))
        written += [csv_path, plotting.report_figure(doc, os.path.join(args.outdir, stem + ".png"))]
    if args.mode:
        spec = gens.profile_params(args.mode, args.n, args.d, args.eps, c=args.c, t=args.t)
        w = np.full(args.n, 1 / np.sqrt(args.n))
        vals = stats.projection_samples(spec, w, args.budget, seed=args.seed, threads=args.threads)
        cdf = stats.EmpiricalCDF.from_samples(vals)
        ks = stats.ks_distance(cdf, stats.normal_cdf)
        xs = np.linspace(-4, 4, 161)
        lines = ["x,generator_cdf,normal_cdf"]
        lines += [f"{x:.17g},{g:.17g},{p:.17g}" for x, g, p in zip(xs, cdf.cdf(xs), stats.normal_cdf(xs))]
        base = os.path.join(args.outdir, f"cdf-{args.mode}")
        report.atomic_write(base + ".csv", "\n".join(lines) + "\n")
        summary = {"mode": args.mode, "n": args.n, "eps": args.eps, "samples": args.budget,
                   "harness_seed": args.seed, "ks_distance": ks,
                   "dkw_term": stats.dkw_term(args.budget), "spec": spec.to_dict()}
        report.atomic_write(base + ".json", report.dumps(summary))
        written += [base + ".csv", base + ".json",
                    plotting.cdf_figure(cdf, base + ".png", f"{args.mode}, n={args.n}, KS={ks:.4f}")]
    if not written:
        raise UsageError("nothing to do: give report files or --mode")
    sys.stdout.write("".join(p + "\n" for p in written))
    return 0


def cmd_robp(args) -> int:
    if args.robp_cmd == "build":
        if args.halfspace:
            h = loads_halfspace(_read(args.halfspace))
        elif args.weights is None:
            raise UsageError("give --weights or --halfspace")
        else:
            h = Halfspace(tuple(int(x) for x in args.weights.split()), args.theta)
        M, _ = robp.halfspace_to_robp(h.w, h.theta)
        _emit(robp.dumps(M), args.out)
    elif args.robp_cmd == "evaluate":
        M = robp.loads(_read(args.program))
        _emit(f"{robp.evaluate(M, [int(z) for z in args.words.split()])}\n", None)
    elif args.robp_cmd == "check":
        M = robp.loads(_read(args.program))
        res = robp.is_monotone(M)
        if res:
            doc = {"monotone": True, "order": [list(layer) for layer in res.layers]}
        else:
            doc = {"monotone": False, "layer": res.layer, "pair": list(res.pair)}
        doc["acceptance_probability"] = robp.acceptance_prob(M)
        _emit(report.dumps(doc), args.out)
    elif args.robp_cmd == "sandwich":
        M = robp.loads(_read(args.program))
        order = robp.is_monotone(M)
        if not order:
            raise ValueError(f"program is not monotone (layer {order.layer}, states {order.pair})")
        down, up = robp.sandwich(M, order, args.eps)
        report.atomic_write(args.down, robp.dumps(down))
        report.atomic_write(args.up, robp.dumps(up))
        doc = {"eps": args.eps, "p": robp.acceptance_prob(M), "p_down": robp.acceptance_prob(down),
               "p_up": robp.acceptance_prob(up), "widths_down": down.widths, "widths_up": up.widths}
        _emit(report.dumps(doc), None)
    elif args.robp_cmd == "prg":
        prg = robp.robp_prg(args.S, args.D, args.T, delta=args.delta, block_bits=args.block_bits)
        text = report.dumps(prg.to_dict())
        if args.seed_bits is not None:
            text += " ".join(str(z) for z in prg.generate(Seed.from_string(args.seed_bits))) + "\n"
        _emit(text, args.out)
    return 0


def _config(args) -> dict:
    # output location and thread count do not affect results, so reports leave them out
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "threads")}


# ------------------------------------------------------------------ parser
def _add_mode(p, required: bool = False):
    p.add_argument("--mode", choices=gens.MODES, required=required, help="generator profile")
    p.add_argument("--d", type=_positive_int, default=1, help="polynomial degree (ptf modes)")
    p.add_argument("--eps", type=_unit_interval, default=0.125, help="target error in (0, 1)")
    p.add_argument("--c", type=float, default=1.0, help="bucket-count constant of the ptf profile")
    p.add_argument("--t", type=_positive_int, default=None, help="bucket count override (power of two)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptfprg", description=(
        "Generators for threshold functions, branching programs and spherical caps, "
        "with exact and Monte-Carlo fooling measurements."))
    parser.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads for measurements (results do not depend on it)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="instantiate a generator profile and print its descriptor")
    _add_mode(p, required=False)
    p.add_argument("--n", type=_positive_int, required=True, help="input dimension")
    p.add_argument("--derand", action="store_true", help="derandomised halfspace generator")
    p.add_argument("--block-bits", type=_positive_int, default=None,
                   help="block width of the branching-program generator (with --derand)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("gen", help="emit generator samples as rows of +1/-1")
    _add_mode(p)
    p.add_argument("--n", type=_positive_int, required=True, help="input dimension")
    p.add_argument("--spec", help="generator descriptor JSON instead of --mode")
    p.add_argument("--derand", action="store_true", help="use the derandomised halfspace generator")
    p.add_argument("--block-bits", type=_positive_int, default=None,
                   help="block width of the branching-program generator (with --derand)")
    p.add_argument("--count", type=_positive_int, default=10, help="number of samples")
    p.add_argument("--seed", type=int, default=0, help="harness PRNG seed choosing generator seeds")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sphere", help="emit unit vectors from the spherical-cap generator")
    p.add_argument("--n", type=_positive_int, required=True, help="dimension (power of two)")
    p.add_argument("--eps", type=_unit_interval, default=0.125, help="inner generator error")
    p.add_argument("--count", type=_positive_int, default=10, help="number of vectors")
    p.add_argument("--seed", type=int, default=0, help="harness PRNG seed")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_sphere)

    p = sub.add_parser("fool", help="measure the fooling error of a generator on a threshold function")
    p.add_argument("--function", required=True,
                   help="polynomial ('coeff i j ...' lines) or halfspace ('w ... | theta') file")
    _add_mode(p)
    p.add_argument("--spec", help="generator descriptor JSON instead of --mode")
    p.add_argument("--derand", action="store_true", help="use the derandomised halfspace generator")
    p.add_argument("--block-bits", type=_positive_int, default=None,
                   help="block width of the branching-program generator (with --derand)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="enumerate inputs and seeds")
    g.add_argument("--monte-carlo", action="store_true", help="sample (default)")
    p.add_argument("--budget", type=_positive_int, default=100000, help="Monte-Carlo draws per side")
    p.add_argument("--seed", type=int, default=0, help="harness PRNG seed")
    p.add_argument("--input-cap", type=int, default=None,
                   help="max input bits for exact mode (env PTFPRG_INPUT_CAP, default 24)")
    p.add_argument("--seed-cap", type=int, default=None,
                   help="max seed bits for exact mode (env PTFPRG_SEED_CAP, default 24)")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_fool)

    p = sub.add_parser("verify", help="run the lemma-level checks")
    p.add_argument("--suite", choices=sorted(stats.SUITES), default="lemmas", help="which checks")
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="render CSV tables and figures from reports or a fresh CDF study")
    p.add_argument("inputs", nargs="*", help="JSON reports written by fool or verify")
    p.add_argument("--outdir", required=True, help="directory for CSV and PNG files")
    _add_mode(p)
    p.add_argument("--n", type=_positive_int, default=1024, help="dimension of the CDF study")
    p.add_argument("--budget", type=_positive_int, default=100000, help="samples in the CDF study")
    p.add_argument("--seed", type=int, default=0, help="harness PRNG seed")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("robp", help="read-once branching program tools")
    rsub = p.add_subparsers(dest="robp_cmd", required=True)
    q = rsub.add_parser("build", help="partial-sum program of an integer halfspace")
    q.add_argument("--weights", help="integer weights, space separated")
    q.add_argument("--theta", type=int, default=0, help="integer threshold")
    q.add_argument("--halfspace", help="halfspace file instead of --weights/--theta")
    q.add_argument("--out", help="output file (default stdout)")
    q = rsub.add_parser("evaluate", help="run a program on a word sequence")
    q.add_argument("program", help="program file")
    q.add_argument("--words", required=True, help="T space-separated words")
    q = rsub.add_parser("check", help="decide monotonicity and print the order or a witness")
    q.add_argument("program", help="program file")
    q.add_argument("--out", help="output file (default stdout)")
    q = rsub.add_parser("sandwich", help="write the narrow lower and upper programs")
    q.add_argument("program", help="monotone program file")
    q.add_argument("--eps", type=_unit_interval, required=True, help="sandwich gap in (0, 1)")
    q.add_argument("--down", required=True, help="output file for the lower program")
    q.add_argument("--up", required=True, help="output file for the upper program")
    q = rsub.add_parser("prg", help="describe the branching-program generator")
    q.add_argument("--S", type=int, required=True, help="width exponent")
    q.add_argument("--D", type=int, required=True, help="bits per word")
    q.add_argument("--T", type=_positive_int, required=True, help="number of words")
    q.add_argument("--delta", type=_unit_interval, default=None, help="target error")
    q.add_argument("--block-bits", type=_positive_int, default=None, help="block width override")
    q.add_argument("--seed-bits", default=None, help="expand this 0/1 seed string")
    q.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_robp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ptfprg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"ptfprg: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except jsonschema.ValidationError as exc:
        print(f"ptfprg: invalid report: {exc.message}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, TypeError, KeyError, IndexError, OverflowError) as exc:
        print(f"ptfprg: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"ptfprg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001
        print(f"ptfprg: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
