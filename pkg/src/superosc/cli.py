"""Command-line front end.

    superosc synth   --n 5 --dx 0.1 --pmax pi --alt --out wf.json --csv wf.csv
    superosc maximal --n 8 --dx 0.05 --out max.json
    superosc sweep-dx --n 2 --grid 0.2,0.1,0.05,0.025
    superosc sweep-n --ratio 0.1 --grid 4:16
    superosc slit --from-wavefunction wf.json --window 0,0.45 --csv slit.csv
    superosc verify --n 5 --dx 0.1

Any flag can also come from ``--config FILE.json`` (keys are the flag names
with dashes replaced by underscores, plus an optional ``"command"``); flags
given on the command line win.  The environment variable ``SUPEROSC_BITS``
sets a default working precision in place of the automatic estimate.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import random
import sys

from . import __version__
from .prolate import NodeSpec, alternating
from .scaling import SweepConfig, geometric_grid, sweep_N, sweep_dx
from .slit import SlitWindow, acceleration_summary, report_csv, report_header, truncate_and_transform
from .synth import (
    KernelSum,
    from_json,
    inner_product,
    maximal_superoscillation,
    parseval_norm_sq,
    position_norm_sq,
    synthesize,
    to_json,
)
from .xprec import DEFAULT_GUARD_BITS, PrecisionContext, PrecisionError

log = logging.getLogger("superosc")

COMMANDS = ("synth", "maximal", "sweep-dx", "sweep-n", "slit", "verify")
BITS_ENV = "SUPEROSC_BITS"


class ConfigError(ValueError):
    pass


def _split(text):
    if isinstance(text, (list, tuple)):
        return [str(t) for t in text]
    return [t for t in str(text).split(",") if t.strip()]


def _int_grid(text):
    if isinstance(text, (list, tuple)):
        return [int(t) for t in text]
    if ":" in str(text):
        lo, hi = str(text).split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in _split(text)]


def _add_precision(p):
    p.add_argument("--bits", type=int, help=f"working precision in bits (default: ${BITS_ENV} or estimate + guard)")
    p.add_argument("--guard-bits", type=int, default=DEFAULT_GUARD_BITS)


def _add_geometry(p, amplitudes=True):
    p.add_argument("--n", type=int, help="number of equispaced nodes")
    p.add_argument("--dx", help="node spacing (absolute length, decimal string)")
    p.add_argument("--x0", default="0", help="first node position")
    p.add_argument("--nodes", help="explicit comma-separated node positions (overrides --n/--dx)")
    p.add_argument("--pmax", default="pi", help="momentum cutoff; 'pi' accepted")
    p.add_argument("--hbar", default="1")
    if amplitudes:
        p.add_argument("--amps", help="comma-separated amplitudes (default alternating)")
        p.add_argument("--alt", action="store_true", help="use a_k = (-1)**k (default)")


def build_parser():
    parser = argparse.ArgumentParser(prog="superosc", description="Superoscillating wave function laboratory.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file with default parameter values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="minimum-norm interpolant for prescribed amplitudes")
    _add_geometry(p)
    _add_precision(p)
    p.add_argument("--out", help="wave function JSON (default stdout)")
    p.add_argument("--csv", help="CSV of psi sampled along the nodes")
    p.add_argument("--samples-per-gap", type=int, default=512)
    p.add_argument("--digits", type=int, default=12, help="digits in the auxiliary |psi| column")

    p = sub.add_parser("maximal", help="normalized interpolant along the s_min eigenvector")
    _add_geometry(p, amplitudes=False)
    _add_precision(p)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--samples-per-gap", type=int, default=512)
    p.add_argument("--digits", type=int, default=12)

    for name, help_text in (("sweep-dx", "s_min against spacing at fixed N (geometric grid)"),
                            ("sweep-n", "s_min against N at fixed spacing (arithmetic grid)")):
        p = sub.add_parser(name, help=help_text)
        if name == "sweep-dx":
            p.add_argument("--n", type=int, required=False)
            p.add_argument("--grid", help="spacings as dx/lambda_min (default: 8 points 0.2 .. 0.02)")
        else:
            p.add_argument("--ratio", help="fixed spacing as dx/lambda_min (default 0.1)")
            p.add_argument("--grid", help="N values, comma list or 'lo:hi' (default 4:16)")
        p.add_argument("--pmax", default="pi")
        p.add_argument("--hbar", default="1")
        p.add_argument("--source", default="smin_eigenvector", choices=("smin_eigenvector", "alternating"))
        p.add_argument("--guard-bits", type=int, default=DEFAULT_GUARD_BITS)
        p.add_argument("--max-bits", type=int, default=4096)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", help="report JSON (default stdout)")
        p.add_argument("--csv", help="report CSV")
        p.add_argument("--timing", action="store_true", help="record wall times (outputs no longer reproducible)")

    p = sub.add_parser("slit", help="momentum distribution behind a hard slit")
    p.add_argument("--from-wavefunction", help="wave function JSON written by synth/maximal")
    _add_geometry(p)
    _add_precision(p)
    p.add_argument("--window", help="slit interval 'lo,hi' (default: node span)")
    p.add_argument("--pgrid-max", help="half-width of the momentum grid")
    p.add_argument("--n-quad", type=int)
    p.add_argument("--out", help="report JSON header (default stdout)")
    p.add_argument("--csv", help="CSV of p, density, weight")

    p = sub.add_parser("verify", help="cross-module invariant checks")
    _add_geometry(p)
    _add_precision(p)
    p.add_argument("--perturbations", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON results")
    return parser


def _context(args, n, ratio):
    bits = args.bits
    if bits is None and os.environ.get(BITS_ENV):
        bits = int(os.environ[BITS_ENV])
    if bits is not None:
        return PrecisionContext(int(bits), guard_bits=0)
    return PrecisionContext.auto(n, ratio, guard_bits=args.guard_bits)


def _nodes(args, with_amps=True):
    # a provisional context is only used to size the working precision
    probe = PrecisionContext(256)
    if args.nodes:
        raw = _split(args.nodes)
        xs = [probe.mpf(x) for x in raw]
    else:
        if args.n is None or (args.dx is None and args.n > 1):
            raise ConfigError("give --nodes, or --n with --dx")
        raw = None
        dx = probe.mpf(args.dx or "1")
        xs = [probe.mpf(args.x0) + k * dx for k in range(args.n)]
    n = len(xs)
    lam = 2 * probe.mp.pi * probe.mpf(args.hbar) / probe.mpf(args.pmax)
    ratio = min(b - a for a, b in zip(xs, xs[1:])) / lam if n > 1 else 0.25
    ctx = _context(args, n, ratio)
    if raw is not None:
        xs = [ctx.mpf(x) for x in raw]
    else:
        dx = ctx.mpf(args.dx or "1")
        xs = [ctx.mpf(args.x0) + k * dx for k in range(n)]
    amps = None
    if with_amps:
        amps = _split(args.amps) if getattr(args, "amps", None) else alternating(n)
    return NodeSpec.create(xs, amps, args.pmax, args.hbar, ctx)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _samples_csv(w, per_gap, digits):
    ctx = w.ctx
    mp = ctx.mp
    nodes = w.nodes
    if nodes.n > 1:
        lo, hi = nodes.xs[0], nodes.xs[-1]
        m = (nodes.n - 1) * per_gap
    else:
        lo, hi = nodes.xs[0] - nodes.lambda_min / 2, nodes.xs[0] + nodes.lambda_min / 2
        m = per_gap
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["x", "re_psi", "im_psi", "abs_psi"])
    f = w.kernels
    for j in range(m + 1):
        x = lo + (hi - lo) * j / m
        v = mp.mpc(f(x))
        wr.writerow([ctx.tostr(x), ctx.tostr(v.real), ctx.tostr(v.imag), mp.nstr(abs(v), digits)])
    return buf.getvalue()


def cmd_synth(args):
    nodes = _nodes(args)
    w = synthesize(nodes)
    doc = to_json(w)
    doc["interpolation_residual"] = w.ctx.tostr(w.interpolation_residual())
    _write(args.out, _dumps(doc))
    if args.csv:
        _write(args.csv, _samples_csv(w, args.samples_per_gap, args.digits))
    return 0


def cmd_maximal(args):
    geo = _nodes(args, with_amps=False)
    w = maximal_superoscillation(geo)
    s_min = w.prolate.spectrum[0][0]
    doc = to_json(w)
    doc["s_min"] = w.ctx.tostr(s_min)
    doc["amplitude"] = w.ctx.tostr(w.ctx.mp.sqrt(s_min))
    _write(args.out, _dumps(doc))
    if args.csv:
        _write(args.csv, _samples_csv(w, args.samples_per_gap, args.digits))
    return 0


def _sweep(args, mode):
    if mode == "fixed_N_vary_dx":
        if args.n is None:
            raise ConfigError("sweep-dx needs --n")
        grid = [float(g) for g in _split(args.grid)] if args.grid else geometric_grid(0.2, 0.02, 8)
        cfg = SweepConfig(mode, args.n, grid, args.pmax, args.hbar, args.source,
                          args.guard_bits, args.max_bits, args.workers)
        rep = sweep_dx(cfg)
    else:
        grid = _int_grid(args.grid) if args.grid else list(range(4, 17))
        cfg = SweepConfig(mode, float(args.ratio or 0.1), grid, args.pmax, args.hbar, args.source,
                          args.guard_bits, args.max_bits, args.workers)
        rep = sweep_N(cfg)
    _write(args.out, rep.dumps(timing=args.timing) + "\n")
    if args.csv:
        _write(args.csv, rep.to_csv(timing=args.timing))
    if not rep.complete:
        log.error("sweep incomplete: %s", rep.failures)
        return 3
    return 0


def cmd_slit(args):
    if args.from_wavefunction:
        with open(args.from_wavefunction, encoding="utf-8") as fh:
            w = from_json(fh.read())
    else:
        w = synthesize(_nodes(args))
    ctx = w.ctx
    if args.window:
        lo, hi = _split(args.window)
    else:
        lo, hi = w.nodes.xs[0], w.nodes.xs[-1]
        if lo == hi:
            raise ConfigError("a single-node wave function needs an explicit --window")
    rep = truncate_and_transform(SlitWindow.create(w, lo, hi), args.pgrid_max, args.n_quad)
    header = report_header(rep, ctx)
    header["summary"] = acceleration_summary(rep, w.nodes)
    header["node_amplitudes"] = [[ctx.tostr(x), ctx.tostr(ctx.mp.re(a)), ctx.tostr(ctx.mp.im(a))]
                                 for x, a in rep.node_amplitudes]
    _write(args.out, _dumps(header))
    if args.csv:
        _write(args.csv, report_csv(rep))
    return 0


def run_verify(nodes, perturbations=20, seed=0):
    """Interpolation exactness, three-way norm agreement and minimality checks.

    Returns a list of ``(name, passed, detail)``.
    """
    w = synthesize(nodes)
    ctx = w.ctx
    mp = ctx.mp
    out = []
    amax = max(abs(a) for a in nodes.amps)
    cond = w.prolate.spectrum[0][-1] / w.prolate.spectrum[0][0]
    res = w.interpolation_residual()
    tol = 1000 * ctx.eps * amax * cond
    out.append(("interpolation_exactness", res <= tol, f"residual={mp.nstr(res, 3)} tol={mp.nstr(tol, 3)}"))

    ps = parseval_norm_sq(w)
    rel = abs(ps / w.norm_sq - 1)
    out.append(("parseval_norm", rel < 1e-8, f"relative deviation={mp.nstr(rel, 3)}"))
    xs = position_norm_sq(w)
    rel = abs(xs / w.norm_sq - 1)
    out.append(("position_norm", rel < 1e-8, f"relative deviation={mp.nstr(rel, 3)}"))

    rng = random.Random(seed)
    worst = mp.zero
    minimal = True
    for _ in range(perturbations):
        g = vanishing_perturbation(w, rng)
        ip = inner_product(w, g)
        gn = mp.sqrt(abs(inner_product(g, g)))
        worst = max(worst, abs(ip) / (mp.sqrt(w.norm_sq) * gn))
        sum_norm = mp.re(inner_product(w.kernels + g, w.kernels + g))
        minimal = minimal and sum_norm >= w.norm_sq * (1 - 1e-20)
    ok = worst < 1e-10 and minimal
    out.append(("orthogonality_minimality", ok, f"max |<psi,g>|/(|psi||g|)={mp.nstr(worst, 3)}"))
    return out


def vanishing_perturbation(w, rng, extra=4):
    """Random bandlimited ``g`` (kernel sum) with ``g(x_k) = 0`` at every node."""
    ctx = w.ctx
    nodes = w.nodes
    lam = nodes.lambda_min
    lo, hi = nodes.xs[0] - 2 * lam, nodes.xs[-1] + 2 * lam
    centers = tuple(lo + (hi - lo) * ctx.mpf(rng.random()) for _ in range(extra))
    coeffs = tuple(ctx.mpf(rng.gauss(0, 1)) for _ in range(extra))
    h = KernelSum(centers, coeffs, nodes.p_max, nodes.hbar, ctx)
    # subtract the minimum-norm interpolant of h's node values
    hv = synthesize(nodes.with_amps([h(x) for x in nodes.xs]), prolate=w.prolate)
    return h + hv.kernels.scaled(-1)


def cmd_verify(args):
    nodes = _nodes(args)
    results = run_verify(nodes, args.perturbations, args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if args.out:
        _write(args.out, _dumps([{"property": n, "passed": bool(o), "detail": d} for n, o, d in results]))
    return 0 if all(ok for _, ok, _ in results) else 1


HANDLERS = {
    "synth": cmd_synth,
    "maximal": cmd_maximal,
    "sweep-dx": lambda a: _sweep(a, "fixed_N_vary_dx"),
    "sweep-n": lambda a: _sweep(a, "fixed_dx_vary_N"),
    "slit": cmd_slit,
    "verify": cmd_verify,
}


def _load_config(argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in doc.items()}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        conf = _load_config(argv)
        command = conf.pop("command", None)
        if command is not None and not any(a in COMMANDS for a in argv):
            argv.append(command)
        if conf:
            chosen = next((a for a in argv if a in COMMANDS), None)
            if chosen is not None:
                sub = parser._subparsers._group_actions[0].choices[chosen]
                valid = {a.dest for a in sub._actions}
                unknown = set(conf) - valid
                if unknown:
                    raise ConfigError(f"unknown config keys for {chosen}: {sorted(unknown)}")
                for key, value in conf.items():
                    if isinstance(value, float):
                        raise ConfigError(f"config value for {key!r} must be a decimal string, not a float")
                sub.set_defaults(**conf)
        args = parser.parse_args(argv)
        if args.verbose:
            logging.getLogger().setLevel(logging.INFO)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        return HANDLERS[args.command](args)
    except (ConfigError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"superosc: error: {exc}", file=sys.stderr)
        return 2
    except PrecisionError as exc:
        print(f"superosc: numerical failure: {exc} (try --bits with a larger value)", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
