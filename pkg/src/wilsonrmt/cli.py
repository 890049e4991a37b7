"""Command-line interface: `wrmt <command> [options]`.

Exit status: 0 success, 1 invalid arguments, 2 verification failure,
3 numerical diagnostic (quadrature residual, eigensolver non-convergence).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from math import sqrt

import numpy as np

from . import __version__
from .curve import DensityCurve, _jsonable
from .kernels import KernelSet
from .microscopic import partition_nf1_micro, rho_s, rho_s_nu1
from .montecarlo import (EigensolverError, RngConfig, histogram, sample_spectra,
                         write_archive)
from .sop import MicroParams, ModelParams, QuadratureResidualError

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3
PASS_FRACTION = 0.95
Z_LIMIT = 3.0
DEFAULT_GRID_POINTS = 401


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _grid(text):
    try:
        lo, hi, pts = text.split(":")
        lo, hi, pts = float(lo), float(hi), int(pts)
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be min:max:points")
    if pts < 2 or not lo < hi:
        raise argparse.ArgumentTypeError("grid needs points >= 2 and min < max")
    return lo, hi, pts


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")


def build_parser():
    ap = _Parser(prog="wrmt", description="Spectral densities of the Hermitian Wilson Dirac two-matrix model.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--nu", type=int, default=0)
        p.add_argument("--a", type=float, required=True)
        p.add_argument("--m", type=float, default=0.0)

    def micro(p):
        p.add_argument("--mhat", type=float, required=True)
        p.add_argument("--ahat", type=float, required=True)
        p.add_argument("--zhat", type=float, default=0.0)
        p.add_argument("--nu", type=int, default=0)

    def output(p, default_fmt="csv"):
        p.add_argument("--out", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=default_fmt)

    def rng(p):
        p.add_argument("--draws", type=int, default=100_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--streams", type=int, default=1)

    d = sub.add_parser("density", help="finite-n density rho_1, a rho_2 slice, or rho_k")
    model(d)
    d.add_argument("--grid", type=_grid, default=None)
    d.add_argument("--k", type=int, default=1)
    d.add_argument("--points", type=_floats, default=None)
    output(d)

    dm = sub.add_parser("density-micro", help="microscopic density")
    micro(dm)
    dm.add_argument("--grid", type=_grid, default=(-6.0, 6.0, 121))
    output(dm)

    mc = sub.add_parser("mc", help="Monte Carlo histogram")
    model(mc)
    rng(mc)
    mc.add_argument("--grid", type=_grid, default=None, help="window min:max:bins")
    mc.add_argument("--archive", default=None, help="write raw eigenvalues to this file")
    output(mc)

    cp = sub.add_parser("compare", help="analytic density vs Monte Carlo histogram")
    model(cp)
    rng(cp)
    cp.add_argument("--grid", type=_grid, default=None, help="window min:max:bins")
    output(cp, "json")

    pt = sub.add_parser("partition", help="microscopic one-flavour partition function")
    micro(pt)
    output(pt, "json")

    vf = sub.add_parser("verify", help="run the invariant suite")
    vf.add_argument("--out", default=None)
    vf.add_argument("--check", action="append", default=None, help="run only the named check")
    return ap


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _params(ns):
    try:
        return ModelParams(ns.n, ns.nu, ns.a, ns.m)
    except ValueError as exc:
        raise UsageError(str(exc))


def _mparams(ns):
    try:
        return MicroParams(ns.mhat, ns.ahat, ns.zhat, ns.nu)
    except ValueError as exc:
        raise UsageError(str(exc))


def _default_window(p):
    half = p.m + 4.0 * sqrt((p.N * p.m ** 2 + 4 * p.n * (p.n + p.nu) * (1 - p.a ** 2)
                             + 2 * p.a ** 2 * p.N ** 2) / p.N)
    return -round(half, 1), round(half, 1), 40


def _cmd_density(ns):
    p = _params(ns)
    if p.nu not in (0, 1):
        raise UsageError("density needs --nu 0 or 1")
    ks = KernelSet(p)
    if ns.k < 1:
        raise UsageError("--k must be >= 1")
    if ns.grid is None and ns.points is not None and not (ns.k == 2 and len(ns.points) == 1):
        if len(ns.points) != ns.k:
            raise UsageError("without --grid, --points must list exactly k values")
        val = ks.rho_k(ns.points)
        doc = {"params": p.as_dict(), "k": ns.k, "points": ns.points, "rho_k": val}
        _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n" if ns.format == "json"
              else f"k,rho\n{ns.k},{val!r}\n", ns.out)
        return EXIT_OK
    lo, hi, _ = _default_window(p)
    x = np.linspace(*(ns.grid or (lo, hi, DEFAULT_GRID_POINTS)))
    meta = {"kind": "rho1", "params": p.as_dict()}
    if ns.k == 1:
        vals = ks.rho1(x)
    elif ns.k == 2:
        if not ns.points or len(ns.points) != 1:
            raise UsageError("--k 2 with --grid needs --points y (the fixed second point)")
        y = ns.points[0]
        vals = ks.rho2(x, np.full_like(x, y))
        meta.update(kind="rho2_slice", y=y)
    else:
        raise UsageError("grid output supports --k 1 or 2")
    _write_curve(DensityCurve(x, vals, meta), ns)
    return EXIT_OK


def _write_curve(curve, ns):
    _emit(curve.to_csv() if ns.format == "csv" else curve.to_json() + "\n", ns.out)


def _cmd_density_micro(ns):
    mp = _mparams(ns)
    if mp.a_hat <= 0:
        raise UsageError("--ahat must be > 0")
    x = np.linspace(*ns.grid)
    if mp.nu == 0:
        vals = rho_s(x, mp)
    elif mp.nu == 1:
        vals = rho_s_nu1(x, mp)
    else:
        raise UsageError("density-micro needs --nu 0 or 1")
    _write_curve(DensityCurve(x, vals, {"kind": "rho_s", "micro": mp.as_dict()}), ns)
    return EXIT_OK


def _rng(ns):
    if ns.draws < 1:
        raise UsageError("--draws must be >= 1")
    try:
        return RngConfig(ns.seed, ns.streams)
    except ValueError as exc:
        raise UsageError(str(exc))


def _cmd_mc(ns):
    p = _params(ns)
    cfg = _rng(ns)
    lo, hi, bins = ns.grid or _default_window(p)
    ev = sample_spectra(p, ns.draws, cfg)
    if ns.archive:
        write_archive(ns.archive, p, ev)
    curve = histogram(ev, (lo, hi), bins, meta={"params": p.as_dict(), "seed": cfg.seed,
                                                "streams": cfg.streams})
    _write_curve(curve, ns)
    return EXIT_OK


def bin_averaged_rho1(ks, edges, nodes: int = 8):
    gl, gw = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = mid[:, None] + half[:, None] * gl
    return (ks.rho1(pts) @ gw) / 2.0


def compare(p, draws, cfg, window):
    lo, hi, bins = window
    ks = KernelSet(p)
    ev = sample_spectra(p, draws, cfg)
    h = histogram(ev, (lo, hi), bins)
    edges = np.asarray(h.meta["edges"])
    ana = bin_averaged_rho1(ks, edges)
    se = np.asarray(h.meta["stderr"])
    z = np.where(se > 0, (h.values - ana) / np.where(se > 0, se, 1.0), 0.0)
    frac = float(np.mean(np.abs(z) <= Z_LIMIT))
    return {"x": h.grid, "analytic": ana, "mc": h.values, "stderr": se, "z": z,
            "fraction_within": frac, "passed": frac >= PASS_FRACTION}


def _cmd_compare(ns):
    p = _params(ns)
    if p.nu not in (0, 1):
        raise UsageError("compare needs --nu 0 or 1")
    cfg = _rng(ns)
    res = compare(p, ns.draws, cfg, ns.grid or _default_window(p))
    summary = (f"{'PASS' if res['passed'] else 'FAIL'}: {100 * res['fraction_within']:.1f}% of "
               f"bins within {Z_LIMIT:g} sigma (need {100 * PASS_FRACTION:.0f}%)")
    if ns.format == "json":
        doc = {"params": p.as_dict(), "draws": ns.draws, "seed": cfg.seed, "streams": cfg.streams,
               "tool_version": __version__, **res, "summary": summary}
        _emit(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n", ns.out)
    else:
        rows = ["x,rho_analytic,rho_mc,stderr,z"]
        rows += [",".join(repr(float(v)) for v in r)
                 for r in zip(res["x"], res["analytic"], res["mc"], res["stderr"], res["z"])]
        _emit("\n".join(rows) + "\n", ns.out)
    sys.stderr.write(summary + "\n")
    return EXIT_OK if res["passed"] else EXIT_VERIFY


def _cmd_partition(ns):
    mp = _mparams(ns)
    res = partition_nf1_micro(mp)
    doc = {"micro": mp.as_dict(), "theta_form": res.theta_form, "hermite_form": res.hermite_form,
           "rel_discrepancy": res.rel_discrepancy}
    if ns.format == "json":
        _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", ns.out)
    else:
        _emit("theta_form,hermite_form,rel_discrepancy\n"
              f"{res.theta_form!r},{res.hermite_form!r},{res.rel_discrepancy!r}\n", ns.out)
    if not res.ok:
        sys.stderr.write(f"partition forms disagree: {res.rel_discrepancy:.3e}\n")
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_verify(ns):
    from . import verify
    known = {name for name, _ in verify.CHECKS}
    unknown = sorted(set(ns.check or ()) - known)
    if unknown:
        raise UsageError(f"unknown check(s): {', '.join(unknown)}")
    results = verify.run_checks(ns.check)
    failed = [r["name"] for r in results if not r["passed"]]
    report = {"tool_version": __version__, "checks": results, "failed": failed,
              "passed": not failed}
    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", ns.out)
    for r in results:
        sys.stderr.write(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']}: {r['detail']}\n")
    return EXIT_VERIFY if failed else EXIT_OK


_COMMANDS = {"density": _cmd_density, "density-micro": _cmd_density_micro, "mc": _cmd_mc,
             "compare": _cmd_compare, "partition": _cmd_partition, "verify": _cmd_verify}


_VALUE_FLAGS = ("--grid", "--points", "--m", "--mhat", "--zhat", "--a", "--ahat")


def _attach_negative_values(argv):
    """Turn `--grid -4:4:9` into `--grid=-4:4:9` so argparse accepts leading minus signs."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and nxt[1:2] not in ("-", ""):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = build_parser().parse_args(_attach_negative_values(argv))
    try:
        return _COMMANDS[ns.command](ns)
    except UsageError as exc:
        sys.stderr.write(f"wrmt: error: {exc}\n")
        return EXIT_USAGE
    except (QuadratureResidualError, EigensolverError) as exc:
        sys.stderr.write(f"wrmt: numerical diagnostic: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
