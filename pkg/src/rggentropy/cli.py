"""Command-line entry point: ``rggentropy <command> ...``.

Every CSV starts with one ``#`` line holding JSON metadata (package version,
schema, seed and the full run configuration) followed by a header row.  JSON
outputs carry the same block under ``"meta"``.  Edge slots are ordered
lexicographically, (0,1), (0,2), ..., (n-2,n-1), with slot k at bit k of a
graph mask.

Exit codes: 0 success, 2 bad input/spec, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, streams
from .edgeworth import entropy_vs_dimension
from .exact_small import ExactGeometry, exact_pbar, exact_probabilities, exact_entropy
from .geometry import Geometry, Kind, Uniform, distribution_from_dict
from .graphs import edge_count_marginals
from .limit import (
    NotPositiveDefinite, converges_to_er, covariance_model, gaussian_limit_distribution, kurtosis,
    limit_entropy_curve, r0_for_t,
)
from .mc_entropy import entropy_at, entropy_curve
from .optimize import NumericFailure, optimize_r0
from .sampling import EnsembleSpec, Hard, Rayleigh, sample_counts

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("rggentropy")

SCHEMA = 1
EXIT_SPEC, EXIT_NUMERIC = 2, 3
DESK = {"L": 10**6, "M": 10**6}
PAPER = {"L": 10**8, "M": 10**7}


class SpecError(ValueError):
    pass


# -- input helpers ------------------------------------------------------------


def load_document(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(raw.decode())
        return json.loads(raw)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise SpecError(f"cannot parse {path}: {exc}") from exc


def load_ensemble(path) -> tuple[EnsembleSpec, dict]:
    doc = load_document(path)
    try:
        return EnsembleSpec.from_dict(doc, base_dir=Path(path).parent), doc
    except KeyError as exc:
        raise SpecError(f"spec is missing field {exc}") from exc


def parse_grid(text: str | None) -> list[float]:
    """'a:b:num' (inclusive linspace) or a comma list; empty string is an empty grid."""
    if text is None or not text.strip():
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise SpecError(f"grid {text!r} must look like start:stop:num")
        a, b, k = float(parts[0]), float(parts[1]), int(parts[2])
        return [float(x) for x in np.linspace(a, b, k)]
    return [float(x) for x in text.split(",") if x.strip()]


def distribution_args(args) -> tuple[Kind, object, dict]:
    if getattr(args, "spec", None):
        doc = load_document(args.spec)
        kind = Kind(doc.get("geometry", "cube"))
        dspec = doc.get("distribution", {"kind": "uniform"})
        return kind, distribution_from_dict(dspec, Path(args.spec).parent), dspec
    dspec = {"kind": args.distribution}
    if args.p is not None:
        dspec["p"] = args.p
    if args.sign is not None:
        dspec["sign"] = args.sign
    if args.density_csv:
        dspec["path"] = args.density_csv
    return Kind(args.geometry), distribution_from_dict(dspec), dspec


# -- output helpers -----------------------------------------------------------


def meta(args, **extra) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {"package": "rggentropy", "version": __version__, "schema": SCHEMA,
            "seed": getattr(args, "seed", None), "config": cfg, **extra}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, header, rows, metadata) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(metadata, sort_keys=True, default=str) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    _emit(path, buf.getvalue())
    return buf.getvalue()


def write_json(path, payload, metadata) -> str:
    text = json.dumps({"meta": metadata, **payload}, indent=2, sort_keys=True, default=_json_default) + "\n"
    _emit(path, text)
    return text


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)


def _emit(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def budget(args, key: str, value):
    if value is not None:
        return value
    return (PAPER if getattr(args, "paper_scale", False) else DESK)[key]


# -- commands -----------------------------------------------------------------


def cmd_exact_curve(args):
    try:
        geom = ExactGeometry(args.geometry)
    except ValueError:
        raise SpecError(f"exact formulas cover only 'torus' and 'line', not {args.geometry!r}") from None
    rows = []
    for r0 in parse_grid(args.grid):
        pk = exact_probabilities(geom, r0)
        rows.append([r0, *pk.as_tuple(), exact_entropy(geom, r0), exact_pbar(geom, r0)])
    write_csv(args.output, ["r0", "p0", "p1", "p2", "p3", "entropy_bits", "p_bar"], rows, meta(args))


def cmd_entropy_mc(args):
    spec, doc = load_ensemble(args.spec)
    L = budget(args, "L", args.samples)
    grid = parse_grid(args.grid) if args.grid else [spec.connection.r0]
    curve = entropy_curve(spec, grid, L, args.seed, args.threads) if grid else []
    rows = [[r0, e.entropy_bits, e.systematic_error, e.standard_error, e.L] for r0, e in curve]
    write_csv(args.output, ["r0", "entropy_bits", "systematic_error", "standard_error", "L"], rows,
              meta(args, spec=doc))
    if args.counts:
        counts = sample_counts(spec, L, args.seed, args.threads)
        write_csv(args.counts, ["graph_mask", "count"], [[i, int(c)] for i, c in enumerate(counts)],
                  meta(args, spec=doc))


def cmd_optimize(args):
    spec, doc = load_ensemble(args.spec)
    L = budget(args, "L", args.samples)
    res = optimize_r0(spec, L=L, N=args.grid_size, seed=args.seed, L0=args.coarse_samples, threads=args.threads)
    m = meta(args, spec=doc)
    write_json(args.output, res.to_json(), m)
    if args.grid_csv:
        write_csv(args.grid_csv, ["r0", "entropy_bits", "systematic_error", "standard_error"],
                  [[g["r0"], g["entropy_bits"], g["systematic_error"], g["standard_error"]] for g in res.grid], m)


TABLE3_GEOMETRIES = [("line", Kind.CUBE, 1), ("torus_d1", Kind.TORUS, 1), ("torus_d2", Kind.TORUS, 2),
                     ("torus_d3", Kind.TORUS, 3), ("cube_d2", Kind.CUBE, 2), ("cube_d3", Kind.CUBE, 3)]
TABLE3_CONNECTIONS = [*(f"eta{k}" for k in range(1, 7)), "hard"]
TABLE3_CORNERS = {("line", "eta1"), ("line", "hard"), ("torus_d3", "eta1"), ("torus_d3", "hard")}


def _connection(name: str):
    return Hard(0.1) if name == "hard" else Rayleigh(1.0, float(name[3:]))


def table3_entries(L: int, N: int, seed: int, threads=None, corners_only=False):
    out = []
    for gi, (gname, kind, d) in enumerate(TABLE3_GEOMETRIES):
        for ci, cname in enumerate(TABLE3_CONNECTIONS):
            if corners_only and (gname, cname) not in TABLE3_CORNERS:
                continue
            spec = EnsembleSpec(Geometry(kind, d), 3, Uniform(), _connection(cname))
            res = optimize_r0(spec, L=L, N=N, seed=streams.derive_seed(seed, gi, ci), threads=threads)
            out.append({"geometry": gname, "connection": cname, "H_max": res.H_max, "se_H": res.se_H,
                        "r0_hat": res.r0_hat, "se_r0": res.se_r0, "p_bar_max": res.p_bar_max})
            log.info("table3 %s %s: H=%.4f", gname, cname, res.H_max)
    return out


def cmd_table3(args):
    L = budget(args, "L", args.samples)
    entries = table3_entries(L, args.grid_size, args.seed, args.threads, args.corners_only)
    by = {(e["geometry"], e["connection"]): e for e in entries}
    header = ["geometry"]
    for c in TABLE3_CONNECTIONS:
        header += [f"{c}_H", f"{c}_se"]
    rows = []
    for gname, _, _ in TABLE3_GEOMETRIES:
        row = [gname]
        for c in TABLE3_CONNECTIONS:
            e = by.get((gname, c))
            row += [e["H_max"], e["se_H"]] if e else ["", ""]
        rows.append(row)
    write_csv(args.output, header, rows, meta(args))


def cmd_covariance(args):
    kind, dist, dspec = distribution_args(args)
    model = covariance_model(kind, dist)
    ok, diag = converges_to_er(kind, dist)
    try:
        kurt = kurtosis(dist)
    except ValueError:
        kurt = None
    write_json(args.output, {"geometry": kind.value, "distribution": dspec, "mu": model.mu, "alpha": model.alpha,
                             "beta": model.beta, "gamma": model.gamma, "kurtosis": kurt, "converges_to_er": ok},
               meta(args))


def cmd_limit_curve(args):
    kind, dist, dspec = distribution_args(args)
    model = covariance_model(kind, dist)
    M = budget(args, "M", args.samples)
    rows = limit_entropy_curve(model, args.n, parse_grid(args.t_grid), M, args.seed, args.threads, args.method)
    write_csv(args.output, ["t", "entropy_bits", "p_bar"], [[r["t"], r["entropy_bits"], r["p_bar"]] for r in rows],
              meta(args, distribution=dspec))


def cmd_edgeworth_curve(args):
    kind, dist, dspec = distribution_args(args)
    M = budget(args, "M", args.samples)
    d_grid = [int(round(x)) for x in parse_grid(args.d_grid)]
    rows, fit = entropy_vs_dimension(kind, dist, args.n, args.t, d_grid, M, args.seed, args.threads)
    m = meta(args, distribution=dspec)
    write_csv(args.output, ["d", "entropy_bits", "clamped_mass"],
              [[r["d"], r["entropy_bits"], r["clamped_mass"]] for r in rows], m)
    fit_payload = {"fit": {"a": fit.a, "b": fit.b, "c": fit.c, "se_a": fit.se_a, "se_b": fit.se_b,
                           "residual_rms": fit.residual_rms}}
    if args.fit_output:
        write_json(args.fit_output, fit_payload, m)
    else:
        sys.stderr.write(json.dumps(fit_payload["fit"]) + "\n")


FIG_D_GRID = [15, 20, 25, 30, 50, 75, 100, 150, 200, 250]


def edgeworth_figure_rows(kind: Kind, n: int, d_grid, M: int, L: int, seed: int, threads=None):
    dist = Uniform()
    model = covariance_model(kind, dist)
    gauss = gaussian_limit_distribution(model, n, 0.0, M, seed, threads).entropy_bits
    rows, fit = entropy_vs_dimension(kind, dist, n, 0.0, d_grid, M, seed, threads)
    out = []
    for i, r in enumerate(rows):
        d = r["d"]
        spec = EnsembleSpec(Geometry(kind, d), n, dist, Hard(r0_for_t(model, 0.0, d)))
        sim = entropy_at(spec, spec.connection.r0, L, streams.derive_seed(seed, 99, i), threads)
        out.append([d, gauss, r["entropy_bits"], sim.corrected_bits, fit.a, fit.b, fit.c])
    return out


def cmd_figures(args):
    out = Path(args.outdir)
    M = budget(args, "M", args.samples)
    L = budget(args, "L", args.sim_samples)
    m = meta(args)
    for geom in ("torus", "line"):
        g = list(np.linspace(0.0, 1.0 if geom == "line" else 0.5, 201))
        write_csv(out / f"exact_{geom}.csv", ["r0", "p0", "p1", "p2", "p3", "entropy_bits", "p_bar"],
                  [[r, *exact_probabilities(geom, r).as_tuple(), exact_entropy(geom, r), exact_pbar(geom, r)]
                   for r in g], m)
    for kind in (Kind.CUBE, Kind.TORUS):
        for dname, dspec in (("uniform", {"kind": "uniform"}), ("truncated_gaussian", {"kind": "truncated_gaussian"})):
            model = covariance_model(kind, distribution_from_dict(dspec))
            for n in (3, 7):
                dist = gaussian_limit_distribution(model, n, 0.0, M, args.seed, args.threads)
                unnorm, norm = edge_count_marginals(dist)
                write_csv(out / f"edge_counts_{kind.value}_{dname}_n{n}.csv",
                          ["k", "unnormalised", "normalised"],
                          [[k, u, v] for k, (u, v) in enumerate(zip(unnorm, norm))], m)
    t_grid = list(np.linspace(-0.4, 0.4, 41))
    for kind in (Kind.CUBE, Kind.TORUS):
        model = covariance_model(kind, Uniform())
        for n in (3, 11):
            Mn = M if n <= 7 else max(M // 10, 10**4)
            rows = limit_entropy_curve(model, n, t_grid, Mn, args.seed, args.threads)
            write_csv(out / f"limit_curve_{kind.value}_n{n}.csv", ["t", "entropy_bits", "p_bar"],
                      [[r["t"], r["entropy_bits"], r["p_bar"]] for r in rows], m)
    for kind in (Kind.CUBE, Kind.TORUS):
        rows = edgeworth_figure_rows(kind, 4, FIG_D_GRID, M, L, args.seed, args.threads)
        write_csv(out / f"edgeworth_{kind.value}_n4.csv",
                  ["d", "gaussian_entropy", "edgeworth_entropy", "simulated_entropy", "fit_a", "fit_b", "fit_c"],
                  rows, m)


# -- parser -------------------------------------------------------------------


def _add_distribution(p):
    p.add_argument("--spec", help="JSON/TOML file with 'geometry' and 'distribution'")
    p.add_argument("--geometry", default="cube", choices=[k.value for k in Kind])
    p.add_argument("--distribution", default="uniform",
                   choices=["uniform", "truncated_gaussian", "bernoulli", "tabulated"])
    p.add_argument("--p", type=float, help="Bernoulli success probability")
    p.add_argument("--sign", type=float, help="truncated Gaussian exponent sign (+1 or -1)")
    p.add_argument("--density-csv", help="x,density CSV for a tabulated law")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rggentropy", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker threads (capped by RGG_THREADS)")
    common.add_argument("--output", "-o", default="-", help="output path ('-' for stdout)")
    common.add_argument("--paper-scale", action="store_true", help="default L=1e8, M=1e7 instead of 1e6")
    common.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact-curve", parents=[common], help="closed-form n=3, d=1 curves")
    p.add_argument("--geometry", required=True)
    p.add_argument("--grid", default="0:0.5:101", help="start:stop:num or comma list")
    p.set_defaults(func=cmd_exact_curve)

    p = sub.add_parser("entropy-mc", parents=[common], help="Monte-Carlo entropy over an r0 grid")
    p.add_argument("--spec", required=True)
    p.add_argument("--grid", help="r0 grid; defaults to the spec file's r0")
    p.add_argument("--samples", "-L", type=int)
    p.add_argument("--counts", help="also write graph_mask,count CSV at the spec file's r0")
    p.set_defaults(func=cmd_entropy_mc)

    p = sub.add_parser("optimize", parents=[common], help="entropy-maximising r0")
    p.add_argument("--spec", required=True)
    p.add_argument("--grid-size", "-N", type=int, default=100)
    p.add_argument("--samples", "-L", type=int)
    p.add_argument("--coarse-samples", type=int)
    p.add_argument("--grid-csv")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("table3", parents=[common], help="maximum entropy table for n=3")
    p.add_argument("--samples", "-L", type=int)
    p.add_argument("--grid-size", "-N", type=int, default=100)
    p.add_argument("--corners-only", action="store_true")
    p.set_defaults(func=cmd_table3)

    p = sub.add_parser("covariance", parents=[common], help="mu, alpha, beta and ER-convergence")
    _add_distribution(p)
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("limit-curve", parents=[common], help="Gaussian-limit entropy over t")
    _add_distribution(p)
    p.add_argument("-n", type=int, default=3)
    p.add_argument("--t-grid", default="-0.4:0.4:41")
    p.add_argument("--samples", "-M", type=int)
    p.add_argument("--method", choices=["auto", "mc"], default="auto")
    p.set_defaults(func=cmd_limit_curve)

    p = sub.add_parser("edgeworth-curve", parents=[common], help="Edgeworth entropy over d")
    _add_distribution(p)
    p.add_argument("-n", type=int, default=4)
    p.add_argument("-t", type=float, default=0.0)
    p.add_argument("--d-grid", default="15,20,25,30,50,75,100,150,200,250")
    p.add_argument("--samples", "-M", type=int)
    p.add_argument("--fit-output")
    p.set_defaults(func=cmd_edgeworth_curve)

    p = sub.add_parser("figures", parents=[common], help="all plot data as CSV files")
    p.add_argument("--outdir", default="figures")
    p.add_argument("--samples", "-M", type=int)
    p.add_argument("--sim-samples", "-L", type=int)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (NotPositiveDefinite, NumericFailure, np.linalg.LinAlgError, FloatingPointError,
            ArithmeticError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (SpecError, ValueError, KeyError, TypeError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_SPEC
    return 0


if __name__ == "__main__":
    sys.exit(main())
