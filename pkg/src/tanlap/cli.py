"""Command-line interface: ``tanlap {gallery,residual,flatness,variational,separated}``.

Each command writes one JSON report and prints a one-line summary. Exit
status is 0 on a pass verdict, 1 on a fail verdict and 2 on usage or input
errors.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import json
import math
import sys

import numpy as np

from . import __version__, report
from .errors import TanlapError
from .linalg import RankPolicy
from .maps import BoxDomain, GridSource, catalogue, gallery, load_grid
from .operators import (a_field_batch, decomposition_pair, inf_laplace_residual, laplacian,
                        normalized_norm, p_laplace_residual, tangential_residual)
from .rigidity import common_subspace, flatness_report
from .separated import BasePoint, identity_residual, sample_points, span_check
from .variational import DEFAULT_EPS, Subdomain, minimality_check

# the third field of gallery:ID:VALUE sets this parameter
_PRIMARY_PARAM = {"embed3": "inner", "separated_pair": "preset", "nu_of_f": "f",
                  "k_family": "profile"}
_NON_CONFIG = {"workers", "out", "func"}
# options whose values may start with '-' (negative coordinates)
_SIGNED_OPTIONS = {"--box", "--sub", "--base", "--query", "--eps", "--direction"}


class UsageError(TanlapError):
    pass


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def load_source(spec, params):
    """Build a map source from ``gallery:ID[:VALUE]`` or ``csv:PATH`` (or a ``.csv`` path)."""
    if spec.startswith("csv:") or spec.endswith(".csv"):
        if params:
            raise UsageError("--param applies to gallery maps only")
        path = spec[4:] if spec.startswith("csv:") else spec
        try:
            grid = load_grid(path)
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
        return GridSource(grid, label=path)
    if not spec.startswith("gallery:"):
        raise UsageError(f"map spec must be gallery:ID[:VALUE] or csv:PATH, got {spec!r}")
    parts = spec.split(":")
    if len(parts) not in (2, 3) or not parts[1]:
        raise UsageError(f"malformed gallery spec {spec!r}")
    gid = parts[1]
    merged = {}
    if len(parts) == 3:
        if gid not in _PRIMARY_PARAM:
            raise UsageError(f"gallery entry {gid!r} takes no VALUE in gallery:ID:VALUE")
        merged[_PRIMARY_PARAM[gid]] = parts[2]
    for item in params or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects key=value, got {item!r}")
        merged[key] = _parse_value(value)
    return gallery(gid, merged)


def _policy(args):
    return RankPolicy(rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _domain(args, source):
    box = source.domain
    if args.box:
        box = BoxDomain.parse(args.box, args.n or box.resolution)
    elif args.n:
        box = box.with_resolution(args.n)
    if box != source.domain:
        source = source.with_domain(box)
    return source, box


def _chunked(fn, jet, workers):
    """Apply a pointwise ``fn`` to a flat jet, split into ordered chunks."""
    M = len(jet)
    if workers <= 1 or M < 2:
        return fn(jet)
    bounds = np.linspace(0, M, min(workers, M) + 1).astype(int)
    pieces = [jet[a:b] for a, b in zip(bounds[:-1], bounds[1:])]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, pieces))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(col) for col in zip(*parts))
    return np.concatenate(parts)


def _residual_fn(args, policy):
    op = args.op
    if op == "p" and args.p is None:
        raise UsageError("--op p needs --p")

    def fn(jet):
        if op == "tangential":
            r = tangential_residual(jet, policy)
        elif op == "laplacian":
            r = laplacian(jet)
        elif op == "p":
            r = p_laplace_residual(jet, args.p)
        elif op == "inf":
            r = inf_laplace_residual(jet, policy)
        elif op == "decomposition":
            first, second = decomposition_pair(jet, math.inf if args.p is None else args.p, policy)
            r = np.concatenate([first, second], axis=-1)
            return np.linalg.norm(r, axis=-1), (normalized_norm(first, jet)
                                                 + normalized_norm(second, jet))
        else:
            _, _, defect = a_field_batch(jet, policy)
            return defect, normalized_norm(defect[:, None], jet)
        return np.linalg.norm(r, axis=-1), normalized_norm(r, jet)

    return fn


def cmd_gallery(args):
    entries = catalogue()
    return {"entries": entries, "count": len(entries)}, "pass", f"{len(entries)} gallery entries"


def cmd_residual(args):
    policy = _policy(args)
    source, box = _domain(args, load_source(args.map, args.param))
    if args.op == "afield" and source.n != 2:
        raise UsageError("--op afield needs a map on R^2")
    jet, singular = source.interior_jets(box)
    keep = ~singular.reshape(-1)
    flat = jet.flatten()[np.flatnonzero(keep)]
    if len(flat) == 0:
        raise UsageError("no interior lattice point lies off the singular set")
    raw, norm = _chunked(_residual_fn(args, policy), flat, args.workers)
    worst = int(np.argmax(norm))
    results = {
        "map": source.describe(), "op": args.op, "tol": args.tol,
        "evaluated": int(len(flat)), "singular_skipped": int(singular.sum()),
        "max_normalized": float(norm.max()), "max_raw": float(raw.max()),
        "argmax_point": flat.point[worst].tolist(),
        "symmetrization_defect": jet.symmetrization_defect(),
        "points": flat.point.tolist(), "normalized": norm.tolist(), "raw": raw.tolist(),
    }
    verdict = "pass" if norm.max() <= args.tol else "fail"
    return results, verdict, f"max normalized {args.op} residual {norm.max():.3e} (tol {args.tol:g})"


def cmd_flatness(args):
    policy = _policy(args)
    source, box = _domain(args, load_source(args.map, args.param))
    rep = flatness_report(source, box, policy, args.tol)
    results = {"map": source.describe(), **rep.as_dict()}
    for rank in (1, 2):
        fits = [v.fit for v in rep.of_rank(rank) if not v.trivial]
        if len(fits) > 1:
            angle, offset = common_subspace(fits)
            results[f"rank{rank}_max_angle"] = angle
            results[f"rank{rank}_max_offset"] = offset
    verdict = "pass" if rep.flat else "fail"
    n_flat = sum(v.flat for v in rep.components if v.eligible)
    n_judged = sum(v.eligible for v in rep.components)
    return results, verdict, (f"{'flat' if rep.flat else 'not-flat'}: {n_flat}/{n_judged} "
                              f"judged components flat")


def _parse_p(text):
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _parse_floats(text, count=None, what="values"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{what} needs exactly {count} numbers, got {text!r}")
    return vals


def cmd_variational(args):
    policy = _policy(args)
    source, box = _domain(args, load_source(args.map, args.param))
    if args.sub:
        sub_box = BoxDomain.parse(args.sub, args.sub_n)
    else:
        lo, hi = np.array(box.lower), np.array(box.upper)
        mid, half = (lo + hi) / 2, (hi - lo) / 4
        sub_box = BoxDomain(tuple(mid - half), tuple(mid + half), args.sub_n)
    sub = Subdomain.inside(source, sub_box)
    eps = _parse_floats(args.eps, what="--eps") if args.eps else list(DEFAULT_EPS)
    direction = _parse_floats(args.direction, source.N, "--direction") if args.direction else None
    rep = minimality_check(source, sub, args.p, args.trials, eps, policy, seed=args.seed,
                           direction=direction, workers=args.workers)
    results = {"map": source.describe(), "subdomain": sub_box.as_dict(), **rep.as_dict()}
    verdict = "pass" if rep.minimal else "fail"
    return results, verdict, (f"{rep.verdict}: {len(rep.trials)} trials, "
                              f"{rep.strict_violations} strict violations, base {rep.base_energy:.6g}")


def _order(coarse, fine):
    if coarse > 0 and fine > 0:
        return math.log2(coarse / fine)
    return None


def cmd_separated(args):
    policy = _policy(args)
    source = load_source(args.map, args.param)
    if not hasattr(source, "separated"):
        raise UsageError(f"{source.gid} has no separated form f(x) + g(y)")
    sep = source.separated()
    (a, b), (c, d) = sep.x_interval, sep.y_interval
    if args.base:
        base = BasePoint(*_parse_floats(args.base, 2, "--base"))
    else:
        base = BasePoint((a + b) / 2, (c + d) / 2)
    if args.query:
        queries = [_parse_floats(q, 2, "--query") for q in args.query]
    else:
        queries = [[base.x0 + 0.3 * (b - a), base.y0 + 0.3 * (d - c)],
                   [base.x0 - 0.3 * (b - a), base.y0 + 0.3 * (d - c)]]
    checks = []
    all_ok = True
    for x, y in queries:
        coarse = identity_residual(sep, base, x, y, args.m, policy)
        fine = identity_residual(sep, base, x, y, 2 * args.m, policy)
        order = _order(coarse.x_first, fine.x_first)
        converging = fine.x_first <= args.floor or (order is not None and order >= args.min_order)
        signs = fine.factors.sign_checks()
        ok = converging and all(signs.values())
        all_ok &= ok
        checks.append({"query": [x, y], "m": args.m, "coarse": coarse.as_dict(),
                       "fine": fine.as_dict(), "x_first_order": order,
                       "x_first_converging": bool(converging), "signs_ok": all(signs.values())})
    samples = sample_points(sep, args.samples, args.seed)
    span = span_check(sep, base, samples, args.m, args.tol, policy)
    all_ok &= span.passed
    results = {"map": source.describe(), "separated": sep.spec(), "base": [base.x0, base.y0],
               "identities": checks, "span": {"samples": samples.tolist(), **span.as_dict()}}
    verdict = "pass" if all_ok else "fail"
    return results, verdict, (f"span distance {span.max_distance:.3e} (tol {args.tol:g}), "
                              f"{sum(c['x_first_converging'] for c in checks)}/{len(checks)} "
                              f"identities converging")


def build_parser():
    parser = argparse.ArgumentParser(prog="tanlap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tanlap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, box=True):
        p.add_argument("--map", required=True, help="gallery:ID[:VALUE] or csv:PATH")
        p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                       help="gallery parameter (JSON value or bare string); repeatable")
        p.add_argument("--rel-tol", type=float, default=1e-9, help="rank threshold, relative part")
        p.add_argument("--abs-tol", type=float, default=1e-12, help="rank threshold, absolute floor")
        if box:
            p.add_argument("--box", help="domain override lo,hi per axis joined by x, "
                                         "e.g. -0.3,0.3x-0.3,0.3")
            p.add_argument("--n", type=int, help="lattice points per axis")
        p.add_argument("--workers", type=int, default=1, help="threads (results do not depend on it)")
        p.add_argument("--out", help="report path (default tanlap-<command>.json)")

    g = sub.add_parser("gallery", help="list the analytic gallery")
    g.add_argument("--list", action="store_true", help="list entries with parameter docs")
    g.add_argument("--out")
    g.add_argument("--workers", type=int, default=1)
    g.set_defaults(func=cmd_gallery)

    r = sub.add_parser("residual", help="sweep a residual over the interior lattice")
    common(r)
    r.add_argument("--op", default="tangential",
                   choices=["tangential", "laplacian", "p", "inf", "decomposition", "afield"])
    r.add_argument("--p", type=_parse_p, help="exponent for --op p or decomposition")
    r.add_argument("--tol", type=float, default=1e-10, help="pass threshold, normalized residual")
    r.set_defaults(func=cmd_residual)

    f = sub.add_parser("flatness", help="rank segmentation and affine fits of the image")
    common(f)
    f.add_argument("--tol", type=float, default=1e-8)
    f.set_defaults(func=cmd_flatness)

    v = sub.add_parser("variational", help="minimality under normal perturbations")
    common(v)
    v.add_argument("--sub", help="subdomain box, strictly inside the map box (default: middle half)")
    v.add_argument("--sub-n", type=int, default=41, help="subdomain lattice points per axis")
    v.add_argument("--p", type=_parse_p, default=2.0, help="exponent in [2, inf]")
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--eps", help="comma-separated perturbation sizes")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--direction", help="fixed perturbation direction w (comma-separated)")
    v.set_defaults(func=cmd_variational)

    s = sub.add_parser("separated", help="integrated identities and span check for f(x) + g(y)")
    common(s, box=False)
    s.add_argument("--base", help="base point x0,y0 (default: rectangle centre)")
    s.add_argument("--query", action="append", help="query point x,y; repeatable")
    s.add_argument("--m", type=int, default=64, help="quadrature intervals (also run at 2m)")
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-10, help="span distance tolerance")
    s.add_argument("--min-order", type=float, default=1.7,
                   help="least observed order of the x-first identity residual")
    s.add_argument("--floor", type=float, default=1e-12,
                   help="x-first residual below this counts as converged")
    s.set_defaults(func=cmd_separated)
    return parser


def _config(args):
    return {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}


def run(args):
    """Execute parsed ``args``; returns (exit status, report dict, summary line)."""
    results, verdict, summary = args.func(args)
    doc = {"version": __version__, "command": args.command, "config": _config(args),
           "results": results, "verdict": verdict}
    return (0 if verdict == "pass" else 1), doc, f"{args.command}: {verdict}; {summary}"


def _attach_signed(argv):
    """Rewrite ``--box -0.3,0.3x...`` as ``--box=-0.3,0.3x...`` so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _SIGNED_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_attach_signed(argv))
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    try:
        status, doc, summary = run(args)
        out = args.out or f"tanlap-{args.command}.json"
        report.write(out, doc)
    except (ValueError, OSError) as exc:
        print(f"tanlap: error: {exc}".splitlines()[0], file=sys.stderr)
        return 2
    print(summary)
    return status


if __name__ == "__main__":
    sys.exit(main())
