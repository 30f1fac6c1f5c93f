"""Command-line interface: lattice/dual/sample exports, event sampling, the
Monte Carlo estimators, scalar tables, and branching geometry, with JSON run
manifests for bit-identical reproduction."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import branching, recursion
from .carpet import (CARPET3, FULL_GRID3, GeneratorSet, Rect, build_sponge,
                     window_graph)
from .dualgraph import build_dual
from .errors import CarpetError, DomainError
from .estimator import (Estimate, WindowSampler, estimate, estimate_pc,
                        estimate_tau, estimate_theta, russo_check, sweep)
from .percolation import sample_config
from .render import render_boxes, render_config, render_dual, render_graph

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _parse_generator(s: str) -> GeneratorSet:
    if s == "carpet3":
        return CARPET3
    if s == "full3":
        return FULL_GRID3
    cells = frozenset(tuple(int(t) for t in pair.split(","))
                      for pair in s.split(";") if pair)
    base = max(max(c) for c in cells) + 1
    return GeneratorSet(max(base, 2), cells)


def _parse_grid(s: str):
    start, stop, step = (float(t) for t in s.split(":"))
    out = []
    x = start
    while x <= stop + 1e-12:
        out.append(round(x, 12))
        x += step
    return out


def _parse_point(s: str):
    a, b = s.split(",")
    return (int(a), int(b))


def _write(path: str | None, text: str, manifest: dict | None = None):
    if path is None:
        sys.stdout.write(text)
        return
    p = Path(path)
    p.write_text(text)
    if manifest is not None:
        digest = hashlib.sha256(text.encode()).hexdigest()
        man = {"command": manifest, "outputs": {p.name: digest}}
        Path(str(p) + ".manifest.json").write_text(
            json.dumps(man, indent=2, sort_keys=True) + "\n")


def load_config(path: str) -> dict:
    """Read a config (or a run manifest, whose 'command' entry is the config)."""
    with open(path) as f:
        data = json.load(f)
    if "command" in data and isinstance(data["command"], dict):
        return data["command"]
    return data


def _graph_json(g) -> str:
    return json.dumps({
        "level": g.level, "cols": g.cols, "rows": g.rows,
        "vertices": g.vertices.tolist(),
        "edges": g.edges.tolist(),
    }, separators=(",", ":")) + "\n"


def _dual_json(d) -> str:
    faces = []
    for fid in range(d.n_faces):
        faces.append({"id": fid, "kind": d.face_kind(fid)})
    for side in ("left", "right", "bottom", "top"):
        faces.append({"id": d.sector(side), "kind": "sector", "side": side})
    return json.dumps({
        "faces": faces,
        "bijection": list(range(d.n_tagged)),
        "dual_edges": [[int(d.dual_u[i]), int(d.dual_v[i]),
                        int(d.gate[i])] for i in range(d.n_dual_edges)],
    }, separators=(",", ":")) + "\n"


def _add_geometry(sp, full=True):
    sp.add_argument("--n", type=int, default=1)
    if full:
        sp.add_argument("--cols", type=int, default=1)
        sp.add_argument("--rows", type=int, default=1)
    sp.add_argument("--generator", default="carpet3")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="carpetperc",
        description="Bond percolation on the Sierpinski carpet lattice")
    ap.add_argument("--config", help="JSON config file; flags override it")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--max-level", type=int, default=None)
    # the same globals are accepted after the subcommand; SUPPRESS keeps the
    # subparser from clobbering values parsed at the top level
    common = argparse.ArgumentParser(add_help=False)
    for flag, kw in (("--config", {}), ("--seed", {"type": int}),
                     ("--out", {}), ("--workers", {"type": int}),
                     ("--max-level", {"type": int})):
        common.add_argument(flag, default=argparse.SUPPRESS, **kw)
    sub = ap.add_subparsers(dest="cmd", required=True,
                            parser_class=lambda **kw: argparse.ArgumentParser(
                                parents=[common], **kw))

    sp = sub.add_parser("lattice", help="construct a sponge window")
    _add_geometry(sp)
    sp.add_argument("--format", choices=("json", "svg", "counts"),
                    default="counts")

    sp = sub.add_parser("dual", help="face-contracted dual of a window")
    _add_geometry(sp)
    sp.add_argument("--format", choices=("json", "svg"), default="json")

    sp = sub.add_parser("sample", help="sample one bond configuration")
    _add_geometry(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--format", choices=("bits", "svg"), default="bits")
    sp.add_argument("--dual-overlay", action="store_true")

    sp = sub.add_parser("events", help="per-sample event indicators")
    _add_geometry(sp, full=False)
    sp.add_argument("--event", required=True,
                    choices=("delta", "chain", "surround", "e", "c-bl",
                             "c-all", "d-implication", "pivotal", "lowest"))
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--x", default=None, help="point 'a,b' for chain/surround")
    sp.add_argument("--m0", type=int, default=1)

    sp = sub.add_parser("estimate", help="Monte Carlo event probability")
    _add_geometry(sp)
    sp.add_argument("--event", default="lr")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--samples", type=int, default=1000)

    sp = sub.add_parser("sweep", help="estimate over a (p, n) grid")
    sp.add_argument("--event", default="lr")
    sp.add_argument("--p-grid", default="0.3:0.7:0.05")
    sp.add_argument("--n-list", default="1,2")
    sp.add_argument("--cols", type=int, default=1)
    sp.add_argument("--rows", type=int, default=1)
    sp.add_argument("--generator", default="carpet3")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--uncoupled", action="store_true")
    sp.add_argument("--preset", choices=("kumagai",), default=None)

    sp = sub.add_parser("pc", help="finite-size critical point by bisection")
    _add_geometry(sp)
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--tol", type=float, default=0.01)
    sp.add_argument("--dual", action="store_true")

    sp = sub.add_parser("theta", help="origin-to-boundary proxy")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--generator", default="carpet3")

    sp = sub.add_parser("tau", help="two-point connection probability")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--generator", default="carpet3")

    sp = sub.add_parser("russo", help="derivative vs pivotal-count check")
    _add_geometry(sp)
    sp.add_argument("--p", type=float, default=0.5)
    sp.add_argument("--h", type=float, default=0.02)
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--pivotal-samples", type=int, default=None)

    sp = sub.add_parser("recursion", help="scalar tables")
    sp.add_argument("--table", required=True,
                    choices=("f", "g", "phi", "psi", "xeps", "peps", "gw"))
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--grid", default="0:1:0.1")

    sp = sub.add_parser("branching", help="tree box geometry and field")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--audit", action="store_true")
    sp.add_argument("--sample", action="store_true")
    sp.add_argument("--p", type=float, default=0.9)
    sp.add_argument("--samples", type=int, default=10)
    sp.add_argument("--format", choices=("json", "svg", "csv"), default="json")
    return ap


def _cmd_lattice(args, manifest):
    T = _parse_generator(args.generator)
    g = build_sponge(args.n, args.cols, args.rows, T, max_level=args.max_level)
    if args.format == "counts":
        _write(args.out, f"vertices,{g.n_vertices}\nedges,{g.n_edges}\n",
               manifest)
    elif args.format == "json":
        _write(args.out, _graph_json(g), manifest)
    else:
        _write(args.out, render_graph(g, build_dual(g)), manifest)
    return EXIT_OK


def _cmd_dual(args, manifest):
    T = _parse_generator(args.generator)
    g = build_sponge(args.n, args.cols, args.rows, T, max_level=args.max_level)
    d = build_dual(g)
    if args.format == "json":
        _write(args.out, _dual_json(d), manifest)
    else:
        _write(args.out, render_dual(d), manifest)
    return EXIT_OK


def _cmd_sample(args, manifest):
    T = _parse_generator(args.generator)
    g = build_sponge(args.n, args.cols, args.rows, T, max_level=args.max_level)
    cfg = sample_config(g, args.p, args.seed)
    if args.format == "bits":
        _write(args.out, "".join(str(int(b)) for b in cfg.bits) + "\n",
               manifest)
    else:
        d = build_dual(g) if args.dual_overlay else None
        _write(args.out, render_config(cfg, args.dual_overlay, d), manifest)
    return EXIT_OK


def _events_setup(args):
    """Window graph and per-config indicator function for a named event."""
    from . import paperevents as pe
    T = _parse_generator(args.generator)
    n = args.n
    side = T.base ** n
    if args.event == "delta":
        g = window_graph(Rect(0, 0, side, side), T)
        return g, lambda c: int(pe.detect_delta(c, n))
    if args.event == "e":
        g = window_graph(Rect(0, 0, side, side // T.base), T)
        return g, lambda c: int(pe.detect_E(c, n))
    if args.event == "chain":
        x = _parse_point(args.x)
        from .carpet import level_of
        L = T.base ** max(level_of(x, T), args.m0)
        g = window_graph(Rect(0, 0, L, L), T)
        return g, lambda c: int(pe.detect_delta_chain(c, x, args.m0))
    if args.event == "surround":
        x = _parse_point(args.x)
        from .carpet import nth_box
        w = nth_box(x, n, T)
        g = window_graph(Rect(w[0] - side, w[1] - side,
                              w[0] + 2 * side, w[1] + 2 * side), T)
        return g, lambda c: int(pe.detect_surrounding_dual(c, x, n))
    if args.event in ("c-bl", "c-all"):
        box = T.base ** (n + 2)
        g = window_graph(Rect(-3 * side, -3 * side, box + 3 * side,
                              box + 3 * side), T)
        if args.event == "c-bl":
            return g, lambda c: int(pe.detect_C(c, n, "bl"))
        return g, lambda c: int(pe.detect_C_composite(c, n, "all"))
    if args.event == "d-implication":
        box = T.base ** (n + 2)
        g = window_graph(Rect(-T.base ** (n + 1), -T.base ** (n + 1),
                              box + T.base ** (n + 1) * 4,
                              box + T.base ** (n + 1) * 4), T)
        return g, lambda c: int(pe.check_d_implication(c, n))
    if args.event == "pivotal":
        g = build_sponge(n, 2, 2, T)
        return g, lambda c: len(pe.pivotal_edges(c, pe.CrossingEvent("LR")))
    if args.event == "lowest":
        g = build_sponge(n, 2, 2, T)
        return g, lambda c: int(pe.lowest_crossing(c) is not None)
    raise DomainError(f"unknown event {args.event!r}")


def _cmd_events(args, manifest):
    g, fn = _events_setup(args)
    sampler = WindowSampler(g, args.seed)
    rows = ["sample_index,indicator"]
    total = 0
    for i in range(args.samples):
        v = fn(sampler.config(args.p, i))
        rows.append(f"{i},{v}")
        total += v
    rows.append(f"# rate,{total / args.samples:.10g}")
    _write(args.out, "\n".join(rows) + "\n", manifest)
    return EXIT_OK


def _cmd_estimate(args, manifest):
    T = _parse_generator(args.generator)
    g = build_sponge(args.n, args.cols, args.rows, T, max_level=args.max_level)
    est = estimate(args.event, g, args.p, args.samples, args.seed,
                   workers=args.workers, generator=T, n=args.n,
                   cols=args.cols, rows=args.rows)
    _write(args.out, Estimate.CSV_HEADER + "\n" + est.csv_row() + "\n",
           manifest)
    return EXIT_OK


def _cmd_sweep(args, manifest):
    T = _parse_generator(args.generator)
    if args.preset == "kumagai":
        grids = _parse_grid(args.p_grid)
        ns = [int(t) for t in args.n_list.split(",")]
        rows = ["event,n,cols,rows,p,samples,successes,mean,stderr,ci_lo,"
                "ci_hi,seed"]
        for cols, rws in ((9, 1), (9, 2)):
            ests = sweep("lr", grids, ns, cols, rws, args.samples, args.seed,
                         T, coupled=not args.uncoupled, workers=args.workers)
            rows += [e.csv_row() for e in ests]
        _write(args.out, "\n".join(rows) + "\n", manifest)
        return EXIT_OK
    ests = sweep(args.event, _parse_grid(args.p_grid),
                 [int(t) for t in args.n_list.split(",")], args.cols,
                 args.rows, args.samples, args.seed, T,
                 coupled=not args.uncoupled, workers=args.workers)
    text = Estimate.CSV_HEADER + "\n" + "\n".join(e.csv_row() for e in ests)
    _write(args.out, text + "\n", manifest)
    return EXIT_OK


def _cmd_pc(args, manifest):
    T = _parse_generator(args.generator)
    p_hat, (lo, hi), est = estimate_pc(args.n, args.cols, args.rows,
                                       args.samples, args.tol, args.seed, T,
                                       workers=args.workers, dual=args.dual)
    text = ("p_hat,bracket_lo,bracket_hi,dual\n"
            f"{p_hat:.10g},{lo:.10g},{hi:.10g},{int(args.dual)}\n"
            + Estimate.CSV_HEADER + "\n" + est.csv_row() + "\n")
    _write(args.out, text, manifest)
    return EXIT_OK


def _cmd_theta(args, manifest):
    T = _parse_generator(args.generator)
    est = estimate_theta(args.p, args.n, args.samples, args.seed, T,
                         workers=args.workers)
    _write(args.out, Estimate.CSV_HEADER + "\n" + est.csv_row() + "\n",
           manifest)
    return EXIT_OK


def _cmd_tau(args, manifest):
    T = _parse_generator(args.generator)
    est = estimate_tau(args.p, _parse_point(args.x), _parse_point(args.y),
                       args.samples, args.seed, T, workers=args.workers)
    _write(args.out, Estimate.CSV_HEADER + "\n" + est.csv_row() + "\n",
           manifest)
    return EXIT_OK


def _cmd_russo(args, manifest):
    T = _parse_generator(args.generator)
    rep = russo_check(args.n, args.cols, args.rows, args.p, args.h,
                      args.samples, args.seed, T, workers=args.workers,
                      pivotal_samples=args.pivotal_samples)
    keys = ["derivative", "derivative_se", "pivotal_mean", "pivotal_se",
            "pooled_se", "pass"]
    text = ",".join(keys) + "\n" + ",".join(
        f"{rep[k]:.10g}" if k != "pass" else str(int(rep[k])) for k in keys)
    _write(args.out, text + "\n", manifest)
    return EXIT_OK


def _cmd_recursion(args, manifest):
    grid = _parse_grid(args.grid)
    rows = []
    if args.table == "f":
        rows.append("k,x,value,residual")
        rows += [f"{args.k},{x:.10g},{recursion.eval_f(args.k, x):.10g},0"
                 for x in grid]
    elif args.table == "g":
        rows.append("k,a,b,value,residual")
        rows += [f"{args.k},{x:.10g},{x:.10g},"
                 f"{recursion.eval_g(args.k, x, x):.10g},0" for x in grid]
    elif args.table in ("phi", "psi"):
        fn = recursion.eval_phi if args.table == "phi" else recursion.eval_psi
        rows.append("x,value,residual")
        rows += [f"{x:.10g},{fn(x):.10g},0" for x in grid]
    elif args.table == "xeps":
        rows.append("eps,value,residual")
        for x in grid:
            try:
                r = recursion.solve_x_eps(x)
                rows.append(f"{x:.10g},{r.value:.10g},{r.residual:.3g}")
            except CarpetError:
                rows.append(f"{x:.10g},nan,nan")
    elif args.table == "peps":
        rows.append("eps,value,residual")
        for x in grid:
            r = recursion.solve_p_eps(x)
            rows.append(f"{x:.10g},{r.value:.10g},{r.residual:.3g}")
    elif args.table == "gw":
        rows.append("p,extinction,residual")
        rows += [f"{x:.10g},{recursion.gw_extinction(x):.10g},0" for x in grid]
    _write(args.out, "\n".join(rows) + "\n", manifest)
    return EXIT_OK


def _cmd_branching(args, manifest):
    T = _parse_generator(getattr(args, "generator", "carpet3"))
    if args.audit:
        rep = branching.geometry_audit(args.N, args.m, T)
        _write(args.out, json.dumps(rep, indent=2) + "\n", manifest)
        return EXIT_OK if rep["ok"] else EXIT_RUNTIME
    nodes = branching.tree_nodes(args.N - args.m)
    if args.sample:
        from .estimator import branching_mc
        nodes, X, XD, Z = branching_mc(args.N, args.m, args.p, args.samples,
                                       args.seed, T, workers=args.workers)
        rows = ["sample_index,node,x,x_mirror,z"]
        for s in range(len(X)):
            for k, j in enumerate(nodes):
                rows.append(f"{s},{j.label()},{X[s, k]},{XD[s, k]},{Z[s, k]}")
        _write(args.out, "\n".join(rows) + "\n", manifest)
        return EXIT_OK
    boxes = []
    payload = []
    for j in nodes:
        b = branching.build_box(j, args.N, T.base)
        mb = branching.mirror_box(b)
        boxes += [b, mb]
        payload.append({
            "node": j.label(), "kind": b.kind,
            "rects": [[name, [r.x0, r.y0, r.x1, r.y1], d]
                      for name, r, d in b.rects],
            "mirror_rects": [[name, [r.x0, r.y0, r.x1, r.y1], d]
                             for name, r, d in mb.rects],
        })
    if args.format == "svg":
        amb = branching.ambient_rect(args.N, args.m, T.base, pad=1)
        _write(args.out, render_boxes(boxes, amb), manifest)
    else:
        _write(args.out, json.dumps(payload, separators=(",", ":")) + "\n",
               manifest)
    return EXIT_OK


_HANDLERS = {
    "lattice": _cmd_lattice, "dual": _cmd_dual, "sample": _cmd_sample,
    "events": _cmd_events, "estimate": _cmd_estimate, "sweep": _cmd_sweep,
    "pc": _cmd_pc, "theta": _cmd_theta, "tau": _cmd_tau, "russo": _cmd_russo,
    "recursion": _cmd_recursion, "branching": _cmd_branching,
}


def parse_and_dispatch(argv) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if args.config:
        try:
            cfg = load_config(args.config)
        except (OSError, json.JSONDecodeError) as e:
            sys.stderr.write(f"config error: {e}\n")
            return EXIT_USAGE
        merged = []
        for k, v in cfg.items():
            if k == "cmd":
                continue
            flag = "--" + k.replace("_", "-")
            if isinstance(v, bool):
                if v:
                    merged.append(flag)
            else:
                merged += [flag, str(v)]
        merged = [cfg.get("cmd", args.cmd)] + merged
        # explicit flags override the config file
        explicit = [a for a in argv if a not in ("--config", args.config)]
        try:
            args = ap.parse_args(_merge_args(merged, explicit))
        except SystemExit as e:
            return EXIT_OK if e.code == 0 else EXIT_USAGE
    manifest = {k: v for k, v in vars(args).items()
                if k not in ("config", "out") and v is not None}
    try:
        return _HANDLERS[args.cmd](args, manifest)
    except CarpetError as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return EXIT_RUNTIME
    except (ValueError, KeyError) as e:
        sys.stderr.write(f"invalid arguments: {e}\n")
        return EXIT_USAGE


def _merge_args(base, override):
    """Config-derived argv with explicit flags appended (argparse keeps the
    last occurrence)."""
    if override and not override[0].startswith("-"):
        base = [override[0]] + base[1:]
        override = override[1:]
    return base + override


def main():
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
