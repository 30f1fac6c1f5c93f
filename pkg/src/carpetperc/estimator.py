"""Monte Carlo estimation engine: reproducible replica-keyed sampling, event
probability estimates with errors, coupled sweeps, percolation-function
proxies, finite-size critical-point bisection, and the derivative/pivotal
consistency check."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .carpet import CARPET3, GeneratorSet, Rect, build_sponge, window_graph
from .errors import DomainError, SaturationError, StarvationError
from .paperevents import CrossingEvent, pivotal_edges
from .percolation import (
    BondConfiguration,
    crossing_tester,
    dual_crossing_tester,
    replica_uniforms,
    subwindow,
)

_Z95 = 1.959963984540054


def wilson_interval(successes: int, n: int, z: float = _Z95):
    if n == 0:
        return (0.0, 1.0)
    ph = successes / n
    denom = 1.0 + z * z / n
    center = (ph + z * z / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class Estimate:
    event: str
    n: int
    cols: int
    rows: int
    p: float
    samples: int
    successes: int
    seed: int
    mean: float = field(init=False)
    stderr: float = field(init=False)
    ci_lo: float = field(init=False)
    ci_hi: float = field(init=False)
    ci_lo_normal: float = field(init=False)
    ci_hi_normal: float = field(init=False)

    def __post_init__(self):
        m = self.successes / self.samples if self.samples else 0.0
        se = math.sqrt(m * (1 - m) / self.samples) if self.samples else 0.0
        lo, hi = wilson_interval(self.successes, self.samples)
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "stderr", se)
        object.__setattr__(self, "ci_lo", lo)
        object.__setattr__(self, "ci_hi", hi)
        object.__setattr__(self, "ci_lo_normal", max(0.0, m - _Z95 * se))
        object.__setattr__(self, "ci_hi_normal", min(1.0, m + _Z95 * se))

    CSV_HEADER = "event,n,cols,rows,p,samples,successes,mean,stderr,ci_lo,ci_hi,seed"

    def csv_row(self) -> str:
        return (f"{self.event},{self.n},{self.cols},{self.rows},{self.p:.10g},"
                f"{self.samples},{self.successes},{self.mean:.10g},"
                f"{self.stderr:.10g},{self.ci_lo:.10g},{self.ci_hi:.10g},"
                f"{self.seed}")


# ---------------------------------------------------------------------------
# batched sampling over a window


def _chunk_bounds(samples: int, chunk: int):
    out = []
    s = 0
    while s < samples:
        out.append((s, min(s + chunk, samples)))
        s += chunk
    return out


class WindowSampler:
    """Generates replica-keyed Bernoulli bit matrices for one window graph,
    optionally restricted to an edge subset (other edges stay closed)."""

    def __init__(self, graph, seed: int, tag: str = "mc",
                 edge_subset: np.ndarray | None = None):
        self.graph = graph
        self.seed = seed
        self.tag = tag
        self.subset = (np.arange(graph.n_edges, dtype=np.int64)
                       if edge_subset is None
                       else np.asarray(edge_subset, dtype=np.int64))

    def bits_chunk(self, p: float, lo: int, hi: int) -> np.ndarray:
        m = len(self.subset)
        out = np.zeros((hi - lo, self.graph.n_edges), dtype=np.uint8)
        for i in range(lo, hi):
            u = replica_uniforms(self.seed, self.tag, i, m)
            out[i - lo, self.subset] = u < p
        return out

    def config(self, p: float, replica: int) -> BondConfiguration:
        bits = self.bits_chunk(p, replica, replica + 1)[0]
        return BondConfiguration(self.graph, bits, p=p, seed=self.seed,
                                 replica=replica)


def _eval_events(sampler: WindowSampler, events, p: float, samples: int,
                 workers: int = 1) -> np.ndarray:
    """(len(events),) success counts; events expose .many(bits2d)->uint8."""
    E = sampler.graph.n_edges
    chunk = max(1, min(1024, int(5e7 // max(E, 1))))
    bounds = _chunk_bounds(samples, chunk)

    def run(b):
        lo, hi = b
        bits = sampler.bits_chunk(p, lo, hi)
        return np.array([ev.many(bits).sum() for ev in events], dtype=np.int64)

    if workers <= 1:
        parts = [run(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, bounds))
    return np.sum(parts, axis=0) if parts else np.zeros(len(events), np.int64)


# ---------------------------------------------------------------------------
# event specs for the estimator


class BoundEvent:
    """An event bound to a window, evaluable on bit matrices."""

    def __init__(self, name, many, one=None):
        self.name = name
        self.many = many
        self._one = one

    def one(self, bits):
        if self._one is not None:
            return self._one(bits)
        return bool(self.many(bits[None, :])[0])


def _py_event(name, fn, graph):
    def many(bits2d):
        out = np.zeros(len(bits2d), dtype=np.uint8)
        for i, row in enumerate(bits2d):
            out[i] = fn(BondConfiguration(graph, row))
        return out
    return BoundEvent(name, many)


def bind_event(spec: str, graph, generator: GeneratorSet = CARPET3,
               **kw) -> BoundEvent:
    """Bind a named event to a window graph.

    Names: lr, ud, lr*, ud* (crossings of the whole window); joint-lr-ud;
    theta@n; delta@n; e@n; c-<corner>@n; c-all@n; d-implication@n;
    chain@x,m0; surround@x,n; circuit-open@n; circuit-dual@n.
    """
    from . import paperevents as pe
    from .percolation import has_circuit_around

    if spec in ("lr", "ud"):
        t = crossing_tester(graph, spec.upper())
        return BoundEvent(spec, t.many, t.one)
    if spec in ("lr*", "ud*"):
        t = dual_crossing_tester(graph, spec[:2].upper())
        return BoundEvent(spec, t.many, t.one)
    if spec == "joint-lr-ud":
        a = crossing_tester(graph, "LR")
        b = crossing_tester(graph, "UD")
        return BoundEvent(spec, lambda m: a.many(m) & b.many(m))
    kind, _, arg = spec.partition("@")
    if kind == "theta":
        n = int(arg)
        side = generator.base ** n
        sw = subwindow(graph, Rect(0, 0, side, side))
        v = sw.graph.vertices
        src = np.nonzero((v[:, 0] == 0) & (v[:, 1] == 0))[0]
        dst = np.nonzero((v[:, 0] == side) | (v[:, 1] == side))[0]
        from .percolation import CrossingTester
        t = CrossingTester(sw, src, dst)
        return BoundEvent(spec, t.many, t.one)
    if kind == "delta":
        n = int(arg)
        return _py_event(spec, lambda c: pe.detect_delta(c, n), graph)
    if kind == "e":
        n = int(arg)
        return _py_event(spec, lambda c: pe.detect_E(c, n), graph)
    if kind in ("c-bl", "c-br", "c-tl", "c-tr"):
        n = int(arg)
        corner = kind[2:]
        return _py_event(spec, lambda c: pe.detect_C(c, n, corner), graph)
    if kind in ("c-all", "c-bottom", "c-top"):
        n = int(arg)
        which = kind[2:]
        return _py_event(spec, lambda c: pe.detect_C_composite(c, n, which),
                         graph)
    if kind == "d-implication":
        n = int(arg)
        return _py_event(spec, lambda c: pe.check_d_implication(c, n), graph)
    if kind == "chain":
        x, m0 = kw["x"], kw["m0"]
        return _py_event(spec, lambda c: pe.detect_delta_chain(c, x, m0), graph)
    if kind == "surround":
        x, n = kw["x"], int(arg)
        return _py_event(spec, lambda c: pe.detect_surrounding_dual(c, x, n),
                         graph)
    if kind == "circuit-open":
        n = int(arg)
        return _py_event(spec, lambda c: has_circuit_around(c, n, "open"), graph)
    if kind == "circuit-dual":
        n = int(arg)
        return _py_event(spec, lambda c: has_circuit_around(c, n, "dual-closed"),
                         graph)
    raise DomainError(f"unknown event spec {spec!r}")


# ---------------------------------------------------------------------------
# public estimation operations


def _check_params(p, samples):
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p={p} outside [0, 1]")
    if samples < 1:
        raise DomainError("samples must be >= 1")


def estimate(event: str, graph, p: float, samples: int, seed: int,
             workers: int = 1, generator: GeneratorSet = CARPET3,
             n: int = 0, cols: int = 1, rows: int = 1, **kw) -> Estimate:
    """Probability estimate of a named event over i.i.d. replica configurations."""
    _check_params(p, samples)
    ev = bind_event(event, graph, generator, **kw)
    sampler = WindowSampler(graph, seed)
    succ = int(_eval_events(sampler, [ev], p, samples, workers)[0])
    return Estimate(event, n, cols, rows, p, samples, succ, seed)


def estimate_crossing(n: int, cols: int, rows: int, p: float, samples: int,
                      seed: int, direction: str = "LR", dual: bool = False,
                      T: GeneratorSet = CARPET3, workers: int = 1) -> Estimate:
    """Crossing probability of the (cols x rows) level-n sponge window."""
    g = build_sponge(n, cols, rows, T)
    name = direction.lower() + ("*" if dual else "")
    return estimate(name, g, p, samples, seed, workers, T,
                    n=n, cols=cols, rows=rows)


def sweep(event: str, p_grid, n_list, cols: int, rows: int, samples: int,
          seed: int, T: GeneratorSet = CARPET3, coupled: bool = True,
          workers: int = 1):
    """Grid of estimates over (n, p); the coupled variant reuses each replica's
    uniforms across the whole p-grid, so increasing-event estimates are
    monotone in p exactly."""
    rows_out = []
    for n in n_list:
        g = build_sponge(n, cols, rows, T)
        ev = bind_event(event, g, T)
        sampler = WindowSampler(g, seed if coupled else seed + 1000 * n)
        for ip, p in enumerate(p_grid):
            _check_params(p, samples)
            s = sampler if coupled else WindowSampler(
                g, seed, tag=f"sweep{ip}")
            succ = int(_eval_events(s, [ev], p, samples, workers)[0])
            rows_out.append(Estimate(event, n, cols, rows, float(p), samples,
                                     succ, seed))
    return rows_out


def estimate_theta(p: float, n: int, samples: int, seed: int,
                   T: GeneratorSet = CARPET3, workers: int = 1) -> Estimate:
    """Finite-size proxy: origin connected to the level-n box's far boundary
    lines {x1 = 3^n or x2 = 3^n} inside the box."""
    g = build_sponge(n, 1, 1, T)
    return estimate(f"theta@{n}", g, p, samples, seed, workers, T,
                    n=n, cols=1, rows=1)


def tau_window(x, y, T: GeneratorSet = CARPET3) -> Rect:
    """Ambient full-lattice window for a two-point connection estimate."""
    from .carpet import separation_scale
    nxy = separation_scale(x, y, T)
    reach = max(abs(int(c)) for c in (*x, *y))
    M = max(nxy + 2, 1)
    while T.base ** M < 2 * reach:
        M += 1
    s = T.base ** M
    return Rect(-s, -s, s, s)


def estimate_tau(p: float, x, y, samples: int, seed: int,
                 T: GeneratorSet = CARPET3, workers: int = 1) -> Estimate:
    """Probability that x and y share an open cluster inside an auto-sized
    window (a finite-window approximation, reported with its window)."""
    _check_params(p, samples)
    rect = tau_window(x, y, T)
    g = window_graph(rect, T)
    src = np.array([g.vertex_id(*x)], dtype=np.int64)
    dst = np.array([g.vertex_id(*y)], dtype=np.int64)
    if x == y:
        return Estimate(f"tau{tuple(x)}-{tuple(y)}", 0, 1, 1, p, samples,
                        samples, seed)
    sw = subwindow(g, g.rect)
    from .percolation import CrossingTester
    t = CrossingTester(sw, src, dst)
    ev = BoundEvent("tau", t.many, t.one)
    sampler = WindowSampler(g, seed)
    succ = int(_eval_events(sampler, [ev], p, samples, workers)[0])
    return Estimate(f"tau{tuple(x)}-{tuple(y)}", 0, 1, 1, p, samples, succ,
                    seed)


def estimate_pc(n: int, cols: int, rows: int, samples: int, tol: float,
                seed: int, T: GeneratorSet = CARPET3, workers: int = 1,
                dual: bool = False):
    """Bisection for the parameter where the window crossing probability is 1/2.

    Replica uniforms are fixed across the bisection (monotone coupling), so the
    empirical crossing curve is exactly monotone and the bracket deterministic.
    With dual=True the closed-dual crossing is bisected in the dual lattice's
    own density q = 1 - p (the dual edge is open when the primal edge is
    closed), and the returned value is that q.
    Returns (p_hat, (lo, hi), Estimate at p_hat).
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    g = build_sponge(n, cols, rows, T)
    name = ("lr*" if dual else "lr")
    ev = bind_event(name, g, T)
    sampler = WindowSampler(g, seed)

    def phat(q):
        p = (1.0 - q) if dual else q
        return _eval_events(sampler, [ev], p, samples, workers)[0] / samples

    lo, hi = 0.0, 1.0
    if phat(lo) > 0.5 or phat(hi) < 0.5:
        raise SaturationError("crossing curve does not bracket 1/2 on [0, 1]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phat(mid) < 0.5:
            lo = mid
        else:
            hi = mid
    q_hat = 0.5 * (lo + hi)
    p_eval = (1.0 - q_hat) if dual else q_hat
    succ = int(_eval_events(sampler, [ev], p_eval, samples, workers)[0])
    return q_hat, (lo, hi), Estimate(name, n, cols, rows, p_eval, samples,
                                     succ, seed)


def russo_check(n: int, cols: int, rows: int, p: float, h: float,
                samples: int, seed: int, T: GeneratorSet = CARPET3,
                workers: int = 1, pivotal_samples: int | None = None) -> dict:
    """Compare the coupled central difference (P(p+h) - P(p-h)) / 2h with the
    direct estimate of the expected pivotal-edge count at p."""
    if not (0 < h < min(p, 1 - p)):
        raise DomainError("need 0 < h < min(p, 1-p)")
    g = build_sponge(n, cols, rows, T)
    ev = bind_event("lr", g, T)
    sampler = WindowSampler(g, seed)
    E = g.n_edges
    chunk = max(1, min(1024, int(5e7 // max(E, 1))))
    diffs_sum = 0
    diffs_sq = 0.0
    for lo_i, hi_i in _chunk_bounds(samples, chunk):
        out = np.zeros((hi_i - lo_i, E), dtype=np.uint8)
        dm = np.zeros(hi_i - lo_i, dtype=np.int64)
        for i in range(lo_i, hi_i):
            u = replica_uniforms(seed, "mc", i, E)
            out[i - lo_i] = u < (p + h)
        hi_ind = ev.many(out)
        for i in range(lo_i, hi_i):
            u = replica_uniforms(seed, "mc", i, E)
            out[i - lo_i] = u < (p - h)
        lo_ind = ev.many(out)
        dm = hi_ind.astype(np.int64) - lo_ind.astype(np.int64)
        diffs_sum += int(dm.sum())
        diffs_sq += float((dm * dm).sum())
    deriv = diffs_sum / samples / (2 * h)
    var = diffs_sq / samples - (diffs_sum / samples) ** 2
    deriv_se = math.sqrt(max(var, 0.0) / samples) / (2 * h)

    k = pivotal_samples or samples
    counts = np.empty(k, dtype=np.int64)
    cev = CrossingEvent("LR")
    for i in range(k):
        cfg = sampler.config(p, i)
        counts[i] = len(pivotal_edges(cfg, cev))
    en = float(counts.mean())
    en_se = float(counts.std(ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    pooled = math.hypot(deriv_se, en_se)
    return {
        "derivative": deriv, "derivative_se": deriv_se,
        "pivotal_mean": en, "pivotal_se": en_se,
        "pooled_se": pooled,
        "pass": abs(deriv - en) <= 3.0 * pooled,
        "n": n, "cols": cols, "rows": rows, "p": p, "h": h,
        "samples": samples, "pivotal_samples": k, "seed": seed,
    }


def conditional_pivotal(n: int, cols: int, rows: int, p: float, budget: int,
                        seed: int, T: GeneratorSet = CARPET3) -> dict:
    """Rejection-sampled estimate of the mean pivotal count conditioned on the
    crossing event occurring."""
    _check_params(p, budget)
    g = build_sponge(n, cols, rows, T)
    t = crossing_tester(g, "LR")
    sampler = WindowSampler(g, seed)
    cev = CrossingEvent("LR")
    counts = []
    for i in range(budget):
        cfg = sampler.config(p, i)
        if not t.one(cfg.bits):
            continue
        counts.append(len(pivotal_edges(cfg, cev)))
    if not counts:
        raise StarvationError(
            f"no accepted sample in {budget} trials at p={p}")
    arr = np.asarray(counts, dtype=float)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return {"mean": float(arr.mean()), "stderr": se, "accepted": len(arr),
            "budget": budget, "p": p, "seed": seed}


# ---------------------------------------------------------------------------
# branching-field estimation


def branching_mc(N: int, m: int, p: float, samples: int, seed: int,
                 T: GeneratorSet = CARPET3, workers: int = 1):
    """Indicator matrices for the tree site field: per sample and node, the
    primal box event, its mirror event, and their product."""
    from .branching import ambient_rect, build_box, mirror_box, tree_nodes

    amb = ambient_rect(N, m, T.base, pad=1)
    g = window_graph(amb, T)
    nodes = tree_nodes(N - m)
    testers = []
    used = []
    for j in nodes:
        b = build_box(j, N, T.base)
        for bb in (b, mirror_box(b)):
            ts = [crossing_tester(g, d, r) for _, r, d in bb.rects]
            testers.append(ts)
            for _, r, _ in bb.rects:
                used.append(subwindow(g, r).edge_ids)
    subset = np.unique(np.concatenate(used))
    sampler = WindowSampler(g, seed, edge_subset=subset)
    E = g.n_edges
    chunk = max(1, min(256, int(4e7 // max(E, 1))))
    X = np.zeros((samples, len(nodes)), dtype=np.uint8)
    XD = np.zeros((samples, len(nodes)), dtype=np.uint8)

    def run(bounds):
        lo, hi = bounds
        bits = sampler.bits_chunk(p, lo, hi)
        xs = np.zeros((hi - lo, len(nodes)), dtype=np.uint8)
        xd = np.zeros((hi - lo, len(nodes)), dtype=np.uint8)
        for k in range(len(nodes)):
            a = np.ones(hi - lo, dtype=np.uint8)
            for t in testers[2 * k]:
                a &= t.many(bits)
            xs[:, k] = a
            a = np.ones(hi - lo, dtype=np.uint8)
            for t in testers[2 * k + 1]:
                a &= t.many(bits)
            xd[:, k] = a
        return lo, hi, xs, xd

    bounds = _chunk_bounds(samples, chunk)
    if workers <= 1:
        results = [run(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, bounds))
    for lo, hi, xs, xd in results:
        X[lo:hi] = xs
        XD[lo:hi] = xd
    return nodes, X, XD, X & XD
