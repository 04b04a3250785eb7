"""Derived quantities of P(t) traces: first maximum, the classical-comparison
gate, regime scans and the datasets behind each published curve."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .core import GroverInstance
from .errors import DomainError
from .memory import MarkovNoiseParams, simulate
from .noise import NoiseLayout, NoiseUnitary
from .trace import SimulationTrace, format_csv

CONFIDENCE = 0.95


def default_t_max(N: int) -> int:
    """Three times the noiseless optimum, and never below 3."""
    return max(3, 3 * int(math.floor(math.pi / 4 * math.sqrt(N))))


def first_maximum(trace: SimulationTrace | Sequence[float]) -> tuple[int, float]:
    """Earliest local maximum ``(T, P(T))`` with ``T >= 1``.

    A trace that never rises after t = 1 gives T = 1. A trace that rises up
    to its last point gives the last point.
    """
    P = np.asarray(trace.P if isinstance(trace, SimulationTrace) else trace, dtype=float)
    if P.size < 4:
        raise DomainError("first_maximum needs at least 3 points beyond t = 0")
    if np.all(np.diff(P[1:]) <= 0):
        return 1, float(P[1])
    for t in range(1, P.size - 1):
        if P[t] >= P[t - 1] and P[t] >= P[t + 1]:
            return t, float(P[t])
    t = P.size - 1
    return t, float(P[t])


@dataclass(frozen=True)
class PerformanceReport:
    T: int
    P: float
    q: int
    P_tilde: float
    advantage: bool


def performance_gate(N: int, T: int, P: float) -> PerformanceReport:
    """Compare ``q = floor(N / 2T)`` repetitions against a classical search."""
    if T < 1:
        raise DomainError(f"T={T} must be at least 1")
    q = N // (2 * T)
    P_tilde = 1.0 - (1.0 - P) ** q if q > 0 else 0.0
    advantage = T < N / 2 and q >= 1 and P_tilde >= CONFIDENCE
    return PerformanceReport(T, float(P), q, float(P_tilde), bool(advantage))


# -- regime scan ---------------------------------------------------------------

@dataclass(frozen=True)
class RegimePoint:
    n: int
    mu: float
    p: float
    T: int
    P: float
    q: int
    P_tilde: float
    advantage: bool

    @property
    def N(self) -> int:
        return 1 << self.n


@dataclass(frozen=True)
class RegimeMap:
    points: tuple[RegimePoint, ...]
    n_list: tuple[int, ...]
    mu_grid: tuple[float, ...]
    p_grid: tuple[float, ...]
    meta: Mapping[str, Any] = field(default_factory=dict)

    def boundary(self, n: int, mu: float) -> float | None:
        """Largest grid ``p`` with advantage at ``(n, mu)``; None if none passes."""
        passing = [pt.p for pt in self.points if pt.n == n and pt.mu == mu and pt.advantage]
        return max(passing) if passing else None

    def contiguous_boundary(self, n: int, mu: float) -> float | None:
        """Largest grid ``p`` such that every grid point from p = 0 up to it passes."""
        best = None
        for pt in sorted((pt for pt in self.points if pt.n == n and pt.mu == mu), key=lambda q: q.p):
            if not pt.advantage:
                break
            best = pt.p
        return best

    def _as_level(self, n, mu) -> float:
        b = self.boundary(n, mu)
        return -1.0 if b is None else b

    def monotone_in_mu(self) -> dict[int, bool]:
        out = {}
        for n in self.n_list:
            levels = [self._as_level(n, mu) for mu in sorted(self.mu_grid)]
            out[1 << n] = all(b >= a for a, b in zip(levels, levels[1:]))
        return out

    def monotone_in_N(self) -> dict[float, bool]:
        out = {}
        for mu in self.mu_grid:
            levels = [self._as_level(n, mu) for n in sorted(self.n_list)]
            out[mu] = all(b >= a for a, b in zip(levels, levels[1:]))
        return out

    def boundary_table(self) -> dict[str, list]:
        cols: dict[str, list] = {"N": [], "mu": [], "p_star": [], "p_star_contiguous": []}
        for n in self.n_list:
            for mu in self.mu_grid:
                cols["N"].append(1 << n)
                cols["mu"].append(mu)
                cols["p_star"].append(self.boundary(n, mu))
                cols["p_star_contiguous"].append(self.contiguous_boundary(n, mu))
        return cols

    def points_table(self) -> dict[str, list]:
        names = ["n", "N", "mu", "p", "T", "P", "q", "P_tilde", "advantage"]
        return {k: [getattr(pt, k) for pt in self.points] for k in names}


def _scan_point(args) -> RegimePoint:
    n, mu, p, u, layout, t_max, method = args
    trace = simulate(GroverInstance(n), u, layout, MarkovNoiseParams(p, mu), t_max, method=method)
    T, P = first_maximum(trace)
    rep = performance_gate(1 << n, T, P)
    return RegimePoint(n, mu, p, rep.T, rep.P, rep.q, rep.P_tilde, rep.advantage)


def parallel_map(func, items: list, jobs: int = 1) -> list:
    """Order-preserving map, optionally over a process pool."""
    if jobs <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * jobs))))


def regime_scan(n_list: Iterable[int], p_grid: Iterable[float], mu_grid: Iterable[float],
                u: NoiseUnitary | None = None, layout_rule: str = "prefix", m: int = 1,
                t_max: int | None = None, jobs: int = 1, method: str = "reduced") -> RegimeMap:
    """Performance gate over every ``(n, mu, p)`` grid point, in grid order."""
    n_list, p_grid, mu_grid = tuple(n_list), tuple(float(p) for p in p_grid), tuple(float(x) for x in mu_grid)
    if not n_list or not p_grid or not mu_grid:
        raise DomainError("regime scan grids must be non-empty")
    u = NoiseUnitary.from_name("x") if u is None else u
    tasks = []
    for n in n_list:
        layout = NoiseLayout.from_rule(n, min(m, n), layout_rule)
        tm = default_t_max(1 << n) if t_max is None else t_max
        for mu in mu_grid:
            for p in p_grid:
                tasks.append((n, mu, p, u, layout, tm, method))
    points = parallel_map(_scan_point, tasks, jobs)
    meta = {"unitary": u.label(), "placement": layout_rule, "m": m, "method": method}
    return RegimeMap(tuple(points), n_list, mu_grid, p_grid, meta)


# -- figure datasets -------------------------------------------------------------

FIGURE_IDS = ("fig2", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9-comparison")
_FIGURE_ALIASES = {"fig9": "fig9-comparison"}

# (sigma_y + sigma_z) / sqrt(2), the non-good unitary of the memory figure
YZ = NoiseUnitary(1 / math.sqrt(2), -1j / math.sqrt(2), math.pi, name="yz")


@dataclass(frozen=True)
class Dataset:
    name: str
    metadata: Mapping[str, Any]
    columns: Mapping[str, Sequence]

    def to_csv(self) -> str:
        return format_csv(self.metadata, self.columns)


def _g(x: float) -> str:
    return f"{x:g}"


def _curve(n, u, layout, p, mu, t_max, method) -> np.ndarray:
    return simulate(GroverInstance(n), u, layout, MarkovNoiseParams(p, mu), t_max, method=method).P


def _trace_dataset(name, meta, curves: dict[str, np.ndarray]) -> Dataset:
    t_len = len(next(iter(curves.values())))
    cols: dict[str, Sequence] = {"t": np.arange(t_len)}
    cols.update(curves)
    return Dataset(name, meta, cols)


def figure_data(figure_id: str, options: Mapping[str, Any] | None = None) -> list[Dataset]:
    """Deterministic datasets for one published figure."""
    opts = dict(options or {})
    fid = _FIGURE_ALIASES.get(figure_id, figure_id)
    if fid not in FIGURE_IDS:
        raise DomainError(f"unknown figure id {figure_id!r}; expected one of {FIGURE_IDS}")
    method = opts.get("method", "reduced")
    jobs = int(opts.get("jobs", 1))
    builder = globals()[f"_figure_{fid.replace('-comparison', '')}"]
    return builder(opts, method, jobs)


def _figure_fig2(opts, method, jobs):
    n = int(opts.get("n", 5))
    t_max = int(opts.get("t_max", 10))
    P = _curve(n, NoiseUnitary.from_name("i"), NoiseLayout(n, ()), 0.0, 0.0, t_max, method)
    meta = {"figure": "fig2", "n": n, "p": 0.0, "mu": 0.0, "t_max": t_max}
    return [_trace_dataset("fig2", meta, {"P": P})]


def _figure_fig4(opts, method, jobs):
    n_list = tuple(opts.get("n_list", (4, 5, 6, 7)))
    mu_grid = tuple(opts.get("mu_grid", (0.0, 0.25, 0.5, 0.75, 0.9)))
    step = float(opts.get("p_step", 0.02))
    p_grid = tuple(np.round(np.arange(0, round(1 / step) + 1) * step, 10))
    rmap = regime_scan(n_list, p_grid, mu_grid, jobs=jobs, method=method)
    meta = {"figure": "fig4", "unitary": "x", "placement": "prefix", "m": 1,
            "p_step": step, "confidence": CONFIDENCE}
    return [Dataset("fig4", meta, rmap.boundary_table()),
            Dataset("fig4-points", meta, rmap.points_table())]


def _figure_fig5(opts, method, jobs):
    n = int(opts.get("n", 10))
    t_max = int(opts.get("t_max", 50))
    p_values = tuple(opts.get("p_values", (0.01, 0.05, 0.1, 0.2)))
    curves = {}
    for name in ("x", "h"):
        u = NoiseUnitary.from_name(name)
        for m in (1, 5):
            for p in p_values:
                curves[f"P_{name}_m{m}_p{_g(p)}"] = _curve(n, u, NoiseLayout.prefix(n, m), p, 0.0, t_max, method)
    meta = {"figure": "fig5", "n": n, "mu": 0.0, "placement": "prefix", "t_max": t_max}
    return [_trace_dataset("fig5", meta, curves)]


def _figure_fig6(opts, method, jobs):
    n = int(opts.get("n", 8))
    t_max = int(opts.get("t_max", 40))
    p_values = tuple(opts.get("p_values", (0.05, 0.1, 0.2)))
    u = NoiseUnitary.from_name("y")
    curves = {}
    for m in (1, 2, 4, 5):
        for p in p_values:
            curves[f"P_m{m}_p{_g(p)}"] = _curve(n, u, NoiseLayout.prefix(n, m), p, 0.0, t_max, method)
    meta = {"figure": "fig6", "n": n, "unitary": "y", "mu": 0.0, "placement": "prefix", "t_max": t_max}
    return [_trace_dataset("fig6", meta, curves)]


def _figure_fig7(opts, method, jobs):
    n = int(opts.get("n", 8))
    t_max = int(opts.get("t_max", 40))
    pairs = tuple(tuple(x) for x in opts.get("pairs", ((0.1, 0.2), (0.1, 0.9), (0.4, 0.2), (0.4, 0.9))))
    curves = {}
    for u in (NoiseUnitary.from_name("x"), YZ):
        for m in (1, 4):
            for p, mu in pairs:
                key = f"P_{u.name}_m{m}_p{_g(p)}_mu{_g(mu)}"
                curves[key] = _curve(n, u, NoiseLayout.prefix(n, m), p, mu, t_max, method)
    meta = {"figure": "fig7", "n": n, "placement": "prefix", "t_max": t_max}
    return [_trace_dataset("fig7", meta, curves)]


def _fig8_point(args):
    n, p, mu, method = args
    N = 1 << n
    trace = simulate(GroverInstance(n), NoiseUnitary.from_name("x"), NoiseLayout.prefix(n, 1),
                     MarkovNoiseParams(p, mu), default_t_max(N), method=method)
    return first_maximum(trace)


def _figure_fig8(opts, method, jobs):
    n_list = tuple(opts.get("n_list", (6, 8, 10)))
    mu_grid = tuple(opts.get("mu_grid", (0.0, 0.5, 0.9)))
    step = float(opts.get("p_step", 0.05))
    p_grid = np.round(np.arange(0, round(1 / step) + 1) * step, 10)
    tasks = [(n, float(p), mu, method) for n in n_list for mu in mu_grid for p in p_grid]
    results = iter(parallel_map(_fig8_point, tasks, jobs))
    cols: dict[str, Sequence] = {"p": p_grid}
    for n in n_list:
        for mu in mu_grid:
            ts, ps = zip(*[next(results) for _ in p_grid])
            cols[f"Pstar_n{n}_mu{_g(mu)}"] = np.array(ps)
            cols[f"tstar_n{n}_mu{_g(mu)}"] = np.array(ts, dtype=int)
    meta = {"figure": "fig8", "unitary": "x", "placement": "prefix", "m": 1}
    return [Dataset("fig8", meta, cols)]


def _figure_fig9(opts, method, jobs):
    n = int(opts.get("n", 10))
    mu = float(opts.get("mu", 0.9))
    t_max = int(opts.get("t_max", 40))
    p_values = tuple(opts.get("p_values", (0.1, 0.3)))
    layouts = {
        "fig9a": NoiseLayout(n, (0, 1, 2)),
        "fig9b": NoiseLayout(n, tuple(range(n))),
        "fig9c": NoiseLayout(n, (2, 5, n - 1)),
    }
    out = []
    for name, layout in layouts.items():
        curves = {}
        for uname in ("x", "y", "z"):
            u = NoiseUnitary.from_name(uname)
            for p in p_values:
                curves[f"P_{uname}_p{_g(p)}"] = _curve(n, u, layout, p, mu, t_max, method)
        meta = {"figure": "fig9-comparison", "n": n, "mu": mu, "sites": layout.sites, "t_max": t_max}
        out.append(_trace_dataset(name, meta, curves))
    return out
