"""Property suites behind ``groverns verify``.

Each check is a small function returning ``(passed, detail)``. Suites run
their checks in order and stop starting new ones once the time budget is
spent; unstarted checks are reported as skipped and count as failures.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .analysis import default_t_max, first_maximum, regime_scan
from .core import GroverInstance
from .memory import (
    MarkovNoiseParams,
    enumerate_trajectories,
    iterate_ensemble,
    make_propagator,
    perfect_memory_closed_form,
    simulate,
    simulate_memoryless,
    simulate_reduced_sigma_x,
)
from .noise import (
    Classification,
    NoiseLayout,
    NoiseUnitary,
    chi_row_sum_check,
    classify_good_noise,
    overlap_elements,
    random_unitary,
)

SUITES = ("invariance", "oracle", "closed-form", "regime", "all")

Check = Callable[[np.random.Generator], "tuple[bool, str]"]


@dataclass
class CheckResult:
    suite: str
    name: str
    status: str  # "pass" | "fail" | "skipped"
    detail: str
    seconds: float


def _max_gap(traces) -> float:
    ref = traces[0]
    return max(float(np.max(np.abs(tr - ref))) for tr in traces)


def _placements(n: int, m: int, rng: np.random.Generator, count: int) -> list[NoiseLayout]:
    if math.comb(n, m) <= count:
        return [NoiseLayout(n, c) for c in itertools.combinations(range(n), m)]
    return [NoiseLayout(n, tuple(rng.choice(n, size=m, replace=False))) for _ in range(count)]


def _P(n, u, layout, p, mu, t_max, method="reduced"):
    return simulate(GroverInstance(n), u, layout, MarkovNoiseParams(p, mu), t_max, method=method).P


# -- invariance -----------------------------------------------------------------

def check_xz_all_m(rng):
    worst = 0.0
    n = 6
    t_max = default_t_max(1 << n)
    for name in ("x", "z"):
        u = NoiseUnitary.from_name(name)
        for p, mu in itertools.product((0.2, 0.9), (0.0, 0.4)):
            traces = [_P(n, u, lay, p, mu, t_max) for m in range(1, n + 1) for lay in _placements(n, m, rng, 3)]
            worst = max(worst, _max_gap(traces))
    return worst < 1e-10, f"max |P_m - P_m'| = {worst:.2e}"


def check_y_parity(rng):
    n = 6
    t_max = default_t_max(1 << n)
    u = NoiseUnitary.from_name("y")
    worst, split = 0.0, math.inf
    for p, mu in itertools.product((0.2, 0.9), (0.0, 0.4)):
        by_m = {m: _P(n, u, NoiseLayout.prefix(n, m), p, mu, t_max) for m in range(1, n + 1)}
        for m in range(1, n - 1):
            worst = max(worst, float(np.max(np.abs(by_m[m] - by_m[m + 2]))))
        split = min(split, float(np.max(np.abs(by_m[1] - by_m[2]))))
    ok = worst < 1e-10 and split > 1e-3
    return ok, f"parity gap {worst:.2e}; odd/even separation {split:.2e}"


def check_position_independence(rng):
    n, m = 7, 3
    t_max = default_t_max(1 << n)
    worst = 0.0
    for name in ("x", "y", "z"):
        u = NoiseUnitary.from_name(name)
        traces = [_P(n, u, lay, 0.3, 0.5, t_max) for lay in _placements(n, m, rng, 8)]
        worst = max(worst, _max_gap(traces))
    return worst < 1e-10, f"max placement gap {worst:.2e}"


def check_not_good_separation(rng):
    n = 8
    u = NoiseUnitary.from_name("h")
    gaps = []
    for p, mu in ((0.05, 0.0), (0.2, 0.5)):
        traces = [_P(n, u, NoiseLayout.prefix(n, m), p, mu, 30) for m in range(1, n + 1)]
        gaps.append(max(float(np.max(np.abs(a - b))) for a in traces for b in traces))
    for _ in range(3):
        v = random_unitary(rng)
        if classify_good_noise(v).classification.is_good:
            continue
        traces = [_P(n, v, NoiseLayout.prefix(n, m), 0.2, 0.2, 30) for m in range(1, n + 1)]
        gaps.append(max(float(np.max(np.abs(a - b))) for a in traces for b in traces))
    return min(gaps) > 1e-3, f"smallest NotGood separation {min(gaps):.3e}"


def check_global_phase(rng):
    n = 5
    worst = 0.0
    same_class = True
    for name in ("x", "y", "z", "h"):
        u = NoiseUnitary.from_name(name)
        for phi in rng.uniform(0, 2 * math.pi, size=3):
            v = u.with_global_phase(phi)
            same_class &= classify_good_noise(v).classification == classify_good_noise(u).classification
            lay = NoiseLayout.prefix(n, 3)
            worst = max(worst, float(np.max(np.abs(_P(n, u, lay, 0.3, 0.6, 20, "dense")
                                                   - _P(n, v, lay, 0.3, 0.6, 20, "dense")))))
    return same_class and worst < 1e-12, f"phase gap {worst:.2e}, classes stable: {same_class}"


# -- oracle ---------------------------------------------------------------------------

def check_trajectory_oracle(rng):
    worst = 0.0
    weight_err = 0.0
    unitaries = [NoiseUnitary.from_name(k) for k in ("x", "y", "z", "h")] + [random_unitary(rng)]
    for n in (2, 3, 4):
        for u in unitaries:
            lay = _placements(n, int(rng.integers(1, n + 1)), rng, 1)[0]
            for p, mu in itertools.product((0.0, 0.25, 0.7, 1.0), (0.0, 0.3, 0.8, 1.0)):
                params = MarkovNoiseParams(p, mu)
                inst = GroverInstance(n, int(rng.integers(0, 1 << n)))
                oracle = enumerate_trajectories(inst, u, lay, params, 10)
                ens = simulate(inst, u, lay, params, 10, method="dense").P
                worst = max(worst, float(np.max(np.abs(oracle.P - ens))))
                weight_err = max(weight_err, float(np.max(np.abs(oracle.weight_totals - 1))))
    return worst < 1e-12 and weight_err < 1e-12, f"max gap {worst:.2e}, path weight error {weight_err:.2e}"


def check_trace_conservation(rng):
    worst = 0.0
    for name in ("x", "h"):
        u = NoiseUnitary.from_name(name)
        for p, mu in itertools.product((0.0, 0.3, 1.0), (0.0, 0.5, 1.0)):
            inst = GroverInstance(4, 5)
            prop = make_propagator(inst, u, NoiseLayout.prefix(4, 2), "dense")
            for ens in iterate_ensemble(prop, MarkovNoiseParams(p, mu), 20):
                worst = max(worst, abs(ens.total_trace - 1))
    return worst < 1e-12, f"max trace deviation {worst:.2e}"


def check_reduced_vs_dense(rng):
    worst = 0.0
    for n in (3, 5, 6):
        for u in [NoiseUnitary.from_name(k) for k in "xyzh"] + [random_unitary(rng)]:
            lay = _placements(n, int(rng.integers(0, n + 1)), rng, 1)[0]
            params = MarkovNoiseParams(0.35, 0.6)
            inst = GroverInstance(n, int(rng.integers(0, 1 << n)))
            a = simulate(inst, u, lay, params, 25, method="reduced").P
            b = simulate(inst, u, lay, params, 25, method="dense").P
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-12, f"max reduced/dense gap {worst:.2e}"


# -- closed forms ----------------------------------------------------------------

def check_perfect_memory(rng):
    worst = 0.0
    u = NoiseUnitary.from_name("x")
    for n in range(4, 9):
        for p in (0.0, 0.3, 1.0):
            sim = _P(n, u, NoiseLayout.prefix(n, 1), p, 1.0, 40)
            cf = np.array([perfect_memory_closed_form(1 << n, p, t).combined for t in range(41)])
            worst = max(worst, float(np.max(np.abs(sim - cf))))
    return worst < 1e-9, f"max closed-form gap {worst:.2e}"


def check_three_level(rng):
    worst = 0.0
    u = NoiseUnitary.from_name("x")
    for n in range(3, 9):
        for p, mu in ((0.2, 0.0), (0.4, 0.7)):
            m = int(rng.integers(1, n + 1))
            full = _P(n, u, NoiseLayout.prefix(n, m), p, mu, 30, "dense")
            small = simulate_reduced_sigma_x(1 << n, MarkovNoiseParams(p, mu), 30)
            worst = max(worst, float(np.max(np.abs(full - small))))
    return worst < 1e-10, f"max three-level gap {worst:.2e}"


def check_kraus(rng):
    worst = 0.0
    for n in (4, 6):
        for name in ("x", "z", "h"):
            u = NoiseUnitary.from_name(name)
            lay = NoiseLayout.prefix(n, n // 2)
            for p in (0.05, 0.4):
                a = simulate_memoryless(GroverInstance(n), u, lay, p, 30).P
                b = _P(n, u, lay, p, 0.0, 30)
                worst = max(worst, float(np.max(np.abs(a - b))))
    return worst < 1e-12, f"max Kraus/ensemble gap {worst:.2e}"


def check_overlaps_and_row_sums(rng):
    ok = True
    for name in ("x", "y", "z", "h", "i"):
        u = NoiseUnitary.from_name(name)
        for n in (3, 5):
            for m in range(0, n + 1):
                lay = NoiseLayout.prefix(n, m)
                overlap_elements(u, lay, GroverInstance(n, int(rng.integers(0, 1 << n))))
                ok &= chi_row_sum_check(u, lay).ok
    return ok, "row sums and overlap closed forms agree"


# -- regime -------------------------------------------------------------------------

def check_regime(rng):
    p_grid = np.round(np.arange(26) * 0.02, 10)
    rmap = regime_scan((4, 5, 6, 7), p_grid, (0.0, 0.25, 0.5, 0.75, 0.9))
    zero_ok = all(pt.advantage for pt in rmap.points if pt.p == 0.0)
    mu_ok = all(rmap.monotone_in_mu().values())
    n_ok = all(rmap.monotone_in_N().values())
    detail = (f"p=0 passes: {zero_ok}; monotone in mu: {rmap.monotone_in_mu()}; "
              f"monotone in N: {rmap.monotone_in_N()}")
    return zero_ok and mu_ok and n_ok, detail


def check_memory_benefit(rng):
    ok = True
    rows = []
    u = NoiseUnitary.from_name("x")
    for n in (6, 8):
        for p in (0.1, 0.2, 0.3):
            vals = [first_maximum(_P(n, u, NoiseLayout.prefix(n, 1), p, mu, default_t_max(1 << n)))[1]
                    for mu in (0.0, 0.5, 0.9)]
            ok &= all(b >= a for a, b in zip(vals, vals[1:]))
            rows.append(f"n={n},p={p}:{','.join(f'{v:.4f}' for v in vals)}")
    return ok, "; ".join(rows)


REGISTRY: dict[str, list[tuple[str, Check]]] = {
    "invariance": [
        ("sigma_x/sigma_z invariant in m", check_xz_all_m),
        ("sigma_y invariant within parity of m", check_y_parity),
        ("position independence", check_position_independence),
        ("NotGood unitaries depend on m", check_not_good_separation),
        ("global phase invariance", check_global_phase),
    ],
    "oracle": [
        ("ensemble equals trajectory enumeration", check_trajectory_oracle),
        ("ensemble trace conservation", check_trace_conservation),
        ("reduced propagator equals dense", check_reduced_vs_dense),
    ],
    "closed-form": [
        ("perfect-memory closed form", check_perfect_memory),
        ("three-level sigma_x model", check_three_level),
        ("memoryless Kraus iteration", check_kraus),
        ("row sums and overlaps", check_overlaps_and_row_sums),
    ],
    "regime": [
        ("performance regime properties", check_regime),
        ("memory raises the first maximum", check_memory_benefit),
    ],
}


def run_suite(suite: str, budget: float = 600.0, seed: int = 42) -> dict:
    """Run one suite (or ``all``) and return a JSON-ready verdict."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    names = [s for s in SUITES if s != "all"] if suite == "all" else [suite]
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    results: list[CheckResult] = []
    for name in names:
        for label, check in REGISTRY[name]:
            if time.perf_counter() - start > budget:
                results.append(CheckResult(name, label, "skipped", "time budget exhausted", 0.0))
                continue
            t0 = time.perf_counter()
            try:
                passed, detail = check(rng)
            except Exception as exc:  # a crashing check is a failed check
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(name, label, "pass" if passed else "fail", detail,
                                       round(time.perf_counter() - t0, 3)))
    return {
        "suite": suite,
        "seed": seed,
        "passed": all(r.status == "pass" for r in results),
        "checks": [asdict(r) for r in results],
    }
