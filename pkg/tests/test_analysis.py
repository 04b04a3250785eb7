import math

import numpy as np
import pytest

from groverns.analysis import (
    FIGURE_IDS,
    default_t_max,
    figure_data,
    first_maximum,
    performance_gate,
    regime_scan,
)
from groverns.errors import DomainError
from groverns.memory import noiseless_success
from groverns.trace import SimulationTrace, parse_csv


def test_default_t_max():
    assert default_t_max(32) == 12
    assert default_t_max(4) == 3
    assert default_t_max(2) == 3


def test_first_maximum_noiseless_n5():
    P = noiseless_success(32, np.arange(11))
    T, val = first_maximum(SimulationTrace({}, P))
    assert T == 4
    assert val == pytest.approx(0.99918, abs=1e-4)


@pytest.mark.parametrize("n", range(4, 12))
def test_first_maximum_tracks_optimal_step(n):
    N = 2 ** n
    T, _ = first_maximum(noiseless_success(N, np.arange(default_t_max(N) + 1)))
    assert abs(T - math.floor(math.pi / 4 * math.sqrt(N))) <= 1


def test_first_maximum_fallbacks():
    assert first_maximum([0.5, 0.4, 0.3, 0.2]) == (1, 0.4)
    assert first_maximum([0.1, 0.2, 0.3, 0.4]) == (3, 0.4)
    # plateau: earliest index wins
    assert first_maximum([0.1, 0.5, 0.5, 0.2])[0] == 1
    with pytest.raises(DomainError):
        first_maximum([0.1, 0.2, 0.3])


def test_first_maximum_scale_invariant():
    P = np.array([0.1, 0.3, 0.7, 0.6, 0.65, 0.2])
    assert first_maximum(P)[0] == first_maximum(0.37 * P)[0] == 2


def test_performance_gate_examples():
    rep = performance_gate(32, 4, 1.0)
    assert (rep.q, rep.P_tilde, rep.advantage) == (4, 1.0, True)
    rep = performance_gate(32, 4, 0.5)
    assert rep.q == 4 and rep.P_tilde == pytest.approx(0.9375) and not rep.advantage
    assert not performance_gate(32, 16, 1.0).advantage
    assert not performance_gate(32, 20, 1.0).advantage
    with pytest.raises(DomainError):
        performance_gate(32, 0, 1.0)


def test_performance_gate_monotone_in_P():
    Ps = np.linspace(0, 1, 41)
    reps = [performance_gate(64, 5, P) for P in Ps]
    assert all(b.P_tilde >= a.P_tilde for a, b in zip(reps, reps[1:]))
    flags = [r.advantage for r in reps]
    assert flags == sorted(flags)


@pytest.mark.parametrize("n", range(4, 12))
def test_noiseless_gate_passes(n):
    N = 2 ** n
    T = math.floor(math.pi / 4 * math.sqrt(N))
    assert performance_gate(N, T, 0.99).advantage


def test_regime_scan_small_grid():
    rmap = regime_scan([4, 5], [0.0, 0.1, 0.5], [0.0, 0.9])
    assert len(rmap.points) == 12
    assert all(pt.advantage for pt in rmap.points if pt.p == 0.0)
    table = rmap.boundary_table()
    assert table["N"] == [16, 16, 32, 32]
    assert set(rmap.monotone_in_mu()) == {16, 32}


def test_regime_scan_deterministic_and_parallel_equal():
    grid = dict(n_list=[4, 5], p_grid=[0.0, 0.2, 0.4], mu_grid=[0.0, 0.5])
    a = regime_scan(**grid)
    b = regime_scan(**grid)
    c = regime_scan(**grid, jobs=2)
    assert a.points == b.points == c.points


def test_contiguous_boundary_skips_islands():
    # N = 16 passes at p = 0.28 only via the shift of the first maximum from T = 3 to T = 2
    rmap = regime_scan([4], np.round(np.arange(16) * 0.02, 10), [0.0])
    assert rmap.contiguous_boundary(4, 0.0) == pytest.approx(0.08)
    assert rmap.boundary(4, 0.0) == pytest.approx(0.28)


def test_regime_scan_rejects_empty_grid():
    with pytest.raises(DomainError):
        regime_scan([4], [], [0.0])


def test_fig2_dataset():
    (ds,) = figure_data("fig2")
    P = np.asarray(ds.columns["P"])
    assert int(np.argmax(P)) == 4


def test_fig6_parity_columns():
    (ds,) = figure_data("fig6")
    for p in ("0.05", "0.1", "0.2"):
        assert np.abs(ds.columns[f"P_m1_p{p}"] - ds.columns[f"P_m5_p{p}"]).max() < 1e-10
        assert np.abs(ds.columns[f"P_m2_p{p}"] - ds.columns[f"P_m4_p{p}"]).max() < 1e-10
    # the odd/even gap shrinks with p; at n = 8 it is below 1e-3 for p = 0.05
    assert np.abs(ds.columns["P_m1_p0.2"] - ds.columns["P_m2_p0.2"]).max() > 1e-3
    assert np.abs(ds.columns["P_m1_p0.05"] - ds.columns["P_m2_p0.05"]).max() > 1e-4


def test_fig9_layout_comparison():
    a, b, c = figure_data("fig9-comparison")
    for key in ("P_x_p0.1", "P_z_p0.3"):
        assert a.to_csv().count("\n") == b.to_csv().count("\n")
        assert np.abs(a.columns[key] - b.columns[key]).max() < 1e-10
        assert np.abs(a.columns[key] - c.columns[key]).max() < 1e-10
    assert np.abs(a.columns["P_y_p0.1"] - c.columns["P_y_p0.1"]).max() < 1e-10
    assert np.abs(a.columns["P_y_p0.1"] - b.columns["P_y_p0.1"]).max() > 1e-3


def test_figure_csv_header_and_columns():
    (ds,) = figure_data("fig7")
    meta, cols = parse_csv(ds.to_csv())
    assert meta["n"] == 8
    assert len(cols) == 17 and "t" in cols


def test_unknown_figure():
    with pytest.raises(DomainError):
        figure_data("fig3")
    assert "fig9-comparison" in FIGURE_IDS
