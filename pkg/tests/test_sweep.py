import json
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from dsvmet.closedform import limits
from dsvmet.core import DsvParams
from dsvmet.sweep import (
    NBAR_COLUMNS,
    PHASE_COLUMNS,
    GridSpec,
    SweepSpec,
    Table,
    emit,
    envelope,
    format_float,
    grid_density,
    phase_regime,
    render,
    sweep_nbar,
    sweep_phase,
)

FIG3_RANGE = (-1.5 * math.pi, 1.5 * math.pi)


def phase_table(alpha, r, points=601, start=FIG3_RANGE[0], stop=FIG3_RANGE[1], threads=1):
    return sweep_phase(SweepSpec("phase", start, stop, points, DsvParams(alpha, r=r)), threads=threads)


def nbar_table(phase, r_values, stop=100.0, points=1001, threads=1, envelope_points=400):
    spec = SweepSpec("n_bar", 0.0, stop, points, DsvParams.from_phase(0.0, 0.0, phase))
    return sweep_nbar(spec, r_values, threads=threads, envelope_points=envelope_points)


def test_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("phase", 1.0, 0.0, 10)
    with pytest.raises(ValueError):
        SweepSpec("n_bar", -1.0, 5.0, 10)
    with pytest.raises(ValueError):
        SweepSpec("phase", 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        SweepSpec("time", 0.0, 1.0, 5)
    with pytest.raises(ValueError):
        GridSpec(10.0, 2.5, 10**4, 10**4)
    with pytest.raises(ValueError):
        GridSpec(0.0, 2.5)


def test_phase_sweep_columns_and_values():
    t = phase_table(2.0, 0.5, points=5, start=0.0, stop=math.pi)
    assert t.columns == PHASE_COLUMNS
    assert len(t.rows) == 5
    x, cr, sn, hl, hof = t.rows[2]
    rep = limits(DsvParams.from_phase(2.0, 0.5, math.pi / 2))
    assert (cr, sn, hl, hof) == (rep.cramer_rao, rep.shot_noise, rep.heisenberg, rep.hofmann)


def test_phase_sweep_fig3a():
    t = phase_table(2.0, 0.5, points=7, start=-1.5 * math.pi, stop=1.5 * math.pi)
    x, cr, sn = t.column("x"), t.column("cramer_rao"), t.column("shot_noise")
    assert cr[np.isclose(x, math.pi / 2)][0] < sn[0]
    assert cr[np.isclose(x, 0.0)][0] > sn[0]


def test_phase_sweep_large_squeezing_always_below_shot_noise():
    t = phase_table(2.0, 2.5)
    assert (t.column("cramer_rao") < t.column("shot_noise")).all()


def test_phase_sweep_coherent_flat():
    t = phase_table(2.0, 0.0)
    cr = t.column("cramer_rao")
    assert np.allclose(cr, cr[0], rtol=1e-14)
    assert np.allclose(cr, t.column("shot_noise"), rtol=1e-14)


def test_phase_sweep_symmetry_and_period():
    t = phase_table(1.7, 0.9, points=601)
    cr = t.column("cramer_rao")
    assert np.allclose(cr, cr[::-1], rtol=1e-12)
    # 601 points on [-3pi/2, 3pi/2]: a shift of pi is 200 samples
    assert np.allclose(cr[:-200], cr[200:], rtol=1e-12)


def test_phase_realization_by_theta():
    # same phi - theta/2 through theta instead of phi
    for x in np.linspace(-2, 2, 9):
        a = limits(DsvParams.from_phase(1.5, 0.7, x))
        b = limits(DsvParams(1.5, phi=0.4, r=0.7, theta=2 * (0.4 - x)))
        assert a.cramer_rao == pytest.approx(b.cramer_rao, rel=1e-12)


def test_nbar_r0_line_is_shot_noise():
    t = nbar_table(math.pi / 2, [0.0], stop=50, points=101, envelope_points=50)
    n, cr = t.column("n_bar"), t.column("cramer_rao")
    mask = n > 0
    assert np.allclose(cr[mask], 1 / np.sqrt(n[mask]), rtol=1e-13)


def test_nbar_larger_r_better_at_favourable_phase():
    r_values = [0.0, 0.5, 1.0, 1.5, 2.0]
    t = nbar_table(math.pi / 2, r_values, stop=80, points=81, envelope_points=50)
    by_n = {}
    for n, r, cr, _, _ in t.rows:
        by_n.setdefault(n, []).append((r, cr))
    for n, pairs in by_n.items():
        if len(pairs) > 1 and n > 0:
            crs = [cr for _, cr in sorted(pairs)]
            assert all(a > b for a, b in zip(crs, crs[1:])), n


def test_nbar_rows_skip_unreachable():
    t = nbar_table(0.0, [1.5], stop=10, points=101, envelope_points=20)
    assert t.column("n_bar").min() >= math.sinh(1.5) ** 2


def test_nbar_r_value_beyond_range():
    with pytest.raises(ValueError):
        nbar_table(0.0, [3.0], stop=10, points=11)


def test_nbar_crossing_at_unfavourable_phase():
    # independent root of 2 s^2 c^2 + (n - s^2) e^{-2r} = n
    r = 1.5
    s2 = math.sinh(r) ** 2
    root = brentq(lambda n: 2 * s2 * (1 + s2) + (n - s2) * math.exp(-2 * r) - n, s2, 200)
    t = nbar_table(0.0, [r], stop=100, points=1001, envelope_points=20)
    n, cr = t.column("n_bar"), t.column("cramer_rao")
    below = cr < 1 / np.sqrt(n)
    first_above = n[~below].min()
    assert (below == (n < root)).all()
    assert abs(first_above - root) <= 0.1


@pytest.mark.parametrize("phase", [0.0, math.pi / 4, math.pi / 2])
def test_envelope_contains_lines(phase):
    t = nbar_table(phase, [0.0, 0.7, 1.5, 2.0], stop=60, points=61, envelope_points=100)
    for n, r, cr, lo, hi in t.rows:
        if n > 0:
            assert lo <= cr <= hi


def test_envelope_bounds_at_favourable_phase():
    # at pi/2 the shot-noise limit is the envelope maximum (r = 0)
    lo, hi = envelope(30.0, math.pi / 2)
    assert hi == pytest.approx(1 / math.sqrt(30.0), rel=1e-14)
    assert lo < hi


def test_grid_axes_and_values():
    spec = GridSpec(2.0, 1.0, 5, 3, phase=0.3)
    g = grid_density(spec, threads=1)
    assert g.cr_grid.shape == g.delta_grid.shape == (5, 3)
    rep = limits(DsvParams.from_phase(1.5, 0.5, 0.3))
    assert g.cr_grid[3, 1] == rep.cramer_rao
    assert g.delta_grid[3, 1] == rep.delta
    assert math.isnan(g.delta_grid[0, 0])
    assert g.optimum.delta == np.nanmin(g.delta_grid)


def test_grid_tie_breaking():
    # a tolerance wider than the delta range makes every finite cell tie
    spec = GridSpec(10.0, 2.5, 21, 11, phase=math.pi / 2)
    g = grid_density(spec, threads=1, tie_tol=1.0)
    assert (g.optimum.alpha_mag, g.optimum.r) == (0.0, 0.25)


def test_grid_optimum_left_boundary_at_pi():
    g = grid_density(GridSpec(10.0, 2.5, 201, 201, phase=math.pi), threads=1)
    assert g.optimum.alpha_mag == 0.0


def test_grid_delta_nonnegative():
    for phase in (math.pi / 2, 5 * math.pi / 8, 3 * math.pi / 4, 7 * math.pi / 8, math.pi):
        g = grid_density(GridSpec(10.0, 2.5, 101, 101, phase=phase), threads=1)
        assert np.nanmin(g.delta_grid) >= -1e-12


def test_grid_monotone_at_favourable_phase():
    g = grid_density(GridSpec(10.0, 2.5, 101, 101, phase=math.pi / 2), threads=1)
    cr = g.cr_grid
    assert (np.diff(cr[:, 1:], axis=0) <= 0).all()
    assert (np.diff(cr[1:, :], axis=1) <= 0).all()


def test_grid_not_monotone_at_pi():
    g = grid_density(GridSpec(10.0, 2.5, 101, 101, phase=math.pi), threads=1)
    # along r at |alpha| = 10 the limit gets worse before it improves
    assert (np.diff(g.cr_grid[-1, :]) > 0).any()


def test_parallel_matches_sequential(monkeypatch):
    spec = GridSpec(5.0, 2.0, 31, 29, phase=2.0)
    a = render(grid_density(spec, threads=1), "json")
    b = render(grid_density(spec, threads=4), "json")
    assert a == b
    assert render(phase_table(2, 1, threads=1), "csv") == render(phase_table(2, 1, threads=3), "csv")
    monkeypatch.setenv("DSVMET_THREADS", "3")
    assert render(nbar_table(0.0, [0.5, 1.0], stop=20, points=21, threads=None, envelope_points=30), "csv") \
        == render(nbar_table(0.0, [0.5, 1.0], stop=20, points=21, threads=1, envelope_points=30), "csv")


def test_bad_thread_env(monkeypatch):
    monkeypatch.setenv("DSVMET_THREADS", "zero")
    with pytest.raises(ValueError, match="DSVMET_THREADS"):
        phase_table(1, 1, points=3, threads=None)


@pytest.mark.parametrize("x, regime", [(math.pi / 2, "favorable"), (5 * math.pi / 8, "favorable"),
                                       (3 * math.pi / 4, "boundary"), (7 * math.pi / 8, "unfavorable"),
                                       (math.pi, "unfavorable"), (0.0, "unfavorable"),
                                       (math.pi / 4, "boundary"), (-math.pi / 2, "favorable")])
def test_phase_regime(x, regime):
    assert phase_regime(x) == regime


# -- emit --------------------------------------------------------------------

def test_format_float():
    assert format_float(0.1) == "0.1"
    assert format_float(float("inf")) == "inf"
    assert format_float(float("nan")) == "nan"
    assert float(format_float(1 / 3)) == 1 / 3


def test_emit_empty_table(tmp_path):
    out = tmp_path / "empty.csv"
    emit(Table(PHASE_COLUMNS), "csv", out)
    assert out.read_text() == "x,cramer_rao,shot_noise,heisenberg,hofmann\n"


def test_emit_phase_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    emit(phase_table(2.0, 0.5, points=3), "csv", out)
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    assert lines[0] == ",".join(PHASE_COLUMNS)


def test_emit_deterministic(tmp_path):
    t = phase_table(2.0, 0.5, points=11)
    emit(t, "csv", tmp_path / "a.csv")
    emit(t, "csv", tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_emit_vacuum_inf(tmp_path):
    t = phase_table(0.0, 0.0, points=2)
    emit(t, "csv", tmp_path / "v.csv")
    assert tmp_path.joinpath("v.csv").read_text().splitlines()[1].endswith("inf,inf,inf,inf")


def test_emit_nbar_header(tmp_path):
    emit(nbar_table(0.0, [0.0], stop=2, points=3, envelope_points=5), "csv", tmp_path / "n.csv")
    assert tmp_path.joinpath("n.csv").read_text().splitlines()[0] == ",".join(NBAR_COLUMNS)


def test_emit_grid_json_schema(tmp_path):
    spec = GridSpec(2.0, 1.0, 4, 3, phase=1.0)
    emit(grid_density(spec, threads=1), "json", tmp_path / "g.json")
    data = json.loads(tmp_path.joinpath("g.json").read_text())
    assert list(data) == ["spec", "delta_grid", "cr_grid", "optimum"]
    assert set(data["optimum"]) == {"alpha_mag", "r", "delta"}
    assert len(data["delta_grid"]) == 4 and len(data["delta_grid"][0]) == 3
    assert data["delta_grid"][0][0] == "nan"
    assert data["cr_grid"][0][0] == "inf"
    assert data["spec"]["alpha_points"] == 4


def test_emit_io_error_names_path(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    with pytest.raises(OSError, match="missing"):
        emit(Table(PHASE_COLUMNS), "csv", bad)
