import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eikonal_reentry.restitution import RestitutionTable, TableError, load_table, save_table
from eikonal_reentry.restitution.mitchell_schaeffer import (
    HEALTHY,
    CableConfig,
    MsError,
    PacingProtocol,
    action_potential_durations,
    long_di_cv,
    ms_cell_run,
)
from eikonal_reentry.restitution.presets import builtin_table


def two_point():
    return RestitutionTable(0, 100.0, [100.0, 300.0], [200.0, 280.0], [100.0, 300.0], [30.0, 50.0])


def test_midpoint_interpolation():
    assert two_point().apd_of(200.0) == 240.0


def test_clamping():
    t = two_point()
    assert t.apd_of(math.inf) == 280.0 and t.cv_of(math.inf) == 50.0
    assert t.apd_of(0.0) == 200.0 and t.cv_of(1e6) == 50.0


@given(knots=st.lists(st.tuples(st.floats(0, 1000), st.floats(0, 500)), min_size=2, max_size=12,
                      unique_by=lambda k: round(k[0], 3)),
       q=st.floats(0, 1))
def test_interpolation_exact_at_knots_and_bounded(knots, q):
    knots = sorted(knots)
    di = np.array([k[0] for k in knots])
    val = np.array([k[1] for k in knots])
    t = RestitutionTable(0, float(di[0]), di, val, di, val)
    for d, v in zip(di, val):
        assert t.apd_of(d) == v
    i = int(q * (len(di) - 2))
    x = di[i] + q * (di[i + 1] - di[i])
    assert min(val[i], val[i + 1]) - 1e-9 <= t.apd_of(x) <= max(val[i], val[i + 1]) + 1e-9


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(apd_di=[50.0, 40.0]), "strictly increasing"),
        (dict(cv=[10.0, -1.0]), "negative"),
        (dict(ratio=1.5), "ratio"),
        (dict(di_min=60.0), "below DI_min"),
        (dict(apd=[200.0]), "differ in length"),
    ],
)
def test_validation(kwargs, message):
    base = dict(tissue_id=0, di_min=40.0, apd_di=[40.0, 50.0], apd=[200.0, 210.0],
                cv_di=[40.0, 50.0], cv=[10.0, 20.0])
    base.update(kwargs)
    with pytest.raises(TableError, match=message):
        RestitutionTable(**base)


def test_round_trip(tmp_path):
    table = builtin_table("healthy")
    path = save_table(table, tmp_path / "copy")
    assert path.name == "copy.json"
    back = load_table(path)
    for attr in ("apd_di", "apd", "cv_di", "cv"):
        assert np.array_equal(getattr(back, attr), getattr(table, attr))
    assert (back.di_min, back.ratio, back.tissue_id) == (table.di_min, table.ratio, table.tissue_id)
    header = (tmp_path / "copy_cv.csv").read_text().splitlines()[0]
    assert header == "di_ms,cv_cm_per_s"


@pytest.mark.parametrize("name", ["healthy", "border_zone", "atrial"])
def test_shipped_tables_are_monotone(name):
    t = builtin_table(name)
    assert np.all(np.diff(t.apd) >= 0) and np.all(np.diff(t.cv) >= 0)
    assert t.apd_di[0] >= t.di_min and t.cv_di[0] >= t.di_min


def test_shipped_table_targets():
    healthy, bz = builtin_table("healthy"), builtin_table("border_zone")
    assert abs(healthy.di_min - 60) <= 10 and abs(bz.di_min - 25) <= 10
    assert bz.apd_plateau > healthy.apd_plateau and bz.cv_plateau < healthy.cv_plateau
    assert builtin_table("atrial").di_min == 35.0
    # long-DI point of the pacing protocol: DI = BCL - APD(BCL)
    di_long = 1500.0 - healthy.apd_plateau
    assert abs(healthy.cv_of(di_long) - 50.0) <= 2.0


def test_unknown_builtin():
    with pytest.raises(KeyError, match="known"):
        builtin_table("purkinje")


class TestCell:
    def test_rest_is_stationary(self):
        t, v, _ = ms_cell_run(HEALTHY, [], horizon=50.0)
        after = v[t >= 10.0]
        assert np.ptp(after) <= 1e-9

    def test_single_stimulus_single_action_potential(self):
        t, v, _ = ms_cell_run(HEALTHY, [10.0], horizon=600.0)
        aps = action_potential_durations(t, v)
        assert len(aps) == 1 and 150 < aps[0][1] < 250

    @pytest.mark.parametrize("gap", [50.0, 150.0])
    def test_refractory_second_stimulus(self, gap):
        t, v, _ = ms_cell_run(HEALTHY, [10.0, 10.0 + gap], horizon=800.0)
        assert len(action_potential_durations(t, v)) == 1

    def test_recovered_second_stimulus(self):
        t, v, _ = ms_cell_run(HEALTHY, [10.0, 600.0], horizon=1200.0)
        assert len(action_potential_durations(t, v)) == 2

    def test_divergence_is_reported(self):
        with pytest.raises(MsError, match="diverged"):
            ms_cell_run(HEALTHY, [0.0], dt=0.5, horizon=50.0)


def test_parameter_validation():
    from eikonal_reentry.restitution.mitchell_schaeffer import MsParameters

    with pytest.raises(ValueError):
        MsParameters(v_gate=1.2)
    with pytest.raises(ValueError):
        MsParameters(tau_in=0.0)
    with pytest.raises(ValueError):
        PacingProtocol(bcl=100.0, cl0=200.0)
    with pytest.raises(ValueError, match="integer"):
        CableConfig(length=1.0, dx=0.3)
    with pytest.raises(ValueError, match="integer"):
        CableConfig(length=0.04, dx=0.005)
    assert PacingProtocol().cycle_lengths()[[0, -1]].tolist() == [1500.0, 200.0]


def test_cable_time_step_convergence():
    coarse = long_di_cv(HEALTHY, CableConfig(dt=0.02))
    fine = long_di_cv(HEALTHY, CableConfig(dt=0.01))
    assert abs(fine - coarse) / fine < 0.01
