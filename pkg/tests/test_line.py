import json

import numpy as np
import pytest

import metromax as mm
from metromax import ConfigError, ModelError

from conftest import toy_model


def test_paris_geometry(paris_model):
    model = paris_model
    assert model.n == 78
    assert model.total_length == 17294.0
    assert len(model.platform_nodes) == 18
    # both directions plus two turnarounds
    assert np.all(model.lengths > 90.0)


def test_segment_speeds(paris_config, paris_model):
    cfg, model = paris_config, paris_model
    # platform-adjacent and terminus segments run slower than open track
    slow = model.lengths / model.running_times < cfg.v_run - 1e-9
    n = model.n
    adjacent = model.is_platform | np.roll(model.is_platform, 1)
    assert np.array_equal(slow, adjacent | (model.running_times == model.lengths / cfg.v_terminus))
    assert np.all(model.running_times > 0)


def test_config_validation(tmp_path):
    doc = json.loads(mm.bundled_config("paris_line14").read_text())
    doc["v_run"] = -1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        mm.LineConfig.from_json(bad)


def test_config_demand_length_checked():
    doc = json.loads(mm.bundled_config("paris_line14").read_text())
    doc["demand"]["lambda"] = [1.0, 2.0]
    with pytest.raises(ConfigError):
        mm.LineConfig.from_dict(doc)
    doc["demand"]["lambda"] = [1.0] * 4
    doc["demand"]["alpha"] = [30.0] * 4
    with pytest.raises(ConfigError, match="platforms"):
        mm.LineConfig.from_dict(doc)


def test_segment_shorter_than_train_rejected():
    doc = json.loads(mm.bundled_config("paris_line14").read_text())
    doc["target_segment_length"] = 80.0
    cfg = mm.LineConfig.from_dict(doc)
    with pytest.raises(ConfigError, match="train"):
        mm.segmentize(cfg)


def test_place_trains_even_spacing():
    model = toy_model(np.full(10, 30.0), np.full(10, 10.0))
    p = mm.place_trains(model, 5)
    assert p.m == 5
    assert list(np.flatnonzero(p.b)) == [0, 2, 4, 6, 8]
    assert np.array_equal(p.b_bar, ~p.b)
    with pytest.raises(ModelError):
        mm.place_trains(model, 11)


def test_maxplus_system_structure():
    model = toy_model([10.0, 20.0, 30.0], [5.0, 6.0, 7.0])
    p = mm.place_trains(model, 1)
    a = mm.build_maxplus_system(model, p)
    # row j: travel-time from j-1 with exponent b_j, safety from j+1
    assert a.entry(0, 2) == {1: 10.0}   # occupied segment 0
    assert a.entry(1, 0) == {0: 20.0}
    assert a.entry(0, 1) == {1: 6.0}    # segment 1 unoccupied: exponent 1
    assert a.entry(2, 0) == {0: 5.0}    # reading the occupied segment: exponent 0


def test_closed_form_headway_terms():
    model = toy_model([10.0, 20.0, 30.0, 40.0], [5.0, 5.0, 5.0, 5.0])
    # m=1: forward term dominates
    assert mm.closed_form_headway(model, 1) == 100.0
    # m=2: two-arc term max(t+s) = 45
    assert mm.closed_form_headway(model, 2) == 50.0
    assert mm.closed_form_headway(model, 3) == 45.0
    assert mm.closed_form_headway(model, 0) == float("inf")
    assert mm.closed_form_headway(model, 4) == float("inf")


def test_simulation_matches_spectral(paris_model):
    model = paris_model
    for m in (10, 21, 40):
        p = mm.place_trains(model, m)
        a = mm.build_maxplus_system(model, p)
        mu = mm.generalized_eigenpair(a).mu
        # summation order differs between the cycle walk and np.sum
        assert mu == pytest.approx(mm.closed_form_headway(model, m), rel=1e-12)
        res = mm.simulate(mm.maxplus_to_affine(a), model, p, events=3000)
        assert abs(res.headway_estimate - mu) / mu < 1e-3


def test_fully_implicit_train_counts(paris_model):
    model = paris_model
    for m in (0, model.n):
        p = mm.place_trains(model, m)
        sys = mm.maxplus_to_affine(mm.build_maxplus_system(model, p))
        with pytest.raises(ModelError, match="fully implicit"):
            mm.simulate(sys, model, p, events=10)


def test_derived_series_identities(paris_model):
    model = paris_model
    p = mm.place_trains(model, 21)
    sys = mm.maxplus_to_affine(mm.build_maxplus_system(model, p))
    res = mm.simulate(sys, model, p, events=500)
    d, a, w, g, h = (res.departures, res.arrivals, res.dwell,
                     res.separation, res.headway)
    assert np.allclose(w[1:], d[1:] - a[1:])
    assert np.allclose(g[1:], a[1:] - d[:-1])
    assert np.allclose(h[1:], w[1:] + g[1:])
    # dwell above the platform floor, separation above safety + running
    assert np.all(w[100:] >= model.w_min[None, :] - 1e-9)
    assert np.all(res.s_time[100:-1] >= model.s_min[None, :] - 1e-9)


def test_simulation_csv_format(tmp_path, paris_model):
    model = paris_model
    p = mm.place_trains(model, 21)
    sys = mm.maxplus_to_affine(mm.build_maxplus_system(model, p))
    res = mm.simulate(sys, model, p, events=3)
    out = tmp_path / "run.csv"
    res.to_csv(out)
    lines = out.read_text().splitlines()
    assert lines[0] == "k,j,d,a,w,g,h"
    assert len(lines) == 1 + 3 * model.n


def test_demand_coupled_breaks_substochasticity(paris_model):
    model = paris_model
    p = mm.place_trains(model, 5)
    dem = mm.Demand.uniform(18, 3.0, 30.0)
    unc = mm.build_demand_coupled_system(model, p, dem)
    assert not unc.is_substochastic()
    flags = unc.row_stochastic_flags()
    assert np.array_equal(np.flatnonzero(~flags), model.platform_nodes)


def test_controlled_system_is_substochastic(paris_model):
    model = paris_model
    p = mm.place_trains(model, 5)
    dem = mm.Demand.uniform(18, 3.0, 30.0)
    ctrl = mm.control_params(model, p, dem, events=1000)
    con = mm.build_controlled_system(model, p, dem, ctrl)
    assert con.is_substochastic()


def test_control_gain_bounds(paris_model):
    model = paris_model
    p = mm.place_trains(model, 21)
    base = (72.0, 20.0)
    # lambda twice the threshold -> delta one half
    lam_tilde = 30.0 * base[1] / base[0]
    dem = mm.Demand.uniform(18, 2 * lam_tilde, 30.0)
    ctrl = mm.control_params(model, p, dem, baseline=base)
    assert np.allclose(ctrl.delta, 0.5)
    # under the threshold -> delta exactly one
    dem_low = mm.Demand.uniform(18, 0.5 * lam_tilde, 30.0)
    ctrl_low = mm.control_params(model, p, dem_low, baseline=base)
    assert np.all(ctrl_low.delta == 1.0)
    with pytest.raises(ModelError):
        mm.ControlParameters(w_max=[72.0], theta=[0.0], delta=[1.5], lambda_tilde=[1.0])


def test_demand_scaling():
    dem = mm.Demand.uniform(4, 2.0, 30.0)
    assert np.allclose(dem.scaled(3.0).arrival_rates, 6.0)
    assert np.allclose(dem.scaled(3.0).boarding_rates, 30.0)
    with pytest.raises(ConfigError):
        mm.Demand(np.array([-1.0]), np.array([1.0]))
