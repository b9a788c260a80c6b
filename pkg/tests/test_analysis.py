import numpy as np
import pytest

import metromax as mm
from metromax import ModelError, Phase
from metromax.analysis import (
    classify_phase,
    demand_sweep,
    diagram_params,
    f_of_rho,
    g_of_rho,
    h_of_rho,
    h_of_sigma,
    instability_metric,
    phase_diagram,
    phase_diagram_density,
    w_of_rho,
)

from conftest import toy_model


@pytest.fixture(scope="module")
def paris_params(paris_model):
    return diagram_params(paris_model)


def test_headway_density_identity(paris_model, paris_params):
    # the density formula is the closed form evaluated at rho = m/L
    p = paris_params
    for m in range(1, paris_model.n):
        # identical max of three terms; division order differs by one ulp
        assert h_of_rho(p, p.rho(m)) == pytest.approx(
            mm.closed_form_headway(paris_model, m), rel=1e-12
        )


def test_sigma_and_rho_views_agree(paris_params):
    p = paris_params
    for m in (3, 21, 60):
        rho = p.rho(m)
        assert h_of_sigma(p, 1.0 / rho) == pytest.approx(h_of_rho(p, rho), rel=1e-12)


def test_frequency_is_inverse_headway(paris_params):
    p = paris_params
    for rho in np.linspace(p.rho_max / 50, p.rho_max * 0.98, 17):
        assert f_of_rho(p, rho) == pytest.approx(1.0 / h_of_rho(p, rho), rel=1e-12)


def test_trapezoid_shape(paris_params):
    p = paris_params
    assert f_of_rho(p, 0.0) == 0.0
    assert f_of_rho(p, p.rho_max) == 0.0
    rhos = np.linspace(0, p.rho_max, 200)
    fs = np.array([f_of_rho(p, r) for r in rhos])
    assert fs.max() == pytest.approx(p.f_max, rel=1e-12)
    # concave piecewise-linear: discrete second differences never positive
    second = np.diff(fs, 2)
    assert np.all(second <= 1e-9)


def test_phase_classification(paris_params):
    p = paris_params
    lo, hi = p.f_max / p.v, p.rho_max - p.f_max / p.w_prime
    assert classify_phase(p, lo / 2) is Phase.FREE_FLOW
    assert classify_phase(p, (lo + hi) / 2) is Phase.MAX_FREQUENCY
    assert classify_phase(p, (hi + p.rho_max) / 2) is Phase.CONGESTION
    # boundaries belong to the plateau
    assert classify_phase(p, lo) is Phase.MAX_FREQUENCY
    assert classify_phase(p, hi) is Phase.MAX_FREQUENCY
    with pytest.raises(ModelError):
        classify_phase(p, p.rho_max * 1.01)


def test_dwell_separation_split(paris_params):
    p = paris_params
    for rho in np.linspace(p.rho_max / 40, p.rho_max * 0.97, 23):
        assert w_of_rho(p, rho) + g_of_rho(p, rho) == pytest.approx(
            h_of_rho(p, rho), rel=1e-9
        )
    # dwell non-decreasing, separation non-increasing across the plateau
    lo, hi = p.f_max / p.v, p.rho_max - p.f_max / p.w_prime
    grid = np.linspace(lo, hi, 9)
    ws = [w_of_rho(p, r) for r in grid]
    gs = [g_of_rho(p, r) for r in grid]
    assert np.all(np.diff(ws) >= -1e-12)
    assert np.all(np.diff(gs) <= 1e-12)


def test_optimal_train_count_plateau_edge(paris_model, paris_params):
    m_star = mm.optimal_train_count(paris_model)
    p = paris_params
    assert m_star == int(np.ceil(p.L * p.f_max / p.v))
    assert mm.closed_form_headway(paris_model, m_star) == p.h_min
    assert mm.closed_form_headway(paris_model, m_star - 1) > p.h_min


def test_phase_diagram_rows(paris_model):
    points = phase_diagram(paris_model)
    assert len(points) == paris_model.n - 1
    assert {pt.phase for pt in points} == {
        Phase.FREE_FLOW, Phase.MAX_FREQUENCY, Phase.CONGESTION
    }
    sampled = phase_diagram_density(paris_model, 7)
    assert len(sampled) == 7
    assert all(0 < pt.rho < diagram_params(paris_model).rho_max for pt in sampled)


def test_passenger_stability_strict():
    assert mm.passenger_stability(1.0, 30.0, 20.0, 72.0)
    assert not mm.passenger_stability(30.0 * 20.0 / 72.0, 30.0, 20.0, 72.0)


def test_sweep_baseline_reproduced_at_zero_demand(paris_model):
    dem = mm.Demand.uniform(18, 1.0, 30.0)
    pts = demand_sweep(paris_model, dem, [21], [0.0], events=800)
    (pt,) = pts
    assert pt.h == pytest.approx(pt.h_baseline, rel=1e-9)


def test_sweep_rejects_infeasible_counts(paris_model):
    dem = mm.Demand.uniform(18, 1.0, 30.0)
    with pytest.raises(ModelError):
        demand_sweep(paris_model, dem, [0], [1.0], events=10)


def test_instability_of_plain_maxplus_is_bounded(paris_model):
    model = paris_model
    p = mm.place_trains(model, 21)
    sys = mm.maxplus_to_affine(mm.build_maxplus_system(model, p))
    node = int(model.platform_nodes[0])
    res = instability_metric(sys, model, p, node=node, event=1, delay=30.0,
                             events=100)
    assert res.amplification <= 1.0 + 1e-9
    assert not res.amplified


def test_instability_validation(paris_model):
    model = paris_model
    p = mm.place_trains(model, 21)
    sys = mm.maxplus_to_affine(mm.build_maxplus_system(model, p))
    with pytest.raises(ModelError):
        instability_metric(sys, model, p, node=0, event=1, delay=-5.0, events=10)
    with pytest.raises(ModelError):
        instability_metric(sys, model, p, node=0, event=50, delay=5.0, events=10)


def test_toy_uniform_line_vertices():
    # uniform line: trapezoid vertices exactly where the branches intersect
    model = toy_model(np.full(12, 40.0), np.full(12, 20.0))
    p = diagram_params(model)
    assert p.h_min == 60.0
    lo = p.f_max / p.v
    hi = p.rho_max - p.f_max / p.w_prime
    assert f_of_rho(p, lo) == pytest.approx(p.f_max, rel=1e-12)
    assert f_of_rho(p, hi) == pytest.approx(p.f_max, rel=1e-12)
    assert lo == pytest.approx(p.rho_max * 2 / 3, rel=1e-12)
    assert hi == pytest.approx(p.rho_max * 2 / 3, rel=1e-12)
