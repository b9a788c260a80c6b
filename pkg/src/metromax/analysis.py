"""Fundamental diagrams, phase classification, control tuning, and sweeps.

Aggregates the per-segment line data into the handful of numbers that
determine the trapezoidal frequency-density diagram, classifies operating
points into the three traffic phases, fixes the stabilizing control
parameters from a passenger-free baseline simulation, and provides the
batch computations behind the phase-diagram, demand-sweep and
delay-propagation outputs.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ModelError
from .line import (
    ControlParameters,
    Demand,
    LineModel,
    TrainPlacement,
    build_controlled_system,
    build_maxplus_system,
    closed_form_headway,
    maxplus_to_affine,
    place_trains,
    simulate,
)

__all__ = [
    "DiagramParams",
    "Phase",
    "diagram_params",
    "h_of_sigma",
    "h_of_rho",
    "f_of_rho",
    "w_of_rho",
    "g_of_rho",
    "classify_phase",
    "optimal_train_count",
    "passenger_stability",
    "control_params",
    "PhasePoint",
    "phase_diagram",
    "write_phase_diagram_csv",
    "SweepPoint",
    "demand_sweep",
    "write_demand_sweep_csv",
    "InstabilityResult",
    "instability_metric",
    "write_instability_csv",
]


class Phase(enum.Enum):
    FREE_FLOW = "free-flow"
    MAX_FREQUENCY = "max-frequency"
    CONGESTION = "congestion"


@dataclass(frozen=True)
class DiagramParams:
    """Aggregates determining the trapezoidal frequency-density diagram.

    All rates are per second and densities per meter; the km/h and
    trains/h views are provided as properties for reporting.
    """

    n: int
    L: float          # loop length, meters
    tau: float        # sum of minimum travel times / L (s/m)
    omega: float      # sum of safety times / L (s/m)
    h_min: float      # max over segments of t_min + s_min (s)
    w_floor: float    # node-average minimum dwell (s)
    r_avg: float      # node-average running time (s)
    g_floor: float    # node-average minimum separation r + s_min (s)

    @property
    def v(self) -> float:
        """Free train speed, m/s (running and minimum dwell included)."""
        return 1.0 / self.tau

    @property
    def w_prime(self) -> float:
        """Backward wave speed, m/s."""
        return 1.0 / self.omega

    @property
    def f_max(self) -> float:
        return 1.0 / self.h_min

    @property
    def rho_max(self) -> float:
        """Jam density: one train per segment."""
        return self.n / self.L

    @property
    def sigma_min(self) -> float:
        return self.L / self.n

    @property
    def v_kmh(self) -> float:
        return self.v * 3.6

    @property
    def w_prime_kmh(self) -> float:
        return self.w_prime * 3.6

    @property
    def f_max_per_hour(self) -> float:
        return self.f_max * 3600.0

    def rho(self, m: int) -> float:
        return m / self.L


def diagram_params(model: LineModel) -> DiagramParams:
    t_min = model.t_min
    return DiagramParams(
        n=model.n,
        L=model.total_length,
        tau=float(np.sum(t_min)) / model.total_length,
        omega=float(np.sum(model.s_min)) / model.total_length,
        h_min=float(np.max(t_min + model.s_min)),
        w_floor=float(np.mean(model.w_min)),
        r_avg=float(np.mean(model.running_times)),
        g_floor=float(np.mean(model.running_times + model.s_min)),
    )


def _check_rho(p: DiagramParams, rho: float) -> None:
    if not (0.0 < rho < p.rho_max):
        raise ModelError(
            "density %.6g outside the open range (0, %.6g)" % (rho, p.rho_max)
        )


def h_of_rho(p: DiagramParams, rho: float) -> float:
    """Asymptotic average headway at train density rho (trains/m)."""
    _check_rho(p, rho)
    return max(p.tau / rho, p.h_min, p.omega / (p.rho_max - rho))


def h_of_sigma(p: DiagramParams, sigma: float) -> float:
    """Headway as a function of the average space-headway L/m (meters)."""
    if sigma <= p.sigma_min:
        raise ModelError("space-headway %.6g not above the minimum %.6g"
                         % (sigma, p.sigma_min))
    return max(p.tau * sigma, p.h_min, p.omega / (1.0 / p.sigma_min - 1.0 / sigma))


def f_of_rho(p: DiagramParams, rho: float) -> float:
    """Train frequency (trains/s): min of the three diagram branches."""
    if not (0.0 <= rho <= p.rho_max):
        raise ModelError("density %.6g outside [0, %.6g]" % (rho, p.rho_max))
    return min(p.v * rho, p.f_max, p.w_prime * (p.rho_max - rho))


def w_of_rho(p: DiagramParams, rho: float) -> float:
    """Node-average dwell time along the diagram."""
    _check_rho(p, rho)
    return max(
        p.w_floor,
        p.h_min / p.rho_max * rho - p.r_avg,
        p.omega / (p.rho_max - rho) - p.g_floor,
    )


def g_of_rho(p: DiagramParams, rho: float) -> float:
    """Node-average safe separation time along the diagram."""
    _check_rho(p, rho)
    return max(
        p.tau / rho - p.w_floor,
        (p.r_avg + p.h_min) - p.h_min / p.rho_max * rho,
        p.g_floor,
    )


def classify_phase(p: DiagramParams, rho: float) -> Phase:
    """Free-flow below f_max/v, congestion above rho_max - f_max/w';
    phase boundaries belong to the maximum-frequency plateau."""
    if not (0.0 <= rho <= p.rho_max):
        raise ModelError("density %.6g outside [0, %.6g]" % (rho, p.rho_max))
    if rho < p.f_max / p.v:
        return Phase.FREE_FLOW
    if rho > p.rho_max - p.f_max / p.w_prime:
        return Phase.CONGESTION
    return Phase.MAX_FREQUENCY


def optimal_train_count(model: LineModel) -> int:
    """Smallest m attaining min_m h(m): the left edge of the plateau."""
    best_m, best_h = None, math.inf
    for m in range(1, model.n):
        h = closed_form_headway(model, m)
        if h < best_h - 1e-12:
            best_m, best_h = m, h
    if best_m is None:
        raise ModelError("line has no feasible train count")
    return best_m


def passenger_stability(lam: float, alpha: float, w_star: float, h: float) -> bool:
    """Server-style stability: arrivals strictly below the service rate."""
    return lam < alpha * w_star / h


@dataclass(frozen=True)
class _Baseline:
    headway: float
    w_star: float


def _passenger_free_baseline(
    model: LineModel, placement: TrainPlacement, events: int = 5000
) -> _Baseline:
    sys = maxplus_to_affine(build_maxplus_system(model, placement))
    res = simulate(sys, model, placement, events=events)
    return _Baseline(headway=res.headway_estimate, w_star=res.platform_dwell_average())


def control_params(
    model: LineModel,
    placement: TrainPlacement,
    demand: Demand,
    events: int = 5000,
    baseline: tuple[float, float] | None = None,
) -> ControlParameters:
    """Fix the stabilizing dwell-law parameters for a given train count.

    The maximum dwell is the passenger-free asymptotic headway h~; the
    demand threshold is lambda~_j = alpha_j * w* / h~ with w* the
    platform-average dwell of the passenger-free dynamics; the blend gain
    is delta_j = lambda~_j / max(lambda_j, lambda~_j), so platforms whose
    demand fits under the threshold get delta = 1 (pure max-plus
    behavior) and overloaded ones trade upstream coupling for schedule
    anchoring.  `baseline` short-circuits the simulation with a known
    (h~, w*) pair.
    """
    if baseline is None:
        base = _passenger_free_baseline(model, placement, events)
    else:
        base = _Baseline(*baseline)
    if not np.isfinite(base.headway) or base.headway <= 0:
        raise ModelError("baseline headway is not finite and positive")
    lam = demand.arrival_rates
    alpha = demand.boarding_rates
    lam_tilde = alpha * base.w_star / base.headway
    delta = lam_tilde / np.maximum(lam, lam_tilde)
    theta = delta * lam / np.where(alpha > 0, alpha, 1.0)
    w_max = np.full(len(lam), base.headway)
    return ControlParameters(w_max=w_max, theta=theta, delta=delta,
                             lambda_tilde=lam_tilde)


# -- batch computations -----------------------------------------------------


@dataclass(frozen=True)
class PhasePoint:
    m: int | None
    rho: float
    sigma: float
    h: float
    f: float
    w: float
    g: float
    phase: Phase


def phase_diagram(model: LineModel) -> list[PhasePoint]:
    """Evaluate the analytic diagram at every feasible train count."""
    p = diagram_params(model)
    points = []
    for m in range(1, model.n):
        rho = p.rho(m)
        points.append(PhasePoint(
            m=m,
            rho=rho,
            sigma=p.L / m,
            h=h_of_rho(p, rho),
            f=f_of_rho(p, rho),
            w=w_of_rho(p, rho),
            g=g_of_rho(p, rho),
            phase=classify_phase(p, rho),
        ))
    return points


def phase_diagram_density(model: LineModel, steps: int) -> list[PhasePoint]:
    """Evaluate the analytic diagram on a uniform density grid in (0, rho_max)."""
    if steps < 1:
        raise ModelError("need at least one density sample")
    p = diagram_params(model)
    points = []
    for i in range(1, steps + 1):
        rho = p.rho_max * i / (steps + 1)
        points.append(PhasePoint(
            m=None,
            rho=rho,
            sigma=1.0 / rho,
            h=h_of_rho(p, rho),
            f=f_of_rho(p, rho),
            w=w_of_rho(p, rho),
            g=g_of_rho(p, rho),
            phase=classify_phase(p, rho),
        ))
    return points


def write_phase_diagram_csv(points: list[PhasePoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# rho: trains/m, h/g/w: s, f: trains/s\n")
        writer = csv.writer(fh)
        writer.writerow(["rho", "sigma", "h", "f", "w", "g", "phase"])
        for pt in points:
            writer.writerow([
                "%.9g" % pt.rho, "%.6f" % pt.sigma, "%.6f" % pt.h,
                "%.9g" % pt.f, "%.6f" % pt.w, "%.6f" % pt.g, pt.phase.value,
            ])


@dataclass(frozen=True)
class SweepPoint:
    m: int
    c: float
    h: float          # controlled simulated headway, s
    f: float          # trains/s
    h_baseline: float  # passenger-free headway h~, s


def demand_sweep(
    model: LineModel,
    demand: Demand,
    train_counts: list[int],
    scales: list[float],
    events: int = 2000,
    baseline_events: int = 5000,
) -> list[SweepPoint]:
    """Controlled headway over a (train count, demand scale) grid.

    The passenger-free baseline (and hence the control parameters) is
    computed once per train count and reused across demand scales.
    """
    points = []
    for m in train_counts:
        if not (0 < m < model.n):
            raise ModelError("sweep train count %d must be strictly between 0 and %d"
                             % (m, model.n))
        placement = place_trains(model, m)
        base = _passenger_free_baseline(model, placement, baseline_events)
        for c in scales:
            dem = demand.scaled(c)
            ctrl = control_params(model, placement, dem,
                                  baseline=(base.headway, base.w_star))
            sys = build_controlled_system(model, placement, dem, ctrl)
            res = simulate(sys, model, placement, events=events)
            h = res.headway_estimate
            points.append(SweepPoint(m=m, c=c, h=h, f=1.0 / h,
                                     h_baseline=base.headway))
    return points


def write_demand_sweep_csv(points: list[SweepPoint], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# h: s, f: trains/s\n")
        writer = csv.writer(fh)
        writer.writerow(["m", "c", "h", "f"])
        for pt in points:
            writer.writerow(["%d" % pt.m, "%.9g" % pt.c,
                             "%.6f" % pt.h, "%.9g" % pt.f])


@dataclass(frozen=True)
class InstabilityResult:
    """Downstream response to a one-off injected departure delay."""

    node: int
    event: int
    delay: float
    deviations: np.ndarray  # (events+1, n) perturbed minus nominal
    amplification: float    # max deviation after injection / injected delay

    @property
    def amplified(self) -> bool:
        return self.amplification > 1.0 + 1e-9


def instability_metric(
    sys,
    model: LineModel,
    placement: TrainPlacement,
    node: int,
    event: int,
    delay: float,
    events: int,
    warmup: np.ndarray | None = None,
) -> InstabilityResult:
    """Inject `delay` seconds into one departure and measure the echo.

    Non-expansive dynamics bound the amplification by one; the
    uncontrolled passenger coupling can push it above one.
    """
    if delay <= 0:
        raise ModelError("injected delay must be positive")
    if not (1 <= event <= events):
        raise ModelError("injection event %d outside horizon" % event)
    nominal = simulate(sys, model, placement, d0=warmup, events=events)
    perturbed = simulate(sys, model, placement, d0=warmup, events=events,
                         inject=(event, node, delay))
    dev = perturbed.departures - nominal.departures
    amplification = float(np.max(dev[event:])) / delay
    return InstabilityResult(node=node, event=event, delay=delay,
                             deviations=dev, amplification=amplification)


def write_instability_csv(result: InstabilityResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# deviation: s, perturbed minus nominal departure\n")
        writer = csv.writer(fh)
        writer.writerow(["k", "j", "deviation"])
        events, n = result.deviations.shape
        for k in range(1, events):
            for j in range(n):
                writer.writerow([k, j, "%.6f" % result.deviations[k, j]])
