"""Discretized metro line: geometry, train placement, and the three dynamics.

The linear line with two service directions is modeled as a single
circular sequence of segments (indices mod n).  Each segment carries a
constant running time; its downstream node is either a platform (positive
minimum dwell) or a plain block boundary (zero minimum dwell).  Termini
turnarounds are ordinary segments traversed at the terminus speed.

Three dynamical systems are assembled on this geometry:

* a max-plus linear system from the travel-time and safety constraints
  (no passenger effect),
* a demand-coupled system where platform dwell grows with the product of
  passenger arrival rate and train separation (unstable in general),
* a controlled system blending the upstream departure with the node's own
  previous departure through a gain delta in [0, 1] (stable).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelError
from .maxplus import MaxPlusPolyMatrix
from .monotone import GrowthResult, MaxAffineSystem, Piece, Term

__all__ = [
    "Station",
    "Demand",
    "LineConfig",
    "LineModel",
    "TrainPlacement",
    "ControlParameters",
    "SimulationResult",
    "segmentize",
    "place_trains",
    "build_maxplus_system",
    "maxplus_to_affine",
    "build_demand_coupled_system",
    "build_controlled_system",
    "closed_form_headway",
    "default_initial_departures",
    "simulate",
]


@dataclass(frozen=True)
class Station:
    name: str
    length_to_next: float | None  # meters; None for the last station


@dataclass(frozen=True)
class Demand:
    """Per-platform passenger arrival and boarding rates (passengers/s)."""

    arrival_rates: np.ndarray
    boarding_rates: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.arrival_rates, dtype=float)
        alpha = np.asarray(self.boarding_rates, dtype=float)
        if lam.shape != alpha.shape:
            raise ConfigError("demand rate vectors must have equal length")
        if np.any(lam < 0):
            raise ConfigError("arrival rates must be nonnegative")
        if np.any((lam > 0) & (alpha <= 0)):
            raise ConfigError("boarding rate must be positive wherever demand is")
        object.__setattr__(self, "arrival_rates", lam)
        object.__setattr__(self, "boarding_rates", alpha)

    @property
    def platform_count(self) -> int:
        return len(self.arrival_rates)

    def scaled(self, c: float) -> "Demand":
        return Demand(self.arrival_rates * c, self.boarding_rates)

    @classmethod
    def uniform(cls, platforms: int, lam: float, alpha: float) -> "Demand":
        return cls(np.full(platforms, float(lam)), np.full(platforms, float(alpha)))


@dataclass(frozen=True)
class LineConfig:
    """Line geometry and operational bounds, as read from JSON."""

    stations: tuple
    terminus_length: float
    target_segment_length: float
    v_run: float
    v_terminus: float
    w_min_platform: float
    s_min: float
    w_max_default: float
    demand: Demand
    v_station: float | None = None  # speed on platform-adjacent segments
    train_length: float = 90.0
    name: str = "line"

    def __post_init__(self):
        if len(self.stations) < 2:
            raise ConfigError("need at least two stations")
        for st in self.stations[:-1]:
            if st.length_to_next is None or st.length_to_next <= 0:
                raise ConfigError("inter-station lengths must be positive")
        for attr in ("terminus_length", "target_segment_length", "v_run", "v_terminus", "s_min"):
            if getattr(self, attr) <= 0:
                raise ConfigError("%s must be positive" % attr)
        if self.w_min_platform < 0:
            raise ConfigError("w_min_platform must be nonnegative")
        if self.v_station is not None and self.v_station <= 0:
            raise ConfigError("v_station must be positive")
        if self.demand.platform_count != 2 * len(self.stations):
            raise ConfigError(
                "demand must list %d platforms (both directions)" % (2 * len(self.stations))
            )

    @classmethod
    def from_dict(cls, doc: dict) -> "LineConfig":
        try:
            stations = tuple(
                Station(str(s["name"]), None if s.get("length_to_next") is None
                        else float(s["length_to_next"]))
                for s in doc["stations"]
            )
            platforms = 2 * len(stations)
            dem = doc.get("demand", {})
            lam = dem.get("lambda", 0.0)
            alpha = dem.get("alpha", 1.0)
            lam = np.full(platforms, float(lam)) if np.isscalar(lam) else np.asarray(lam, float)
            alpha = (np.full(platforms, float(alpha)) if np.isscalar(alpha)
                     else np.asarray(alpha, float))
            return cls(
                stations=stations,
                terminus_length=float(doc["terminus_length"]),
                target_segment_length=float(doc["target_segment_length"]),
                v_run=float(doc["v_run"]),
                v_terminus=float(doc["v_terminus"]),
                w_min_platform=float(doc["w_min_platform"]),
                s_min=float(doc["s_min"]),
                w_max_default=float(doc.get("w_max_default", 120.0)),
                demand=Demand(lam, alpha),
                v_station=(None if doc.get("v_station") is None else float(doc["v_station"])),
                train_length=float(doc.get("train_length", 90.0)),
                name=str(doc.get("name", "line")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("invalid line configuration: %s" % exc) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "LineConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("cannot read configuration %s: %s" % (path, exc)) from exc
        if not isinstance(doc, dict):
            raise ConfigError("configuration root must be a JSON object")
        return cls.from_dict(doc)


@dataclass
class LineModel:
    """Circular segment sequence with per-segment times and platform flags."""

    lengths: np.ndarray        # meters
    running_times: np.ndarray  # r_j, seconds
    w_min: np.ndarray          # seconds; zero at non-platform nodes
    s_min: np.ndarray          # seconds
    is_platform: np.ndarray    # end node of segment j is a platform
    node_names: list
    config: LineConfig | None = None

    @property
    def n(self) -> int:
        return len(self.lengths)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    @property
    def t_min(self) -> np.ndarray:
        """Minimum travel time per segment, r_j + w_min_j."""
        return self.running_times + self.w_min

    @property
    def platform_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.is_platform)

    def demand_by_node(self, demand: Demand) -> tuple[np.ndarray, np.ndarray]:
        """Spread per-platform rates onto the loop; zero off-platform."""
        platforms = self.platform_nodes
        if demand.platform_count != len(platforms):
            raise ConfigError(
                "demand lists %d platforms, line has %d"
                % (demand.platform_count, len(platforms))
            )
        lam = np.zeros(self.n)
        alpha = np.zeros(self.n)
        lam[platforms] = demand.arrival_rates
        alpha[platforms] = demand.boarding_rates
        return lam, alpha


def segmentize(cfg: LineConfig) -> LineModel:
    """Discretize the two-direction line into a circular segment loop.

    Every inter-station of length l is split into max(1, floor(l / target))
    equal segments, so segments come out at or slightly above the target
    length (and always longer than one train).  Each direction ends with a
    terminus turnaround segment whose downstream node is the first platform
    of the opposite direction.  Platform-adjacent segments are traversed at
    `v_station` when configured (deceleration into and acceleration out of
    the stop), termini at `v_terminus`, everything else at `v_run`.
    """
    lengths: list[float] = []
    is_terminus: list[bool] = []
    platform_flags: list[bool] = []
    names: list[str] = []

    station_names = [s.name for s in cfg.stations]
    inter = [s.length_to_next for s in cfg.stations[:-1]]

    for direction in (0, 1):
        seq = station_names if direction == 0 else station_names[::-1]
        gaps = inter if direction == 0 else inter[::-1]
        for idx, gap in enumerate(gaps):
            k = max(1, math.floor(gap / cfg.target_segment_length))
            for part in range(k):
                lengths.append(gap / k)
                is_terminus.append(False)
                platform_flags.append(part == k - 1)
                names.append(
                    "%s/dir%d" % (seq[idx + 1], direction + 1)
                    if part == k - 1
                    else "%s-%s/%d" % (seq[idx], seq[idx + 1], part + 1)
                )
        kt = max(1, math.floor(cfg.terminus_length / cfg.target_segment_length))
        for part in range(kt):
            lengths.append(cfg.terminus_length / kt)
            is_terminus.append(True)
            platform_flags.append(part == kt - 1)
            names.append(
                "%s/dir%d" % (seq[-1], 2 - direction)
                if part == kt - 1
                else "terminus-%s/%d" % (seq[-1], part + 1)
            )

    lengths_arr = np.array(lengths)
    if np.any(lengths_arr <= cfg.train_length):
        raise ConfigError(
            "segment of %.1f m is not longer than one train (%.1f m); "
            "lower target_segment_length" % (lengths_arr.min(), cfg.train_length)
        )

    n = len(lengths)
    platform = np.array(platform_flags)
    v_station = cfg.v_station if cfg.v_station is not None else cfg.v_run
    running = np.empty(n)
    for j in range(n):
        starts_at_platform = platform[(j - 1) % n]
        if is_terminus[j]:
            v = cfg.v_terminus
        elif platform[j] or starts_at_platform:
            v = v_station
        else:
            v = cfg.v_run
        running[j] = lengths[j] / v

    return LineModel(
        lengths=lengths_arr,
        running_times=running,
        w_min=np.where(platform, cfg.w_min_platform, 0.0),
        s_min=np.full(n, cfg.s_min),
        is_platform=platform,
        node_names=names,
        config=cfg,
    )


@dataclass(frozen=True)
class TrainPlacement:
    """Boolean occupancy per segment at time zero."""

    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=bool)
        object.__setattr__(self, "b", b)

    @property
    def m(self) -> int:
        return int(np.sum(self.b))

    @property
    def b_bar(self) -> np.ndarray:
        return ~self.b


def place_trains(model: LineModel, m: int) -> TrainPlacement:
    """Evenly spaced deterministic placement: occupied at floor(i*n/m)."""
    if m < 0 or m > model.n:
        raise ModelError("cannot place %d trains on %d segments" % (m, model.n))
    b = np.zeros(model.n, dtype=bool)
    for i in range(m):
        b[(i * model.n) // m] = True
    return TrainPlacement(b)


def build_maxplus_system(model: LineModel, placement: TrainPlacement) -> MaxPlusPolyMatrix:
    """Assemble the γ-polynomial matrix of the uncontrolled dynamics.

    Row j takes γ^{b_j} t_min_j from column j-1 (travel-time constraint)
    and γ^{1-b_{j+1}} s_min_{j+1} from column j+1 (safety constraint),
    indices mod n.
    """
    n = model.n
    t_min = model.t_min
    a = MaxPlusPolyMatrix(n)
    b = placement.b
    for j in range(n):
        a.add_monomial(j, (j - 1) % n, int(b[j]), float(t_min[j]))
        jn = (j + 1) % n
        a.add_monomial(j, jn, int(not b[jn]), float(model.s_min[jn]))
    return a


def maxplus_to_affine(a: MaxPlusPolyMatrix) -> MaxAffineSystem:
    """Explicit-recursion view of x = A(γ) x: one piece per monomial."""
    pieces: list[list[Piece]] = [[] for _ in range(a.n)]
    for (i, j), entry in sorted(a.monomials.items()):
        for l, w in sorted(entry.items()):
            pieces[i].append(Piece(terms=(Term(idx=j, coef=1.0, lag=l),), const=w))
    for i, row in enumerate(pieces):
        if not row:
            raise ModelError("row %d of the matrix is empty" % i)
    return MaxAffineSystem(pieces)


def closed_form_headway(model: LineModel, m: int) -> float:
    """Asymptotic average headway of the max-plus dynamics with m trains.

    max of: forward Hamiltonian mean sum(t_min)/m, the two-arc cycle means
    max(t_min + s_min), and the backward Hamiltonian mean sum(s_min)/(n-m).
    Infinite for m in {0, n} (no train movement possible).
    """
    if m < 0 or m > model.n:
        raise ModelError("train count %d out of range" % m)
    if m == 0 or m == model.n:
        return math.inf
    t_min = model.t_min
    return max(
        float(np.sum(t_min)) / m,
        float(np.max(t_min + model.s_min)),
        float(np.sum(model.s_min)) / (model.n - m),
    )


def _base_pieces(model: LineModel, placement: TrainPlacement) -> list[list[Piece]]:
    n = model.n
    b = placement.b
    t_min = model.t_min
    rows = []
    for j in range(n):
        jp = (j - 1) % n
        jn = (j + 1) % n
        rows.append([
            Piece(terms=(Term(idx=jp, coef=1.0, lag=int(b[j])),), const=float(t_min[j])),
            Piece(terms=(Term(idx=jn, coef=1.0, lag=int(not b[jn])),),
                  const=float(model.s_min[jn])),
        ])
    return rows


def build_demand_coupled_system(
    model: LineModel, placement: TrainPlacement, demand: Demand
) -> MaxAffineSystem:
    """Dynamics with uncontrolled passenger effect on platform dwell times.

    At platforms with demand, a third piece couples the departure to the
    separation time: coefficient 1 + lambda/alpha on the upstream
    departure and -lambda/alpha on the node's own previous departure.
    The negative coefficient breaks monotonicity, which is precisely the
    source of delay amplification.
    """
    lam, alpha = model.demand_by_node(demand)
    rows = _base_pieces(model, placement)
    b = placement.b
    for j in model.platform_nodes:
        if lam[j] <= 0:
            continue
        ratio = lam[j] / alpha[j]
        jp = (j - 1) % model.n
        rows[j].append(Piece(
            terms=(
                Term(idx=jp, coef=1.0 + ratio, lag=int(b[j])),
                Term(idx=int(j), coef=-ratio, lag=1),
            ),
            const=(1.0 + ratio) * float(model.running_times[j]),
        ))
    return MaxAffineSystem(rows)


@dataclass(frozen=True)
class ControlParameters:
    """Stabilizing dwell-law parameters per platform node.

    delta_j = theta_j * alpha_j / lambda_j blends the upstream departure
    (weight 1 - delta) with the node's own previous departure (weight
    delta); lambda_tilde is the passenger rate below which the controlled
    dynamics stay max-plus linear.
    """

    w_max: np.ndarray         # seconds, per platform node order
    theta: np.ndarray
    delta: np.ndarray
    lambda_tilde: np.ndarray  # passengers/s

    def __post_init__(self):
        for name in ("w_max", "theta", "delta", "lambda_tilde"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.delta < -1e-12) or np.any(self.delta > 1.0 + 1e-12):
            raise ModelError("control gain delta must lie in [0, 1]")


def build_controlled_system(
    model: LineModel,
    placement: TrainPlacement,
    demand: Demand,
    ctrl: ControlParameters,
) -> MaxAffineSystem:
    """Stable dynamics under the blended dwell law.

    Platform piece: (1-delta)·upstream + delta·own-previous +
    (1-delta)·r_j + w_max_j.  Coefficients are nonnegative and sum to
    one, so the map is monotone and non-expansive.
    """
    del demand  # rates enter only through the precomputed parameters
    platforms = model.platform_nodes
    if len(ctrl.delta) != len(platforms):
        raise ModelError("control parameters must cover every platform node")
    rows = _base_pieces(model, placement)
    b = placement.b
    for pos, j in enumerate(platforms):
        delta = float(ctrl.delta[pos])
        if not (0.0 <= delta <= 1.0):
            raise ModelError("delta=%g outside [0, 1] at platform %d" % (delta, j))
        jp = (j - 1) % model.n
        terms = []
        if delta < 1.0:
            terms.append(Term(idx=jp, coef=1.0 - delta, lag=int(b[j])))
        if delta > 0.0:
            terms.append(Term(idx=int(j), coef=delta, lag=1))
        rows[j].append(Piece(
            terms=tuple(terms),
            const=(1.0 - delta) * float(model.running_times[j]) + float(ctrl.w_max[pos]),
        ))
    return MaxAffineSystem(rows)


def default_initial_departures(model: LineModel, placement: TrainPlacement) -> np.ndarray:
    """All departures at time zero: finite, deterministic, placement-free.

    The asymptotic headway of every stable system here is independent of
    the initial departures, so any finite vector does.
    """
    del placement
    return np.zeros(model.n)


@dataclass
class SimulationResult:
    """Departure trajectory with the derived per-event traffic series.

    Index convention: series[k, j] for event k >= 1 at node j; entry
    [0, :] is the initial condition and is not a real event.
    """

    model: LineModel
    placement: TrainPlacement
    departures: np.ndarray  # (K+1, n)
    growth: GrowthResult

    @property
    def events(self) -> int:
        return self.departures.shape[0] - 1

    @cached_property
    def arrivals(self) -> np.ndarray:
        d = self.departures
        n = self.model.n
        prev = d[:, (np.arange(n) - 1) % n]
        b = self.placement.b
        a = np.empty_like(d)
        a[0] = np.nan
        a[1:] = np.where(b[None, :], prev[:-1], prev[1:]) + self.model.running_times[None, :]
        return a

    @cached_property
    def dwell(self) -> np.ndarray:
        return self.departures - self.arrivals

    @cached_property
    def separation(self) -> np.ndarray:
        g = np.empty_like(self.departures)
        g[0] = np.nan
        g[1:] = self.arrivals[1:] - self.departures[:-1]
        return g

    @cached_property
    def headway(self) -> np.ndarray:
        h = np.empty_like(self.departures)
        h[0] = np.nan
        h[1:] = self.departures[1:] - self.departures[:-1]
        return h

    @cached_property
    def s_time(self) -> np.ndarray:
        """g shifted by the occupancy lag, minus running time; last event NaN."""
        g = self.separation
        b = self.placement.b
        s = np.full_like(self.departures, np.nan)
        ks = np.arange(1, self.events)  # k + b_j <= K
        for j in range(self.model.n):
            s[ks, j] = g[ks + int(b[j]), j] - self.model.running_times[j]
        return s

    @property
    def headway_estimate(self) -> float:
        if self.growth.mu is not None:
            return self.growth.mu
        return float(np.mean(self.growth.chi))

    def _tail(self) -> slice:
        return slice(max(1, self.events // 2), self.events)  # s_time is NaN at K

    def platform_dwell_average(self) -> float:
        """w*: trailing-half dwell average restricted to platform nodes."""
        return float(np.mean(self.dwell[self._tail(), :][:, self.model.platform_nodes]))

    def platform_separation_average(self) -> float:
        return float(np.mean(self.separation[self._tail(), :][:, self.model.platform_nodes]))

    def tail_averages(self) -> dict:
        """Node-and-event averages of the traffic series on the stationary tail."""
        tail = self._tail()
        travel = self.model.running_times[None, :] + self.dwell[tail]
        return {
            "h": float(np.mean(self.headway[tail])),
            "g": float(np.mean(self.separation[tail])),
            "w": float(np.mean(self.dwell[tail])),
            "t": float(np.mean(travel)),
            "s": float(np.mean(self.s_time[tail])),
        }

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "j", "d", "a", "w", "g", "h"])
            for k in range(1, self.events + 1):
                for j in range(self.model.n):
                    writer.writerow([
                        k, j,
                        "%.6f" % self.departures[k, j],
                        "%.6f" % self.arrivals[k, j],
                        "%.6f" % self.dwell[k, j],
                        "%.6f" % self.separation[k, j],
                        "%.6f" % self.headway[k, j],
                    ])


def simulate(
    sys: MaxAffineSystem,
    model: LineModel,
    placement: TrainPlacement,
    d0: np.ndarray | None = None,
    events: int = 5000,
    window: int | None = None,
    inject: tuple[int, int, float] | None = None,
) -> SimulationResult:
    """Run the explicit recursion and derive the traffic series.

    Raises ModelError when no explicit update order exists, which on this
    topology happens exactly for m in {0, n}.
    """
    if d0 is None:
        d0 = default_initial_departures(model, placement)
    try:
        traj = sys.trajectory(np.asarray(d0, float), events, inject=inject)
    except ModelError as exc:
        m = placement.m
        raise ModelError(
            "%s (m=%d of n=%d: an empty or full line is fully implicit)"
            % (exc, m, model.n)
        ) from exc
    growth = GrowthResult.from_trajectory(traj, window)
    return SimulationResult(model=model, placement=placement, departures=traj, growth=growth)
