"""Piecewise max-affine dynamic-programming systems.

A system updates each component as the maximum, over a set of pieces, of
affine forms in past states and (possibly) the current state:

    x_j^k = max_u ( sum_t coef_t * x_{i_t}^{k - lag_t} + c^u_j )

Terms with lag 0 are implicit; they are legal as long as the implicit
dependency graph is acyclic, in which case a topological update order
turns the implicit fixed point into an explicit sweep.  Systems with
memory deeper than one step are reduced to memory one by state
augmentation (delayed-copy chain variables), which preserves the
projected trajectory exactly.

With nonnegative coefficients and unit row sums the update map is
additive 1-homogeneous and monotone, hence sup-norm non-expansive, and
the per-component growth rates converge to a common value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .graphs import topological_order

try:  # pragma: no cover - exercised implicitly
    from numba import njit as _njit

    def _jit(fn):
        return _njit(cache=True)(fn)

except ImportError:  # pragma: no cover
    def _jit(fn):
        return fn

__all__ = [
    "Term",
    "Piece",
    "MaxAffineSystem",
    "GrowthResult",
    "IterationResult",
    "PropertyReport",
    "state_augment",
    "AugmentedSystem",
    "check_homogeneous_monotone",
]


@dataclass(frozen=True)
class Term:
    idx: int
    coef: float
    lag: int  # 0 = implicit (current state), 1 = previous, ...


@dataclass(frozen=True)
class Piece:
    terms: tuple
    const: float

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


class MaxAffineSystem:
    """Family of max-affine pieces per component."""

    def __init__(self, pieces: list[list[Piece]]):
        self.n = len(pieces)
        self.pieces = [list(row) for row in pieces]
        for j, row in enumerate(self.pieces):
            if not row:
                raise ValueError("component %d has no pieces" % j)
            for piece in row:
                for t in piece.terms:
                    if not (0 <= t.idx < self.n):
                        raise ValueError("term index out of range")
                    if t.lag < 0:
                        raise ValueError("negative lag")
        self._flat = None

    @property
    def memory(self) -> int:
        return max(
            (t.lag for row in self.pieces for p in row for t in p.terms), default=1
        )

    # -- structure ---------------------------------------------------------

    def implicit_arcs(self) -> list[tuple[int, int]]:
        """Arcs i -> j of the implicit dependency graph (lag-0 terms)."""
        arcs = set()
        for j, row in enumerate(self.pieces):
            for piece in row:
                for t in piece.terms:
                    if t.lag == 0 and t.coef != 0.0:
                        arcs.add((t.idx, j))
        return sorted(arcs)

    def dependency_arcs(self, lag: int) -> list[tuple[int, int]]:
        arcs = set()
        for j, row in enumerate(self.pieces):
            for piece in row:
                for t in piece.terms:
                    if t.lag == lag and t.coef != 0.0:
                        arcs.add((t.idx, j))
        return sorted(arcs)

    def combined_arcs(self) -> list[tuple[int, int]]:
        arcs = set()
        for j, row in enumerate(self.pieces):
            for piece in row:
                for t in piece.terms:
                    if t.coef != 0.0:
                        arcs.add((t.idx, j))
        return sorted(arcs)

    def explicit_order(self) -> list[int]:
        """Topological update order of the implicit graph.

        Any valid order gives the same update; ties are broken by node
        index.  Raises ModelError when the implicit graph has a cycle
        (fully implicit system).
        """
        order = topological_order(self.n, self.implicit_arcs())
        if order is None:
            raise ModelError(
                "fully implicit system: implicit dependencies form a cycle, "
                "no explicit update order exists"
            )
        return order

    def row_stochastic_flags(self, tol: float = 1e-12) -> np.ndarray:
        """Per component: every piece has nonnegative coefficients summing to 1."""
        flags = np.ones(self.n, dtype=bool)
        for j, row in enumerate(self.pieces):
            for piece in row:
                coefs = [t.coef for t in piece.terms]
                if any(c < -tol for c in coefs) or abs(sum(coefs) - 1.0) > tol:
                    flags[j] = False
                    break
        return flags

    def is_substochastic(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.row_stochastic_flags(tol)))

    # -- evaluation --------------------------------------------------------

    def evaluate_full(self, states: list[np.ndarray]) -> np.ndarray:
        """Evaluate with states[l] standing for x^(k-l); states[0] is implicit."""
        if len(states) <= self.memory:
            raise ValueError("need states for lags 0..%d" % self.memory)
        out = np.empty(self.n)
        for j, row in enumerate(self.pieces):
            best = -np.inf
            for piece in row:
                acc = piece.const
                for t in piece.terms:
                    acc += t.coef * states[t.lag][t.idx]
                if acc > best:
                    best = acc
            out[j] = best
        return out

    def evaluate(self, x_prev: np.ndarray, x_cur: np.ndarray) -> np.ndarray:
        """One-step evaluation for memory-1 systems (x_cur feeds lag-0 terms)."""
        if self.memory > 1:
            raise ValueError("system has memory %d; augment first" % self.memory)
        return self.evaluate_full([np.asarray(x_cur, float), np.asarray(x_prev, float)])

    # -- iteration ---------------------------------------------------------

    def _flatten(self):
        if self._flat is not None:
            return self._flat
        if self.memory > 1:
            raise ValueError("system has memory %d; augment first" % self.memory)
        order = self.explicit_order()
        piece_start = [0]
        consts, term_start, t_idx, t_coef, t_lag = [], [0], [], [], []
        for j in range(self.n):
            for piece in self.pieces[j]:
                consts.append(piece.const)
                for t in piece.terms:
                    t_idx.append(t.idx)
                    t_coef.append(t.coef)
                    t_lag.append(t.lag)
                term_start.append(len(t_idx))
            piece_start.append(len(consts))
        self._flat = (
            np.array(order, dtype=np.int64),
            np.array(piece_start, dtype=np.int64),
            np.array(consts, dtype=np.float64),
            np.array(term_start, dtype=np.int64),
            np.array(t_idx, dtype=np.int64),
            np.array(t_coef, dtype=np.float64),
            np.array(t_lag, dtype=np.int64),
        )
        return self._flat

    def trajectory(
        self,
        x0: np.ndarray,
        steps: int,
        inject: tuple[int, int, float] | None = None,
    ) -> np.ndarray:
        """Iterate the explicit sweep for `steps` events; returns (steps+1, n).

        `inject` adds a one-off perturbation (event k, component j, delta)
        to the computed value, used for delay-propagation studies.
        """
        order, ps, pc, ts, ti, tc, tl = self._flatten()
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (self.n,):
            raise ValueError("initial state has wrong shape")
        traj = np.empty((steps + 1, self.n))
        traj[0] = x0
        ik, ij, idelta = inject if inject is not None else (-1, -1, 0.0)
        _sweep(steps, order, ps, pc, ts, ti, tc, tl, traj, ik, ij, idelta)
        return traj

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        rows = [
            [
                {
                    "c": p.const,
                    "terms": [{"i": t.idx, "lag": t.lag, "coef": t.coef} for t in p.terms],
                }
                for p in row
            ]
            for row in self.pieces
        ]
        return json.dumps({"n": self.n, "rows": rows})

    @classmethod
    def from_json(cls, text: str) -> "MaxAffineSystem":
        doc = json.loads(text)
        pieces = [
            [
                Piece(
                    terms=tuple(
                        Term(int(t["i"]), float(t["coef"]), int(t["lag"]))
                        for t in p["terms"]
                    ),
                    const=float(p["c"]),
                )
                for p in row
            ]
            for row in doc["rows"]
        ]
        sys = cls(pieces)
        if sys.n != int(doc["n"]):
            raise ValueError("inconsistent dimension in serialized system")
        return sys


def _sweep_py(steps, order, piece_start, piece_const, term_start, term_idx,
              term_coef, term_lag, traj, inject_k, inject_j, inject_delta):
    n = order.shape[0]
    for k in range(1, steps + 1):
        for t in range(n):
            j = order[t]
            best = -np.inf
            for p in range(piece_start[j], piece_start[j + 1]):
                acc = piece_const[p]
                for q in range(term_start[p], term_start[p + 1]):
                    i = term_idx[q]
                    if term_lag[q] == 1:
                        acc += term_coef[q] * traj[k - 1, i]
                    else:
                        acc += term_coef[q] * traj[k, i]
                if acc > best:
                    best = acc
            if k == inject_k and j == inject_j:
                best += inject_delta
            traj[k, j] = best


_sweep = _jit(_sweep_py)


@dataclass
class GrowthResult:
    """Trailing-window growth estimate chi per component."""

    chi: np.ndarray
    window: int
    spread: float
    mu: float | None  # common growth rate when components agree

    @classmethod
    def from_trajectory(cls, traj: np.ndarray, window: int | None = None,
                        rel_tol: float = 1e-6) -> "GrowthResult":
        steps = traj.shape[0] - 1
        # the window averages out periodic stationary regimes
        p = window if window is not None else max(50, steps // 10)
        p = min(p, steps)
        if p < 1:
            raise ValueError("trajectory too short for a growth estimate")
        chi = (traj[steps] - traj[steps - p]) / p
        scale = max(1.0, float(np.max(np.abs(chi))))
        spread = float((np.max(chi) - np.min(chi)) / scale)
        mu = float(np.mean(chi)) if spread < rel_tol else None
        return cls(chi=chi, window=p, spread=spread, mu=mu)


@dataclass
class IterationResult:
    trajectory: np.ndarray
    growth: GrowthResult


def iterate(
    sys: MaxAffineSystem,
    x0: np.ndarray,
    steps: int,
    window: int | None = None,
    inject: tuple[int, int, float] | None = None,
) -> IterationResult:
    """Run the explicit recursion and estimate the asymptotic growth rate."""
    traj = sys.trajectory(x0, steps, inject=inject)
    return IterationResult(trajectory=traj, growth=GrowthResult.from_trajectory(traj, window))


def fixed_point_residual(sys: MaxAffineSystem, v: np.ndarray, mu: float) -> float:
    """Sup-norm residual of the generalized eigen equation f(v, v-mu, ...) = v."""
    m = max(sys.memory, 1)
    states = [np.asarray(v, float) - l * mu for l in range(m + 1)]
    return float(np.max(np.abs(sys.evaluate_full(states) - v)))


# -- state augmentation ----------------------------------------------------


@dataclass
class AugmentedSystem:
    """Memory-1 rewrite of a deep-memory system.

    The first `n_original` components carry the original trajectory; the
    rest are delayed copies `copy_of[idx] = (source, depth)` satisfying
    z_idx^k = x_source^(k-depth).
    """

    system: MaxAffineSystem
    n_original: int
    copy_of: dict = field(default_factory=dict)

    def initial_state(self, history: list[np.ndarray]) -> np.ndarray:
        """Assemble z^0 from original history [x^0, x^-1, ..., x^-(m-1)]."""
        z0 = np.empty(self.system.n)
        z0[: self.n_original] = history[0]
        for idx, (src, depth) in self.copy_of.items():
            z0[idx] = history[depth][src]
        return z0

    def project(self, traj: np.ndarray) -> np.ndarray:
        return traj[:, : self.n_original]


def state_augment(sys: MaxAffineSystem) -> AugmentedSystem:
    """Eliminate lags deeper than one by chains of delayed-copy variables.

    An arc carried by a lag-l term (l >= 2) becomes a path through l-1
    chain nodes, so strong connectivity of the combined graph is
    preserved and the projected trajectory is reproduced exactly.
    """
    if sys.memory <= 1:
        return AugmentedSystem(system=sys, n_original=sys.n)

    max_lag = [0] * sys.n
    for row in sys.pieces:
        for piece in row:
            for t in piece.terms:
                if t.lag > max_lag[t.idx]:
                    max_lag[t.idx] = t.lag

    next_id = sys.n
    chain: dict[tuple[int, int], int] = {}  # (source, depth) -> variable id
    copy_of: dict[int, tuple[int, int]] = {}
    for src in range(sys.n):
        for depth in range(1, max_lag[src]):
            chain[(src, depth)] = next_id
            copy_of[next_id] = (src, depth)
            next_id += 1

    def rewrite(term: Term) -> Term:
        if term.lag <= 1:
            return term
        return Term(idx=chain[(term.idx, term.lag - 1)], coef=term.coef, lag=1)

    pieces = [
        [Piece(terms=tuple(rewrite(t) for t in p.terms), const=p.const) for p in row]
        for row in sys.pieces
    ]
    for idx in range(sys.n, next_id):
        src, depth = copy_of[idx]
        prev = idx - 1 if depth > 1 else src
        pieces.append([Piece(terms=(Term(idx=prev, coef=1.0, lag=1),), const=0.0)])

    return AugmentedSystem(system=MaxAffineSystem(pieces), n_original=sys.n,
                           copy_of=copy_of)


def simulate_direct(sys: MaxAffineSystem, history: list[np.ndarray], steps: int) -> np.ndarray:
    """Reference recursion keeping an explicit history buffer (any memory).

    history[l] is x^(-l); used as an oracle for the augmented rewrite.
    """
    m = max(sys.memory, 1)
    if len(history) < m:
        raise ValueError("need %d history states" % m)
    order = sys.explicit_order()
    past = [np.asarray(h, float).copy() for h in history[:m]]
    traj = [past[0].copy()]
    for _ in range(steps):
        cur = np.full(sys.n, np.nan)
        states = [cur] + past
        for j in order:
            best = -np.inf
            for piece in sys.pieces[j]:
                acc = piece.const
                for t in piece.terms:
                    acc += t.coef * states[t.lag][t.idx]
                if acc > best:
                    best = acc
            cur[j] = best
        traj.append(cur.copy())
        past = [cur] + past[:-1] if m > 1 else [cur]
    return np.array(traj)


# -- randomized property checks -------------------------------------------


@dataclass
class PropertyReport:
    homogeneous: bool
    monotone: bool
    nonexpansive: bool
    counterexample: dict | None

    @property
    def all_passed(self) -> bool:
        return self.homogeneous and self.monotone and self.nonexpansive


def check_homogeneous_monotone(
    sys: MaxAffineSystem,
    trials: int = 50,
    seed: int = 0,
    scale: float = 500.0,
    tol: float = 1e-8,
) -> PropertyReport:
    """Randomized verification of 1-homogeneity, monotonicity, non-expansiveness.

    Failures are reported with the offending inputs, not raised.  Beyond
    random ordered pairs, monotonicity is probed with single-coordinate
    bumps so a negative coefficient is found whenever its piece is active
    at one of the sampled base points.
    """
    rng = np.random.default_rng(seed)
    m = max(sys.memory, 1)
    report = PropertyReport(True, True, True, None)

    def note(kind, **data):
        if report.counterexample is None:
            report.counterexample = {"property": kind, **data}

    for _ in range(trials):
        states = [rng.uniform(-scale, scale, sys.n) for _ in range(m + 1)]
        f0 = sys.evaluate_full(states)

        a = float(rng.uniform(-scale, scale))
        fa = sys.evaluate_full([s + a for s in states])
        if np.max(np.abs(fa - (f0 + a))) > tol:
            report.homogeneous = False
            note("homogeneity", shift=a, states=states)

        bumps = [rng.uniform(0.0, scale, sys.n) for _ in range(m + 1)]
        fb = sys.evaluate_full([s + b for s, b in zip(states, bumps)])
        if np.min(fb - f0) < -tol:
            report.monotone = False
            note("monotonicity", states=states, bumps=bumps)

        for l in range(m + 1):
            for i in range(sys.n):
                probe = [s.copy() for s in states]
                probe[l][i] += 1.0
                fp = sys.evaluate_full(probe)
                if np.min(fp - f0) < -tol:
                    report.monotone = False
                    note("monotonicity", lag=l, coordinate=i, states=states)
                if np.max(np.abs(fp - f0)) > 1.0 + tol:
                    report.nonexpansive = False
                    note("nonexpansiveness", lag=l, coordinate=i, states=states)

        other = [rng.uniform(-scale, scale, sys.n) for _ in range(m + 1)]
        dist = max(float(np.max(np.abs(s - o))) for s, o in zip(states, other))
        fo = sys.evaluate_full(other)
        if np.max(np.abs(fo - f0)) > dist + tol:
            report.nonexpansive = False
            note("nonexpansiveness", states=states, other=other)

    return report
