"""Spectral analysis over the max-plus semiring.

Computes the maximum cycle ratio (weight over duration) of a precedence
graph by Howard-style policy iteration, and generalized eigenpairs
(μ, v) with A(μ^{-1}) ⊗ v = v for irreducible polynomial matrices with
acyclic zero-duration subgraph.  Durations larger than one make this a
cycle-ratio problem, so Karp's cycle-mean algorithm does not apply.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import (
    Arc,
    PrecedenceGraph,
    build_graph,
    is_strongly_connected,
    topological_order,
)
from .maxplus import EPS, MaxPlusPolyMatrix

__all__ = ["EigenResult", "max_cycle_mean", "generalized_eigenpair"]

_MAX_ITER = 10_000


@dataclass
class EigenResult:
    """Generalized eigenvalue μ (seconds per event) with certificate data."""

    mu: float
    eigenvector: np.ndarray | None = None
    critical_cycle: list = field(default_factory=list)

    @property
    def critical_nodes(self) -> list[int]:
        return [a.tail for a in self.critical_cycle]


def _check_no_zero_duration_cycle(g: PrecedenceGraph) -> None:
    zero_arcs = [(a.tail, a.head) for a in g.arcs if a.duration == 0]
    if topological_order(g.n, zero_arcs) is None:
        raise ValueError(
            "zero-duration cycle: maximum cycle ratio is undefined "
            "(the system is fully implicit)"
        )


def _canonical(cycle: list[Arc]) -> list[Arc]:
    k = min(range(len(cycle)), key=lambda i: cycle[i].tail)
    return cycle[k:] + cycle[:k]


def _exact_ratio(cycle: list[Arc]) -> float:
    w = sum(a.weight for a in cycle)
    d = sum(a.duration for a in cycle)
    return w / d


def max_cycle_mean(g: PrecedenceGraph) -> tuple[float, list[Arc]]:
    """Maximum ratio W(c)/D(c) over elementary cycles, with one critical cycle.

    The graph must be strongly connected and every cycle must contain at
    least one arc of positive duration.  The returned cycle is rotated to
    start at its smallest node and its ratio is recomputed from plain sums,
    so the value is reproducible arc order notwithstanding.
    """
    if g.n == 0 or not g.arcs:
        raise ValueError("graph has no cycles")
    if not is_strongly_connected(g):
        raise ValueError("graph must be strongly connected")
    _check_no_zero_duration_cycle(g)

    scale = max(1.0, max(abs(a.weight) for a in g.arcs))
    eps = 1e-9 * scale

    # initial policy: any out-arc, prefer positive duration to reach a cycle
    policy = [max(out, key=lambda a: (a.duration > 0, a.weight)) for out in g.out]

    eta = np.zeros(g.n)
    val = np.zeros(g.n)

    for _ in range(_MAX_ITER):
        _evaluate_policy(g, policy, eta, val)
        improved = False
        for i in range(g.n):
            best = policy[i]
            best_key = (eta[best.head], best.weight - eta[i] * best.duration + val[best.head])
            for arc in g.out[i]:
                key = (eta[arc.head], arc.weight - eta[i] * arc.duration + val[arc.head])
                if key[0] > best_key[0] + eps or (
                    abs(key[0] - best_key[0]) <= eps and key[1] > best_key[1] + eps
                ):
                    best, best_key = arc, key
            if best is not policy[i]:
                cur_key = (eta[i], val[i])
                if best_key[0] > cur_key[0] + eps or best_key[1] > cur_key[1] + eps:
                    policy[i] = best
                    improved = True
        if not improved:
            break
    else:
        raise ArithmeticError("policy iteration did not converge")

    cycles = _policy_cycles(g, policy)
    best_cycle = max(cycles, key=lambda c: (_exact_ratio(c), -min(a.tail for a in c)))
    best_cycle = _canonical(best_cycle)
    return _exact_ratio(best_cycle), best_cycle


def _policy_cycles(g: PrecedenceGraph, policy: list[Arc]) -> list[list[Arc]]:
    color = [0] * g.n  # 0 unvisited, 1 in progress, 2 done
    cycles = []
    for s in range(g.n):
        if color[s]:
            continue
        path = []
        u = s
        while color[u] == 0:
            color[u] = 1
            path.append(u)
            u = policy[u].head
        if color[u] == 1:  # found a new cycle closing at u
            k = path.index(u)
            cycles.append([policy[x] for x in path[k:]])
        for x in path:
            color[x] = 2
    return cycles


def _evaluate_policy(g: PrecedenceGraph, policy: list[Arc], eta: np.ndarray, val: np.ndarray):
    """Solve v_i = w_i - eta_i d_i + v_succ(i) on the current policy graph."""
    succ = [policy[i].head for i in range(g.n)]
    done = [False] * g.n
    for cycle in _policy_cycles(g, policy):
        r = _exact_ratio(cycle)
        nodes = [a.tail for a in cycle]
        root_pos = min(range(len(nodes)), key=lambda i: nodes[i])
        order = nodes[root_pos:] + nodes[:root_pos]
        for u in order:
            eta[u] = r
        val[order[0]] = 0.0
        # walk the cycle backwards from the root
        for u in reversed(order[1:]):
            arc = policy[u]
            val[u] = arc.weight - r * arc.duration + val[succ[u]]
        for u in order:
            done[u] = True
    # resolve tree nodes feeding into the cycles
    for s in range(g.n):
        stack = []
        u = s
        while not done[u]:
            stack.append(u)
            done[u] = True  # mark early; resolved below in reverse
            u = succ[u]
        for u in reversed(stack):
            arc = policy[u]
            eta[u] = eta[succ[u]]
            val[u] = arc.weight - eta[u] * arc.duration + val[succ[u]]


def generalized_eigenpair(a: MaxPlusPolyMatrix, tol: float = 1e-9) -> EigenResult:
    """Unique generalized eigenvalue and a finite eigenvector of A(γ).

    Requires A irreducible and the zero-exponent subgraph acyclic; then
    A(μ^{-1}) ⊗ v = v with μ the maximum cycle ratio of the precedence
    graph.  The eigenvector is the Kleene-star column of a critical node
    in the graph reweighted by (W - μ·D).
    """
    g = build_graph(a)
    if not is_strongly_connected(g):
        raise ValueError("matrix is reducible: precedence graph not strongly connected")
    zero_arcs = [(x.tail, x.head) for x in g.arcs if x.duration == 0]
    if topological_order(a.n, zero_arcs) is None:
        raise ValueError("zero-exponent subgraph has a cycle: no finite eigenvalue")

    mu, cycle = max_cycle_mean(g)
    b = a.eval(-mu)  # A(μ^{-1}); arc weights become W - μ·D
    star = b.closure()
    c = min(arc.tail for arc in cycle)
    v = star.a[:, c].copy()
    if np.any(v == EPS):
        raise ArithmeticError("eigenvector has -inf entries; matrix not irreducible?")
    residual = float(np.max(np.abs(b.vec(v) - v)))
    if residual > tol:
        raise ArithmeticError(
            "eigenpair residual %.3e exceeds tolerance %.1e" % (residual, tol)
        )
    return EigenResult(mu=mu, eigenvector=v, critical_cycle=cycle)
