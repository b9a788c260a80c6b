"""Precedence graphs of max-plus polynomial matrices, and small graph utilities.

An arc (i -> j, l) exists whenever the matrix entry (j, i) carries a γ^l
monomial; its weight is that coefficient (seconds) and its duration is l
(event count).  Cycle weight/duration are plain sums over the cycle's arcs.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator

from .maxplus import MaxPlusPolyMatrix

__all__ = [
    "Arc",
    "PrecedenceGraph",
    "build_graph",
    "is_strongly_connected",
    "is_acyclic",
    "topological_order",
    "enumerate_elementary_cycles",
    "cycle_weight",
    "cycle_duration",
]


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    duration: int
    weight: float


class PrecedenceGraph:
    """Directed multigraph with weighted, duration-labelled arcs."""

    def __init__(self, n: int, arcs: Iterable[Arc] = ()):
        self.n = n
        self.arcs: list[Arc] = []
        self.out: list[list[Arc]] = [[] for _ in range(n)]
        for arc in arcs:
            self.add_arc(arc)

    def add_arc(self, arc: Arc) -> None:
        if not (0 <= arc.tail < self.n and 0 <= arc.head < self.n):
            raise IndexError("arc endpoint out of range")
        if arc.duration < 0:
            raise ValueError("arc duration must be nonnegative")
        self.arcs.append(arc)
        self.out[arc.tail].append(arc)

    def successors(self, i: int) -> list[Arc]:
        return self.out[i]

    def adjacency(self) -> list[set]:
        adj = [set() for _ in range(self.n)]
        for arc in self.arcs:
            adj[arc.tail].add(arc.head)
        return adj


def build_graph(a: MaxPlusPolyMatrix) -> PrecedenceGraph:
    """Precedence graph of A(γ): one arc per nonzero monomial."""
    g = PrecedenceGraph(a.n)
    for (i, j), entry in sorted(a.monomials.items()):
        for l, w in sorted(entry.items()):
            g.add_arc(Arc(tail=j, head=i, duration=l, weight=w))
    return g


def _reachable(n: int, adj: list[set], start: int) -> set:
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def is_strongly_connected(g: PrecedenceGraph) -> bool:
    if g.n == 0:
        return True
    adj = g.adjacency()
    radj = [set() for _ in range(g.n)]
    for u, vs in enumerate(adj):
        for v in vs:
            radj[v].add(u)
    full = set(range(g.n))
    return _reachable(g.n, adj, 0) == full and _reachable(g.n, radj, 0) == full


def topological_order(n: int, arcs: Iterable[tuple[int, int]]) -> list[int] | None:
    """Kahn's algorithm; returns None when the graph has a cycle.

    Ties are broken by smallest node index so the order is deterministic.
    """
    succ = defaultdict(set)
    indeg = [0] * n
    for u, v in arcs:
        if v not in succ[u]:
            succ[u].add(v)
            indeg[v] += 1
    ready = sorted(i for i in range(n) if indeg[i] == 0)
    order = []
    while ready:
        u = ready.pop(0)
        order.append(u)
        inserted = False
        for v in sorted(succ[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
                inserted = True
        if inserted:
            ready.sort()
    return order if len(order) == n else None


def is_acyclic(g: PrecedenceGraph) -> bool:
    return topological_order(g.n, ((a.tail, a.head) for a in g.arcs)) is not None


def cycle_weight(cycle: list[Arc]) -> float:
    return sum(a.weight for a in cycle)


def cycle_duration(cycle: list[Arc]) -> int:
    return sum(a.duration for a in cycle)


def enumerate_elementary_cycles(g: PrecedenceGraph) -> Iterator[list[Arc]]:
    """Exhaustively enumerate elementary cycles, one arc choice at a time.

    Parallel arcs count as distinct cycles.  Each cycle starts at its
    smallest node, and cycles are generated in lexicographic node order.
    Intended as an oracle for small graphs (exponential in general).
    """
    n = g.n
    for start in range(n):
        path: list[Arc] = []
        on_path = [False] * n

        def walk(u: int) -> Iterator[list[Arc]]:
            for arc in sorted(g.out[u], key=lambda a: (a.head, a.duration, -a.weight)):
                v = arc.head
                if v == start:
                    yield path + [arc]
                elif v > start and not on_path[v]:
                    on_path[v] = True
                    path.append(arc)
                    yield from walk(v)
                    path.pop()
                    on_path[v] = False

        yield from walk(start)
