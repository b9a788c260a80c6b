import pytest

from metromax import (
    Arc,
    MaxPlusPolyMatrix,
    PrecedenceGraph,
    build_graph,
    enumerate_elementary_cycles,
    is_acyclic,
    is_strongly_connected,
    topological_order,
)
from metromax.graphs import cycle_duration, cycle_weight


def ring(n, duration=1, weight=1.0):
    return PrecedenceGraph(
        n, [Arc(i, (i + 1) % n, duration, weight) for i in range(n)]
    )


def test_build_graph_transposes_matrix_entries():
    a = MaxPlusPolyMatrix(2)
    a.add_monomial(0, 1, 2, 5.0)  # row 0 reads from column 1
    g = build_graph(a)
    (arc,) = g.arcs
    assert (arc.tail, arc.head, arc.duration, arc.weight) == (1, 0, 2, 5.0)


def test_strong_connectivity():
    assert is_strongly_connected(ring(4))
    chain = PrecedenceGraph(3, [Arc(0, 1, 1, 0.0), Arc(1, 2, 1, 0.0)])
    assert not is_strongly_connected(chain)


def test_topological_order_chain():
    order = topological_order(4, [(2, 3), (0, 1), (1, 2)])
    assert order == [0, 1, 2, 3]


def test_topological_order_cycle_returns_none():
    assert topological_order(2, [(0, 1), (1, 0)]) is None


def test_acyclic_flags():
    assert is_acyclic(PrecedenceGraph(3, [Arc(0, 1, 0, 0.0), Arc(1, 2, 0, 0.0)]))
    assert not is_acyclic(ring(3))


def test_enumerate_cycles_ring():
    cycles = list(enumerate_elementary_cycles(ring(3)))
    assert len(cycles) == 1
    (c,) = cycles
    assert cycle_weight(c) == 3.0
    assert cycle_duration(c) == 3
    assert c[0].tail == 0  # canonical start at the smallest node


def test_enumerate_cycles_counts_parallel_arcs():
    g = PrecedenceGraph(2, [
        Arc(0, 1, 1, 1.0), Arc(0, 1, 2, 4.0), Arc(1, 0, 1, 0.0),
        Arc(0, 0, 1, -1.0),
    ])
    cycles = list(enumerate_elementary_cycles(g))
    # the self loop plus one two-cycle per parallel arc
    assert len(cycles) == 3
    ratios = sorted(cycle_weight(c) / cycle_duration(c) for c in cycles)
    assert ratios == [-1.0, 0.5, 4.0 / 3.0]


def test_arc_validation():
    g = PrecedenceGraph(2)
    with pytest.raises(IndexError):
        g.add_arc(Arc(0, 5, 1, 0.0))
    with pytest.raises(ValueError):
        g.add_arc(Arc(0, 1, -1, 0.0))
