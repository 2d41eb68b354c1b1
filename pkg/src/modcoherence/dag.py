"""Directed acyclic graphs over typed nodes with an exact d-separation oracle.

Separation queries may condition through declared functional dependencies:
the conditioning set is first closed under "is a function of" facts, which is
sound because deterministic functions of observed symbols carry no extra
information.  With no dependencies declared this is standard d-separation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Iterable

from .ci import (
    CIStatement,
    FunctionalDependency,
    OverlappingSets,
    Symbol,
    VarSet,
    determined_closure,
    normalize,
)

NODE_KINDS = ("parameter", "evidence", "data", "common-knowledge")


class DagError(Exception):
    pass


class CycleDetected(DagError):
    pass


class UnknownEndpoint(DagError):
    pass


class DuplicateNode(DagError):
    pass


class UnknownSymbol(DagError):
    pass


@dataclass(frozen=True)
class CIQuery:
    """A separation query; unlike CIStatement the a/b order is immaterial."""

    a: VarSet
    b: VarSet
    c: VarSet = frozenset()


@dataclass(frozen=True)
class Dag:
    nodes: tuple[tuple[Symbol, str], ...]
    edges: tuple[tuple[Symbol, Symbol], ...]
    dependencies: tuple[FunctionalDependency, ...] = ()

    @property
    def node_names(self) -> VarSet:
        return frozenset(name for name, _ in self.nodes)

    def kind(self, name: Symbol) -> str:
        for node, kind in self.nodes:
            if node == name:
                return kind
        raise UnknownSymbol(name)

    def parents(self, name: Symbol) -> VarSet:
        return frozenset(u for u, v in self.edges if v == name)

    def children(self, name: Symbol) -> VarSet:
        return frozenset(v for u, v in self.edges if u == name)

    def ancestors(self, of: Iterable[Symbol]) -> VarSet:
        seen: set[Symbol] = set()
        frontier = deque(of)
        while frontier:
            node = frontier.popleft()
            for parent in self.parents(node):
                if parent not in seen:
                    seen.add(parent)
                    frontier.append(parent)
        return frozenset(seen)

    def descendants(self, of: Symbol) -> VarSet:
        seen: set[Symbol] = set()
        frontier = deque([of])
        while frontier:
            node = frontier.popleft()
            for child in self.children(node):
                if child not in seen:
                    seen.add(child)
                    frontier.append(child)
        return frozenset(seen)

    def topological_order(self) -> tuple[Symbol, ...]:
        ts = TopologicalSorter({name: sorted(self.parents(name)) for name, _ in self.nodes})
        return tuple(ts.static_order())


def build_dag(
    nodes: Iterable[tuple[Symbol, str]],
    edges: Iterable[tuple[Symbol, Symbol]],
    dependencies: Iterable[FunctionalDependency] = (),
) -> Dag:
    """Validate and freeze a DAG; raises on duplicates, stray endpoints, cycles."""
    nodes = tuple((str(n), str(k)) for n, k in nodes)
    edges = tuple((str(u), str(v)) for u, v in edges)
    names = [n for n, _ in nodes]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DuplicateNode(f"duplicate node names: {dupes}")
    for _, kind in nodes:
        if kind not in NODE_KINDS:
            raise DagError(f"unknown node kind {kind!r}; expected one of {NODE_KINDS}")
    name_set = set(names)
    for u, v in edges:
        if u not in name_set or v not in name_set:
            raise UnknownEndpoint(f"edge {u}->{v} references an undeclared node")
        if u == v:
            raise CycleDetected(f"self-loop at {u}")
    adjacency = {n: [v for u, v in edges if u == n] for n in names}
    try:
        tuple(TopologicalSorter(adjacency).static_order())
    except CycleError as exc:
        raise CycleDetected(str(exc)) from exc
    dependencies = tuple(dependencies)
    for dep in dependencies:
        stray = ({dep.determined} | dep.determiners) - name_set
        if stray:
            raise UnknownSymbol(f"dependency mentions undeclared nodes: {sorted(stray)}")
    return Dag(nodes, edges, dependencies)


def _validate_query(dag: Dag, a: VarSet, b: VarSet, c: VarSet) -> None:
    stray = (a | b | c) - dag.node_names
    if stray:
        raise UnknownSymbol(f"query mentions undeclared nodes: {sorted(stray)}")
    if a & b or a & c or b & c:
        raise OverlappingSets(f"query sets must be pairwise disjoint")


def d_separated(
    dag: Dag,
    a: Iterable[Symbol],
    b: Iterable[Symbol],
    c: Iterable[Symbol] = (),
) -> bool:
    """True iff every path between ``a`` and ``b`` is blocked given ``c``.

    Active-trail reachability over (node, direction) states; the conditioning
    set is enlarged to its functional-dependency closure first.
    """
    a, b, c = frozenset(a), frozenset(b), frozenset(c)
    _validate_query(dag, a, b, c)
    z = determined_closure(c, dag.dependencies) & dag.node_names
    an_z = z | dag.ancestors(z)
    # direction "up" means the trail arrived at the node from a child (or is
    # a query source); "down" means it arrived from a parent.
    frontier: deque = deque((node, "up") for node in sorted(a))
    visited = set(frontier)
    while frontier:
        node, direction = frontier.popleft()
        if node not in z and node in b:
            return False
        moves: list[tuple[Symbol, str]] = []
        if direction == "up" and node not in z:
            moves.extend((p, "up") for p in dag.parents(node))
            moves.extend((ch, "down") for ch in dag.children(node))
        elif direction == "down":
            if node not in z:
                moves.extend((ch, "down") for ch in dag.children(node))
            if node in an_z:  # collider (or its ancestor chain) activated
                moves.extend((p, "up") for p in dag.parents(node))
        for move in moves:
            if move not in visited:
                visited.add(move)
                frontier.append(move)
    return True


def answer(dag: Dag, query: CIQuery) -> bool:
    return d_separated(dag, query.a, query.b, query.c)


def local_markov_basis(dag: Dag) -> frozenset:
    """One statement per node: node _||_ nondescendants-minus-parents | parents."""
    out: set[CIStatement] = set()
    names = dag.node_names
    for node in sorted(names):
        parents = dag.parents(node)
        nondesc = names - dag.descendants(node) - parents - {node}
        if nondesc:
            out.add(normalize({node}, nondesc, parents))
    return frozenset(out)
