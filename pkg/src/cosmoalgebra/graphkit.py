"""Graphs with vertex/edge energies and the oriented-subgraph combinatorics
behind the partial-fraction decomposition of flat-space wavefunctions.

A graph carries one X-variable per vertex and one Y-variable per edge.
Connected subgraphs contribute linear forms; orienting-or-deleting every
edge yields 3^|E| spanning states whose per-component rational functions
assemble the decomposition.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import InvalidSubgraph
from .runtime import worker_count
from .symcore import MPoly, RatFun, VarTable, poly_sort_key

FORWARD, BACKWARD, DELETED = ">", "<", "x"


class KinGraph:
    """Connected multigraph, vertices 1..n, no self-loops.

    Vertex i carries variable X{i}; edge k carries its own Y-name (default
    Y{i}{j}, suffixed p, pp, ... for parallel edges).
    """

    __slots__ = ("n", "edges", "y_names", "x_names", "table", "label")

    def __init__(self, n: int, edges: Sequence, y_names: Optional[Sequence[str]] = None,
                 label: str = ""):
        if n < 1:
            raise ValueError("need at least one vertex")
        norm = []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise ValueError(f"self-loop at vertex {u} not allowed")
            if not (1 <= u <= n and 1 <= v <= n):
                raise ValueError(f"edge ({u},{v}) out of range")
            norm.append((u, v))
        if y_names is None:
            y_names = []
            seen = {}
            for u, v in norm:
                key = (min(u, v), max(u, v))
                base = f"Y{key[0]}{key[1]}"
                k = seen.get(key, 0)
                seen[key] = k + 1
                y_names.append(base + "p" * k)
        y_names = tuple(y_names)
        if len(y_names) != len(norm):
            raise ValueError("one Y-name per edge required")
        if len(set(y_names)) != len(y_names):
            raise ValueError("edge names must be unique")
        x_names = tuple(f"X{i}" for i in range(1, n + 1))
        if set(x_names) & set(y_names):
            raise ValueError("edge names collide with vertex names")
        if not _connected(n, norm):
            raise ValueError("graph must be connected")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", tuple(norm))
        object.__setattr__(self, "y_names", y_names)
        object.__setattr__(self, "x_names", x_names)
        object.__setattr__(self, "table", VarTable(x_names + y_names))
        object.__setattr__(self, "label", label or f"graph(n={n},|E|={len(norm)})")

    def __setattr__(self, *a):
        raise AttributeError("KinGraph is immutable")

    def x(self, i: int) -> MPoly:
        return MPoly.var(self.table, self.x_names[i - 1])

    def y(self, k: int) -> MPoly:
        return MPoly.var(self.table, self.y_names[k])

    def __eq__(self, other):
        return (isinstance(other, KinGraph) and self.n == other.n
                and self.edges == other.edges and self.y_names == other.y_names)

    def __hash__(self):
        return hash((self.n, self.edges, self.y_names))

    def __repr__(self):
        return f"KinGraph({self.label})"

    @staticmethod
    def from_json(text: str, label: str = "") -> "KinGraph":
        data = json.loads(text)
        edges = [(e["u"], e["v"]) for e in data["edges"]]
        names = [e["y"] for e in data["edges"]] if all("y" in e for e in data["edges"]) else None
        return KinGraph(data["n"], edges, names, label=label or data.get("label", ""))

    def to_json(self) -> str:
        return json.dumps({
            "n": self.n,
            "edges": [{"u": u, "v": v, "y": y}
                      for (u, v), y in zip(self.edges, self.y_names)],
        })


def _connected(n: int, edges) -> bool:
    if n == 1:
        return True
    adj = {i: set() for i in range(1, n + 1)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen = {1}
    stack = [1]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


@dataclass(frozen=True)
class Subgraph:
    """Vertex subset plus a subset of the ambient edges inside it."""
    vertices: frozenset
    edges: frozenset

    def contains(self, other: "Subgraph") -> bool:
        return other.vertices <= self.vertices and other.edges <= self.edges


def _subgraph_connected(vertices: frozenset, edge_list, graph: KinGraph) -> bool:
    if len(vertices) == 1:
        return True
    adj = {v: set() for v in vertices}
    for k in edge_list:
        u, v = graph.edges[k]
        adj[u].add(v)
        adj[v].add(u)
    start = next(iter(vertices))
    seen = {start}
    stack = [start]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(vertices)


def connected_subgraphs(G: KinGraph) -> list:
    """All connected subgraphs (nonempty vertex set, edge subset inside it)."""
    out = []
    verts = range(1, G.n + 1)
    for r in range(1, G.n + 1):
        for vs in itertools.combinations(verts, r):
            vset = frozenset(vs)
            inside = [k for k, (u, v) in enumerate(G.edges) if u in vset and v in vset]
            for t in range(len(inside) + 1):
                for es in itertools.combinations(inside, t):
                    if _subgraph_connected(vset, es, G):
                        out.append(Subgraph(vset, frozenset(es)))
    return out


def linear_form(H: Subgraph, G: KinGraph) -> MPoly:
    """Vertex energies of H, plus crossing edge energies, plus doubled
    energies of ambient edges omitted from H but internal to its vertices."""
    for k in H.edges:
        u, v = G.edges[k]
        if u not in H.vertices or v not in H.vertices:
            raise InvalidSubgraph(f"edge {k} leaves the vertex set of the subgraph")
    total = MPoly.zero(G.table)
    for v in H.vertices:
        total = total + G.x(v)
    for k, (u, v) in enumerate(G.edges):
        u_in, v_in = u in H.vertices, v in H.vertices
        if u_in != v_in:
            total = total + G.y(k)
        elif u_in and v_in and k not in H.edges:
            total = total + 2 * G.y(k)
    return total


def _shifted_sort_key(form: MPoly, G: KinGraph):
    """Key ordering forms by their alpha-shifted version, descending."""
    shifted_table = VarTable(tuple(f"a{i}" for i in range(1, G.n + 1)) + G.table.names)
    shifted = form.rebased(shifted_table)
    for i in range(1, G.n + 1):
        # X_i coefficient 1 exactly when vertex i is in the subgraph
        xi = form.degree_in(f"X{i}")
        if xi:
            shifted = shifted + MPoly.var(shifted_table, f"a{i}")
    return poly_sort_key(shifted)


def distinct_linear_forms(G: KinGraph) -> list:
    """The k distinct linear forms of the connected subgraphs, canonically
    ordered (descending by the alpha-shifted polynomial)."""
    seen = {}
    for H in connected_subgraphs(G):
        f = linear_form(H, G)
        seen.setdefault(f, H)
    return sorted(seen, key=lambda f: _shifted_sort_key(f, G), reverse=True)


class OrientedSpanning:
    """One state per edge of G: forward, backward, or deleted."""

    __slots__ = ("graph", "states")

    def __init__(self, graph: KinGraph, states: Sequence[str]):
        states = tuple(states)
        if len(states) != len(graph.edges):
            raise ValueError("one state per edge required")
        if any(s not in (FORWARD, BACKWARD, DELETED) for s in states):
            raise ValueError(f"bad orientation states {states}")
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "states", states)

    def __setattr__(self, *a):
        raise AttributeError("OrientedSpanning is immutable")

    def __str__(self):
        return "".join(self.states)

    def __repr__(self):
        return f"OrientedSpanning({str(self)!r})"

    def __eq__(self, other):
        return (isinstance(other, OrientedSpanning)
                and self.graph == other.graph and self.states == other.states)

    def __hash__(self):
        return hash((self.graph, self.states))

    def retained(self) -> tuple:
        return tuple(k for k, s in enumerate(self.states) if s != DELETED)

    def deleted_count(self) -> int:
        return sum(1 for s in self.states if s == DELETED)

    def arrow(self, k: int) -> tuple:
        """Directed pair (tail, head) of retained edge k."""
        u, v = self.graph.edges[k]
        return (u, v) if self.states[k] == FORWARD else (v, u)

    def reversed(self) -> "OrientedSpanning":
        flip = {FORWARD: BACKWARD, BACKWARD: FORWARD, DELETED: DELETED}
        return OrientedSpanning(self.graph, tuple(flip[s] for s in self.states))

    def degree(self, v: int) -> int:
        """Outgoing minus incoming retained edges at v."""
        d = 0
        for k in self.retained():
            tail, head = self.arrow(k)
            if tail == v:
                d += 1
            elif head == v:
                d -= 1
        return d

    def components(self) -> list:
        """Connected components as Subgraphs (singletons included)."""
        parent = {v: v for v in range(1, self.graph.n + 1)}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for k in self.retained():
            u, v = self.graph.edges[k]
            parent[find(u)] = find(v)
        groups = {}
        for v in range(1, self.graph.n + 1):
            groups.setdefault(find(v), set()).add(v)
        comps = []
        for vs in groups.values():
            vset = frozenset(vs)
            es = frozenset(k for k in self.retained() if self.graph.edges[k][0] in vset)
            comps.append(Subgraph(vset, es))
        comps.sort(key=lambda c: min(c.vertices))
        return comps

    def has_directed_cycle(self, component: Subgraph) -> bool:
        out = {v: [] for v in component.vertices}
        for k in component.edges:
            tail, head = self.arrow(k)
            out[tail].append(head)
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {v: WHITE for v in component.vertices}

        def visit(v):
            color[v] = GRAY
            for w in out[v]:
                if color[w] == GRAY:
                    return True
                if color[w] == WHITE and visit(w):
                    return True
            color[v] = BLACK
            return False

        return any(color[v] == WHITE and visit(v) for v in component.vertices)


def oriented_spanning(G: KinGraph) -> list:
    """All 3^|E| oriented spanning subgraphs, in deterministic order."""
    return [OrientedSpanning(G, states)
            for states in itertools.product((FORWARD, BACKWARD, DELETED),
                                            repeat=len(G.edges))]


def positive_subgraphs(orientation: OrientedSpanning, component: Subgraph) -> list:
    """Connected subgraphs of the component whose total degree (measured in
    the component's orientation) is strictly positive."""
    G = orientation.graph
    deg = {v: orientation.degree(v) for v in component.vertices}
    out = []
    verts = sorted(component.vertices)
    for r in range(1, len(verts) + 1):
        for vs in itertools.combinations(verts, r):
            vset = frozenset(vs)
            if sum(deg[v] for v in vset) <= 0:
                continue
            inside = [k for k in component.edges
                      if G.edges[k][0] in vset and G.edges[k][1] in vset]
            for t in range(len(inside) + 1):
                for es in itertools.combinations(inside, t):
                    if _subgraph_connected(vset, es, G):
                        out.append(Subgraph(vset, frozenset(es)))
    return out


def _compatible(a: Subgraph, b: Subgraph) -> bool:
    return (not (a.vertices & b.vertices)) or a.contains(b) or b.contains(a)


def admissible_subsets(plus: Sequence[Subgraph], m: int) -> list:
    """All (m-1)-subsets of distinct positive subgraphs that are pairwise
    vertex-disjoint or nested (vertex and edge containment)."""
    if m < 2:
        raise ValueError("admissibility needs at least two vertices")
    out = []
    for combo in itertools.combinations(plus, m - 1):
        if all(_compatible(a, b) for a, b in itertools.combinations(combo, 2)):
            out.append(combo)
    return out


def component_term_forms(orientation: OrientedSpanning, component: Subgraph) -> list:
    """Denominator form tuples of the component's rational function; one
    tuple per summand, empty when the function vanishes."""
    G = orientation.graph
    if orientation.has_directed_cycle(component):
        return []
    ell = linear_form(component, G)
    m = len(component.vertices)
    if m == 1:
        return [(ell,)]
    plus = positive_subgraphs(orientation, component)
    return [(ell,) + tuple(linear_form(K, G) for K in S)
            for S in admissible_subsets(plus, m)]


def rational_R(orientation: OrientedSpanning, component: Subgraph) -> RatFun:
    """The component's rational function: 0 on directed cycles, otherwise
    1/l(H) times the sum over admissible subsets of 1/prod l(K)."""
    G = orientation.graph
    total = RatFun.const(G.table, 0)
    for forms in component_term_forms(orientation, component):
        total = total + _inv_forms(G.table, forms)
    return total


def _inv_forms(table, forms) -> RatFun:
    from .symcore import ratfun_from_factors
    fac = {}
    for f in forms:
        fac[f] = fac.get(f, 0) + 1
    return ratfun_from_factors(MPoly.const(table, 1), fac)


@dataclass(frozen=True)
class PFTerm:
    """One signed fraction of the decomposition: sign / prod(forms)."""
    sign: int
    forms: tuple                      # n linear forms, canonically sorted
    orientation: OrientedSpanning
    tto: bool                         # source orientation totally time-ordered

    def ratfun(self) -> RatFun:
        table = self.orientation.graph.table
        return self.sign * _inv_forms(table, self.forms)


def _terms_for_orientation(orientation: OrientedSpanning) -> list:
    per_comp = [component_term_forms(orientation, c) for c in orientation.components()]
    if any(not lst for lst in per_comp):
        return []
    sign = -1 if orientation.deleted_count() % 2 else 1
    total_terms = 1
    for lst in per_comp:
        total_terms *= len(lst)
    tto = total_terms == 1
    out = []
    for combo in itertools.product(*per_comp):
        forms = tuple(sorted((f for part in combo for f in part),
                             key=poly_sort_key, reverse=True))
        out.append(PFTerm(sign, forms, orientation, tto))
    return out


def pf_decomposition(G: KinGraph) -> list:
    """Signed partial-fraction terms over all oriented spanning subgraphs.

    One group of terms per orientation with nonvanishing product; the sign
    is (-1)^(#deleted edges); every term carries exactly n linear forms.
    """
    orientations = oriented_spanning(G)
    nworkers = worker_count()
    if nworkers > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            groups = list(pool.map(_terms_for_orientation, orientations))
    else:
        groups = [_terms_for_orientation(o) for o in orientations]
    return [t for grp in groups for t in grp]


# -- stock graphs --------------------------------------------------------------


def chain(n: int) -> KinGraph:
    """Path graph on n vertices (the n-site chain)."""
    names = None
    if n == 2:
        names = ["Y"]
    return KinGraph(n, [(i, i + 1) for i in range(1, n)], names,
                    label=f"{n}site")


def bubble() -> KinGraph:
    """Two vertices joined by a doubled edge (one-loop bubble)."""
    return KinGraph(2, [(1, 2), (1, 2)], ["Y", "Yp"], label="bubble")


def star4() -> KinGraph:
    """Three legs attached to a central fourth vertex."""
    return KinGraph(4, [(1, 4), (2, 4), (3, 4)], ["Y14", "Y24", "Y34"],
                    label="star4")


BUILTIN_GRAPHS = {
    "2site": lambda: chain(2),
    "3site": lambda: chain(3),
    "4site": lambda: chain(4),
    "bubble": bubble,
    "star4": star4,
}
