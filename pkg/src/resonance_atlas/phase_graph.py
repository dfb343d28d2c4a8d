"""Directed graph on the characteristic set and its cycle structure.

Vertices are turning points ``(x, 0)`` and crossing points ``(x_c, +-xi_c)``.
Edges are the bounded arcs between them, oriented by the Hamiltonian flow
``x' = 2 xi`` (upper sheet runs to the right, lower sheet to the left).
Unbounded arcs are kept as :class:`Tail` objects because the amplitude
propagation needs to know which of them carry incoming data.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import networkx as nx
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (CrossingAtTurning, CycleBudgetExceeded, DegenerateTurningPoint,
                     HypothesisError, ODEStepFailure, TangentialCrossing)
from .potential import HypothesisReport, PotentialSpec, ProblemConfig
from .quadrature import tanh_sinh

log = logging.getLogger(__name__)

CYCLE_BUDGET = 10**6


# --------------------------------------------------------------------------
# root scanning
# --------------------------------------------------------------------------

def _scan_grid(X: float, specs: Iterable[PotentialSpec], n_min: int = 1000) -> np.ndarray:
    smax = max([t.slope for sp in specs for t in sp.terms if t.kind != "constant"] or [1.0])
    n = max(n_min, int(math.ceil(2 * X * 8 * smax)))
    return np.linspace(-X, X, n + 1)


def _roots(f: Callable, df: Callable, grid: np.ndarray, tangency_tol: float):
    """Sign-change roots of ``f`` on ``grid`` plus near-tangencies of ``f`` with 0.

    Returns ``(roots, tangencies)``.  A tangency is an interior extremum of
    ``f`` (sign change of ``df``) where ``|f| < tangency_tol``.
    """
    fv = f(grid)
    roots = []
    for i in np.nonzero(fv == 0.0)[0]:
        roots.append(float(grid[i]))
    s = np.sign(fv)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        r = brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(float(r))
    tangencies = []
    dv = df(grid)
    ds = np.sign(dv)
    for i in np.nonzero(ds[:-1] * ds[1:] < 0)[0]:
        xe = brentq(df, grid[i], grid[i + 1], xtol=1e-15, maxiter=200)
        if abs(f(xe)) < tangency_tol:
            tangencies.append(float(xe))
    return sorted(set(roots)), tangencies


def find_turning_points(V: PotentialSpec, E0: float, root_tol: float = 1e-12,
                        X: float | None = None) -> list[float]:
    """Sorted real solutions of ``V(x) = E0``.

    Raises :class:`DegenerateTurningPoint` for a root with ``|V'| < root_tol``
    or a tangency of ``V`` with the level ``E0``.
    """
    if X is None:
        X = max(10.0, 40.0 / V.min_slope + V.max_abs_center)
    grid = _scan_grid(X, [V])
    roots, tang = _roots(lambda x: V.value(x) - E0, V.derivative, grid, root_tol)
    if tang:
        raise DegenerateTurningPoint(f"V touches E0={E0} tangentially at x={tang[0]:.12g}")
    for r in roots:
        if abs(V.derivative(r)) < root_tol:
            raise DegenerateTurningPoint(f"V'(x)=0 at turning point x={r:.12g}")
        if abs(V.value(r) - E0) > root_tol:
            log.warning("turning point %r has residual %.3g", r, abs(V.value(r) - E0))
    return roots


def check_nontrapping(V: PotentialSpec, E0: float, root_tol: float = 1e-12,
                      X: float | None = None) -> tuple[bool, str]:
    """Decide non-trapping of ``xi^2 + V(x)`` at ``E0`` in one dimension.

    True iff every turning point is simple and every connected component of
    ``{V < E0}`` is unbounded.  The witness names the offending well.
    """
    try:
        roots = find_turning_points(V, E0, root_tol, X)
    except DegenerateTurningPoint as exc:
        return False, str(exc)
    for lo, hi in zip(roots[:-1], roots[1:]):
        if V.value(0.5 * (lo + hi)) < E0:
            return False, f"bounded well {{V < E0}} = ({lo:.10g}, {hi:.10g})"
    return True, ""


@dataclass(frozen=True)
class Vertex:
    kind: str  # "turning" | "crossing"
    x: float
    xi: float
    branches: frozenset

    @property
    def point(self) -> tuple[float, float]:
        return (self.x, self.xi)

    def to_dict(self, idx: int) -> dict:
        return {"id": idx, "kind": self.kind, "x": self.x, "xi": self.xi,
                "branches": sorted(self.branches)}


def find_crossing_points(V1: PotentialSpec, V2: PotentialSpec, E0: float,
                         root_tol: float = 1e-12, X: float | None = None) -> list[Vertex]:
    """Crossing vertices ``(x_c, +-sqrt(E0 - V1(x_c)))`` for roots below ``E0``."""
    if X is None:
        X = max(10.0, 40.0 / min(V1.min_slope, V2.min_slope)
                + max(V1.max_abs_center, V2.max_abs_center))
    grid = _scan_grid(X, [V1, V2])
    D = lambda x: V1.value(x) - V2.value(x)  # noqa: E731
    dD = lambda x: V1.derivative(x) - V2.derivative(x)  # noqa: E731
    if np.max(np.abs(D(grid))) < root_tol:
        raise TangentialCrossing("V1 and V2 coincide: crossing set is not finite")
    roots, tang = _roots(D, dD, grid, root_tol)
    out = []
    for xc in tang:
        if V1.value(xc) < E0 + root_tol:
            raise TangentialCrossing(f"V1 - V2 has a double zero at x={xc:.12g}")
    for xc in roots:
        v = V1.value(xc)
        if abs(v - E0) < root_tol:
            raise CrossingAtTurning(f"levels cross at the energy E0 at x={xc:.12g}")
        if v > E0:
            continue
        if abs(dD(xc)) < root_tol:
            raise TangentialCrossing(f"|V1' - V2'| < root_tol at x={xc:.12g}")
        xi = math.sqrt(E0 - v)
        out.append(Vertex("crossing", xc, xi, frozenset({1, 2})))
        out.append(Vertex("crossing", xc, -xi, frozenset({1, 2})))
    return out


def check_crossing_hypotheses(config: ProblemConfig) -> HypothesisReport:
    """Transversality, ellipticity of ``w`` and asymptotic separation at crossings."""
    rep = HypothesisReport()
    tol = config.tolerances.root_tol
    try:
        verts = find_crossing_points(config.V1, config.V2, config.E0, tol, config.scan_halfwidth)
    except HypothesisError as exc:
        rep.add("A3.finite_transversal", False, str(exc))
        return rep
    rep.add("A3.finite", True, f"{len(verts)} crossing vertices", len(verts))
    for v in verts:
        gap = abs(float(config.V1.derivative(v.x) - config.V2.derivative(v.x)))
        if v.xi > 0:
            rep.add(f"A3.transversal@x={v.x:.12g}", gap > 0, "slope gap |V1' - V2'|", gap)
        w = abs(complex(config.W.symbol(v.x, v.xi)))
        rep.add(f"A4.elliptic@({v.x:.12g},{v.xi:.12g})", w > 0, "|w(rho)|", w)
    l1, l2 = config.V1.limits_at_infinity(), config.V2.limits_at_infinity()
    for k, side in enumerate("-+"):
        rep.add(f"A3.separation{side}", abs(l1[k] - l2[k]) > tol,
                f"v1^{side} = {l1[k]}, v2^{side} = {l2[k]}", abs(l1[k] - l2[k]))
    return rep


# --------------------------------------------------------------------------
# edges
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    branch: int
    sign: int  # +1: xi > 0, traversed with increasing x; -1: decreasing x
    x_a: float
    x_b: float
    tail: int  # vertex index where the flow enters the edge
    head: int  # vertex index where it leaves
    turning_end: str | None = None  # "a", "b" or None
    time: float = math.nan
    action: float = math.nan
    time_err: float = math.nan
    action_err: float = math.nan
    V: PotentialSpec | None = field(default=None, repr=False, compare=False)
    E0: float = field(default=math.nan, repr=False, compare=False)

    def __post_init__(self):
        if self.x_a > self.x_b:
            raise ValueError(f"edge interval [{self.x_a}, {self.x_b}] has negative length")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    @property
    def start_x(self) -> float:
        return self.x_a if self.sign > 0 else self.x_b

    @property
    def end_x(self) -> float:
        return self.x_b if self.sign > 0 else self.x_a

    def xi_at(self, x: float, end: str | None = None) -> float:
        if end is not None and end == self.turning_end:
            return 0.0
        return self.sign * math.sqrt(max(self.E0 - float(self.V.value(x)), 0.0))

    @property
    def start_point(self) -> tuple[float, float]:
        end = "a" if self.sign > 0 else "b"
        return self.start_x, self.xi_at(self.start_x, end)

    @property
    def end_point(self) -> tuple[float, float]:
        end = "b" if self.sign > 0 else "a"
        return self.end_x, self.xi_at(self.end_x, end)

    def radicand(self, x, da, db):
        """``E0 - V(x)`` on the edge, formed from the turning-point offset when there is one."""
        if self.turning_end == "a":
            return -self.V.increment(self.x_a, da)
        if self.turning_end == "b":
            return -self.V.increment(self.x_b, -db)
        return self.E0 - self.V.value(x)

    def to_dict(self, idx: int) -> dict:
        return {"id": idx, "branch": self.branch, "sign": "+" if self.sign > 0 else "-",
                "x_a": self.x_a, "x_b": self.x_b, "tail": self.tail, "head": self.head,
                "time": self.time, "action": self.action,
                "time_err": self.time_err, "action_err": self.action_err}


@dataclass(frozen=True)
class Tail:
    """Unbounded arc.  ``vertex`` is None for a vertex-free line."""

    branch: int
    sign: int
    vertex: int | None
    incoming: bool
    x_bound: float  # finite end (or nan for a free line)

    def to_dict(self, idx: int) -> dict:
        return {"id": idx, "branch": self.branch, "sign": "+" if self.sign > 0 else "-",
                "vertex": self.vertex, "incoming": self.incoming, "x_bound": self.x_bound}


def edge_integrals(edge: Edge, quad_tol: float = 1e-10) -> tuple[float, float]:
    """``(time, action) = (int dx / 2|xi|, int |xi| dx)`` over the edge interval."""
    if edge.x_a > edge.x_b:
        raise ValueError("negative-length interval")
    t, a = _edge_quad(edge, quad_tol)
    return t.value, a.value


def _edge_quad(edge: Edge, quad_tol: float):
    def time_f(x, da, db):
        return 0.5 / np.sqrt(edge.radicand(x, da, db))

    def action_f(x, da, db):
        return np.sqrt(edge.radicand(x, da, db))

    t = tanh_sinh(time_f, edge.x_a, edge.x_b, quad_tol)
    a = tanh_sinh(action_f, edge.x_a, edge.x_b, quad_tol)
    return t, a


def with_integrals(edge: Edge, quad_tol: float = 1e-10) -> Edge:
    from dataclasses import replace
    t, a = _edge_quad(edge, quad_tol)
    return replace(edge, time=float(t.value), action=float(a.value),
                   time_err=float(t.error), action_err=float(a.error))


def hamiltonian_flow_check(edge: Edge, rtol: float = 1e-12, atol: float = 1e-13) -> float:
    """Flow the start point for ``edge.time`` and return the distance to the end point.

    Independent of the quadrature: the trajectory comes from integrating
    ``x' = 2 xi, xi' = -V'(x)`` with an adaptive 8th-order Runge-Kutta scheme.
    """
    if edge.x_b - edge.x_a == 0 or edge.time == 0:
        return 0.0
    V = edge.V

    def rhs(_t, y):
        return [2.0 * y[1], -float(V.derivative(y[0]))]

    x0, xi0 = edge.start_point
    x1, xi1 = edge.end_point
    sol = solve_ivp(rhs, (0.0, edge.time), [x0, xi0], method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise ODEStepFailure(sol.message)
    xe, xie = sol.y[:, -1]
    return float(math.hypot(xe - x1, xie - xi1))


# --------------------------------------------------------------------------
# graph
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseGraph:
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    tails: tuple[Tail, ...]
    config: ProblemConfig | None = field(default=None, repr=False, compare=False)

    def edges_of(self, branch: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.branch == branch]

    def in_edges(self, v: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.head == v]

    def out_edges(self, v: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if e.tail == v]

    def in_tails(self, v: int) -> list[int]:
        return [i for i, t in enumerate(self.tails) if t.vertex == v and t.incoming]

    def out_tails(self, v: int) -> list[int]:
        return [i for i, t in enumerate(self.tails) if t.vertex == v and not t.incoming]

    def degree_law_holds(self) -> bool:
        for v, vert in enumerate(self.vertices):
            din = len(self.in_edges(v)) + len(self.in_tails(v))
            dout = len(self.out_edges(v)) + len(self.out_tails(v))
            want = 2 if vert.kind == "crossing" else 1
            if din != want or dout != want:
                return False
        return True

    def crossing_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.vertices) if v.kind == "crossing"]

    def turning_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.vertices) if v.kind == "turning"]


def _allowed_intervals(V: PotentialSpec, E0: float, roots: list[float]):
    pts = [-math.inf] + roots + [math.inf]
    out = []
    v_minus, v_plus = V.limits_at_infinity()
    for lo, hi in zip(pts[:-1], pts[1:]):
        # V - E0 keeps its sign between roots, so unbounded pieces are
        # decided by the limits and bounded ones by the midpoint
        if math.isinf(lo):
            below = v_minus < E0
        elif math.isinf(hi):
            below = v_plus < E0
        else:
            below = V.value(0.5 * (lo + hi)) < E0
        if below:
            if not (math.isinf(lo) or math.isinf(hi)):
                raise HypothesisError(f"trapping well ({lo:.10g}, {hi:.10g}) on a branch")
            out.append((lo, hi))
    return out


def build_phase_graph(config: ProblemConfig, integrate: bool = True) -> PhaseGraph:
    """Vertices, bounded oriented edges (with time and action) and tails."""
    tol = config.tolerances.root_tol
    X = config.scan_halfwidth
    E0 = config.E0
    crossings = find_crossing_points(config.V1, config.V2, E0, tol, X)
    xcs = sorted({v.x for v in crossings})
    xi_of = {v.x: abs(v.xi) for v in crossings}
    turning = {}
    intervals = {}
    for j in (1, 2):
        V = config.potential(j)
        roots = find_turning_points(V, E0, tol, X)
        turning[j] = roots
        intervals[j] = _allowed_intervals(V, E0, roots)

    vertices = list(crossings)
    for j in (1, 2):
        for r in turning[j]:
            vertices.append(Vertex("turning", r, 0.0, frozenset({j})))
    vertices.sort(key=lambda v: (v.x, v.xi, tuple(sorted(v.branches))))
    index = {}
    for i, v in enumerate(vertices):
        key = (v.kind, v.x, v.xi) if v.kind == "crossing" else ("turning", v.x, min(v.branches))
        index[key] = i

    def cross_id(x, sign):
        return index[("crossing", x, sign * xi_of[x])]

    edges: list[Edge] = []
    tails: list[Tail] = []
    for j in (1, 2):
        V = config.potential(j)
        for lo, hi in intervals[j]:
            inside = [x for x in xcs if lo < x < hi]
            for sign in (1, -1):
                # points in x order with vertex ids; None stands for infinity
                pts: list[tuple[float, int | None]] = []
                if not math.isinf(lo):
                    pts.append((lo, index[("turning", lo, j)]))
                pts += [(x, cross_id(x, sign)) for x in inside]
                if not math.isinf(hi):
                    pts.append((hi, index[("turning", hi, j)]))
                if not pts:
                    tails.append(Tail(j, sign, None, True, math.nan))
                    continue
                for (xa, va), (xb, vb) in zip(pts[:-1], pts[1:]):
                    tend = "a" if xa == lo else ("b" if xb == hi else None)
                    tail_v, head_v = (va, vb) if sign > 0 else (vb, va)
                    edges.append(Edge(j, sign, xa, xb, tail_v, head_v, tend, V=V, E0=E0))
                x_first, v_first = pts[0]
                x_last, v_last = pts[-1]
                if math.isinf(lo):
                    # upper sheet enters from -inf, lower sheet leaves to -inf
                    tails.append(Tail(j, sign, v_first, sign > 0, x_first))
                if math.isinf(hi):
                    tails.append(Tail(j, sign, v_last, sign < 0, x_last))
    edges.sort(key=lambda e: (e.branch, -e.sign, e.x_a))
    tails.sort(key=lambda t: (t.branch, -t.sign, -1 if t.vertex is None else t.vertex))
    if integrate:
        edges = [with_integrals(e, config.tolerances.quad_tol) for e in edges]
    return PhaseGraph(tuple(vertices), tuple(edges), tuple(tails), config)


# --------------------------------------------------------------------------
# cycles
# --------------------------------------------------------------------------

def cyclic_runs(labels) -> int:
    """Number of maximal constant runs of a cyclic label sequence."""
    n = len(labels)
    if n == 0:
        return 0
    changes = sum(1 for i in range(n) if labels[i] != labels[i - 1])
    return max(changes, 1)


@dataclass(frozen=True)
class DirectedCycle:
    edges: tuple[int, ...]
    vertices: tuple[int, ...]
    branches: tuple[int, ...]
    time: float
    action: float
    is_pr: bool
    n_turning: int
    # for pr-cycles: branch -> vertex where that branch's path starts
    switch_vertices: tuple[tuple[int, int], ...] = ()

    def rho(self, branch: int) -> int:
        return dict(self.switch_vertices)[branch]

    def to_dict(self) -> dict:
        return {"edges": list(self.edges), "vertices": list(self.vertices),
                "time": self.time, "action": self.action, "is_pr": self.is_pr,
                "switch_vertices": {str(b): v for b, v in self.switch_vertices}}


def _make_cycle(graph: PhaseGraph, edge_ids: list[int]) -> DirectedCycle:
    es = [graph.edges[i] for i in edge_ids]
    labels = [e.branch for e in es]
    runs = cyclic_runs(labels)
    is_pr = runs == 2 and set(labels) == {1, 2}
    switches = []
    if is_pr:
        for k, e in enumerate(es):
            if labels[k] != labels[k - 1]:
                switches.append((e.branch, e.tail))
        switches.sort()
    verts = tuple(e.tail for e in es)
    n_turn = sum(1 for v in verts if graph.vertices[v].kind == "turning")
    return DirectedCycle(tuple(edge_ids), verts, tuple(labels),
                         float(math.fsum(e.time for e in es)),
                         float(math.fsum(e.action for e in es)),
                         is_pr, n_turn, tuple(switches))


def enumerate_directed_cycles(graph: PhaseGraph, budget: int = CYCLE_BUDGET) -> list[DirectedCycle]:
    """All elementary directed cycles, annotated with time, action and pr-flag.

    Node cycles come from Johnson's algorithm (networkx); parallel edges
    between the same vertex pair are expanded into distinct cycles.
    """
    G = nx.DiGraph()
    G.add_nodes_from(range(len(graph.vertices)))
    par: dict[tuple[int, int], list[int]] = {}
    for i, e in enumerate(graph.edges):
        par.setdefault((e.tail, e.head), []).append(i)
        G.add_edge(e.tail, e.head)
    out = []
    count = 0
    for nodes in nx.simple_cycles(G):
        k = nodes.index(min(nodes))
        nodes = nodes[k:] + nodes[:k]
        choices = [par[(nodes[i], nodes[(i + 1) % len(nodes)])] for i in range(len(nodes))]
        for combo in itertools.product(*choices):
            count += 1
            if count > budget:
                raise CycleBudgetExceeded(f"more than {budget} directed cycles")
            out.append(_make_cycle(graph, list(combo)))
    out.sort(key=lambda c: (c.vertices[0], c.edges))
    return out


@dataclass(frozen=True)
class BandWidth:
    T: float | None
    M: float | str
    M_value: float
    argmax: tuple[int, ...] = ()

    @property
    def arbitrary(self) -> bool:
        return self.M == "arbitrary"

    def to_dict(self) -> dict:
        return {"T_E0": self.T, "M": self.M, "M_value": self.M_value,
                "argmax_cycles": list(self.argmax)}


def band_width(cycles: list[DirectedCycle], nu: float, arbitrary_M: float = 5.0) -> BandWidth:
    """``T(E0) = max pr-cycle time`` and ``M = (2 nu - 1) / T(E0)``.

    With no directed cycle ``M`` is arbitrary; ``M_value`` then carries the
    configured stand-in used by the spectral verification.
    """
    pr = [(i, c) for i, c in enumerate(cycles) if c.is_pr]
    if not pr:
        return BandWidth(None, "arbitrary", float(arbitrary_M))
    T = max(c.time for _, c in pr)
    argmax = tuple(i for i, c in pr if c.time == T)
    M = (2.0 * nu - 1.0) / T
    return BandWidth(T, M, M, argmax)


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------

def graph_to_dict(graph: PhaseGraph, cycles: list[DirectedCycle] | None = None,
                  band: BandWidth | None = None) -> dict:
    d = {
        "vertices": [v.to_dict(i) for i, v in enumerate(graph.vertices)],
        "edges": [e.to_dict(i) for i, e in enumerate(graph.edges)],
        "tails": [t.to_dict(i) for i, t in enumerate(graph.tails)],
    }
    if cycles is not None:
        d["cycles"] = [c.to_dict() for c in cycles]
    if band is not None:
        d.update(band.to_dict())
    return d


def edges_csv(graph: PhaseGraph, samples: int = 64) -> str:
    """Edge table sampled along each edge for plotting in the ``(x, xi)`` plane."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge", "branch", "sign", "x", "xi"])
    for i, e in enumerate(graph.edges):
        xs = np.linspace(e.x_a, e.x_b, samples)
        for x in xs:
            xi = e.sign * math.sqrt(max(e.E0 - float(e.V.value(x)), 0.0))
            w.writerow([i, e.branch, "+" if e.sign > 0 else "-", repr(float(x)), repr(xi)])
    return buf.getvalue()
