"""Leading-order connection calculus on the phase graph.

Everything here is leading order in ``h``: the ``1 + O(h^nu')`` factors of
the transfer matrices, Maslov factors and quantization sum are dropped.

Conventions
-----------
* An amplitude on an edge is the WKB coefficient at the edge's start; along
  the edge it picks up ``exp(i (action + (E - E0) time) / h)``.
* A turning vertex multiplies by ``-i``.
* At a crossing vertex the branch whose potential has the larger slope
  *along the direction of motion* is the local branch "1".  Jumping into
  it costs ``-i h^(nu - omega - 1/2) sigma(rho)``; jumping out of it costs
  the same with ``conj(sigma(rho))``.  At ``xi > 0`` the local branch is
  the steeper potential; at ``xi < 0`` the other one.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ContourThroughZero, NoCycles, NotPrCycle, TooCloseToVertex,
                     TopologyUnsupported)
from .phase_graph import DirectedCycle, PhaseGraph, Vertex, enumerate_directed_cycles
from .potential import ProblemConfig
from .quadrature import tanh_sinh

LEADING_ORDER = "leading order in h; O(h^nu') corrections dropped"


# --------------------------------------------------------------------------
# crossing constants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CrossingData:
    """Constants of one crossing ``x_c`` (both vertices ``(x_c, +-xi_c)``)."""

    x_c: float
    xi_c: float
    slope_gap: float
    steeper: int  # global branch with the larger V'(x_c)
    w_plus: complex
    w_minus: complex
    sigma_plus: complex
    sigma_minus: complex
    mu_plus: float
    mu_minus: float

    def sigma(self, sign: int) -> complex:
        return self.sigma_plus if sign > 0 else self.sigma_minus

    def mu(self, sign: int) -> float:
        return self.mu_plus if sign > 0 else self.mu_minus

    def omega(self, sign: int, h: float, nu: float) -> complex:
        """Purely imaginary exponent ``i mu h^(2 nu - 1)``."""
        return 1j * self.mu(sign) * h ** (2.0 * nu - 1.0)

    def h_pow_minus_omega(self, sign: int, h: float, nu: float) -> complex:
        return cmath.exp(-self.omega(sign, h, nu) * math.log(h))

    def local_first(self, sign: int) -> int:
        """Global label of the branch with the larger directional slope."""
        if sign > 0:
            return self.steeper
        return 3 - self.steeper

    def to_dict(self) -> dict:
        return {"x_c": self.x_c, "xi_c": self.xi_c, "slope_gap": self.slope_gap,
                "steeper_branch": self.steeper,
                "w_plus": [self.w_plus.real, self.w_plus.imag],
                "sigma_plus": [self.sigma_plus.real, self.sigma_plus.imag],
                "sigma_minus": [self.sigma_minus.real, self.sigma_minus.imag],
                "abs_sigma_plus_sigma_minus": abs(self.sigma_plus * self.sigma_minus),
                "mu_plus": self.mu_plus, "mu_minus": self.mu_minus}


def crossing_constants(rho: Vertex, config: ProblemConfig) -> CrossingData:
    x = rho.x
    xi = abs(rho.xi)
    d1 = float(config.V1.derivative(x))
    d2 = float(config.V2.derivative(x))
    gap = abs(d1 - d2)
    steeper = 1 if d1 > d2 else 2
    w_p = complex(config.W.symbol(x, xi))
    w_m = complex(config.W.symbol(x, -xi))
    pref = math.sqrt(math.pi / gap) / math.sqrt(xi)
    s_p = cmath.exp(1j * math.pi / 4) * pref * w_p
    s_m = cmath.exp(-1j * math.pi / 4) * pref * w_m
    mu_p = abs(w_p) / (2.0 * xi * gap)
    mu_m = abs(w_m) / (2.0 * xi * gap)
    return CrossingData(x, xi, gap, steeper, w_p, w_m, s_p, s_m, mu_p, mu_m)


@dataclass(frozen=True)
class TransferMatrix:
    """Leading-order 2x2 crossing matrix in the local basis ``order``.

    ``order[0]`` is the branch with the larger directional slope; the entry
    ``tau[0, 1]`` moves amplitude from ``order[1]`` into ``order[0]``.
    """

    tau: np.ndarray
    sign: int
    order: tuple[int, int]

    def amplitude(self, src: int, dst: int) -> complex:
        return complex(self.tau[self.order.index(dst), self.order.index(src)])


def transfer_matrix(cd: CrossingData, sign: int, E: complex, h: float, nu: float) -> TransferMatrix:
    if not nu > 0.5:
        raise ValueError("nu must exceed 1/2")
    factor = -1j * h ** (nu - 0.5) * cd.h_pow_minus_omega(sign, h, nu)
    s = cd.sigma(sign)
    tau = np.array([[1.0, factor * s], [factor * s.conjugate(), 1.0]], dtype=complex)
    first = cd.local_first(sign)
    return TransferMatrix(tau, sign, (first, 3 - first))


def jump_factor(cd: CrossingData, sign: int, src: int, dst: int) -> complex:
    """The sigma-valued part of a branch jump from ``src`` to ``dst``."""
    s = cd.sigma(sign)
    return s if dst == cd.local_first(sign) else s.conjugate()


# --------------------------------------------------------------------------
# branch integrals, phases, Maslov factors
# --------------------------------------------------------------------------

def _radicand_factory(V, E0, a, b, turning_a, turning_b):
    def r(x, da, db):
        if turning_a:
            return -V.increment(a, da)
        if turning_b:
            return -V.increment(b, -db)
        return E0 - V.value(x)
    return r


def _is_turning(V, E0, x, tol):
    return abs(float(V.value(x)) - E0) <= tol


@dataclass(frozen=True)
class BranchData:
    """Action ``S_j`` and time ``T_j`` between a crossing and a turning point."""

    branch: int
    x_c: float
    x_turn: float
    S: float
    T: float
    S_err: float = 0.0
    T_err: float = 0.0


def branch_data(config: ProblemConfig, x_c: float, branch: int,
                x_turn: float | None = None) -> BranchData:
    """``S = int sqrt(E0 - V_j)`` and ``T = int 1/sqrt(E0 - V_j)`` from ``x_c`` to ``x_turn``.

    Without ``x_turn`` the turning point bounding the allowed interval of
    ``x_c`` is used (the nearest root of ``V_j = E0``).
    """
    from .phase_graph import find_turning_points

    V = config.potential(branch)
    E0 = config.E0
    if x_turn is None:
        roots = find_turning_points(V, E0, config.tolerances.root_tol, config.scan_halfwidth)
        if not roots:
            raise ValueError(f"branch {branch} has no turning point")
        x_turn = min(roots, key=lambda r: abs(r - x_c))
    a, b = sorted((x_c, x_turn))
    r = _radicand_factory(V, E0, a, b, a == x_turn, b == x_turn)
    tol = config.tolerances.quad_tol
    S = tanh_sinh(lambda x, da, db: np.sqrt(r(x, da, db)), a, b, tol)
    T = tanh_sinh(lambda x, da, db: 1.0 / np.sqrt(r(x, da, db)), a, b, tol)
    return BranchData(branch, x_c, x_turn, float(S.value), float(T.value),
                      float(S.error), float(T.error))


def phase_function(config: ProblemConfig, branch: int, x: float, E: complex,
                   base: float | None = None) -> complex:
    """``int_base^x sqrt(E0 - V_j) + (E - E0) / (2 sqrt(E0 - V_j)) dt``.

    ``base`` defaults to the first crossing point.  Endpoints sitting on a
    turning point are handled through the exact increment of ``V_j``.
    """
    V = config.potential(branch)
    E0 = config.E0
    if base is None:
        from .phase_graph import find_crossing_points
        cs = find_crossing_points(config.V1, config.V2, E0, config.tolerances.root_tol,
                                  config.scan_halfwidth)
        if not cs:
            raise ValueError("no crossing point to use as base")
        base = cs[0].x
    if x == base:
        return 0j
    a, b = sorted((base, x))
    tol_t = 1e3 * config.tolerances.root_tol
    r = _radicand_factory(V, E0, a, b, _is_turning(V, E0, a, tol_t), _is_turning(V, E0, b, tol_t))
    qt = config.tolerances.quad_tol
    S = tanh_sinh(lambda t, da, db: np.sqrt(r(t, da, db)), a, b, qt).value
    T = tanh_sinh(lambda t, da, db: 0.5 / np.sqrt(r(t, da, db)), a, b, qt).value
    sgn = 1.0 if x > base else -1.0
    return sgn * (S + (E - E0) * T)


@dataclass(frozen=True)
class MaslovFactor:
    value: complex
    branch: int

    def __abs__(self):
        return abs(self.value)


def maslov_factor(bd: BranchData, E: complex, h: float, E0: float) -> MaslovFactor:
    """``-i exp(i (2 S_j + (E - E0) T_j) / h)``: out-and-back reflection at a turning point.

    The round trip accumulates twice the phase ``S_j + (E - E0) T_j / 2``
    from the crossing to the turning point.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    return MaslovFactor(-1j * cmath.exp(1j * (2.0 * bd.S + (E - E0) * bd.T) / h), bd.branch)


def wkb_leading_coefficients(config: ProblemConfig, edge, x: float,
                             margin: float = 1e-3) -> tuple[complex, complex]:
    """Leading symbols of the two vector components of the WKB solution on ``edge``.

    Branch 1 returns ``(a_{1,0}, b_{1,nu})``, branch 2 ``(a_{2,nu}, b_{2,0})``.
    """
    from .phase_graph import find_crossing_points

    if not (edge.x_a + margin <= x <= edge.x_b - margin):
        raise TooCloseToVertex(f"x={x} within {margin} of the edge ends "
                               f"[{edge.x_a}, {edge.x_b}]")
    cs = find_crossing_points(config.V1, config.V2, config.E0, config.tolerances.root_tol,
                              config.scan_halfwidth)
    for c in cs:
        if abs(x - c.x) < margin:
            raise TooCloseToVertex(f"x={x} within {margin} of crossing {c.x}")
    E0 = config.E0
    v1, v2 = float(config.V1.value(x)), float(config.V2.value(x))
    r0, r1 = float(config.W.r0.value(x)), float(config.W.r1.value(x))
    s = edge.sign
    if edge.branch == 1:
        q = math.sqrt(E0 - v1)
        a = q ** -0.5
        b = (r0 - s * 1j * r1 * q) / ((v1 - v2) * q ** 0.5)
        return complex(a), complex(b)
    q = math.sqrt(E0 - v2)
    b = q ** -0.5
    a = (-r0 - s * 1j * r1 * q) / ((v1 - v2) * q ** 0.5)
    return complex(a), complex(b)


# --------------------------------------------------------------------------
# amplitude propagation
# --------------------------------------------------------------------------

@dataclass
class AmplitudeMap:
    edges: dict[int, complex] = field(default_factory=dict)
    tails: dict[int, complex] = field(default_factory=dict)


def crossing_table(graph: PhaseGraph) -> dict[float, CrossingData]:
    out = {}
    for i in graph.crossing_indices():
        v = graph.vertices[i]
        if v.x not in out:
            out[v.x] = crossing_constants(v, graph.config)
    return out


def _edge_phase(edge, E, h, E0):
    return cmath.exp(1j * (edge.action + (E - E0) * edge.time) / h)


def propagate_amplitudes(graph: PhaseGraph, E: complex, h: float,
                         config: ProblemConfig | None = None,
                         cycles: list[DirectedCycle] | None = None):
    """Push amplitudes through the graph with zero incoming data.

    With exactly one directed cycle, one of its edges is seeded with 1 and
    the amplitude that comes back to it after a full turn is returned as the
    loop factor.  Without cycles every bounded amplitude vanishes and the
    loop factor is ``None``.
    """
    config = config or graph.config
    nu, E0 = config.nu, config.E0
    if cycles is None:
        cycles = enumerate_directed_cycles(graph)
    if len(cycles) > 1:
        raise TopologyUnsupported(f"{len(cycles)} directed cycles; use quantization_function")
    nE = len(graph.edges)
    # unknowns: bounded edges then outgoing tails
    out_tails = [i for i, t in enumerate(graph.tails) if not t.incoming and t.vertex is not None]
    slot = {("e", i): i for i in range(nE)}
    slot.update({("t", i): nE + k for k, i in enumerate(out_tails)})
    n = nE + len(out_tails)
    K = np.zeros((n, n), dtype=complex)
    cdata = crossing_table(graph)
    tm_cache = {}
    for v, vert in enumerate(graph.vertices):
        ins = [("e", i, graph.edges[i].branch) for i in graph.in_edges(v)]
        outs = [("e", i, graph.edges[i].branch) for i in graph.out_edges(v)]
        outs += [("t", i, graph.tails[i].branch) for i in graph.out_tails(v)]
        # incoming tails carry zero amplitude and contribute nothing
        for kind_o, io_, b_out in outs:
            for _, ii, b_in in ins:
                ph = _edge_phase(graph.edges[ii], E, h, E0)
                if vert.kind == "turning":
                    f = -1j
                elif b_in == b_out:
                    f = 1.0
                else:
                    key = (vert.x, 1 if vert.xi > 0 else -1)
                    if key not in tm_cache:
                        tm_cache[key] = transfer_matrix(cdata[vert.x], key[1], E, h, nu)
                    f = tm_cache[key].amplitude(b_in, b_out)
                K[slot[(kind_o, io_)], slot[("e", ii)]] += f * ph
    amp = AmplitudeMap()
    if not cycles:
        alpha = np.zeros(n, dtype=complex)
        loop = None
    else:
        seed = cycles[0].edges[0]
        Kp = K.copy()
        Kp[seed, :] = 0.0
        rhs = np.zeros(n, dtype=complex)
        rhs[seed] = 1.0
        alpha = np.linalg.solve(np.eye(n) - Kp, rhs)
        loop = complex(K[seed] @ alpha)
    for i in range(nE):
        amp.edges[i] = complex(alpha[i])
    for k, i in enumerate(out_tails):
        amp.tails[i] = complex(alpha[nE + k])
    for i, t in enumerate(graph.tails):
        if t.incoming:
            amp.tails[i] = 0j
    return amp, loop


# --------------------------------------------------------------------------
# cycle amplitudes and the quantization function
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleConstants:
    """Pieces of ``C_gamma`` that do not depend on ``E``."""

    sigma_product: complex
    mu_sum: float
    S: float
    T: float
    n_turning: int

    def phase_prefactor(self) -> complex:
        # (-i) per reflection and per branch jump
        return (-1j) ** (self.n_turning + 2)


def cycle_constants(graph: PhaseGraph, cycle: DirectedCycle) -> CycleConstants:
    if not cycle.is_pr:
        raise NotPrCycle("cycle amplitude defined for pr-cycles only")
    cdata = crossing_table(graph)
    prod = 1.0 + 0j
    mus = 0.0
    for dst, v in cycle.switch_vertices:
        vert = graph.vertices[v]
        sign = 1 if vert.xi > 0 else -1
        cd = cdata[vert.x]
        prod *= jump_factor(cd, sign, 3 - dst, dst)
        mus += cd.mu(sign)
    return CycleConstants(prod, mus, cycle.action, cycle.time, cycle.n_turning)


def cycle_amplitude(graph: PhaseGraph, cycle: DirectedCycle, E, h: float, nu: float,
                    E0: float | None = None):
    """``C_gamma = sigma_1 sigma_2 h^(2nu - 1 - omega_1 - omega_2) exp(i (S + (E - E0) T) / h)``.

    Vectorized over ``E``.  The Maslov phase ``(-i)^(n_turn + 2)`` equals 1
    for cycles with two reflections.
    """
    cc = cycle_constants(graph, cycle)
    E0 = graph.config.E0 if E0 is None else E0
    return _amp(cc, np.asarray(E), h, nu, E0)


def _amp(cc: CycleConstants, E, h, nu, E0):
    omega_sum = 1j * cc.mu_sum * h ** (2.0 * nu - 1.0)
    pref = cc.phase_prefactor() * cc.sigma_product * h ** (2.0 * nu - 1.0) \
        * np.exp(-omega_sum * math.log(h))
    with np.errstate(over="ignore", invalid="ignore"):
        out = pref * np.exp(1j * (cc.S + (E - E0) * cc.T) / h)
    return out[()] if np.ndim(out) == 0 else out


@dataclass
class QuantizationFunction:
    """``C(E; h) = sum over pr-cycles of C_gamma`` with its E-derivative."""

    constants: list[CycleConstants]
    h: float
    nu: float
    E0: float

    def __call__(self, E):
        E = np.asarray(E, dtype=complex)
        return sum(_amp(cc, E, self.h, self.nu, self.E0) for cc in self.constants)

    def derivative(self, E):
        E = np.asarray(E, dtype=complex)
        with np.errstate(invalid="ignore"):
            return sum(_amp(cc, E, self.h, self.nu, self.E0) * (1j * cc.T / self.h)
                       for cc in self.constants)


def quantization_function(graph: PhaseGraph, h: float, nu: float | None = None,
                          cycles: list[DirectedCycle] | None = None) -> QuantizationFunction:
    nu = graph.config.nu if nu is None else nu
    if cycles is None:
        cycles = enumerate_directed_cycles(graph)
    pr = [c for c in cycles if c.is_pr]
    if not pr:
        raise NoCycles("no pr-cycle: the necessary condition C(E;h)=1 is void")
    return QuantizationFunction([cycle_constants(graph, c) for c in pr], h, nu, graph.config.E0)


def amplitude_bound_check(graph: PhaseGraph, cycle: DirectedCycle, E_grid, h_grid,
                          nu: float, slack: float = 1.01) -> dict:
    """Check ``|C_gamma| <= K h^(2nu-1) exp(T |Im E| / h)`` with ``K = slack |sigma sigma'|``."""
    cc = cycle_constants(graph, cycle)
    K = slack * abs(cc.sigma_product)
    E_grid = np.asarray(E_grid, dtype=complex)
    worst = 0.0
    violations = []
    for h in h_grid:
        c = np.abs(_amp(cc, E_grid, h, nu, graph.config.E0))
        bound = K * h ** (2 * nu - 1) * np.exp(cc.T * np.abs(E_grid.imag) / h)
        ratio = c / bound
        worst = max(worst, float(np.max(ratio)))
        for E, r in zip(E_grid[ratio > 1], ratio[ratio > 1]):
            violations.append({"h": h, "E": [E.real, E.imag], "ratio": float(r)})
    return {"passed": not violations, "max_ratio": worst, "K": K, "violations": violations,
            "note": LEADING_ORDER}


def amplitude_grid_csv(qf: QuantizationFunction, re_range, im_range, n_re: int = 101,
                       n_im: int = 51) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "re_E", "im_E", "abs_C"])
    res = np.linspace(re_range[0], re_range[1], n_re)
    ims = np.linspace(im_range[0], im_range[1], n_im)
    R, I = np.meshgrid(res, ims)
    C = np.abs(qf(R + 1j * I))
    for r, i, c in zip(R.ravel(), I.ravel(), C.ravel()):
        w.writerow([repr(qf.h), repr(float(r)), repr(float(i)), repr(float(c))])
    return buf.getvalue()


# --------------------------------------------------------------------------
# candidate roots of C(E; h) = 1
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Rect:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def __post_init__(self):
        if not (self.re_lo < self.re_hi and self.im_lo < self.im_hi):
            raise ValueError("degenerate rectangle")

    def contains(self, z) -> bool:
        return self.re_lo <= z.real <= self.re_hi and self.im_lo <= z.imag <= self.im_hi

    def expanded(self, d: float) -> "Rect":
        return Rect(self.re_lo - d, self.re_hi + d, self.im_lo - d, self.im_hi + d)

    @property
    def size(self) -> float:
        return max(self.re_hi - self.re_lo, self.im_hi - self.im_lo)

    def to_list(self) -> list[float]:
        return [self.re_lo, self.re_hi, self.im_lo, self.im_hi]


def _boundary(rect: Rect, n: int):
    """Counter-clockwise boundary nodes and per-node trapezoid weights ``dz``."""
    w = rect.re_hi - rect.re_lo
    hgt = rect.im_hi - rect.im_lo
    per = 2 * (w + hgt)
    sides = [(complex(rect.re_lo, rect.im_lo), complex(w, 0)),
             (complex(rect.re_hi, rect.im_lo), complex(0, hgt)),
             (complex(rect.re_hi, rect.im_hi), complex(-w, 0)),
             (complex(rect.re_lo, rect.im_hi), complex(0, -hgt))]
    zs, dzs = [], []
    for start, vec in sides:
        m = max(8, int(round(n * abs(vec) / per)))
        t = np.arange(m + 1) / m
        wts = np.full(m + 1, 1.0 / m)
        wts[0] = wts[-1] = 0.5 / m
        zs.append(start + vec * t)
        dzs.append(vec * wts)
    return np.concatenate(zs), np.concatenate(dzs)


def winding_count(f, df, rect: Rect, n0: int = 512, n_max: int = 2**17,
                  tol: float = 0.02) -> tuple[int, int]:
    """Zero count inside ``rect`` from the trapezoid rule for ``(1/2 pi i) loop f'/f``.

    The node count doubles from ``n0`` until two levels round to the same
    integer within ``tol``.  Returns ``(count, nodes_used)``.
    """
    prev = None
    n = n0
    while n <= n_max:
        z, dz = _boundary(rect, n)
        fz = f(z)
        if np.min(np.abs(fz)) == 0:
            raise ContourThroughZero("f vanishes on the contour")
        val = np.sum(df(z) / fz * dz) / (2j * math.pi)
        k = round(val.real)
        close = abs(val.real - k) < tol and abs(val.imag) < tol
        if close and prev == k:
            return int(k), n
        prev = k if close else None
        n *= 2
    raise ContourThroughZero("argument-principle integral did not settle to an integer; "
                             "a zero probably sits on or next to the contour")


@dataclass
class CandidateResult:
    h: float
    rect: Rect
    roots: list[complex]
    winding: int
    nodes: int
    seeds_used: int
    failures: int
    residuals: list[float]
    jittered: bool = False

    @property
    def consistent(self) -> bool:
        return len(self.roots) == self.winding

    def to_dict(self) -> dict:
        return {"h": self.h, "rect": self.rect.to_list(),
                "roots": [[z.real, z.imag] for z in self.roots],
                "residuals": self.residuals,
                "winding_count": self.winding, "contour_nodes": self.nodes,
                "seed_grid": self.seeds_used, "newton_failures": self.failures,
                "count_matches": self.consistent, "jittered": self.jittered,
                "note": LEADING_ORDER}


def _newton(f, df, z, tol, maxit=100):
    for _ in range(maxit):
        fz = f(z)
        d = df(z)
        if d == 0 or not np.isfinite(fz):
            return None
        step = fz / d
        if not np.isfinite(step):
            return None
        z = z - step
        if abs(step) < tol:
            return complex(z)
    return None


def find_resonance_candidates(graph: PhaseGraph, h: float, rect: Rect, nu: float | None = None,
                              newton_tol: float | None = None, seeds: int = 8,
                              max_seeds: int = 256,
                              cycles: list[DirectedCycle] | None = None) -> CandidateResult:
    """Roots of ``C(E; h) = 1`` in ``rect`` counted by the argument principle and
    located by complex Newton from a seed grid that is refined until the two
    counts agree."""
    if rect.im_hi > 0:
        raise ValueError("search rectangle must lie in Im E <= 0")
    nu = graph.config.nu if nu is None else nu
    tol = graph.config.tolerances.newton_tol if newton_tol is None else newton_tol
    qf = quantization_function(graph, h, nu, cycles)
    f = lambda z: qf(z) - 1.0  # noqa: E731
    df = qf.derivative
    jittered = False
    try:
        count, nodes = winding_count(f, df, rect)
    except ContourThroughZero:
        rect = rect.expanded(1e-3 * rect.size)
        rect = Rect(rect.re_lo, rect.re_hi, rect.im_lo, min(rect.im_hi, 0.0))
        jittered = True
        count, nodes = winding_count(f, df, rect)
    dedupe = max(1e-8, 100 * tol)
    n = seeds
    while True:
        roots: list[complex] = []
        failures = 0
        res = np.linspace(rect.re_lo, rect.re_hi, n + 2)[1:-1]
        ims = np.linspace(rect.im_lo, rect.im_hi, n + 2)[1:-1]
        for im in ims:
            for re in res:
                z = _newton(lambda s: complex(f(s)), lambda s: complex(df(s)), complex(re, im), tol)
                if z is None:
                    failures += 1
                    continue
                if rect.contains(z) and all(abs(z - r) > dedupe for r in roots):
                    roots.append(z)
        if len(roots) >= count or n >= max_seeds:
            break
        n *= 2
    roots.sort(key=lambda z: (z.real, z.imag))
    resid = [float(abs(f(z))) for z in roots]
    return CandidateResult(h, rect, roots, count, nodes, n, failures, resid, jittered)
