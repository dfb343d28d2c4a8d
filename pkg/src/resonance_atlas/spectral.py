"""Resonances as eigenvalues of the complex-dilated operator.

The real line is rotated uniformly, ``x = y exp(i theta)``, truncated to
``|y| <= L`` with Dirichlet ends and discretized by fourth-order centered
differences.  True resonances do not move when ``theta`` or the box change;
rotated continuum and box artefacts do, which is what the classifier uses.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

from .errors import EigensolveFailure, GridTooCoarse, StripViolation
from .potential import PotentialSpec, ProblemConfig

DEFAULT_THETA = 0.3
DEFAULT_THETA_P = 0.35
DEFAULT_L = 12.0
DEFAULT_N = 1600
DENSE_LIMIT = 800  # matrix dimension up to which the dense solver is used


@dataclass(frozen=True)
class DilationContour:
    theta: float
    mode: str = "uniform"

    def __post_init__(self):
        if self.mode != "uniform":
            raise ValueError(f"unsupported dilation mode {self.mode!r}")
        if not 0 <= self.theta < math.pi / 2:
            raise ValueError("theta must lie in [0, pi/2)")

    @property
    def phase(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta))


# --------------------------------------------------------------------------
# windows
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    @property
    def circumradius(self) -> float:
        return self.radius

    def scaled(self, f: float) -> "Disk":
        return Disk(self.center, self.radius * f)

    def to_dict(self) -> dict:
        return {"disk": {"center": [self.center.real, self.center.imag], "radius": self.radius}}


@dataclass(frozen=True)
class Box:
    re_lo: float
    re_hi: float
    im_lo: float
    im_hi: float

    def contains(self, z):
        z = np.asarray(z)
        return ((z.real >= self.re_lo) & (z.real <= self.re_hi)
                & (z.imag >= self.im_lo) & (z.imag <= self.im_hi))

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))

    @property
    def circumradius(self) -> float:
        return 0.5 * math.hypot(self.re_hi - self.re_lo, self.im_hi - self.im_lo)

    def scaled(self, f: float) -> "Box":
        c = self.center
        hw = 0.5 * (self.re_hi - self.re_lo) * f
        hh = 0.5 * (self.im_hi - self.im_lo) * f
        return Box(c.real - hw, c.real + hw, c.imag - hh, c.imag + hh)

    def to_dict(self) -> dict:
        return {"rect": [self.re_lo, self.re_hi, self.im_lo, self.im_hi]}


def as_window(w):
    if isinstance(w, (Disk, Box)):
        return w
    if hasattr(w, "re_lo"):
        return Box(w.re_lo, w.re_hi, w.im_lo, w.im_hi)
    if isinstance(w, (tuple, list)) and len(w) == 4:
        return Box(*map(float, w))
    raise TypeError(f"cannot interpret {w!r} as a spectral window")


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------

@dataclass
class DiscretizedOperator:
    matrix: sp.csr_matrix
    h: float
    nu: float
    theta: float
    L: float
    N: int
    spacing: float
    grid: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def block(self, i: int, j: int):
        N = self.N
        return self.matrix[(i - 1) * N:i * N, (j - 1) * N:j * N]

    def metadata(self) -> dict:
        return {"h": self.h, "nu": self.nu, "theta": self.theta, "L": self.L, "N": self.N,
                "spacing": self.spacing, "scheme": "4th-order centered FD, Dirichlet"}


def _stencils(N: int, dx: float):
    e = np.ones(N)
    D2 = sp.diags([-e[:-2], 16 * e[:-1], -30 * e, 16 * e[:-1], -e[:-2]],
                  [-2, -1, 0, 1, 2], format="csr") / (12.0 * dx * dx)
    D1 = sp.diags([e[:-2], -8 * e[:-1], 8 * e[:-1], -e[:-2]],
                  [-2, -1, 1, 2], format="csr") / (12.0 * dx)
    return D1, D2


def _check_specs(config: ProblemConfig, theta: float):
    for name, spec in (("V1", config.V1), ("V2", config.V2), ("r0", config.W.r0),
                       ("r1", config.W.r1)):
        ok, why = spec.dilation_admissible(theta)
        if not ok:
            raise StripViolation(f"{name}: {why}")


def _check_box(config: ProblemConfig, theta: float, L: float, tol: float = 1e-8):
    ph = complex(math.cos(theta), math.sin(theta))
    for name, spec in (("V1", config.V1), ("V2", config.V2)):
        lo, hi = spec.limits_at_infinity()
        vm, _ = spec._sum(np.array([-L * ph]))
        vp, _ = spec._sum(np.array([L * ph]))
        err = max(abs(vm[0] - lo), abs(vp[0] - hi))
        if err >= tol:
            raise ValueError(f"L={L} too small: |{name}(+-L e^(i theta)) - limit| = {err:.3g}")


def points_per_wavelength(config: ProblemConfig, h: float, spacing: float, L: float) -> float:
    y = np.linspace(-L, L, 4001)
    vmin = min(float(np.min(config.V1.value(y))), float(np.min(config.V2.value(y))))
    ximax = math.sqrt(max(config.E0 - vmin, 1e-300))
    return 2.0 * math.pi * h / (ximax * spacing)


def build_dilated_operator(config: ProblemConfig, contour: DilationContour, h: float,
                           L: float = DEFAULT_L, N: int = DEFAULT_N) -> DiscretizedOperator:
    """Sparse ``2N x 2N`` matrix of ``[[P1, h^nu W], [h^nu W*, P2]]`` on the rotated ray.

    ``P_j = -h^2 e^(-2 i theta) d^2/dy^2 + V_j(y e^(i theta))`` and
    ``W = r0 + r1 h d/dx`` with ``d/dx = e^(-i theta) d/dy``; the lower block
    is the formal adjoint ``r0 - h d/dx r1``.  The matrix is complex
    symmetric, and real symmetric at ``theta = 0``.
    """
    if N < 200:
        raise ValueError("N must be at least 200")
    if not h > 0:
        raise ValueError("h must be positive")
    theta = contour.theta
    _check_specs(config, theta)
    _check_box(config, theta, L)
    y = np.linspace(-L, L, N + 2)[1:-1]
    dx = float(y[1] - y[0])
    ppw = points_per_wavelength(config, h, dx, L)
    if ppw < 8:
        warnings.warn(GridTooCoarse(f"{ppw:.2f} points per wavelength at E0 (h={h}, "
                                    f"spacing={dx:.4g}); 8 recommended"), stacklevel=2)
    ph = contour.phase
    z = y * ph
    D1, D2 = _stencils(N, dx)
    kin = (-h * h / (ph * ph)) * D2

    def diag_of(spec: PotentialSpec):
        v, _ = spec._sum(z)
        return v.real.astype(complex) if theta == 0 else v

    P1 = kin + sp.diags(diag_of(config.V1))
    P2 = kin + sp.diags(diag_of(config.V2))
    R0 = sp.diags(diag_of(config.W.r0))
    R1 = sp.diags(diag_of(config.W.r1))
    Wt = R0 + (h / ph) * (R1 @ D1)
    Ws = R0 - (h / ph) * (D1 @ R1)
    c = h ** config.nu
    A = sp.bmat([[P1, c * Wt], [c * Ws, P2]], format="csr")
    return DiscretizedOperator(A, h, config.nu, theta, L, N, dx, y)


# --------------------------------------------------------------------------
# eigenvalues
# --------------------------------------------------------------------------

@dataclass
class Spectrum:
    values: np.ndarray
    residuals: np.ndarray
    method: str
    k: int

    def __len__(self):
        return len(self.values)

    def tolist(self) -> list[complex]:
        return [complex(z) for z in self.values]


def _start_vector(n: int) -> np.ndarray:
    t = np.arange(n)
    return np.cos(0.37 * t) + 1j * np.sin(0.11 * t) + 1.0


def _finish(vals, vecs, A, window, method, k):
    keep = np.asarray(window.contains(vals), dtype=bool)
    vals, vecs = vals[keep], vecs[:, keep]
    res = np.linalg.norm(A @ vecs - vecs * vals, axis=0) / np.maximum(
        np.linalg.norm(vecs, axis=0), 1e-300)
    order = np.lexsort((vals.imag, vals.real))
    return Spectrum(vals[order], res[order], method, k)


def compute_spectrum(op: DiscretizedOperator, window, method: str = "auto",
                     k0: int = 40) -> Spectrum:
    """All eigenvalues inside ``window``, sorted by real then imaginary part.

    ``method="dense"`` runs LAPACK on the full matrix.  ``"sparse"`` runs
    ARPACK in shift-invert mode around the window centre, doubling the
    number of requested eigenvalues until the farthest one lies outside the
    window's circumradius, so nothing inside is missed.
    """
    window = as_window(window)
    A = op.matrix
    n = A.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "sparse"
    if method == "dense":
        try:
            vals, vecs = la.eig(A.toarray())
        except la.LinAlgError as exc:
            raise EigensolveFailure(str(exc)) from exc
        return _finish(vals, vecs, A, window, "dense", n)
    if method != "sparse":
        raise ValueError(f"unknown method {method!r}")
    sigma = complex(window.center)
    R = window.circumradius
    k = min(k0, n - 2)
    v0 = _start_vector(n)
    Acsc = A.tocsc()
    while True:
        try:
            vals, vecs = sla.eigs(Acsc, k=k, sigma=sigma, v0=v0, which="LM")
        except (sla.ArpackError, sla.ArpackNoConvergence, RuntimeError) as exc:
            raise EigensolveFailure(f"shift-invert ARPACK failed: {exc}") from exc
        if np.max(np.abs(vals - sigma)) > R or k >= n - 2:
            break
        k = min(2 * k, n - 2)
    return _finish(vals, vecs, A, window, "sparse", k)


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------

def coupled_thresholds(config: ProblemConfig, h: float) -> list[float]:
    """Continuum thresholds: eigenvalues of the 2x2 symbol matrix at ``x -> -inf, +inf``."""
    out = []
    c = h ** config.nu
    lo1, hi1 = config.V1.limits_at_infinity()
    lo2, hi2 = config.V2.limits_at_infinity()
    r_lo, r_hi = config.W.r0.limits_at_infinity()
    for v1, v2, r in ((lo1, lo2, r_lo), (hi1, hi2, r_hi)):
        out.extend(np.linalg.eigvalsh(np.array([[v1, c * r], [c * r, v2]])).tolist())
    return sorted(set(float(v) for v in out))


def imag_floor(h: float, spacing: float) -> float:
    return max(1e-8, 10.0 * spacing ** 4 / h ** 2)


@dataclass
class SpectrumResult:
    eigenvalues: list[complex]
    classes: list[str]
    theta_shift: list[float]
    box_shift: list[float]
    metadata: dict

    def resonances(self) -> list[complex]:
        return [z for z, c in zip(self.eigenvalues, self.classes) if c == "resonance"]

    def count(self, cls: str) -> int:
        return sum(c == cls for c in self.classes)

    def to_dict(self) -> dict:
        return {"metadata": self.metadata,
                "eigenvalues": [{"re": z.real, "im": z.imag, "class": c,
                                 "theta_shift": a, "box_shift": b}
                                for z, c, a, b in zip(self.eigenvalues, self.classes,
                                                      self.theta_shift, self.box_shift)]}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "theta", "re", "im", "class", "theta_shift", "box_shift"])
        h, th = self.metadata["h"], self.metadata["theta"]
        for z, c, a, b in zip(self.eigenvalues, self.classes, self.theta_shift, self.box_shift):
            w.writerow([repr(h), repr(th), repr(z.real), repr(z.imag), c, repr(a), repr(b)])
        return buf.getvalue()


def _nearest(z, pool: np.ndarray) -> float:
    if len(pool) == 0:
        return math.inf
    return float(np.min(np.abs(pool - z)))


def classify_resonances(config: ProblemConfig, h: float, window, theta: float = DEFAULT_THETA,
                        theta_p: float = DEFAULT_THETA_P, L: float = DEFAULT_L,
                        N: int = DEFAULT_N, class_tol: float | None = None,
                        ray_tol: float = 0.05, box_factor: float = 1.25,
                        method: str = "auto") -> SpectrumResult:
    """Label each eigenvalue in ``window`` as resonance, continuum or spurious.

    Three spectra are computed: at ``theta``, at ``theta_p`` and at
    ``theta`` on a box enlarged by ``box_factor`` at equal spacing.  An
    eigenvalue on a ray of angle ``-2 theta`` from a continuum threshold is
    continuum; one whose nearest neighbour in both companion runs lies within
    ``class_tol`` (default ``1e-3 h``) is a resonance; the rest are spurious.
    """
    if not 0 < theta < theta_p:
        raise ValueError("need 0 < theta < theta_p")
    window = as_window(window)
    if class_tol is None:
        class_tol = 1e-3 * h
    wide = window.scaled(1.0 + 4 * class_tol / max(window.circumradius, 1e-300))
    L2 = L * box_factor
    N2 = int(round(N * box_factor))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridTooCoarse)
        op = build_dilated_operator(config, DilationContour(theta), h, L, N)
        op_t = build_dilated_operator(config, DilationContour(theta_p), h, L, N)
        op_b = build_dilated_operator(config, DilationContour(theta), h, L2, N2)
    base = compute_spectrum(op, window, method)
    other_t = compute_spectrum(op_t, wide, method).values
    other_b = compute_spectrum(op_b, wide, method).values
    thresholds = coupled_thresholds(config, h)
    eig, cls, dth, dbox = [], [], [], []
    for z in base.values:
        z = complex(z)
        a = _nearest(z, other_t)
        b = _nearest(z, other_b)
        on_ray = any(abs(z - v) > 0 and abs(np.angle(z - v) + 2 * theta) < ray_tol
                     for v in thresholds)
        if on_ray:
            c = "continuum"
        elif a < class_tol and b < class_tol:
            c = "resonance"
        else:
            c = "spurious"
        eig.append(z)
        cls.append(c)
        dth.append(a)
        dbox.append(b)
    meta = {"h": h, "theta": theta, "theta_p": theta_p, "L": L, "N": N, "L_box": L2,
            "N_box": N2, "spacing": op.spacing, "class_tol": class_tol, "ray_tol": ray_tol,
            "thresholds": thresholds, "imag_floor": imag_floor(h, op.spacing),
            "window": window.to_dict(), "method": base.method, "arpack_k": base.k,
            "max_residual": float(np.max(base.residuals)) if len(base) else 0.0}
    return SpectrumResult(eig, cls, dth, dbox, meta)


# --------------------------------------------------------------------------
# band test
# --------------------------------------------------------------------------

@dataclass
class BandVerdict:
    h: float
    radius: float
    empty: bool
    margin: float
    closest: complex | None
    violations: list[complex]
    spectrum: SpectrumResult

    def to_dict(self) -> dict:
        m = self.spectrum.metadata
        return {"h": self.h, "band_radius": self.radius, "empty": self.empty,
                "margin": self.margin,
                "closest_resonance": None if self.closest is None
                else [self.closest.real, self.closest.imag],
                "violations": [[z.real, z.imag] for z in self.violations],
                "searched_radius": m["window"]["disk"]["radius"],
                "spectrum": self.spectrum.to_dict()}


@dataclass
class BandReport:
    M: float
    c: float
    verdicts: list[BandVerdict]

    @property
    def empty(self) -> bool:
        return all(v.empty for v in self.verdicts)

    def to_dict(self) -> dict:
        return {"M": self.M, "safety_c": self.c, "band_empty": self.empty,
                "per_h": [v.to_dict() for v in self.verdicts]}


def band_verdict(config: ProblemConfig, h: float, M: float, c: float = 0.9,
                 search_factor: float = 1.5, **kw) -> BandVerdict:
    """Test one ``h``: no resonance with ``|z - E0| < c M h log(1/h)`` below the noise floor.

    The search disc is ``search_factor`` times larger than the band so the
    margin (closest resonance distance over band radius) can exceed 1.
    """
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    R = c * M * h * math.log(1.0 / h)
    E0 = config.E0
    if R == 0:
        empty_spec = SpectrumResult([], [], [], [], {"h": h, "window": Disk(E0, 0.0).to_dict()})
        return BandVerdict(h, 0.0, True, math.inf, None, [], empty_spec)
    res = classify_resonances(config, h, Disk(complex(E0, 0.0), search_factor * R), **kw)
    floor = res.metadata["imag_floor"]
    deep = [z for z in res.resonances() if z.imag < -floor]
    viol = [z for z in deep if abs(z - E0) < R]
    closest = min(deep, key=lambda z: abs(z - E0)) if deep else None
    margin = abs(closest - E0) / R if closest is not None else math.inf
    return BandVerdict(h, R, not viol, margin, closest, viol, res)


def _verdict_task(args):
    config, h, M, c, kw = args
    return band_verdict(config, h, M, c, **kw)


def verify_band_empty(config: ProblemConfig, h_list, M: float, c: float = 0.9,
                      jobs: int = 1, **kw) -> BandReport:
    if not 0 < c < 1:
        raise ValueError("safety constant c must lie in (0, 1)")
    tasks = [(config, float(h), M, c, kw) for h in h_list]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            verdicts = list(ex.map(_verdict_task, tasks))
    else:
        verdicts = [_verdict_task(t) for t in tasks]
    return BandReport(M, c, verdicts)
