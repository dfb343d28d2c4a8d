"""Analytic potentials and interaction symbols built from a closed term library.

Every term has a closed-form value, derivative, exact increment, known
singularities and limits at infinity, so nothing downstream needs numerical
differentiation or guesses about analyticity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import StripViolation, UnboundedInteraction, ValidationError

KINDS = ("constant", "tanh", "gaussian", "sech2", "linear")
BOUNDED_KINDS = ("constant", "tanh", "gaussian", "sech2")
_KIND_ALIASES = {"scaled-tanh": "tanh", "sech-squared": "sech2", "sech^2": "sech2"}


@dataclass(frozen=True)
class AnalyticTerm:
    """One library term.

    ``constant``: ``a``; ``tanh``: ``a*tanh(s(x-b))``; ``gaussian``:
    ``a*exp(-s(x-b)^2)``; ``sech2``: ``a*sech(s(x-b))^2``.  ``linear``
    (``a*s*(x-b)``) exists for unit tests only; it has no limits at infinity
    and is rejected wherever boundedness is required.
    """

    kind: str
    amplitude: float
    slope: float = 1.0
    center: float = 0.0

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValidationError("kind", f"unknown term kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        for name in ("amplitude", "slope", "center"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(name, "must be finite")
        if not self.slope > 0:
            raise ValidationError("slope", "must be positive")

    @property
    def bounded(self) -> bool:
        return self.kind in BOUNDED_KINDS

    @property
    def strip_halfwidth(self) -> float:
        if self.kind in ("tanh", "sech2"):
            return math.pi / (2.0 * self.slope)
        return math.inf

    def limits(self) -> tuple[float, float]:
        a = self.amplitude
        if self.kind == "constant":
            return a, a
        if self.kind == "tanh":
            return -a, a
        if self.kind == "linear":
            if a == 0:
                return 0.0, 0.0
            return -math.copysign(math.inf, a), math.copysign(math.inf, a)
        return 0.0, 0.0

    def singularities(self, kmax: int = 0) -> list[complex]:
        """Pole pairs ``b +- i pi (k + 1/2) / s`` for ``k <= kmax``."""
        if self.kind not in ("tanh", "sech2"):
            return []
        out = []
        for k in range(kmax + 1):
            y = math.pi * (k + 0.5) / self.slope
            out += [complex(self.center, y), complex(self.center, -y)]
        return out

    def value_and_derivative(self, z):
        a, s, b = self.amplitude, self.slope, self.center
        if self.kind == "constant":
            return a + 0 * z, 0 * z
        if self.kind == "linear":
            return a * s * (z - b), a * s + 0 * z
        u = z - b
        if self.kind == "tanh":
            t = np.tanh(s * u)
            return a * t, a * s * (1.0 - t * t)
        if self.kind == "gaussian":
            g = np.exp(-s * u * u)
            return a * g, -2.0 * a * s * u * g
        # sech2
        with np.errstate(over="ignore"):
            sech = 1.0 / np.cosh(s * u)
        t = np.tanh(s * u)
        v = a * sech * sech
        return v, -2.0 * s * v * t

    def increment(self, y, d):
        """``term(y + d) - term(y)`` without cancellation for small ``d``."""
        a, s, b = self.amplitude, self.slope, self.center
        if self.kind == "constant":
            return 0.0 * (y + d)
        if self.kind == "linear":
            return a * s * d + 0.0 * y
        u = y - b
        if self.kind == "tanh":
            with np.errstate(over="ignore", invalid="ignore"):
                r = a * np.sinh(s * d) / (np.cosh(s * (u + d)) * np.cosh(s * u))
            # overflow of the hyperbolics only happens far out where the
            # direct difference is exact enough
            direct = a * (np.tanh(s * (u + d)) - np.tanh(s * u))
            return np.where(np.isfinite(r), r, direct)
        if self.kind == "gaussian":
            return a * np.exp(-s * u * u) * np.expm1(-s * (2.0 * u * d + d * d))
        v = s * (u + d)
        w = s * u
        with np.errstate(over="ignore", invalid="ignore"):
            r = a * np.sinh(w + v) * np.sinh(w - v) / (np.cosh(w) ** 2 * np.cosh(v) ** 2)
        with np.errstate(over="ignore"):
            direct = a * (1.0 / np.cosh(v) ** 2 - 1.0 / np.cosh(w) ** 2)
        return np.where(np.isfinite(r), r, direct)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "amplitude": self.amplitude,
                "slope": self.slope, "center": self.center}


@dataclass(frozen=True)
class PotentialSpec:
    """A finite sum of :class:`AnalyticTerm`."""

    terms: tuple[AnalyticTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def of(cls, *terms: AnalyticTerm) -> "PotentialSpec":
        return cls(tuple(terms))

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "PotentialSpec":
        return cls(tuple(AnalyticTerm(r["kind"], float(r["amplitude"]),
                                      float(r.get("slope", 1.0)),
                                      float(r.get("center", 0.0)))
                         for r in records))

    def to_records(self) -> list[dict]:
        return [t.to_dict() for t in self.terms]

    @property
    def bounded(self) -> bool:
        return all(t.bounded for t in self.terms)

    @property
    def strip_halfwidth(self) -> float:
        return min((t.strip_halfwidth for t in self.terms), default=math.inf)

    @property
    def min_slope(self) -> float:
        slopes = [t.slope for t in self.terms if t.kind not in ("constant",)]
        return min(slopes, default=1.0)

    @property
    def max_abs_center(self) -> float:
        return max((abs(t.center) for t in self.terms), default=0.0)

    def _check_strip(self, z):
        im = np.abs(np.imag(z))
        if not np.any(im > 0):
            return
        w = self.strip_halfwidth
        if np.any(im >= w):
            raise StripViolation(
                f"|Im x| = {float(np.max(im)):.6g} outside analyticity strip {w:.6g}")

    def _sum(self, z):
        z = np.asarray(z)
        v = np.zeros_like(z, dtype=np.result_type(z.dtype, float))
        dv = np.zeros_like(v)
        for t in self.terms:
            tv, tdv = t.value_and_derivative(z)
            v = v + tv
            dv = dv + tdv
        return v, dv

    def eval(self, x):
        """Return ``(value, derivative)`` at real or complex ``x``.

        Complex points must satisfy ``|Im x| <`` the smallest term strip
        half-width; otherwise :class:`StripViolation` is raised.
        """
        self._check_strip(x)
        v, dv = self._sum(x)
        if np.ndim(v) == 0:
            return v[()], dv[()]
        return v, dv

    def value(self, x):
        return self.eval(x)[0]

    def derivative(self, x):
        return self.eval(x)[1]

    def eval_dilated(self, y, theta: float):
        """Evaluate on the rotated contour ``y * exp(i theta)``, ``y`` real.

        The horizontal-strip test is replaced by the sharper requirement that
        rotating the real axis to the ray sweeps over no singularity; see
        :meth:`dilation_admissible`.
        """
        ok, why = self.dilation_admissible(theta)
        if not ok:
            raise StripViolation(why)
        v, dv = self._sum(np.asarray(y, dtype=float) * np.exp(1j * theta))
        if np.ndim(v) == 0:
            return v[()], dv[()]
        return v, dv

    def dilation_admissible(self, theta: float, R0: float = 0.0) -> tuple[bool, str]:
        """Whether the double sector ``{|Im x| <= tan(theta) |Re x|, |Re x| > R0}``
        is free of singularities and every term has a limit inside it."""
        if not 0 <= theta < math.pi / 2:
            return False, f"theta={theta} outside [0, pi/2)"
        tan = math.tan(theta)
        for t in self.terms:
            if t.kind == "gaussian" and theta >= math.pi / 4:
                return False, f"gaussian term has no limit in a sector of angle {theta:.4g} >= pi/4"
            for p in t.singularities():
                if abs(p.real) > R0 and abs(p.imag) <= tan * abs(p.real):
                    return False, (f"{t.kind} term has a pole at {p.real:.6g}{p.imag:+.6g}j "
                                   f"inside the sector of angle {theta:.4g}")
        return True, ""

    def increment(self, y, d):
        """``V(y + d) - V(y)`` evaluated term-wise without cancellation."""
        y = np.asarray(y, dtype=float)
        d = np.asarray(d, dtype=float)
        out = np.zeros(np.broadcast(y, d).shape)
        for t in self.terms:
            out = out + t.increment(y, d)
        return out if out.ndim else float(out)

    def limits_at_infinity(self) -> tuple[float, float]:
        lo = sum(t.limits()[0] for t in self.terms)
        hi = sum(t.limits()[1] for t in self.terms)
        return float(lo), float(hi)

    def __add__(self, other: "PotentialSpec") -> "PotentialSpec":
        return PotentialSpec(self.terms + other.terms)


def limits_at_infinity(spec: PotentialSpec) -> tuple[float, float]:
    return spec.limits_at_infinity()


def evaluate(spec: PotentialSpec, x):
    return spec.eval(x)


@dataclass(frozen=True)
class InteractionSpec:
    """Coefficients of ``W = r0(x) + i r1(x) h D_x``; both must be bounded."""

    r0: PotentialSpec = field(default_factory=PotentialSpec)
    r1: PotentialSpec = field(default_factory=PotentialSpec)

    def __post_init__(self):
        for name in ("r0", "r1"):
            spec = getattr(self, name)
            if not spec.bounded:
                bad = [t.kind for t in spec.terms if not t.bounded]
                raise UnboundedInteraction(f"{name} contains unbounded term kinds {bad}")

    def symbol(self, x, xi):
        """Principal symbol ``w(x, xi) = r0(x) + i r1(x) xi``."""
        return self.r0.value(x) + 1j * self.r1.value(x) * xi


@dataclass(frozen=True)
class Tolerances:
    root_tol: float = 1e-12
    quad_tol: float = 1e-10
    newton_tol: float = 1e-10


@dataclass(frozen=True)
class ProblemConfig:
    V1: PotentialSpec
    V2: PotentialSpec
    W: InteractionSpec
    E0: float
    nu: float = 1.0
    theta0: float = 0.5
    R0: float = 1.0
    tolerances: Tolerances = field(default_factory=Tolerances)
    # behaviour when theta0 exceeds what the terms allow: "fail" or "warn"
    sector_policy: str = "fail"
    # M used downstream when the cycle set is empty and the band is arbitrary
    arbitrary_M: float = 5.0

    def __post_init__(self):
        if not self.nu > 0.5:
            raise ValidationError("nu", "nu must exceed 1/2")
        if not 0 < self.theta0 < math.pi / 2:
            raise ValidationError("theta0", "theta0 must lie in (0, pi/2)")
        if not self.R0 > 0:
            raise ValidationError("R0", "R0 must be positive")
        if self.sector_policy not in ("fail", "warn"):
            raise ValidationError("sector_policy", "must be 'fail' or 'warn'")
        if not self.arbitrary_M > 0:
            raise ValidationError("arbitrary_M", "must be positive")

    def potential(self, branch: int) -> PotentialSpec:
        if branch == 1:
            return self.V1
        if branch == 2:
            return self.V2
        raise ValueError(f"branch must be 1 or 2, got {branch}")

    @property
    def scan_halfwidth(self) -> float:
        specs = (self.V1, self.V2, self.W.r0, self.W.r1)
        s = min(sp.min_slope for sp in specs)
        c = max(sp.max_abs_center for sp in specs)
        return max(10.0, 40.0 / s + c, 2.0 * self.R0)

    def replace(self, **changes) -> "ProblemConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass
class Clause:
    name: str
    passed: bool
    detail: str = ""
    value: object = None
    warning: bool = False

    def to_dict(self) -> dict:
        d = {"name": self.name, "passed": self.passed, "detail": self.detail}
        if self.value is not None:
            d["value"] = self.value
        if self.warning:
            d["warning"] = True
        return d


@dataclass
class HypothesisReport:
    clauses: list[Clause] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "", value=None, warning=False):
        self.clauses.append(Clause(name, bool(passed), detail, value, warning))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    def __getitem__(self, name: str) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Clause]:
        return [c for c in self.clauses if not c.passed]

    def extend(self, other: "HypothesisReport") -> "HypothesisReport":
        self.clauses.extend(other.clauses)
        return self

    def to_dict(self) -> dict:
        return {"passed": self.passed, "clauses": [c.to_dict() for c in self.clauses]}


def check_hypotheses_a1_a2(config: ProblemConfig) -> HypothesisReport:
    """Evaluate the analyticity, limit and boundedness clauses.

    Non-trapping is decided by :func:`resonance_atlas.phase_graph.check_nontrapping`
    and its verdict is copied into the report.
    """
    from .phase_graph import check_nontrapping

    rep = HypothesisReport()
    named = (("V1", config.V1), ("V2", config.V2), ("r0", config.W.r0), ("r1", config.W.r1))
    for name, spec in named:
        ok, why = spec.dilation_admissible(config.theta0, config.R0)
        if not ok and config.sector_policy == "warn":
            rep.add(f"A1.analytic.{name}", True, "warning: " + why, warning=True)
        else:
            rep.add(f"A1.analytic.{name}", ok, why or "holomorphic with limits in the sector")
    for j, spec in ((1, config.V1), (2, config.V2)):
        lo, hi = spec.limits_at_infinity()
        finite = math.isfinite(lo) and math.isfinite(hi)
        rep.add(f"A1.limits.V{j}", finite, f"v{j}^- = {lo}, v{j}^+ = {hi}", [lo, hi])
        for side, v in (("-", lo), ("+", hi)):
            ok = finite and abs(v - config.E0) > config.tolerances.root_tol
            detail = "" if ok else f"v{j}^{side} = E0"
            rep.add(f"A1.limit_neq_E0.V{j}{side}", ok, detail, v)
    for j, spec in ((1, config.V1), (2, config.V2)):
        if not spec.bounded:
            rep.add(f"A1.nontrapping.V{j}", False, "potential has no limits at infinity")
            continue
        try:
            ok, witness = check_nontrapping(spec, config.E0, config.tolerances.root_tol,
                                            config.scan_halfwidth)
        except Exception as exc:  # degenerate turning points count as failure here
            ok, witness = False, str(exc)
        rep.add(f"A1.nontrapping.V{j}", ok, witness or "non-trapping (see phase_graph)")
    for name, spec in (("r0", config.W.r0), ("r1", config.W.r1)):
        rep.add(f"A2.bounded.{name}", spec.bounded, "bounded term library")
    return rep


def as_potential(obj) -> PotentialSpec:
    if isinstance(obj, PotentialSpec):
        return obj
    if isinstance(obj, AnalyticTerm):
        return PotentialSpec.of(obj)
    if isinstance(obj, Sequence):
        return PotentialSpec.from_records(obj)
    raise TypeError(f"cannot interpret {obj!r} as a potential")
