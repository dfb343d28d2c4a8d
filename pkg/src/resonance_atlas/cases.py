"""Canonical desk configurations used throughout tests, docs and fixtures."""

from __future__ import annotations

from .potential import AnalyticTerm, InteractionSpec, PotentialSpec, ProblemConfig


def _tanh(a=1.0, s=1.0, b=0.0):
    return AnalyticTerm("tanh", a, s, b)


def unit_coupling(r1: PotentialSpec | None = None) -> InteractionSpec:
    return InteractionSpec(PotentialSpec.of(AnalyticTerm("constant", 1.0)),
                           r1 if r1 is not None else PotentialSpec())


def case_T(nu: float = 1.0, **kw) -> ProblemConfig:
    """``V1 = tanh x``, ``V2 = -tanh x``, ``E0 = 1/2``: one directed cycle."""
    return ProblemConfig(PotentialSpec.of(_tanh()), PotentialSpec.of(_tanh(-1.0)),
                         unit_coupling(), E0=0.5, nu=nu, **kw)


def case_N(nu: float = 1.0, **kw) -> ProblemConfig:
    """``V1 = tanh 2x``, ``V2 = 0.9 tanh x``, ``E0 = 1/2``: no directed cycle."""
    return ProblemConfig(PotentialSpec.of(_tanh(1.0, 2.0)), PotentialSpec.of(_tanh(0.9)),
                         unit_coupling(), E0=0.5, nu=nu, **kw)


def gap_case(nu: float = 1.0, **kw) -> ProblemConfig:
    """``V2 = V1 + 1``: levels never cross."""
    V1 = PotentialSpec.of(_tanh())
    V2 = PotentialSpec.of(_tanh(), AnalyticTerm("constant", 1.0))
    return ProblemConfig(V1, V2, unit_coupling(), E0=0.5, nu=nu, **kw)


def three_crossing_case(nu: float = 1.0, **kw) -> ProblemConfig:
    """Case T geometry with a narrow dip in ``V1`` that adds two crossings."""
    V1 = PotentialSpec.of(_tanh(), AnalyticTerm("gaussian", -3.0, 16.0, 1.0))
    V2 = PotentialSpec.of(_tanh(-1.0))
    return ProblemConfig(V1, V2, unit_coupling(), E0=0.9, nu=nu, **kw)


CASES = {"T": case_T, "N": case_N, "gap": gap_case, "three": three_crossing_case}
