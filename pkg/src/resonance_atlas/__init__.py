"""Resonance-free bands for 2x2 semiclassical Schrodinger systems with crossing levels.

Modules
-------
potential
    Analytic term library, problem configuration and hypothesis checks.
phase_graph
    Characteristic sets, the oriented phase graph, directed cycles and the band width.
semiclassics
    Crossing constants, transfer matrices, cycle amplitudes and candidate roots.
spectral
    Complex-dilation discretization, eigenvalues and the band test.
cli
    Config-driven pipeline and report emission.
"""

__version__ = "0.1.0"

from .potential import AnalyticTerm, InteractionSpec, PotentialSpec, ProblemConfig, Tolerances
from .phase_graph import band_width, build_phase_graph, enumerate_directed_cycles

__all__ = ["AnalyticTerm", "InteractionSpec", "PotentialSpec", "ProblemConfig", "Tolerances",
           "band_width", "build_phase_graph", "enumerate_directed_cycles", "__version__"]
