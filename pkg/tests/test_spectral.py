import math
import warnings

import numpy as np
import pytest

from resonance_atlas.cases import case_N, case_T
from resonance_atlas.errors import GridTooCoarse, StripViolation
from resonance_atlas.potential import AnalyticTerm, InteractionSpec, PotentialSpec, ProblemConfig
from resonance_atlas.spectral import (Box, DilationContour, Disk, band_verdict,
                                      build_dilated_operator, classify_resonances,
                                      compute_spectrum, coupled_thresholds, imag_floor,
                                      verify_band_empty)

pytestmark = pytest.mark.filterwarnings("ignore::resonance_atlas.errors.GridTooCoarse")

ZERO = PotentialSpec()


def free_config(r0=ZERO):
    return ProblemConfig(ZERO, ZERO, InteractionSpec(r0), E0=0.5)


def test_decoupled_real_blocks(cfg_T):
    cfg = cfg_T.replace(W=InteractionSpec())
    op = build_dilated_operator(cfg, DilationContour(0.0), 0.05, N=300)
    assert op.block(1, 2).nnz == 0 or abs(op.block(1, 2)).max() == 0
    B = op.block(1, 1).toarray()
    assert np.all(np.imag(B) == 0)
    assert np.count_nonzero(np.triu(B, 3)) == 0  # pentadiagonal band
    assert np.array_equal(B, B.T)


def test_symmetry(cfg_T):
    r1 = PotentialSpec.of(AnalyticTerm("sech2", 0.7))
    cfg = cfg_T.replace(W=InteractionSpec(cfg_T.W.r0, r1))
    A = build_dilated_operator(cfg, DilationContour(0.0), 0.05, N=300).matrix.toarray()
    assert np.max(np.abs(A - A.conj().T)) < 1e-14
    Ad = build_dilated_operator(cfg, DilationContour(0.3), 0.05, N=300).matrix.toarray()
    assert np.max(np.abs(Ad - Ad.T)) < 1e-14  # complex symmetric


def test_preconditions(cfg_T):
    with pytest.raises(ValueError):
        build_dilated_operator(cfg_T, DilationContour(0.3), 0.05, N=100)
    with pytest.raises(ValueError, match="too small"):
        build_dilated_operator(cfg_T, DilationContour(0.3), 0.05, L=4.0, N=400)
    bad = cfg_T.replace(V1=PotentialSpec.of(AnalyticTerm("tanh", 1.0, 1.0, 2.0)))
    with pytest.raises(StripViolation):
        build_dilated_operator(bad, DilationContour(0.7), 0.05, N=400)


def test_grid_too_coarse_warning(cfg_T):
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        build_dilated_operator(cfg_T, DilationContour(0.3), 0.01, N=400)
    assert any(issubclass(w.category, GridTooCoarse) for w in rec)


def test_free_modes_on_rotated_ray():
    theta, h, L, N = 0.3, 0.05, 12.0, 400
    op = build_dilated_operator(free_config(), DilationContour(theta), h, L, N)
    vals = np.linalg.eigvals(op.block(1, 1).toarray())
    low = vals[np.argsort(np.abs(vals))][:50]
    assert np.max(np.abs(np.angle(low) + 2 * theta)) < 1e-3
    # the rotated operator is the undeformed one times e^(-2 i theta)
    op0 = build_dilated_operator(free_config(), DilationContour(0.0), h, L, N)
    base = np.sort(np.linalg.eigvalsh(op0.block(1, 1).toarray()))[:50]
    assert np.allclose(np.sort(np.abs(low)), base, rtol=1e-12)
    k = np.arange(1, 51)
    exact = (h * k * math.pi / (2 * L + 2 * op.spacing)) ** 2
    assert np.allclose(base, exact, rtol=2e-2)


def test_self_adjoint_limit_real():
    well = PotentialSpec.of(AnalyticTerm("gaussian", -1.0, 0.5))
    cfg = ProblemConfig(well, PotentialSpec.of(AnalyticTerm("constant", 1.0)),
                        InteractionSpec(PotentialSpec.of(AnalyticTerm("constant", 0.3)),
                                        PotentialSpec.of(AnalyticTerm("sech2", 0.5))), E0=-0.5)
    op = build_dilated_operator(cfg, DilationContour(0.0), 0.1, L=12, N=300)
    s = compute_spectrum(op, Box(-1.1, 0.2, -0.1, 0.1), method="dense")
    assert len(s) > 0
    assert np.max(np.abs(s.values.imag)) < 1e-10


def test_window_idempotence_and_sorting(cfg_T):
    op = build_dilated_operator(cfg_T, DilationContour(0.3), 0.05, N=400)
    w = Disk(0.5, 0.2)
    a = compute_spectrum(op, w)
    b = compute_spectrum(op, w)
    assert np.array_equal(a.values, b.values)
    order = np.lexsort((a.values.imag, a.values.real))
    assert np.array_equal(order, np.arange(len(a)))


def test_dense_and_sparse_agree(cfg_T):
    op = build_dilated_operator(cfg_T, DilationContour(0.3), 0.05, N=300)
    w = Disk(0.5 - 0.05j, 0.1)
    d = compute_spectrum(op, w, method="dense")
    s = compute_spectrum(op, w, method="sparse")
    assert len(d) == len(s) > 0
    assert np.max(np.abs(d.values - s.values)) < 1e-9
    assert np.max(s.residuals) < 1e-9


def test_case_T_window_count_fixture(cfg_T):
    op = build_dilated_operator(cfg_T, DilationContour(0.3), 0.05)
    s = compute_spectrum(op, Disk(0.5, 0.2))
    assert len(s) == 4


def test_coupled_thresholds(cfg_N):
    th = coupled_thresholds(cfg_N, 0.05)
    assert len(th) == 4
    assert th[0] == pytest.approx(-0.95 - math.sqrt(0.005), abs=1e-14)
    assert th[-1] == pytest.approx(0.95 + math.sqrt(0.005), abs=1e-14)
    free = coupled_thresholds(free_config(), 0.05)
    assert free == [0.0]


def test_free_operator_has_no_resonances():
    res = classify_resonances(free_config(), 0.05, Disk(0.5 - 0.1j, 0.08), N=400)
    assert res.count("resonance") == 0


def flat_coupled_config():
    # constant channels with constant coupling: continua are exact rays from the
    # coupled thresholds
    V1 = PotentialSpec()
    V2 = PotentialSpec.of(AnalyticTerm("constant", 1.2))
    return ProblemConfig(V1, V2, InteractionSpec(PotentialSpec.of(AnalyticTerm("constant", 1.0))),
                         E0=0.5)


def test_continuum_rotates_with_theta():
    cfg = flat_coupled_config()
    h = 0.05
    v = coupled_thresholds(cfg, h)[0]
    r = 0.05
    res = classify_resonances(cfg, h, Disk(v + r * np.exp(-0.6j), 0.03), N=800)
    cont = [z for z, c in zip(res.eigenvalues, res.classes) if c == "continuum"]
    assert len(cont) > 3 and res.count("resonance") == 0
    op = build_dilated_operator(cfg, DilationContour(0.35), h, N=800)
    rot = compute_spectrum(op, Disk(v + r * np.exp(-0.7j), 0.03)).values
    for z in cont:
        # |z - v| is preserved and the angle turns by -2 (theta' - theta)
        pred = v + (z - v) * np.exp(-0.1j)
        assert np.min(np.abs(rot - pred)) < 1e-3 * abs(z - v) + 1e-6


def test_asymmetric_continuum_not_resonant(cfg_N):
    h = 0.05
    v = coupled_thresholds(cfg_N, h)[-1]
    res = classify_resonances(cfg_N, h, Disk(v + 0.05 * np.exp(-0.6j), 0.05), N=800)
    assert len(res.eigenvalues) > 0 and res.count("resonance") == 0


@pytest.mark.slow
def test_case_T_resonances_stable_under_refinement(cfg_T):
    h = 0.05
    a = classify_resonances(cfg_T, h, Disk(0.5, 0.15), N=1600)
    b = classify_resonances(cfg_T, h, Disk(0.5, 0.15), N=2400)
    ra, rb = a.resonances(), b.resonances()
    assert len(ra) == len(rb) == 3
    for z in ra:
        assert min(abs(z - w) for w in rb) < 1e-5


def test_imag_floor():
    assert imag_floor(0.05, 0.015) == pytest.approx(max(1e-8, 10 * 0.015 ** 4 / 0.0025))
    assert imag_floor(0.5, 1e-4) == 1e-8


def test_band_verdict_small_c(cfg_T):
    v = band_verdict(cfg_T, 0.05, 1 / 3.296733089, c=1e-3, N=400)
    assert v.empty and v.margin == math.inf
    with pytest.raises(ValueError):
        verify_band_empty(cfg_T, [0.05], 0.3, c=1.5)
    with pytest.raises(ValueError):
        band_verdict(cfg_T, 1.5, 0.3)
