import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magloop import floquet as F
from magloop.profiles import Biharmonic, Constant, Harmonic


def test_constant_pi_is_diagonalizable_threshold():
    r = F.floquet_report(Constant(math.pi))
    assert r.stability_class == "ThresholdMinus"
    np.testing.assert_allclose(r.b1, -np.eye(2), atol=1e-12)
    assert r.diagonalizable


def test_zero_field_is_free_evolution():
    r = F.floquet_report(Biharmonic(0.0, 0.0))
    np.testing.assert_allclose(r.b1, [[1, 1], [0, 1]], atol=1e-15)
    assert r.stability_class == "ThresholdPlus" and not r.diagonalizable


def test_printed_inversion_point():
    r = F.floquet_report(Biharmonic(2.40, 2.68))
    np.testing.assert_allclose(r.b1, [[-1.000, 0.369], [0.001, -1.000]], atol=5e-3)
    # the printed point is 5e-4 off the threshold; a loose band classifies it
    assert r.stability_class == "ResonantMinus"
    assert F.floquet_report(Biharmonic(2.40, 2.68), threshold_tol=1e-3).stability_class == "ThresholdMinus"
    assert F.jordan_kind(r.b1, -1.0, zero_tol=5e-3) == ("free_evolution", pytest.approx(-0.36884, abs=1e-4))


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 10))
def test_eigenvalue_product_is_one(tr):
    lp, lm = F.floquet_eigenvalues(tr)
    assert abs(lp * lm - 1) < 1e-12
    assert abs(lp * lp - tr * lp + 1) < 1e-9 * max(1, abs(lp) ** 2)
    assert abs(lp) >= abs(lm) - 1e-15


@pytest.mark.parametrize("tr,cls", [(0.0, "Stable"), (2.0, "ThresholdPlus"), (-2.0, "ThresholdMinus"),
                                    (2.5, "ResonantPlus"), (-3.0, "ResonantMinus"), (2 + 1e-7, "ThresholdPlus")])
def test_classify(tr, cls):
    assert F.classify(tr) == cls
    assert F.CLASSES[F.classify_array(np.array([tr]))[0]] == cls


def test_harmonic_slice_is_constant_field():
    m = F.scan_map("harmonic", ((-6, 6), (0, 1)), (25, 2), steps_per_unit=256)
    np.testing.assert_allclose(m.tr[:, 0], 2 * np.cos(m.p1), atol=1e-12)
    np.testing.assert_allclose(m.gamma1[:, 0], m.p1)


def test_scan_is_independent_of_workers():
    a = F.scan_map("biharmonic", ((-12, 12), (-12, 12)), 72, steps_per_unit=256, workers=1)
    b = F.scan_map("biharmonic", ((-12, 12), (-12, 12)), 72, steps_per_unit=256, workers=4)
    assert a.tr.tobytes() == b.tr.tobytes()
    assert a.b.tobytes() == b.b.tobytes()


def test_scan_matches_single_point_reports():
    m = F.scan_map("biharmonic", ((-3, 5), (1, 9)), 5, steps_per_unit=512)
    for i, j in ((0, 0), (2, 3), (4, 1)):
        r = F.floquet_report(Biharmonic(m.p1[i], m.p2[j]), steps_per_unit=512)
        assert m.tr[i, j] == pytest.approx(r.tr, abs=1e-11)


def test_resolution_validation():
    with pytest.raises(ValueError):
        F.scan_map("biharmonic", resolution=1)
    with pytest.raises(ValueError):
        F.scan_map("triharmonic")


def test_squeezing_examples():
    s = F.squeezing_axes([[2, 0], [0, 0.5]])
    assert (s.lam_plus, s.lam_minus, s.kind) == (2, 0.5, "+")
    np.testing.assert_allclose(s.axes, np.eye(2))
    s = F.squeezing_axes([[-2, -1], [-1, -1]])
    assert s.lam_plus == pytest.approx((-3 - math.sqrt(5)) / 2)
    assert s.lam_minus == pytest.approx((-3 + math.sqrt(5)) / 2)
    assert s.kind == "-"
    b = np.array([[-2, -1], [-1, -1]])
    for lam, v in zip((s.lam_plus, s.lam_minus), s.axes):
        np.testing.assert_allclose(v @ b, lam * v, atol=1e-12)
    with pytest.raises(F.DomainError):
        F.squeezing_axes(np.eye(2))


def test_dark_points_squeeze():
    m = F.scan_map("biharmonic", resolution=40, steps_per_unit=512)
    dark = np.argwhere(np.abs(m.tr) > 2.01)
    for i, j in dark[::37]:
        b = m.b[:, i, j].reshape(2, 2)
        s = F.squeezing_axes(b)
        assert abs(s.lam_plus) > 1 and abs(s.lam_plus * s.lam_minus - 1) < 1e-12


def test_branch_typing_alternates():
    m = F.scan_map("biharmonic", resolution=160, steps_per_unit=512)
    seqs = F.branch_typing(m)
    assert all(F.is_alternating(s) for s in seqs.values())
    assert max(len(s) for s in seqs.values()) >= 3


def test_separatrix_points_are_jordan():
    m = F.scan_map("biharmonic", ((0, 12), (0, 12)), 48, steps_per_unit=512)
    for sign in (-1, 1):
        pts = F.trace_separatrix("biharmonic", sign, smap=m, steps_per_unit=512)
        assert pts
        for p in pts:
            assert abs(p.tr - 2 * sign) < 1e-9
            assert min(abs(p.b1[0, 1]), abs(p.b1[1, 0])) < 1e-5
            assert p.kind in ("kick", "free_evolution")


def test_separatrix_empty_box():
    # deep inside the inner (-) zone there is no Tr = +2 crossing
    assert F.trace_separatrix("biharmonic", 1, seed_box=((2.6, 2.8), (2.9, 3.1)), resolution=4,
                              steps_per_unit=256) == []


def test_negative_tau_on_inner_branch():
    m = F.scan_map("biharmonic", resolution=96, steps_per_unit=1024)
    pts = F.trace_separatrix("biharmonic", -1, smap=m, steps_per_unit=1024)
    inner = F.innermost_branch(pts, m)
    taus = [p.value for p in inner if p.kind == "free_evolution"]
    assert min(taus) < -0.3


def test_harmonic_separatrix_uses_centered_window():
    pts = F.trace_separatrix("harmonic", -1, seed_box=((-3, 3), (-3, 3)), resolution=16, steps_per_unit=512)
    assert pts and all(p.window == "centered" for p in pts)
    assert all(min(abs(p.b1[0, 1]), abs(p.b1[1, 0])) < 1e-5 for p in pts)


def test_loop_curve_constant_family():
    for l, n in ((1, 6), (1, 4), (2, 5)):
        roots = F.find_loop_curve("harmonic", l, n, ((0.05, 0.0), (3.1, 0.0)))
        assert roots == [pytest.approx((2 * math.pi * l / n, 0.0), abs=1e-12)] or \
            2 * math.pi * l / n > 3.1
    with pytest.raises(ValueError):
        F.find_loop_curve("harmonic", 3, 3, ((0, 0), (1, 0)))


def test_loop_curve_fifteen():
    roots = F.find_loop_curve("harmonic", 5, 30, ((-math.pi / 5, -1.10), (-math.pi / 5, -1.20)))
    assert len(roots) == 1
    assert F.detect_loop(Harmonic(*roots[0]), 30, 1e-6).n == 15


def test_detect_loop_trivial():
    assert F.detect_loop(Constant(math.pi), 4).n == 1
    assert F.detect_loop(Constant(1.0), 10) is None


def test_refinement_respects_window():
    with pytest.raises(F.LoopRefinementError):
        F.refine_loop(Harmonic(math.pi / 8, -0.815), 24)  # exact loop is 0.08 away
    with pytest.raises(F.LoopRefinementError):
        F.refine_loop(Harmonic(math.pi / 8, -0.815), 23)  # rotation cannot close


def test_refined_loops(refined_loops):
    expected_shift = {"harmonic15": -0.00546, "harmonic24": 0.08084, "biharmonic6": 0.00577}
    for name, rl in refined_loops.items():
        assert rl.residual < 1e-6
        assert rl.shift == pytest.approx(expected_shift[name], abs=2e-5)
        assert F.detect_loop(rl.profile, 64).n == rl.n


def test_refine_separatrix():
    p1, p2 = F.refine_separatrix("biharmonic", 2.40, 2.68, -1)
    assert p1 == 2.40 and abs(p2 - 2.68) < 1e-3
    assert F.family_trace("biharmonic", p1, p2) == pytest.approx(-2, abs=1e-12)
