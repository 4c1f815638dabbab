import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magloop.engine import J, landau_integrate
from magloop.landau import (E_SHEAR, Free, Kick, KickFreeWord, NotALoopSequence, Parity,
                            PulseSequence, free_matrix, gamma_closed_form, kappa_closed_form,
                            kick_matrix, landau_center_commutator, landau_pulse_matrix,
                            landau_sequence, parity_matrix, parse_pulses, parse_word,
                            verify_word_loop, word_product, word_product_in_time_order)
from magloop.profiles import Constant, ProfileSyntaxError

nonzero = st.floats(0.05, 20).map(float) | st.floats(-20, -0.05).map(float)


def test_pulse_matrix_closed_form():
    u = landau_pulse_matrix(1.0)
    np.testing.assert_array_equal(u, [[1, 0, 0, 1], [0, -1, -1, 0], [0, 0, 1, 0], [0, 0, 0, -1]])
    np.testing.assert_allclose(landau_pulse_matrix(1e12), np.diag([1, -1, 1, -1]), atol=1e-11)
    with pytest.raises(ValueError):
        landau_pulse_matrix(0.0)


@pytest.mark.parametrize("beta", [0.3, 1.0, -0.25, -2.0])
def test_pulse_matrix_matches_integration(beta):
    np.testing.assert_allclose(landau_integrate(Constant(beta), math.pi / (2 * abs(beta))),
                               landau_pulse_matrix(beta), atol=1e-8)


@settings(max_examples=40)
@given(nonzero, nonzero)
def test_pair_product_identity(b1, b2):
    u = landau_pulse_matrix(b2) @ landau_pulse_matrix(b1)
    np.testing.assert_allclose(u, np.eye(4) + (1 / b1 - 1 / b2) * E_SHEAR, atol=1e-14 * (1 + 1 / abs(b1) + 1 / abs(b2)))
    assert np.abs(u @ J @ u.T - J).max() < 1e-13 * (1 + (1 / b1) ** 2 + (1 / b2) ** 2)


def test_shear_is_nilpotent():
    np.testing.assert_array_equal(E_SHEAR @ E_SHEAR, np.zeros((4, 4)))


@settings(max_examples=30)
@given(st.lists(nonzero, min_size=1, max_size=4), st.lists(nonzero, min_size=1, max_size=4))
def test_gamma_additive(a, b):
    left = PulseSequence(tuple(a) * 2)
    right = PulseSequence(tuple(b) * 2)
    g = landau_sequence(left + right).gamma
    scale = sum(1 / abs(x) for x in a + b) * 4
    assert g == pytest.approx(landau_sequence(left).gamma + landau_sequence(right).gamma, abs=1e-13 * scale)
    assert g == pytest.approx(gamma_closed_form(left + right), abs=1e-13 * scale)


def test_closed_pulse_sequences(fuzzy_pulses, plain_pulses):
    for seq in (fuzzy_pulses, plain_pulses):
        r = landau_sequence(seq)
        assert r.is_loop and abs(r.gamma) < 1e-12
        np.testing.assert_allclose(r.u_total, np.eye(4), atol=1e-12)
    assert fuzzy_pulses.duration == pytest.approx(7.0)
    assert plain_pulses.duration == pytest.approx(5 * math.pi)


def test_trivial_pair():
    r = landau_sequence(PulseSequence((0.8, 0.8)))
    np.testing.assert_array_equal(r.u_total, np.eye(4))
    c = landau_center_commutator(PulseSequence((0.8, 0.8)))
    assert c.kappa == pytest.approx(-1 / (2 * 0.8), abs=1e-10)


def test_fuzzy_pulses_center_coefficients(fuzzy_pulses):
    c = landau_center_commutator(fuzzy_pulses)
    assert c.kappa == pytest.approx(-31 / (14 * math.pi), abs=1e-10)
    assert kappa_closed_form(fuzzy_pulses) == pytest.approx(-31 / (14 * math.pi), abs=1e-14)
    np.testing.assert_allclose(c.cX.vector, [1, 0, 0, 41 / (14 * math.pi)], atol=1e-10)
    np.testing.assert_allclose(c.cY.vector, [0, 0, -31 / (14 * math.pi), 6 / (7 * math.pi ** 2)], atol=1e-10)


def test_plain_pulses_has_no_fuzziness(plain_pulses):
    c = landau_center_commutator(plain_pulses)
    assert abs(c.kappa) < 1e-10 and not c.vanishing


@settings(max_examples=10, deadline=None)
@given(st.lists(nonzero, min_size=1, max_size=3))
def test_kappa_closed_form_on_random_loops(half):
    # a palindrome-free loop: pairs (b, b) always close
    seq = PulseSequence(tuple(b for x in half for b in (x, x)))
    assert landau_sequence(seq).is_loop
    c = landau_center_commutator(seq, steps_per_unit=64)
    assert c.kappa == pytest.approx(kappa_closed_form(seq), abs=1e-8 * max(1, abs(kappa_closed_form(seq))))


def test_non_loop_rejected():
    with pytest.raises(NotALoopSequence):
        landau_center_commutator(PulseSequence((1.0, 2.0)))


def test_sequence_validation():
    with pytest.raises(ValueError):
        PulseSequence((1.0,))
    with pytest.raises(ValueError):
        PulseSequence((1.0, 0.0))
    s = PulseSequence.from_segments([(2.0, math.pi / 4), (-1.0, math.pi / 2)])
    assert s.betas == (2.0, -1.0)
    with pytest.raises(ValueError):
        PulseSequence.from_segments([(2.0, 1.0), (1.0, math.pi / 2)])


def test_parse_pulses():
    assert parse_pulses("landau:pi/6,pi/4,pi,pi/3").betas[0] == pytest.approx(math.pi / 6)
    for bad in ("landau:1", "harmonic:1,2", "landau:1,0"):
        with pytest.raises(ProfileSyntaxError):
            parse_pulses(bad)


def test_primitives():
    np.testing.assert_array_equal(kick_matrix(0), np.eye(2))
    np.testing.assert_array_equal(free_matrix(-1) @ free_matrix(1), np.eye(2))
    np.testing.assert_array_equal(parity_matrix() @ parity_matrix(), np.eye(2))


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_six_term_identity(tau):
    block = KickFreeWord((Free(tau), Kick(3 / tau)))
    np.testing.assert_allclose(word_product(block), [[-2, tau], [-3 / tau, 1]], atol=1e-15)
    r = verify_word_loop(block * 3)
    assert r.is_loop and r.order == 1
    np.testing.assert_allclose(r.product, np.eye(2), atol=1e-12)
    assert verify_word_loop(block).order == 3


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_order_four_and_jordan(tau):
    r = verify_word_loop(KickFreeWord((Free(tau), Kick(2 / tau))))
    assert r.order == 4
    r = verify_word_loop(KickFreeWord((Free(tau), Kick(4 / tau))))
    assert not r.is_loop and r.threshold and not r.diagonalizable
    assert np.trace(r.product) == pytest.approx(-2)


def test_operator_order_convention():
    word = KickFreeWord((Free(1.0), Kick(3.0), Parity()))
    np.testing.assert_allclose(word_product(word), free_matrix(1) @ kick_matrix(3) @ parity_matrix())
    np.testing.assert_allclose(word_product_in_time_order([Parity(), Kick(3.0), Free(1.0)]),
                               word_product(word))


def test_parse_word():
    w = parse_word("word:free(t)*kick(3/t)", t=2.0)
    assert w.items == (Free(2.0), Kick(1.5))
    assert len(parse_word("word:free(t)*kick(3/t)^3", t=1.0).items) == 6
    assert parse_word("word:parity()*free(-1)").items == (Parity(), Free(-1.0))
    for bad in ("word:", "word:spin(1)", "word:free(t)"):
        with pytest.raises((ProfileSyntaxError, ValueError)):
            parse_word(bad)
