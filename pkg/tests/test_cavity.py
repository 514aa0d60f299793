import math

import numpy as np
import pytest
from scipy import integrate
from scipy.linalg import expm

from entweb.hilbert import StateVector, norm
from entweb.seeding.cavity import (E0, G00, P11, CavityParams, UnsupportedRegimeError,
                                   alpha_beta, doublet_propagator, evolve_conditional,
                                   excitation_weight, excited_norm, node_generator,
                                   node_layout, node_propagator)

P = CavityParams()


def test_regime_validation():
    with pytest.raises(UnsupportedRegimeError):
        CavityParams(g=1.0, kappa=1.0)
    with pytest.raises(UnsupportedRegimeError):
        CavityParams(g=0.0, kappa=1.0)
    assert P.omega_plus < 0 and P.omega_minus < P.omega_plus


def test_initial_amplitudes():
    a, b = alpha_beta(0.0, P)
    assert abs(a) < 1e-15
    assert b == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("g,kappa", [(0.5, 1.0), (0.2, 1.0), (0.9, 1.0), (1.0, 3.0)])
def test_emission_integral_is_one(g, kappa):
    p = CavityParams(g, kappa)
    f = lambda t: 2 * p.kappa * abs(alpha_beta(t, p)[0]) ** 2
    total, _ = integrate.quad(f, 0, 60 / p.slow_rate, limit=400, epsabs=1e-13)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_doublet_closed_form_matches_matrix_exponential():
    m = np.array([[0, 0.5j * P.g], [0.5j * P.g, -P.kappa]])
    for t in (0.0, 0.3, 2.0, 17.5):
        np.testing.assert_allclose(doublet_propagator(t, P), expm(m * t), atol=1e-13)


def test_node_propagator_is_exp_of_generator():
    h = node_generator(P)
    for t in (0.1, 1.3, 9.0):
        np.testing.assert_allclose(node_propagator(t, P), expm(-1j * h * t), atol=1e-12)


def test_single_node_matches_closed_forms():
    start = StateVector.basis(node_layout(1), [E0])
    ts = np.linspace(0, 40 / P.kappa, 161)
    a, b = alpha_beta(ts, P)
    for k, t in enumerate(ts):
        s = evolve_conditional(start, t, P)
        assert abs(s.amplitudes[P11] - a[k]) < 1e-8
        assert abs(s.amplitudes[E0] - b[k]) < 1e-8


def test_norm_decays_to_nothing():
    start = StateVector.basis(node_layout(1), [E0])
    # the slow rate |omega_+| ~ 0.067 kappa sets the time scale, not 1/kappa
    s = evolve_conditional(start, 40 / P.kappa, P)
    assert norm(s) ** 2 == pytest.approx(excited_norm(40 / P.kappa, P), rel=1e-9)
    assert norm(s) ** 2 == pytest.approx(5.85e-3, rel=1e-2)
    late = evolve_conditional(start, 40 / P.slow_rate, P)
    assert norm(late) ** 2 <= 1e-6


def test_excited_norm_monotone():
    d = excited_norm(np.linspace(0, 50, 2001), P)
    assert np.all(np.diff(d) <= 1e-15)


def test_ground_sector_untouched():
    g = StateVector.basis(node_layout(2), [G00, G00])
    out = evolve_conditional(g, 5.0, P)
    np.testing.assert_allclose(out.amplitudes, g.amplitudes)
    assert excitation_weight(out) == 0


def test_norm_non_increasing_multi_node():
    rng = np.random.default_rng(0)
    lay = node_layout(2)
    s = StateVector(lay, rng.normal(size=lay.dim) + 1j * rng.normal(size=lay.dim)).normalized()
    prev = 1.0
    for _ in range(10):
        s = evolve_conditional(s, 0.4, P)
        assert norm(s) <= prev + 1e-14
        prev = norm(s)
    with pytest.raises(ValueError):
        evolve_conditional(s, -1.0, P)


def test_norm_below_one_after_decay():
    start = StateVector.basis(node_layout(1), [E0])
    # by quadrature, the weight not yet emitted equals |alpha|^2 + |beta|^2
    t = 1.7
    emitted, _ = integrate.quad(lambda s: 2 * P.kappa * abs(alpha_beta(s, P)[0]) ** 2, 0, t)
    left = norm(evolve_conditional(start, t, P)) ** 2
    assert left < 1
    assert left == pytest.approx(1 - emitted, abs=1e-9)
    assert math.isclose(left, excited_norm(t, P), rel_tol=1e-12)
