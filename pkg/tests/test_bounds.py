#!/usr/bin/env python
"""
Tail bound constant tests

Closed-form values of phi, psi, A, B, C, the tail levels of both noise regimes
and the normalized Taylor remainder.

Usage:
    pytest tests/test_bounds.py -v
"""

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lslasso.bounds import (LslConstants, bounded_constants, bounded_threshold,
                            coefficient_bound_m1, coefficient_bound_m1_gaussian,
                            gaussian_constants, gaussian_threshold, gaussian_weights,
                            mle_constants, penalty_level_terms, phi_psi, taylor_remainder,
                            xi1_threshold_bounded, xi1_threshold_gaussian)
from lslasso.enums import LinkFn, Regime
from lslasso.errors import DomainError
from lslasso.losses import LossFamily

logger = logging.getLogger(__name__)


def _ones_constants():
    """m = 1 constants of the all-ones 4 x 3 design with d = 1"""
    return bounded_constants(np.ones((4, 3)), np.ones(3), 1.0, 0.25, 6.0, 1)


class TestPhiPsi:
    """Remainder bound phi and Lipschitz constant psi"""

    @pytest.mark.bounds
    def test_m1(self):
        phi, psi = phi_psi(1.0, 0.25, 6.0, 1)
        assert phi == pytest.approx(0.75)
        assert psi == pytest.approx(0.125)

    @pytest.mark.bounds
    def test_m0(self):
        phi, psi = phi_psi(1.3133, 0.7311, 6.0, 0)
        assert phi == pytest.approx(2.6266)
        assert psi == pytest.approx(0.7311)

    @pytest.mark.bounds
    def test_m2(self):
        phi, psi = phi_psi(0.1, 0.2, 1.0, 2)
        assert phi == pytest.approx(min(0.1, 0.2 / 6.0))
        assert psi == pytest.approx(0.1)

    @pytest.mark.bounds
    def test_negative_input(self):
        with pytest.raises(DomainError):
            phi_psi(-1.0, 0.25, 6.0, 1)


class TestBoundedRegime:
    """Constants and levels of the bounded-derivative regime"""

    @pytest.fixture(autouse=True)
    def _setup(self):
        self.c = _ones_constants()

    @pytest.mark.bounds
    def test_constants(self):
        assert self.c.A == pytest.approx(12.0)
        assert self.c.B == pytest.approx(1.5)
        assert self.c.C == pytest.approx(6.0)
        assert self.c.regime == Regime.BOUNDED

    @pytest.mark.bounds
    def test_threshold(self):
        log_term = math.log(3.0 / 0.05)
        expected = (12.0 * math.sqrt(2.0 * math.log(6.0)) + 1.5 * math.sqrt(2.0 * log_term)
                    + 6.0 * log_term)
        assert bounded_threshold(self.c, 3, 0.05) == pytest.approx(expected, rel=1e-12)
        assert bounded_threshold(self.c, 3, 0.05) == pytest.approx(51.57, abs=0.01)

    @pytest.mark.bounds
    def test_xi1_threshold(self):
        assert xi1_threshold_bounded(1.0, 100, 8, 0.05) == pytest.approx(
            math.sqrt(200.0 * math.log(320.0)), rel=1e-12)

    @pytest.mark.bounds
    def test_coefficient_bound(self):
        M = coefficient_bound_m1(self.c, 1.0, 4, 3, 0.05, 0.05)
        expected = bounded_threshold(self.c, 3, 0.05) + xi1_threshold_bounded(1.0, 4, 3, 0.05)
        assert M == pytest.approx(expected, rel=1e-12)

    @pytest.mark.bounds
    def test_probability_pair(self):
        with pytest.raises(DomainError):
            coefficient_bound_m1(self.c, 1.0, 4, 3, 0.6, 0.5)
        with pytest.raises(DomainError):
            bounded_threshold(self.c, 3, 0.0)

    @pytest.mark.bounds
    def test_design_stack_averages(self):
        stack = np.stack([np.ones((4, 3)), 2.0 * np.ones((4, 3))])
        c = bounded_constants(stack, 2.0 * np.ones(3), 1.0, 0.25, 6.0, 1)
        # U = X / d is 0.5 for the first draw and 1 for the second
        assert c.A == pytest.approx(8.0 * 0.125 * 6.0 * (1.0 + 2.0) / 2.0)
        assert c.B == pytest.approx(0.75 * math.sqrt((1.0 + 4.0) / 2.0))

    @pytest.mark.bounds
    def test_penalty_terms(self):
        M1, M2 = penalty_level_terms(self.c, 1.0, 4, 3, 0.05, 0.05)
        log_term = math.log(3.0 / 0.05)
        assert M1 == pytest.approx(12.0 * math.sqrt(2.0 * math.log(6.0))
                                   + 1.5 * math.sqrt(2.0 * log_term) + 6.0 * log_term)
        assert M2 == pytest.approx(xi1_threshold_bounded(1.0, 4, 3, 0.05))

    @pytest.mark.bounds
    def test_mle_constants(self):
        c = mle_constants(np.ones((4, 3)), 1.0, 1.0, 0.25, 6.0)
        assert c.A == pytest.approx(4.0 * 0.25 * 6.0 * 2.0)
        assert c.B == pytest.approx(0.125 * 6.0 * 2.0)
        assert c.phi == pytest.approx(0.75)
        assert c.C == pytest.approx(6.0)


class TestGaussianRegime:
    """Constants and levels of the Gaussian-noise regime"""

    @pytest.mark.bounds
    def test_threshold(self):
        c = LslConstants(m=1, phi=0.0, psi=0.0, A=2.0, B=1.0, C=None, regime=Regime.GAUSSIAN,
                         sigma0=1.0)
        expected = 2.0 * math.sqrt(math.log(8.0)) + math.sqrt(2.0 * math.log(80.0))
        assert gaussian_threshold(c, 4, 1, 0.05) == pytest.approx(expected, rel=1e-12)
        assert gaussian_threshold(c, 4, 1, 0.05) == pytest.approx(5.8439, rel=1e-3)

    @pytest.mark.bounds
    def test_xi1_threshold(self):
        assert xi1_threshold_gaussian(8, 0.05) == pytest.approx(3.1859, abs=1e-4)

    @pytest.mark.bounds
    def test_weights(self, seeded_gaussian_design):
        w = gaussian_weights(seeded_gaussian_design, 2.0, 4.0)
        assert np.allclose(w, np.linalg.norm(seeded_gaussian_design, axis=0))
        half = gaussian_weights(seeded_gaussian_design, 2.0, 1.0)
        assert np.allclose(half, 0.5 * w)

    @pytest.mark.bounds
    def test_variance_above_sigma0(self, seeded_gaussian_design):
        with pytest.raises(DomainError):
            gaussian_weights(seeded_gaussian_design, 1.0, 1.5)

    @pytest.mark.bounds
    def test_constants_and_level(self, seeded_gaussian_design):
        d = np.max(np.abs(seeded_gaussian_design), axis=0)
        c = gaussian_constants(seeded_gaussian_design, d, 1.0, 1.0, 0.25, math.sqrt(3.0) / 18.0,
                               6.0, 1)
        assert c.C is None
        assert np.allclose(c.lambda_weights, np.maximum(c.w, d))
        M = coefficient_bound_m1_gaussian(c, 0.25, 6, 0.05, 0.05)
        expected = gaussian_threshold(c, 6, 1, 0.05) + 0.25 * xi1_threshold_gaussian(6, 0.05)
        assert M == pytest.approx(expected, rel=1e-12)
        assert c.to_dict()["regime"] == "gaussian"


class TestTaylorRemainder:
    """Normalized remainder of the m-th order expansion"""

    @pytest.mark.bounds
    def test_logistic_value(self, logistic_unit):
        assert taylor_remainder(logistic_unit, 0.0, 0.5, 1.0, 1) == pytest.approx(0.06186,
                                                                                  abs=1e-5)

    @pytest.mark.bounds
    def test_zero_increment(self, logistic_unit):
        assert taylor_remainder(logistic_unit, 0.3, 0.0, 0.0, 1) == 0.0

    @pytest.mark.bounds
    def test_square_loss_uses_link(self):
        family = LossFamily.gaussian_square(LinkFn.IDENTITY, 1.0, (-3.0, 3.0))
        assert taylor_remainder(family, 0.4, 0.7, 0.0, 1) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.bounds
    def test_order_out_of_range(self, logistic_unit):
        with pytest.raises(DomainError):
            taylor_remainder(logistic_unit, 0.0, 0.5, 1.0, 3)

    @pytest.mark.bounds
    def test_remainder_within_phi(self, logistic_unit):
        c, t = np.meshgrid(np.linspace(-1.0, 1.0, 81), np.linspace(-2.0, 2.0, 81))
        mask = np.abs(c + t) <= 1.0
        for y in (0.0, 1.0):
            for m in (0, 1):
                values = taylor_remainder(logistic_unit, c[mask], t[mask], y, m)
                F_m = math.log1p(math.e) if m == 0 else 1.0 / (1.0 + math.exp(-1.0))
                F_next = 1.0 / (1.0 + math.exp(-1.0)) if m == 0 else 0.25
                phi, _ = phi_psi(F_m, F_next, 4.0, m)
                assert np.max(np.abs(values)) <= phi + 1e-12


@pytest.mark.bounds
@settings(max_examples=100, deadline=None)
@given(q1=st.floats(0.001, 0.3), q2=st.floats(0.001, 0.3))
def test_threshold_decreases_in_q(q1, q2):
    c = _ones_constants()
    lo, hi = sorted((q1, q2))
    assert bounded_threshold(c, 3, lo) >= bounded_threshold(c, 3, hi)


@pytest.mark.bounds
@settings(max_examples=100, deadline=None)
@given(scale=st.floats(1e-3, 1e3), m=st.sampled_from([0, 1, 2]),
       seed=st.integers(0, 2 ** 32 - 1))
def test_constants_invariant_under_column_rescaling(scale, m, seed):
    gen = np.random.default_rng(seed)
    X = gen.uniform(-1.0, 1.0, size=(12, 3))
    d = np.max(np.abs(X), axis=0)
    base = bounded_constants(X, d, 0.7, 0.25, 2.0, m)
    scaled = bounded_constants(scale * X, scale * d, 0.7, 0.25, 2.0, m)
    for key in ("phi", "psi", "A", "B", "C"):
        assert getattr(scaled, key) == pytest.approx(getattr(base, key), rel=1e-12)
