"""Kernel backends agree with each other and with the term-walk oracle."""

import numpy as np
import pytest

from partcl import kernels
from partcl.model import Configuration
from partcl.problems import random_small_instance


def _random_codes(model, n, seed):
    rng = np.random.default_rng(seed)
    sizes = np.array([len(v.domain) for v in model.variables])
    return rng.integers(0, sizes, size=(n, model.num_vars)).astype(np.int64)


@pytest.mark.skipif(not kernels.NUMBA_AVAILABLE, reason="numba not active")
class TestBackendEquivalence:
    def test_phi_bit_identical(self, grid, training, hotel):
        for model in (grid, training, hotel):
            cm = model.compiled
            codes = _random_codes(model, 500, seed=3)
            fa = cm.features
            args = (codes, fa.f_const, fa.trans, fa.thresh,
                    fa.u_feat, fa.u_var, fa.u_off, fa.u_tab,
                    fa.t_feat, fa.t_coef, fa.t_off,
                    fa.l_var, fa.l_code, fa.l_neg)
            a = kernels._phi_numpy(*args)
            b = kernels._phi_numba(*args)
            assert np.array_equal(a, b)

    def test_feasible_identical(self, training, hotel):
        for model in (training, hotel):
            cm = model.compiled
            codes = _random_codes(model, 500, seed=5)
            ca = cm.constraints
            args = (codes, ca.c_const, ca.c_op, ca.c_bound,
                    ca.cc_off, ca.cc_var, ca.cc_code, ca.cc_neg,
                    ca.ce_off, ca.ce_var, ca.ce_toff, ca.ce_tab)
            a = kernels._feasible_numpy(*args)
            b = kernels._feasible_numba(*args)
            assert np.array_equal(a, b)


class TestOracleAgreement:
    def test_phi_matches_term_walk(self, grid, training, hotel):
        # compiled batch evaluation equals the direct expression walk
        for model in (grid, training, hotel):
            cm = model.compiled
            codes = _random_codes(model, 50, seed=11)
            phi = cm.phi(codes)
            for i in range(10):
                x = Configuration(cm.decode(codes[i]))
                ref = model.feature_vector(x)
                np.testing.assert_allclose(phi[i], ref, atol=1e-12)

    def test_feasible_matches_constraint_walk(self, training, hotel):
        for model in (training, hotel):
            cm = model.compiled
            codes = _random_codes(model, 200, seed=13)
            ok = cm.feasible(codes)
            for i in range(40):
                x = Configuration(cm.decode(codes[i]))
                ref, _violated = model.check_feasible(x)
                assert ok[i] == ref

    def test_random_instances_agree(self):
        for seed in range(30):
            model = random_small_instance(seed)
            cm = model.compiled
            codes = _random_codes(model, 30, seed=seed)
            phi = cm.phi(codes)
            ok = cm.feasible(codes)
            for i in range(codes.shape[0]):
                x = Configuration(cm.decode(codes[i]))
                np.testing.assert_allclose(phi[i], model.feature_vector(x),
                                           atol=1e-12)
                assert ok[i] == model.check_feasible(x)[0]
