import math

import numpy as np
import pytest

from fraclap.graph import build_graph, laplacian_apply, mu_inner
from fraclap.spectral import decompose, heat_apply, heat_kernel

INV_SQRT2 = 1.0 / math.sqrt(2.0)


class TestDecompose:
    def test_p2_closed_form(self, p2):
        sd = decompose(p2)
        assert np.allclose(sd.lambdas, [0.0, 2.0], atol=1e-12)
        assert np.allclose(sd.phis[:, 0], [INV_SQRT2, INV_SQRT2], atol=1e-10)
        assert np.allclose(sd.phis[:, 1], [INV_SQRT2, -INV_SQRT2], atol=1e-10)

    def test_k3_spectrum(self, k3):
        sd = decompose(k3)
        assert np.allclose(sd.lambdas, [0.0, 3.0, 3.0], atol=1e-10)

    def test_weight_scaling(self):
        g = build_graph([("x1", 1.0), ("x2", 1.0)], [("x1", "x2", 3.0)])
        sd = decompose(g)
        assert np.allclose(sd.lambdas, [0.0, 6.0], atol=1e-12)

    def test_zero_mode_is_normalized_constant(self, all_graphs):
        for g in all_graphs.values():
            sd = decompose(g)
            assert sd.lambdas[0] == 0.0
            assert np.all(sd.lambdas[1:] > 0)
            expected = 1.0 / math.sqrt(g.volume)
            assert np.max(np.abs(sd.phis[:, 0] - expected)) < 1e-10

    def test_mu_orthonormality(self, all_graphs):
        for g in all_graphs.values():
            sd = decompose(g)
            gram = sd.phis.T @ (g.mu[:, None] * sd.phis)
            assert np.max(np.abs(gram - np.eye(g.n))) < 1e-10

    def test_eigen_residual(self, all_graphs):
        for g in all_graphs.values():
            sd = decompose(g)
            for i in range(g.n):
                r = laplacian_apply(g, sd.phis[:, i]) - sd.lambdas[i] * sd.phis[:, i]
                assert np.max(np.abs(r)) <= 1e-8 * (1.0 + sd.lambdas[i])

    def test_sign_convention(self, all_graphs):
        for g in all_graphs.values():
            sd = decompose(g)
            for i in range(g.n):
                col = sd.phis[:, i]
                nz = np.nonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
                assert col[nz[0]] > 0


class TestHeatKernel:
    def test_p2_closed_form(self, p2):
        sd = decompose(p2)
        p = heat_kernel(sd, 0.5)
        expected = (1.0 - math.exp(-1.0)) / 2.0
        assert p[0, 1] == pytest.approx(expected, abs=1e-12)

    def test_time_zero_is_identity_kernel(self, all_graphs):
        for g in all_graphs.values():
            sd = decompose(g)
            p = heat_kernel(sd, 0.0)
            assert np.max(np.abs(p - np.diag(1.0 / g.mu))) < 1e-9

    def test_equilibrium(self, all_graphs):
        for g in all_graphs.values():
            sd = decompose(g)
            p = heat_kernel(sd, 1e4)
            assert np.max(np.abs(p - 1.0 / g.volume)) < 1e-9

    def test_symmetry_exact(self, er20):
        sd = decompose(er20)
        for t in (0.01, 0.3, 2.0):
            p = heat_kernel(sd, t)
            assert np.array_equal(p, p.T)

    def test_mass_conservation(self, all_graphs):
        for g in all_graphs.values():
            sd = decompose(g)
            for t in (0.01, 0.1, 1.0, 10.0):
                sums = heat_kernel(sd, t) @ g.mu
                assert np.max(np.abs(sums - 1.0)) < 1e-9

    def test_negative_time_rejected(self, p2):
        with pytest.raises(ValueError):
            heat_kernel(decompose(p2), -0.1)


class TestHeatApply:
    def test_constants_preserved(self, k3):
        sd = decompose(k3)
        u = np.full(3, 2.5)
        for t in (0.0, 0.5, 20.0):
            assert np.allclose(heat_apply(sd, t, u), u, atol=1e-12)

    def test_eigenmode_decay(self, p2):
        sd = decompose(p2)
        u = np.array([1.0, -1.0])
        out = heat_apply(sd, 1.0, u)
        assert np.allclose(out, math.exp(-2.0) * u, atol=1e-12)

    def test_time_zero_exact(self, er20):
        sd = decompose(er20)
        rng = np.random.default_rng(8)
        u = rng.standard_normal(er20.n)
        assert np.array_equal(heat_apply(sd, 0.0, u), u)

    def test_semigroup_law(self, all_graphs):
        rng = np.random.default_rng(9)
        for g in all_graphs.values():
            sd = decompose(g)
            u = rng.standard_normal(g.n)
            for t1, t2 in ((0.01, 0.1), (0.3, 0.7), (1.0, 2.0)):
                two = heat_apply(sd, t1, heat_apply(sd, t2, u))
                one = heat_apply(sd, t1 + t2, u)
                assert np.max(np.abs(two - one)) < 1e-9

    def test_matches_kernel_form(self, path10):
        sd = decompose(path10)
        rng = np.random.default_rng(10)
        u = rng.standard_normal(path10.n)
        t = 0.7
        via_kernel = heat_kernel(sd, t) @ (path10.mu * u)
        assert np.max(np.abs(heat_apply(sd, t, u) - via_kernel)) < 1e-11

    def test_contraction_in_mu_norm(self, er20):
        sd = decompose(er20)
        rng = np.random.default_rng(11)
        u = rng.standard_normal(er20.n)
        n0 = mu_inner(er20, u, u)
        evolved = heat_apply(sd, 1.0, u)
        n1 = mu_inner(er20, evolved, evolved)
        assert n1 <= n0 + 1e-12
