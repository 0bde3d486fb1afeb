import itertools
import math

import numpy as np
import pytest

from ocsparse.bayes import gaussian_log_likelihood, unknown_log_likelihood
from ocsparse.kernels import (
    available_backends,
    backend_name,
    best_supports,
    enumerate_subsets,
    greedy_supports,
    search_space_size,
)
from ocsparse.model import DenseMatrix


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def chain_inputs(m, y, idx, noise_var, signal_var=None):
    """Gram, correlations, base log-likelihood for a cluster search."""
    G = m.gram(idx)
    c = m.columns(idx).conj().T @ y
    base = -np.vdot(y, y).real / noise_var
    if signal_var is None:
        return G, c, base, 0.0, False
    return G, c, base, noise_var / signal_var, True


class TestSearchSpaceSize:
    def test_values(self):
        assert search_space_size(5, 2) == 5 + 10
        assert search_space_size(4, 10) == 2**4 - 1
        assert search_space_size(1, 1) == 1
        assert search_space_size(32, 2) == 32 + 32 * 31 // 2

    def test_matches_binomial_sum(self):
        for L in range(1, 12):
            for P in range(1, L + 1):
                expect = sum(math.comb(L, s) for s in range(1, P + 1))
                assert search_space_size(L, P) == expect


class TestBestSupports:
    @pytest.mark.parametrize("prior", ["gaussian", "unknown"])
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_brute_force(self, prior, seed):
        rng = np.random.default_rng(seed)
        m = DenseMatrix(random_complex(rng, 10, 14))
        y = random_complex(rng, 10)
        idx = np.array([1, 3, 4, 7, 9, 12])
        sx2, nv = 1.3, 0.2
        if prior == "gaussian":
            G, c, base, ridge, wld = chain_inputs(m, y, idx, nv, sx2)
            direct = lambda sup: gaussian_log_likelihood(y, sup, m, sx2, nv)
        else:
            G, c, base, ridge, wld = chain_inputs(m, y, idx, nv)
            direct = lambda sup: unknown_log_likelihood(y, sup, m, nv)
        max_size = 3
        ll, sup, nodes = best_supports(G, c, base, nv, ridge, wld, max_size)
        assert ll.shape == (max_size,)
        assert sup.shape == (max_size, max_size)
        for s in range(1, max_size + 1):
            best_val, best_set = -np.inf, None
            for combo in itertools.combinations(range(len(idx)), s):
                val = direct(tuple(idx[list(combo)]))
                if val > best_val:
                    best_val, best_set = val, combo
            assert ll[s - 1] == pytest.approx(best_val, rel=1e-9)
            got = tuple(sorted(int(j) for j in sup[s - 1] if j >= 0))
            assert got == best_set

    def test_node_count_is_search_space(self):
        rng = np.random.default_rng(3)
        m = DenseMatrix(random_complex(rng, 8, 12))
        y = random_complex(rng, 8)
        idx = np.arange(6)
        G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.1, 1.0)
        _, _, nodes = best_supports(G, c, base, 0.1, ridge, wld, 3)
        assert nodes == search_space_size(6, 3)

    def test_sizes_beyond_cluster_padded(self):
        rng = np.random.default_rng(4)
        m = DenseMatrix(random_complex(rng, 6, 8))
        y = random_complex(rng, 6)
        idx = np.arange(2)
        G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.1, 1.0)
        ll, sup, _ = best_supports(G, c, base, 0.1, ridge, wld, 2)
        assert np.isfinite(ll).all()
        assert (sup[1] >= 0).sum() == 2

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            best_supports(np.eye(3), np.zeros(2), 0.0, 0.1, 0.1, True, 2)
        with pytest.raises(ValueError):
            best_supports(np.eye(3), np.zeros(3), 0.0, 0.1, 0.0, True, 2)


class TestBackendAgreement:
    @pytest.mark.skipif(
        "compiled" not in available_backends(), reason="no compiled backend"
    )
    @pytest.mark.parametrize("prior", ["gaussian", "unknown"])
    def test_backends_agree(self, prior):
        rng = np.random.default_rng(5)
        for _ in range(5):
            m = DenseMatrix(random_complex(rng, 12, 20))
            y = random_complex(rng, 12)
            idx = rng.permutation(20)[:8]
            if prior == "gaussian":
                G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.2, 1.0)
            else:
                G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.2)
            res = {
                name: best_supports(
                    G, c, base, 0.2, ridge, wld, 4, backend=name
                )
                for name in ("fallback", "compiled")
            }
            ll_f, sup_f, n_f = res["fallback"]
            ll_c, sup_c, n_c = res["compiled"]
            assert n_f == n_c
            assert (sup_f == sup_c).all()
            np.testing.assert_allclose(ll_c, ll_f, atol=1e-9)

    def test_backend_name_consistent(self):
        assert backend_name() in available_backends()


class TestGreedySupports:
    def test_nested_prefixes(self):
        rng = np.random.default_rng(6)
        m = DenseMatrix(random_complex(rng, 10, 16))
        y = random_complex(rng, 10)
        idx = np.arange(8)
        G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.15, 1.0)
        ll, sup, _ = greedy_supports(G, c, base, 0.15, ridge, wld, 5)
        for s in range(1, 5):
            prev = set(int(j) for j in sup[s - 1] if j >= 0)
            cur = set(int(j) for j in sup[s] if j >= 0)
            assert prev < cur

    def test_lower_bounds_exhaustive(self):
        rng = np.random.default_rng(7)
        m = DenseMatrix(random_complex(rng, 10, 16))
        y = random_complex(rng, 10)
        idx = np.arange(9)
        for args in (((0.15, 1.0)), ((0.15,))):
            G, c, base, ridge, wld = chain_inputs(m, y, idx, *args)
            g_ll, _, g_nodes = greedy_supports(G, c, base, 0.15, ridge, wld, 4)
            e_ll, _, e_nodes = best_supports(G, c, base, 0.15, ridge, wld, 4)
            assert (g_ll <= e_ll + 1e-12).all()
            assert g_nodes <= e_nodes

    def test_exact_on_orthogonal_columns(self):
        # orthogonal cluster: the exhaustive winner of size s is the top-s
        # correlations, which greedy reproduces
        rng = np.random.default_rng(8)
        m = DenseMatrix(np.eye(8, dtype=np.complex128))
        y = random_complex(rng, 8)
        idx = np.arange(8)
        G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.1, 2.0)
        g_ll, g_sup, _ = greedy_supports(G, c, base, 0.1, ridge, wld, 4)
        e_ll, e_sup, _ = best_supports(G, c, base, 0.1, ridge, wld, 4)
        np.testing.assert_allclose(g_ll, e_ll, rtol=1e-12)
        for s in range(4):
            assert set(g_sup[s][g_sup[s] >= 0]) == set(e_sup[s][e_sup[s] >= 0])


class TestEnumerateSubsets:
    def test_counts_and_empty_set(self):
        rng = np.random.default_rng(9)
        m = DenseMatrix(random_complex(rng, 8, 10))
        y = random_complex(rng, 8)
        idx = np.arange(5)
        G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.1, 1.0)
        for P in (1, 2, 5):
            fam = enumerate_subsets(G, c, base, 0.1, ridge, wld, P)
            expect = 1 + sum(math.comb(5, s) for s in range(1, P + 1))
            assert len(fam) == expect
            sups = [f[0] for f in fam]
            assert () in sups
            assert len(set(sups)) == len(sups)
        fam = enumerate_subsets(G, c, base, 0.1, ridge, wld, None)
        assert len(fam) == 2**5

    @pytest.mark.parametrize("prior", ["gaussian", "unknown"])
    def test_values_match_direct(self, prior):
        rng = np.random.default_rng(10)
        m = DenseMatrix(random_complex(rng, 8, 12))
        y = random_complex(rng, 8)
        idx = np.array([0, 2, 5, 7, 8])
        sx2, nv = 1.0, 0.2
        if prior == "gaussian":
            G, c, base, ridge, wld = chain_inputs(m, y, idx, nv, sx2)
            direct = lambda sup: gaussian_log_likelihood(y, sup, m, sx2, nv)
        else:
            G, c, base, ridge, wld = chain_inputs(m, y, idx, nv)
            direct = lambda sup: unknown_log_likelihood(y, sup, m, nv)
        for local, ll, u in enumerate_subsets(G, c, base, nv, ridge, wld, 3):
            glob = tuple(int(idx[j]) for j in local)
            assert ll == pytest.approx(direct(glob), rel=1e-9, abs=1e-9)
            if local:
                sub = np.ix_(list(local), list(local))
                lhs = G[sub] + ridge * np.eye(len(local))
                ref = np.linalg.solve(lhs, c[list(local)])
                assert np.abs(u - ref).max() < 1e-9

    def test_degenerate_branches_pruned(self):
        # duplicated column: any unknown-prior support containing both
        # copies is rank deficient and must vanish with its subtree
        raw = np.ones((3, 4), dtype=np.complex128)
        raw[:, 1] = raw[:, 0]
        raw[:, 2] = [1, 2, -1]
        raw[:, 3] = [0, 1, 2]
        m = DenseMatrix(raw)
        y = np.array([1.0, 0.5, -0.25], dtype=np.complex128)
        idx = np.arange(3)
        G, c, base, ridge, wld = chain_inputs(m, y, idx, 0.1)
        fam = enumerate_subsets(G, c, base, 0.1, ridge, wld, None)
        sups = {f[0] for f in fam}
        assert (0, 1) not in sups
        assert (0, 1, 2) not in sups
        assert len(sups) == 8 - 2
