import numpy as np
import pytest

from ocsparse.bayes import (
    blue_cond_expectation,
    gaussian_cond_expectation,
    gaussian_log_likelihood,
    unknown_log_likelihood,
)
from ocsparse.model import DenseMatrix, PartialDFT, SubsampledToeplitz
from ocsparse.recursive import (
    DegenerateExtensionError,
    gaussian_chain_expectation,
    gaussian_chain_init,
    gaussian_extend,
    modulate_observation,
    unknown_chain_init,
    unknown_extend,
    window_observation,
)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_dense(rng, M, N):
    return DenseMatrix(random_complex(rng, M, N))


class TestGaussianChain:
    def test_first_extension_from_empty(self):
        rng = np.random.default_rng(0)
        m = random_dense(rng, 5, 8)
        y = random_complex(rng, 5)
        sx2, sn2 = 1.5, 0.3
        state = gaussian_chain_init(y, m, sx2, sn2)
        assert state.log_likelihood == pytest.approx(-np.vdot(y, y).real / sn2)
        new = gaussian_extend(state, 2, y)
        # from identity: omega is the column itself, xi the scalar gain
        omega = new.omegas[-1]
        assert np.abs(omega - m.column(2)).max() < 1e-12
        assert new.xis[-1] == pytest.approx(1.0 / (1.0 + sx2 / sn2), rel=1e-12)

    def test_duplicate_index_rejected(self):
        rng = np.random.default_rng(1)
        m = random_dense(rng, 4, 6)
        y = random_complex(rng, 4)
        state = gaussian_extend(gaussian_chain_init(y, m, 1.0, 0.1), 3, y)
        with pytest.raises(ValueError):
            gaussian_extend(state, 3, y)

    def test_det_recursion_matches_slogdet(self):
        rng = np.random.default_rng(2)
        m = random_dense(rng, 6, 9)
        y = random_complex(rng, 6)
        sx2, sn2 = 1.0, 0.2
        state = gaussian_chain_init(y, m, sx2, sn2)
        for i in (1, 4, 7):
            prev_logdet = state.logdet
            state = gaussian_extend(state, i, y)
            # one step multiplies the determinant by 1/xi
            assert state.logdet == pytest.approx(
                prev_logdet - np.log(state.xis[-1]), rel=1e-12
            )
            cols = m.columns(state.support)
            sigma = np.eye(6) + (sx2 / sn2) * cols @ cols.conj().T
            _, ref = np.linalg.slogdet(sigma)
            assert state.logdet == pytest.approx(ref, rel=1e-10)

    def test_xi_in_unit_interval_and_logdet_grows(self):
        rng = np.random.default_rng(3)
        m = random_dense(rng, 8, 12)
        y = random_complex(rng, 8)
        state = gaussian_chain_init(y, m, 2.0, 0.5)
        prev = 0.0
        for i in range(0, 12, 3):
            state = gaussian_extend(state, i, y)
            assert 0 < state.xis[-1] <= 1
            assert state.logdet >= prev - 1e-12
            prev = state.logdet

    def test_chain_matches_direct_kernels(self):
        rng = np.random.default_rng(4)
        sx2, sn2 = 1.2, 0.15
        for _ in range(40):
            m = random_dense(rng, 6, 10)
            y = random_complex(rng, 6)
            order = rng.permutation(10)[:3]
            state = gaussian_chain_init(y, m, sx2, sn2)
            for depth, i in enumerate(order, start=1):
                state = gaussian_extend(state, int(i), y)
                sup = tuple(sorted(int(j) for j in order[:depth]))
                ref = gaussian_log_likelihood(y, sup, m, sx2, sn2)
                assert state.log_likelihood == pytest.approx(ref, rel=1e-9)

    def test_expectation_matches_direct(self):
        rng = np.random.default_rng(5)
        m = random_dense(rng, 6, 10)
        sx2, sn2 = 0.8, 0.1
        y = random_complex(rng, 6)
        state = gaussian_chain_init(y, m, sx2, sn2)
        for i in (9, 2, 5):
            state = gaussian_extend(state, i, y)
        got = gaussian_chain_expectation(state, y, sx2, sn2)
        ref = gaussian_cond_expectation(y, tuple(state.support), m, sx2, sn2)
        assert np.abs(got - ref).max() < 1e-9

    def test_zero_observation_expectation(self):
        rng = np.random.default_rng(6)
        m = random_dense(rng, 4, 6)
        y = np.zeros(4, dtype=np.complex128)
        state = gaussian_extend(gaussian_chain_init(y, m, 1.0, 0.1), 1, y)
        assert np.abs(gaussian_chain_expectation(state, y, 1.0, 0.1)).max() == 0


class TestUnknownChain:
    def test_first_column_state(self):
        rng = np.random.default_rng(7)
        m = random_dense(rng, 5, 8)
        y = random_complex(rng, 5)
        state = unknown_extend(unknown_chain_init(y, m, 0.2), 4, y)
        assert state.lam[0, 0] == pytest.approx(1.0, rel=1e-12)
        assert state.xis[-1] == pytest.approx(1.0, rel=1e-12)

    def test_chain_matches_direct_kernels(self):
        rng = np.random.default_rng(8)
        sn2 = 0.15
        for _ in range(40):
            m = random_dense(rng, 6, 10)
            y = random_complex(rng, 6)
            order = rng.permutation(10)[:3]
            state = unknown_chain_init(y, m, sn2)
            for depth, i in enumerate(order, start=1):
                state = unknown_extend(state, int(i), y)
                sup = tuple(sorted(int(j) for j in order[:depth]))
                ref = unknown_log_likelihood(y, sup, m, sn2)
                assert state.log_likelihood == pytest.approx(
                    ref, rel=1e-9, abs=1e-9
                )
                e_ref = blue_cond_expectation(y, state.support, m)
                assert np.abs(state.expectation - e_ref).max() < 1e-9

    def test_lambda_reproduces_gram_inverse(self):
        rng = np.random.default_rng(9)
        m = random_dense(rng, 8, 12)
        y = random_complex(rng, 8)
        state = unknown_chain_init(y, m, 0.1)
        for i in (0, 3, 6, 9):
            state = unknown_extend(state, i, y)
        cols = m.columns(state.support)
        gram_inv = np.linalg.inv(cols.conj().T @ cols)
        assert np.abs(state.lam - gram_inv).max() < 1e-8

    def test_degenerate_extension_raises(self):
        raw = np.ones((3, 4), dtype=np.complex128)
        raw[:, 1] = raw[:, 0]
        raw[:, 2] = [1, 2, 3]
        raw[:, 3] = [0, 1, -1]
        m = DenseMatrix(raw)
        y = np.array([1.0, 2.0, 3.0], dtype=np.complex128)
        state = unknown_extend(unknown_chain_init(y, m, 0.1), 0, y)
        with pytest.raises(DegenerateExtensionError):
            unknown_extend(state, 1, y)

    def test_independent_extension_keeps_positive_schur(self):
        rng = np.random.default_rng(10)
        m = random_dense(rng, 6, 9)
        y = random_complex(rng, 6)
        state = unknown_chain_init(y, m, 0.3)
        for i in (1, 4, 8):
            state = unknown_extend(state, i, y)
            assert state.xis[-1] > 0


class TestModulation:
    def test_zero_shift_is_identity(self):
        rng = np.random.default_rng(11)
        m = PartialDFT(32, 8, Z=2)
        y = random_complex(rng, 8)
        assert np.abs(modulate_observation(y, 0, m) - y).max() == 0

    def test_preserves_modulus(self):
        rng = np.random.default_rng(12)
        m = PartialDFT(32, 8, Z=2)
        y = random_complex(rng, 8)
        out = modulate_observation(y, 7, m)
        assert np.abs(np.abs(out) - np.abs(y)).max() < 1e-12

    def test_wrong_variant_rejected(self):
        with pytest.raises(TypeError):
            modulate_observation(np.zeros(4), 1, DenseMatrix(np.eye(4)))

    def test_exact_column_transport(self):
        # modulating by delta turns column k+delta into column k
        m = PartialDFT(64, 16, Z=5)
        col_shifted = m.column(20)
        got = modulate_observation(col_shifted, 8, m)
        assert np.abs(got - m.column(12)).max() < 1e-12

    @pytest.mark.parametrize("kind", ["gaussian", "unknown"])
    def test_likelihood_transport(self, kind):
        rng = np.random.default_rng(13)
        m = PartialDFT(64, 16, Z=3)
        sx2, sn2 = 1.0, 0.2
        for _ in range(25):
            start = int(rng.integers(0, 30))
            delta = int(rng.integers(1, 25))
            sup = tuple(range(start, start + 3))
            shifted = tuple(k + delta for k in sup)
            y = random_complex(rng, 16)
            y_mod = modulate_observation(y, delta, m)
            if kind == "gaussian":
                a = gaussian_log_likelihood(y, shifted, m, sx2, sn2)
                b = gaussian_log_likelihood(y_mod, sup, m, sx2, sn2)
            else:
                a = unknown_log_likelihood(y, shifted, m, sn2)
                b = unknown_log_likelihood(y_mod, sup, m, sn2)
            assert b == pytest.approx(a, rel=1e-9, abs=1e-9)

    def test_expectation_transport(self):
        rng = np.random.default_rng(14)
        m = PartialDFT(64, 16, Z=3)
        sx2, sn2 = 1.0, 0.2
        y = random_complex(rng, 16)
        sup = (10, 11, 12)
        shifted = (17, 18, 19)
        y_mod = modulate_observation(y, 7, m)
        e_shifted = gaussian_cond_expectation(y, shifted, m, sx2, sn2)
        e_ref = gaussian_cond_expectation(y_mod, sup, m, sx2, sn2)
        assert np.abs(e_shifted - e_ref).max() < 1e-9


class TestWindowing:
    def _matrix(self):
        rng = np.random.default_rng(15)
        h = random_complex(rng, 3)
        return SubsampledToeplitz(32, h, 2), rng

    def test_full_cover_is_identity(self):
        m, rng = self._matrix()
        y = random_complex(rng, m.M)
        out = window_observation(y, np.arange(32), m)
        assert np.abs(out - y).max() == 0

    def test_disjoint_windows_orthogonal(self):
        m, _ = self._matrix()
        w1 = m.row_support_mask(range(0, 6))
        w2 = m.row_support_mask(range(20, 26))
        assert not np.logical_and(w1, w2).any()

    def test_wrong_variant_rejected(self):
        with pytest.raises(TypeError):
            window_observation(np.zeros(4), [0, 1], PartialDFT(8, 4))

    def test_quadratic_form_splits(self):
        # windowed rows carry the whole signal part; off-window rows add
        # plain energy, for both likelihood families
        m, rng = self._matrix()
        y = random_complex(rng, m.M)
        cluster = list(range(8, 14))
        y_w = window_observation(y, cluster, m)
        off_energy = np.linalg.norm(y) ** 2 - np.linalg.norm(y_w) ** 2
        sx2, sn2 = 1.0, 0.2
        sup = (9, 11, 12)
        full = gaussian_log_likelihood(y, sup, m, sx2, sn2)
        win = gaussian_log_likelihood(y_w, sup, m, sx2, sn2)
        assert full == pytest.approx(win - off_energy / sn2, rel=1e-10)
        full_u = unknown_log_likelihood(y, sup, m, sn2)
        win_u = unknown_log_likelihood(y_w, sup, m, sn2)
        assert full_u == pytest.approx(win_u - off_energy / sn2, rel=1e-10)

    def test_shift_transport_on_interior_supports(self):
        # supports shifted by a multiple of d see identical geometry: the
        # determinant is invariant and the windowed likelihood transports
        # under the matching row roll
        rng = np.random.default_rng(16)
        h = random_complex(rng, 3)
        m = SubsampledToeplitz(40, h, 2)
        y = random_complex(rng, m.M)
        sup = (10, 11, 13)
        delta = 6
        shifted = tuple(k + delta for k in sup)
        sx2, sn2 = 1.0, 0.25

        def logdet_of(sup):
            cols = m.columns(sup)
            sigma = np.eye(m.M) + (sx2 / sn2) * cols @ cols.conj().T
            return np.linalg.slogdet(sigma)[1]

        assert logdet_of(sup) == pytest.approx(logdet_of(shifted), rel=1e-10)

        rolled = np.roll(y, -delta // 2)
        a = unknown_log_likelihood(y, shifted, m, sn2)
        b = unknown_log_likelihood(rolled, sup, m, sn2)
        assert a == pytest.approx(b, rel=1e-10)
        ag = gaussian_log_likelihood(y, shifted, m, sx2, sn2)
        bg = gaussian_log_likelihood(rolled, sup, m, sx2, sn2)
        assert ag == pytest.approx(bg, rel=1e-10)
