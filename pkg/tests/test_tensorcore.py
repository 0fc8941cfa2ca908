import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kalab.errors import EigenPairingError, GeometryError
from kalab.tensorcore import (
    ComplexVector,
    DetPathDerivatives,
    MatrixPath,
    MetricTensor,
    PolarParts,
    bilinear,
    complexify_frame,
    det_path_derivatives,
    operator_to_two_form,
    polar_decompose_skew,
    sorted_angle_spectrum,
    two_form_to_operator,
)


def random_spd(rng, d):
    a = rng.standard_normal((d, d))
    return MetricTensor(a @ a.T + d * np.eye(d))


def random_skew_adjoint(rng, g: MetricTensor):
    d = g.dim
    b = rng.standard_normal((d, d))
    form = b - b.T
    return two_form_to_operator(form, g)


J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


class TestTwoFormToOperator:
    def test_zero_form(self):
        g = MetricTensor(np.eye(4))
        op = two_form_to_operator(np.zeros((4, 4)), g)
        assert np.abs(op.components).max() == 0.0

    def test_standard_symplectic_identity_metric(self):
        g = MetricTensor(np.eye(4))
        form = np.zeros((4, 4))
        form[0, 1] = form[2, 3] = 1.0
        form[1, 0] = form[3, 2] = -1.0
        op = two_form_to_operator(form, g)
        expected = np.block([[J2, np.zeros((2, 2))], [np.zeros((2, 2)), J2]])
        assert np.abs(op.components - expected).max() < 1e-14

    def test_random_form_random_metric_roundtrip(self):
        rng = np.random.default_rng(1)
        g = random_spd(rng, 4)
        b = rng.standard_normal((4, 4))
        form = b - b.T
        op = two_form_to_operator(form, g)
        # direct evaluation oracle: g(A e_i, e_j) must reproduce the form
        recovered = (g.components @ op.components).T
        assert np.abs(recovered - form).max() < 1e-12

    def test_rejects_non_antisymmetric(self):
        g = MetricTensor(np.eye(2))
        with pytest.raises(GeometryError):
            two_form_to_operator(np.eye(2), g)

    def test_rejects_bad_metric(self):
        with pytest.raises(GeometryError):
            MetricTensor(np.array([[1.0, 0.0], [0.0, -1.0]]))
        with pytest.raises(GeometryError):
            MetricTensor(np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestPolarDecomposition:
    def test_partial_isometry_input(self):
        g = MetricTensor(np.eye(4))
        a = two_form_to_operator(operator_to_two_form(np.kron(np.eye(2), J2), g), g)
        parts = polar_decompose_skew(a)
        assert np.abs(parts.gtilde - np.eye(4)).max() < 1e-12
        assert np.abs(parts.jomega - np.kron(np.eye(2), J2)).max() < 1e-12
        assert parts.rank == 4
        assert parts.kernel_basis.shape[1] == 0

    def test_zero_operator_is_all_kernel(self):
        g = MetricTensor(np.eye(4))
        parts = polar_decompose_skew(two_form_to_operator(np.zeros((4, 4)), g))
        assert parts.rank == 0
        assert np.abs(parts.gtilde).max() == 0.0
        assert np.abs(parts.jomega).max() == 0.0
        assert parts.kernel_basis.shape[1] == 4

    def test_scaled_block_spectrum(self):
        g = MetricTensor(np.eye(4))
        blocks = np.block(
            [[0.5 * J2, np.zeros((2, 2))], [np.zeros((2, 2)), 0.25 * J2]]
        )
        parts = polar_decompose_skew(two_form_to_operator(operator_to_two_form(blocks, g), g))
        # closed form: squaring the block operator gives diag(0.25, 0.25, 0.0625, 0.0625)
        assert np.abs(-blocks @ blocks - parts.gtilde @ parts.gtilde).max() < 1e-14
        spectrum = sorted_angle_spectrum(parts)
        assert np.abs(spectrum - np.array([0.5, 0.25])).max() < 1e-14
        assert parts.rank == 4

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=1, max_value=4), st.integers(min_value=0, max_value=2 ** 31))
    def test_reconstruction_property(self, n, seed):
        rng = np.random.default_rng(seed)
        g = random_spd(rng, 2 * n)
        a = random_skew_adjoint(rng, g)
        parts = polar_decompose_skew(a)
        scale = 1.0 + np.abs(a.components).max()
        assert np.abs(a.components - parts.gtilde @ parts.jomega).max() < 1e-10 * scale
        # complex structure on the complement, orthogonal there
        proj = parts.complement_projector
        assert np.abs(parts.jomega @ parts.jomega + proj).max() < 1e-10
        jtg = parts.jomega.T @ g.components @ parts.jomega
        assert np.abs(jtg - g.components @ proj).max() < 1e-8 * scale

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 31))
    def test_spectrum_invariant_under_orthogonal_conjugation(self, seed):
        rng = np.random.default_rng(seed)
        g = MetricTensor(np.eye(6))
        a = random_skew_adjoint(rng, g)
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        conj = two_form_to_operator(operator_to_two_form(q @ a.components @ q.T, g), g)
        s1 = sorted_angle_spectrum(polar_decompose_skew(a))
        s2 = sorted_angle_spectrum(polar_decompose_skew(conj))
        assert np.abs(s1 - s2).max() < 1e-10

    def test_unpaired_spectrum_raises(self):
        g = MetricTensor(np.eye(4))
        parts = PolarParts(
            gtilde=np.diag([0.5, 0.5, 0.3, 0.3]),
            jomega=np.kron(np.eye(2), J2),
            kernel_basis=np.zeros((4, 0)),
            rank=4,
            metric=g,
            eigenvalues=np.array([0.5, 0.4, 0.3, 0.2]),
        )
        with pytest.raises(EigenPairingError):
            sorted_angle_spectrum(parts)


class TestComplexify:
    def test_standard_pairs(self):
        g = MetricTensor(np.eye(4))
        zs = complexify_frame(np.eye(4), g)
        z1 = zs[0]
        assert abs(bilinear(g, z1.array, z1.conj().array) - 0.5) < 1e-15
        assert abs(bilinear(g, z1.array, z1.array)) < 1e-15

    def test_gram_block_structure_random_metric(self):
        rng = np.random.default_rng(3)
        g = random_spd(rng, 6)
        # build a g-orthonormal frame by feeding random vectors through Gram-Schmidt
        cols = []
        while len(cols) < 6:
            v = rng.standard_normal(6)
            for w in cols:
                v = v - (v @ g.components @ w) * w
            nrm = np.sqrt(v @ g.components @ v)
            if nrm > 1e-6:
                cols.append(v / nrm)
        frame = np.stack(cols, axis=1)
        zs = complexify_frame(frame, g)
        n = 3
        gram = np.zeros((2 * n, 2 * n), complex)
        vecs = [z.array for z in zs] + [z.conj().array for z in zs]
        for i, u in enumerate(vecs):
            for j, v in enumerate(vecs):
                gram[i, j] = bilinear(g, u, v)
        expected = np.zeros((2 * n, 2 * n))
        expected[:n, n:] = 0.5 * np.eye(n)
        expected[n:, :n] = 0.5 * np.eye(n)
        assert np.abs(gram - expected).max() < 1e-12

    def test_rejects_non_orthonormal(self):
        g = MetricTensor(np.eye(4))
        with pytest.raises(GeometryError):
            complexify_frame(2.0 * np.eye(4), g)


class TestDetPath:
    def test_constant_path(self):
        path = MatrixPath(lambda t: np.eye(3, dtype=complex), np.zeros(1), np.ones(3))
        out = det_path_derivatives(path, (np.ones(1), np.ones(1)))
        assert abs(out.first) < 1e-10
        assert abs(out.second) < 1e-8

    def test_linear_diagonal_path(self):
        path = MatrixPath(
            lambda t: np.diag([2.0 + t[0], 3.0 + t[0]]).astype(complex),
            np.zeros(1),
            np.array([2.0, 3.0]),
        )
        out = det_path_derivatives(path, (np.ones(1), np.ones(1)))
        # det = (2+t)(3+t) = 6 + 5t + t^2
        assert abs(out.first - 5.0) < 1e-9
        assert abs(out.second - 2.0) < 1e-7
        assert abs(out.laplacian - 2.0) < 1e-7

    def test_random_paths_against_scalar_fd_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            d0 = rng.uniform(0.5, 2.0, 4)
            b = rng.standard_normal((2, 4, 4)) + 1j * rng.standard_normal((2, 4, 4))
            c = rng.standard_normal((2, 2, 4, 4)) + 1j * rng.standard_normal((2, 2, 4, 4))
            c = 0.5 * (c + c.transpose(1, 0, 2, 3))

            def ev(t, d0=d0, b=b, c=c):
                m = np.diag(d0).astype(complex)
                m = m + np.einsum("k,kij->ij", t, b)
                m = m + 0.5 * np.einsum("k,l,klij->ij", t, t, c)
                return m

            path = MatrixPath(ev, np.zeros(2), d0)
            z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            out = det_path_derivatives(path, (z, w), h=1e-4)

            # oracle: order-4 central differences of the scalar determinant itself
            def det_at(t):
                return np.linalg.det(ev(t))

            h = 1e-4
            stencil = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))

            def d_scalar(f, base, k):
                e = np.zeros(2); e[k] = 1.0
                return sum(wgt * f(base + s * h * e) for s, wgt in stencil) / h

            first = sum(z[k] * d_scalar(det_at, np.zeros(2), k) for k in range(2))
            second = 0j
            for k in range(2):
                for l in range(2):
                    e = np.zeros(2); e[l] = 1.0
                    val = sum(
                        wgt * d_scalar(det_at, s * h * e, k) for s, wgt in stencil
                    ) / h
                    second += z[k] * w[l] * val
            assert abs(out.first - first) / (1 + abs(first)) < 1e-7
            assert abs(out.second - second) / (1 + abs(second)) < 1e-6

    def test_non_diagonal_base_rejected(self):
        with pytest.raises(GeometryError):
            MatrixPath(lambda t: np.ones((2, 2), complex), np.zeros(1), np.ones(2))
