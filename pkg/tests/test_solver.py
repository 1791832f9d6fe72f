"""Pruebas de app/services/solver_service.py."""

import numpy as np
import pytest

from app.models.kernels import KernelFamily, KernelSpec
from app.models.model_file import LabelMap
from app.models.solver import ChainSpec, SolverConfig, Task
from app.services.errors import BreakdownDetectedError, DimensionMismatchError, UnknownLabelError
from app.services.kernels import Dataset, gram_matrix, kernel_eval
from app.services.preconditioner import build_preconditioner
from app.services.solver_service import (
    KrrSolverService,
    encode_labels,
    energy_norm_error,
    pcg_solve,
    rlsc_decode,
    rlsc_encode,
)
from conftest import make_spd, smooth_regression, two_blobs


@pytest.fixture
def service():
    return KrrSolverService()


class TestPcg:
    def test_diagonal_two_iterations(self):
        a = np.diag([3.0, 2.0])
        c, report = pcg_solve(lambda v: a @ v, np.array([3.0, 2.0]), tau=1e-12)
        np.testing.assert_allclose(c, [1.0, 1.0], atol=1e-12)
        assert report.converged
        assert report.iterations <= 2

    def test_exact_preconditioner_one_iteration(self, rng):
        a = make_spd(rng, 20, cond=100.0)
        inv = np.linalg.inv(a)
        y = rng.standard_normal(20)
        c, report = pcg_solve(lambda v: a @ v, y, preconditioner=lambda v: inv @ v, tau=1e-8)
        assert report.iterations == 1
        np.testing.assert_allclose(c, np.linalg.solve(a, y), rtol=1e-8)

    def test_matches_direct_solve(self, rng):
        a = make_spd(rng, 50, cond=1e3)
        y = rng.standard_normal(50)
        c, report = pcg_solve(lambda v: a @ v, y, tau=1e-12, max_iter=500)
        exact = np.linalg.solve(a, y)
        assert report.converged
        assert np.linalg.norm(c - exact) / np.linalg.norm(exact) <= 1e-8

    def test_zero_rhs(self):
        c, report = pcg_solve(lambda v: v, np.zeros(4))
        np.testing.assert_array_equal(c, np.zeros(4))
        assert report.iterations == 0 and report.converged

    def test_distinct_eigenvalues_bound_iterations(self, rng):
        for k in range(1, 6):
            q, _ = np.linalg.qr(rng.standard_normal((50, 50)))
            values = np.repeat(np.arange(1.0, k + 1.0), 50 // k + 1)[:50]
            a = (q * values) @ q.T
            _, report = pcg_solve(lambda v: a @ v, rng.standard_normal(50), tau=1e-10)
            assert report.converged
            assert report.iterations <= k

    def test_energy_error_non_increasing(self, rng):
        a = make_spd(rng, 40, cond=1e4)
        y = rng.standard_normal(40)
        exact = np.linalg.solve(a, y)
        errors = []
        pcg_solve(
            lambda v: a @ v, y, tau=1e-14, max_iter=40,
            callback=lambda c: errors.append(energy_norm_error(c, exact, a, 0.0)),
        )
        assert all(b <= a_ + 1e-12 for a_, b in zip(errors, errors[1:]))

    def test_not_converged_is_reported(self, rng):
        a = make_spd(rng, 30, cond=1e6)
        _, report = pcg_solve(lambda v: a @ v, rng.standard_normal(30), tau=1e-14, max_iter=2)
        assert not report.converged
        assert report.iterations == 2
        assert len(report.residual_history) == 2

    def test_breakdown_on_indefinite(self):
        a = np.diag([1.0, -1.0])
        with pytest.raises(BreakdownDetectedError):
            pcg_solve(lambda v: a @ v, np.array([1.0, 1.0]))


class TestEnergyNorm:
    def test_zero_for_equal(self, rng):
        c = rng.standard_normal(5)
        assert energy_norm_error(c, c, np.eye(5), 1.0) == 0.0

    def test_euclidean_when_k_zero(self):
        assert energy_norm_error([3.0, 4.0], [0.0, 0.0], np.zeros((2, 2)), 1.0) == pytest.approx(5.0)

    def test_quadratic_form(self, rng):
        K = make_spd(rng, 8)
        c, ref = rng.standard_normal(8), rng.standard_normal(8)
        diff = c - ref
        expected = np.sqrt(diff @ (K + 0.3 * np.eye(8)) @ diff)
        assert energy_norm_error(c, ref, K, 0.3) == pytest.approx(expected, rel=1e-12)


class TestRlsc:
    def test_encode_two_classes(self):
        np.testing.assert_array_equal(rlsc_encode([0, 1], 2), [[1.0, -1.0], [-1.0, 1.0]])

    def test_decode_of_encode(self):
        labels = np.array([2, 0, 1, 1])
        np.testing.assert_array_equal(rlsc_decode(rlsc_encode(labels, 3)), labels)

    def test_tie_goes_to_lowest_index(self):
        assert rlsc_decode([[0.2, 0.2]])[0] == 0

    def test_requires_two_classes(self):
        with pytest.raises(ValueError):
            rlsc_encode([0, 0], 1)

    def test_decode_through_label_map(self):
        label_map = LabelMap.from_labels(np.array([-1.0, 1.0]))
        np.testing.assert_array_equal(rlsc_decode([[0.1, 0.9], [2.0, -1.0]], label_map), [1.0, -1.0])
        with pytest.raises(UnknownLabelError):
            rlsc_decode([[0.1, 0.2, 0.3]], label_map)

    def test_unknown_label(self):
        with pytest.raises(UnknownLabelError):
            encode_labels(LabelMap(classes=[0.0, 1.0]), [0.0, 2.0])


class TestTrain:
    def test_single_point(self, service, gaussian_kernel):
        dataset = Dataset(np.array([[0.5, -0.5]]), np.array([[2.0]]))
        config = SolverConfig(lam=1.0, chain=ChainSpec(s1=4))
        result = service.train(dataset, gaussian_kernel, config)
        np.testing.assert_allclose(result.model.coef, [[1.0]], atol=1e-10)

    def test_large_lambda(self, service, gaussian_kernel):
        dataset = smooth_regression(30, seed=1)
        result = service.train(dataset, gaussian_kernel, SolverConfig(lam=1e6, chain=ChainSpec(s1=16)))
        np.testing.assert_allclose(result.model.coef * 1e6, dataset.y, atol=1e-3 * np.abs(dataset.y).max())

    def test_matches_direct_solve(self, service):
        kernel = KernelSpec(family=KernelFamily.GAUSSIAN, sigma=1.0)
        dataset = smooth_regression(200, seed=2)
        config = SolverConfig(lam=0.5, tau=1e-10, chain=ChainSpec(s1=64))
        result = service.train(dataset, kernel, config)
        K = gram_matrix(kernel, dataset.X)
        exact = np.linalg.solve(K + 0.5 * np.eye(200), dataset.y)
        assert result.report.converged
        assert result.report.preconditioned and result.report.sketch_size == 64
        err = energy_norm_error(result.model.coef[:, 0], exact[:, 0], K, 0.5)
        ref = energy_norm_error(exact[:, 0], np.zeros(200), K, 0.5)
        assert err <= 1e-6 * ref

    def test_polynomial_multi_level(self, service, poly_kernel):
        dataset = smooth_regression(100, seed=3)
        config = SolverConfig(
            lam=1.0, tau=1e-8,
            chain=ChainSpec(feature_map="tensorsketch", s1=256, s2=64, s3=32),
        )
        result = service.train(dataset, poly_kernel, config)
        K = gram_matrix(poly_kernel, dataset.X)
        exact = np.linalg.solve(K + np.eye(100), dataset.y)
        assert result.report.converged
        np.testing.assert_allclose(result.model.coef, exact, rtol=1e-5, atol=1e-6)

    def test_unpreconditioned(self, service, gaussian_kernel):
        dataset = smooth_regression(50, seed=4)
        result = service.train(dataset, gaussian_kernel, SolverConfig(lam=1.0, use_preconditioner=False))
        assert not result.report.preconditioned
        assert result.report.sketch_size is None
        assert result.report.converged

    def test_adaptive_records_history(self, service):
        kernel = KernelSpec(family=KernelFamily.GAUSSIAN, sigma=2.0)
        dataset = smooth_regression(120, seed=5)
        config = SolverConfig(lam=1.0, adaptive=True, s0=8, s_max=120, chain=ChainSpec(s1=8))
        result = service.train(dataset, kernel, config)
        assert result.quality_history
        assert result.report.quality_passed is not None
        assert result.report.converged

    def test_classification_targets(self, service, gaussian_kernel):
        dataset = two_blobs(60, seed=6)
        config = SolverConfig(task=Task.CLASSIFY, lam=0.1, chain=ChainSpec(s1=32))
        result = service.train(dataset, gaussian_kernel, config)
        assert result.model.coef.shape == (60, 2)
        assert result.model.label_map.classes == [-1.0, 1.0]
        assert len(result.report.per_rhs) == 2
        predicted = service.classify(result.model, dataset.X)
        assert np.mean(predicted != dataset.y[:, 0]) <= 0.05

    def test_single_class_rejected(self, service, gaussian_kernel):
        dataset = Dataset(np.ones((3, 1)), np.ones((3, 1)))
        with pytest.raises(ValueError):
            service.train(dataset, gaussian_kernel, SolverConfig(task=Task.CLASSIFY, lam=1.0))

    def test_same_seed_same_model(self, service, gaussian_kernel):
        dataset = smooth_regression(40, seed=7)
        config = SolverConfig(lam=0.1, seed=5, chain=ChainSpec(s1=16))
        a = service.train(dataset, gaussian_kernel, config).model.coef
        b = service.train(dataset, gaussian_kernel, config).model.coef
        np.testing.assert_array_equal(a, b)


class TestPredict:
    def test_matches_pairwise_loop(self, service, poly_kernel):
        dataset = smooth_regression(25, seed=8)
        model = service.train(dataset, poly_kernel, SolverConfig(
            lam=1.0, chain=ChainSpec(feature_map="tensorsketch", s1=32),
        )).model
        Xq = np.random.default_rng(0).standard_normal((7, 2))
        naive = np.array([
            [sum(model.coef[i, 0] * kernel_eval(poly_kernel, xq, model.X[i]) for i in range(25))]
            for xq in Xq
        ])
        np.testing.assert_allclose(service.predict(model, Xq), naive, rtol=1e-10, atol=1e-12)

    def test_single_support_point(self, service, gaussian_kernel):
        dataset = Dataset(np.array([[1.0, 1.0]]), np.array([[3.0]]))
        model = service.train(dataset, gaussian_kernel, SolverConfig(lam=0.5, chain=ChainSpec(s1=4))).model
        assert service.predict(model, dataset.X)[0, 0] == pytest.approx(model.coef[0, 0])

    def test_dimension_mismatch(self, service, gaussian_kernel):
        dataset = smooth_regression(10, seed=9)
        model = service.train(dataset, gaussian_kernel, SolverConfig(lam=1.0, chain=ChainSpec(s1=4))).model
        with pytest.raises(DimensionMismatchError):
            service.predict(model, np.ones((2, 5)))


class TestRandomFeaturesBaseline:
    def test_matches_dense_inverse(self, service):
        kernel = KernelSpec(family=KernelFamily.GAUSSIAN, sigma=1.0)
        dataset = smooth_regression(80, seed=10)
        config = SolverConfig(lam=0.3, chain=ChainSpec(s1=40), seed=2)
        model = service.train_random_features_baseline(dataset, kernel, config)
        Z = model.chain.apply(dataset.X)
        expected = np.linalg.inv(Z.T @ Z + 0.3 * np.eye(40)) @ Z.T @ dataset.y
        np.testing.assert_allclose(model.weights, expected, rtol=1e-9, atol=1e-10)

    def test_deterministic(self, service, gaussian_kernel):
        dataset = smooth_regression(30, seed=11)
        config = SolverConfig(lam=0.1, chain=ChainSpec(s1=20), seed=4)
        a = service.train_random_features_baseline(dataset, gaussian_kernel, config)
        b = service.train_random_features_baseline(dataset, gaussian_kernel, config)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(service.predict_baseline(a, dataset.X), service.predict_baseline(b, dataset.X))

    def test_classification(self, service, gaussian_kernel):
        dataset = two_blobs(80, seed=12)
        config = SolverConfig(task=Task.CLASSIFY, lam=0.1, chain=ChainSpec(s1=64))
        model = service.train_random_features_baseline(dataset, gaussian_kernel, config)
        assert np.mean(service.classify_baseline(model, dataset.X) != dataset.y[:, 0]) <= 0.1
