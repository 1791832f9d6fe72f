"""Pruebas de app/services/model_store_service.py."""

import struct

import numpy as np
import pytest

from app.models.kernels import KernelFamily, KernelSpec
from app.models.solver import ChainSpec, SolverConfig, Task
from app.services.errors import ModelFormatError, ModelNotFoundError
from app.services.model_store_service import ModelRegistry, load_model, save_model
from app.services.solver_service import KrrSolverService
from conftest import smooth_regression, two_blobs


@pytest.fixture
def trained_model():
    kernel = KernelSpec(family=KernelFamily.POLYNOMIAL, gamma=0.5, offset=1.0, degree=3)
    config = SolverConfig(lam=0.2, chain=ChainSpec(feature_map="tensorsketch", s1=32), seed=3)
    return KrrSolverService().train(smooth_regression(25, seed=2), kernel, config).model


class TestModelFile:
    def test_round_trip_is_bitwise(self, tmp_path, trained_model):
        path = tmp_path / "m.krrm"
        save_model(path, trained_model)
        loaded = load_model(path)
        assert loaded.kernel == trained_model.kernel
        assert loaded.lam == trained_model.lam
        assert loaded.iterations == trained_model.iterations
        np.testing.assert_array_equal(loaded.X, trained_model.X)
        np.testing.assert_array_equal(loaded.coef, trained_model.coef)

        service = KrrSolverService()
        Xq = np.random.default_rng(0).standard_normal((5, 2))
        assert np.array_equal(service.predict(loaded, Xq), service.predict(trained_model, Xq))

    def test_header_layout(self, tmp_path, trained_model):
        path = tmp_path / "m.krrm"
        save_model(path, trained_model)
        data = path.read_bytes()
        magic, version, meta_len = struct.unpack_from("<4sII", data)
        assert magic == b"KRRM" and version == 1
        n, d = trained_model.X.shape
        assert len(data) == 12 + meta_len + 8 * (n * d + n * trained_model.coef.shape[1])

    def test_classification_label_map_survives(self, tmp_path):
        config = SolverConfig(task=Task.CLASSIFY, lam=0.1, chain=ChainSpec(s1=16))
        model = KrrSolverService().train(two_blobs(20), KernelSpec(), config).model
        path = tmp_path / "c.krrm"
        save_model(path, model)
        assert load_model(path).label_map == model.label_map

    def test_truncated_payload(self, tmp_path, trained_model):
        path = tmp_path / "m.krrm"
        save_model(path, trained_model)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.krrm"
        path.write_bytes(b"NOPE" + struct.pack("<II", 1, 0))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_unknown_version(self, tmp_path, trained_model):
        path = tmp_path / "m.krrm"
        save_model(path, trained_model)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 2)
        path.write_bytes(bytes(data))
        with pytest.raises(ModelFormatError):
            load_model(path)


class TestRegistry:
    def test_register_and_list(self, trained_model):
        registry = ModelRegistry()
        registry.register("b", trained_model)
        registry.register("a", trained_model)
        assert registry.list_models() == ["a", "b"]
        assert registry.get("a") is trained_model

    def test_missing(self):
        with pytest.raises(ModelNotFoundError):
            ModelRegistry().get("nada")
