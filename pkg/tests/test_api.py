"""Pruebas de la API HTTP con TestClient."""

import numpy as np
import pytest
from fastapi.testclient import TestClient

from app.main import create_app, model_paths_from_env
from app.models.kernels import KernelSpec
from app.models.solver import ChainSpec, SolverConfig
from app.services.model_store_service import get_model_registry, save_model
from app.services.solver_service import KrrSolverService
from conftest import smooth_regression


@pytest.fixture
def client():
    with TestClient(create_app()) as test_client:
        yield test_client


def _train_body(name, task="regress"):
    dataset = smooth_regression(30, seed=0)
    targets = dataset.y[:, 0].tolist() if task == "regress" else [1.0 if v > 0.5 else -1.0 for v in dataset.y[:, 0]]
    return {
        "name": name,
        "inputs": dataset.X.tolist(),
        "targets": targets,
        "kernel": {"family": "gaussian", "sigma": 1.0},
        "config": {"task": task, "lam": 0.5, "chain": {"s1": 16}},
    }


class TestMisc:
    def test_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"

    def test_index(self, client):
        body = client.get("/").json()
        assert body["title"] == "SketchKRR"
        assert "/statdim" in body["endpoints"].values()


class TestTrainAndPredict:
    def test_train_registers_model(self, client):
        response = client.post("/train", json=_train_body("api-reg"))
        assert response.status_code == 200
        assert response.json()["per_rhs"][0]["converged"] is True
        assert "api-reg" in client.get("/models").json()

        predict = client.post("/models/api-reg/predict", json={"inputs": [[0.0, 0.0], [1.0, -1.0]]})
        assert predict.status_code == 200
        body = predict.json()
        assert len(body["scores"]) == 2
        assert body["labels"] is None

    def test_classification_returns_labels(self, client):
        assert client.post("/train", json=_train_body("api-cls", task="classify")).status_code == 200
        body = client.post("/models/api-cls/predict", json={"inputs": [[0.0, 0.0]]}).json()
        assert body["labels"][0] in (-1.0, 1.0)

    def test_unknown_model_is_404(self, client):
        response = client.post("/models/nada/predict", json={"inputs": [[0.0]]})
        assert response.status_code == 404

    def test_dimension_mismatch_is_422(self, client):
        client.post("/train", json=_train_body("api-dim"))
        response = client.post("/models/api-dim/predict", json={"inputs": [[0.0, 0.0, 0.0]]})
        assert response.status_code == 422

    def test_invalid_config_is_422(self, client):
        body = _train_body("api-bad")
        body["config"]["lam"] = -1.0
        assert client.post("/train", json=body).status_code == 422

    def test_row_count_mismatch_is_422(self, client):
        body = _train_body("api-rows")
        body["targets"] = body["targets"][:-1]
        assert client.post("/train", json=body).status_code == 422


class TestStatdim:
    def test_identity_gram(self, client):
        body = {
            "inputs": [[float(i)] for i in range(10)],
            "kernel": {"family": "gaussian", "sigma": 0.01},
            "lam": 1.0,
        }
        response = client.post("/statdim", json=body)
        assert response.status_code == 200
        assert response.json()["s_lambda"] == pytest.approx(5.0)

    def test_polynomial_sizes(self, client):
        body = {
            "inputs": np.random.default_rng(0).standard_normal((15, 2)).tolist(),
            "kernel": {"family": "polynomial", "degree": 2, "offset": 1.0},
            "lam": 1.0,
            "delta": 0.5,
        }
        report = client.post("/statdim", json=body).json()
        assert report["sketch_size_one_level"] > 0


class TestStartupRegistration:
    def test_models_from_environment(self, tmp_path, monkeypatch):
        model = KrrSolverService().train(
            smooth_regression(10, seed=1), KernelSpec(), SolverConfig(lam=1.0, chain=ChainSpec(s1=4))
        ).model
        path = tmp_path / "env-model.krrm"
        save_model(path, model)
        monkeypatch.setenv("KRR_MODEL_PATHS", f"envmodel={path}")
        assert model_paths_from_env() == {"envmodel": str(path)}
        with TestClient(create_app()) as test_client:
            assert "envmodel" in test_client.get("/models").json()
        assert get_model_registry().get("envmodel").X.shape == (10, 2)

    def test_name_defaults_to_file_stem(self, monkeypatch):
        monkeypatch.setenv("KRR_MODEL_PATHS", "/tmp/modelos/a.krrm")
        assert model_paths_from_env() == {"a": "/tmp/modelos/a.krrm"}

    def test_models_load_when_lifespan_starts(self, tmp_path):
        model = KrrSolverService().train(
            smooth_regression(12, seed=2), KernelSpec(), SolverConfig(lam=1.0, chain=ChainSpec(s1=4))
        ).model
        path = tmp_path / "arg-model.krrm"
        save_model(path, model)
        app = create_app(models={"argmodel": str(path), "roto": str(tmp_path / "no-existe.krrm")})
        assert app.router.lifespan_context is not None
        with TestClient(app) as test_client:
            names = test_client.get("/models").json()
            assert "argmodel" in names
            assert "roto" not in names
        assert get_model_registry().get("argmodel").X.shape == (12, 2)
