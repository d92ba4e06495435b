"""Behavior tests for the embedding server app, hash backend only."""

import math

import pytest
from fastapi.testclient import TestClient

from embed_server import HashBackend, ServerConfig, create_app, make_backend
from embed_server.cli import build_config


def _loaded_client(**cfg_kwargs) -> TestClient:
    cfg = ServerConfig(model=cfg_kwargs.pop("model", "hash:32"), **cfg_kwargs)
    app = create_app(cfg, auto_load=False)
    app.state.loader.load()
    return TestClient(app)


def _embed(client, texts, **extra):
    return client.post("/v1/embed", json={"texts": texts, "normalize": True, **extra})


class TestLifecycle:
    def test_health_is_503_before_load(self):
        app = create_app(ServerConfig(model="hash:8"), auto_load=False)
        resp = TestClient(app).get("/healthz")
        assert resp.status_code == 503
        assert resp.json()["status"] == "loading"

    def test_embed_is_503_before_load(self):
        app = create_app(ServerConfig(model="hash:8"), auto_load=False)
        resp = _embed(TestClient(app), ["x"])
        assert resp.status_code == 503

    def test_background_load_reaches_ready(self):
        app = create_app(ServerConfig(model="hash:8"))
        assert app.state.loader.ready.wait(timeout=5.0)
        resp = TestClient(app).get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok", "dim": 8}

    def test_failed_load_reported_on_health(self):
        app = create_app(ServerConfig(model="hash:nope"), auto_load=False)
        app.state.loader.load()
        resp = TestClient(app).get("/healthz")
        assert resp.status_code == 503
        assert resp.json()["status"] == "error"
        assert "dim must be an integer" in resp.json()["error"]


class TestEmbed:
    def test_health_dim_matches_embed_dim(self):
        client = _loaded_client(model="hash:48")
        health = client.get("/healthz").json()
        body = _embed(client, ["x"]).json()
        assert health["dim"] == body["dim"] == 48
        assert len(body["vectors"][0]) == 48

    def test_normalized_vector_has_unit_norm(self):
        body = _embed(_loaded_client(), ["hello"]).json()
        norm = math.sqrt(sum(x * x for x in body["vectors"][0]))
        assert abs(norm - 1.0) <= 1e-5

    def test_model_field_is_reported(self):
        assert _embed(_loaded_client(model="hash:32"), ["x"]).json()["model"] == "hash:32"

    def test_same_text_twice_gets_identical_vectors(self):
        body = _embed(_loaded_client(), ["ដូចគ្នា", "ដូចគ្នា"]).json()
        assert body["vectors"][0] == body["vectors"][1]

    def test_distinct_texts_get_distinct_vectors(self):
        body = _embed(_loaded_client(), ["alpha", "beta"]).json()
        assert body["vectors"][0] != body["vectors"][1]

    def test_count_matches_and_order_is_preserved(self):
        client = _loaded_client()
        texts = ["one", "two", "three", "four", "five"]
        batch = _embed(client, texts).json()["vectors"]
        assert len(batch) == len(texts)
        singles = [_embed(client, [t]).json()["vectors"][0] for t in texts]
        assert batch == singles

    def test_normalize_false_returns_raw_vectors(self):
        client = _loaded_client()
        raw = client.post("/v1/embed",
                          json={"texts": ["hello"], "normalize": False}).json()
        norm = math.sqrt(sum(x * x for x in raw["vectors"][0]))
        assert abs(norm - 1.0) > 1e-3

    def test_normalize_defaults_to_config(self):
        on = _loaded_client(normalize_default=True)
        body = on.post("/v1/embed", json={"texts": ["hello"]}).json()
        norm = math.sqrt(sum(x * x for x in body["vectors"][0]))
        assert abs(norm - 1.0) <= 1e-5
        off = _loaded_client(normalize_default=False)
        body = off.post("/v1/embed", json={"texts": ["hello"]}).json()
        norm = math.sqrt(sum(x * x for x in body["vectors"][0]))
        assert abs(norm - 1.0) > 1e-3


class _BatchSpy:
    """Wraps a backend and records the slice sizes it is handed."""

    def __init__(self, inner):
        self._inner = inner
        self.dim = inner.dim
        self.model_id = inner.model_id
        self.batch_sizes = []

    def encode(self, texts, normalize):
        self.batch_sizes.append(len(texts))
        return self._inner.encode(texts, normalize)


class TestBatching:
    def test_large_batch_is_split_at_max_batch(self):
        cfg = ServerConfig(model="hash:16", max_batch=2)
        app = create_app(cfg, auto_load=False)
        app.state.loader.load()
        spy = _BatchSpy(app.state.loader.backend)
        app.state.loader.backend = spy
        body = _embed(TestClient(app), [f"t{i}" for i in range(5)]).json()
        assert spy.batch_sizes == [2, 2, 1]
        assert len(body["vectors"]) == 5

    def test_split_result_equals_unsplit_result(self):
        texts = [f"text {i}" for i in range(7)]
        split = _embed(_loaded_client(max_batch=3), texts).json()["vectors"]
        whole = _embed(_loaded_client(max_batch=100), texts).json()["vectors"]
        assert split == whole

    def test_batch_beyond_hard_cap_is_413(self):
        client = _loaded_client(max_texts=8)
        resp = _embed(client, [f"t{i}" for i in range(9)])
        assert resp.status_code == 413
        assert _embed(client, [f"t{i}" for i in range(8)]).status_code == 200


class TestTruncation:
    def test_truncated_count_header(self):
        app = create_app(ServerConfig(model="hash:16"), auto_load=False)
        app.state.loader.backend = HashBackend(16, max_chars=10)
        client = TestClient(app)
        resp = _embed(client, ["short", "x" * 11, "y" * 40])
        assert resp.status_code == 200
        assert resp.headers["X-Truncated-Count"] == "2"
        assert _embed(client, ["short"]).headers["X-Truncated-Count"] == "0"

    def test_truncated_input_is_embedded_as_its_prefix(self):
        app = create_app(ServerConfig(model="hash:16"), auto_load=False)
        app.state.loader.backend = HashBackend(16, max_chars=10)
        body = _embed(TestClient(app), ["x" * 25, "x" * 10]).json()
        assert body["vectors"][0] == body["vectors"][1]


class TestRejections:
    @pytest.mark.parametrize("payload", [
        {"texts": [], "normalize": True},
        {"texts": ["ok", 7], "normalize": True},
        {"texts": "not a list", "normalize": True},
        {"normalize": True},
        {"texts": ["ok"], "normalize": "yes"},
    ])
    def test_bad_payloads_are_400(self, payload):
        resp = _loaded_client().post("/v1/embed", json=payload)
        assert resp.status_code == 400
        assert "error" in resp.json()

    def test_invalid_json_is_400(self):
        resp = _loaded_client().post(
            "/v1/embed", content=b"{nope",
            headers={"content-type": "application/json"})
        assert resp.status_code == 400

    def test_non_object_body_is_400(self):
        resp = _loaded_client().post("/v1/embed", json=["texts"])
        assert resp.status_code == 400


class TestConfigAndBackends:
    def test_server_config_validation(self):
        with pytest.raises(ValueError):
            ServerConfig(max_batch=0)
        with pytest.raises(ValueError):
            ServerConfig(max_texts=0)
        with pytest.raises(ValueError):
            ServerConfig(port=70000)
        with pytest.raises(ValueError):
            ServerConfig(model="")

    def test_make_backend_parses_hash_ids(self):
        assert make_backend("hash:64").dim == 64
        with pytest.raises(ValueError):
            make_backend("hash:zero")
        with pytest.raises(ValueError):
            make_backend("hash:0")

    def test_hash_backend_validation(self):
        with pytest.raises(ValueError):
            HashBackend(0)
        with pytest.raises(ValueError):
            HashBackend(8, max_chars=0)

    def test_cli_defaults_and_overrides(self):
        cfg = build_config([])
        assert cfg.model == "BAAI/bge-m3"
        assert (cfg.host, cfg.port, cfg.max_batch) == ("127.0.0.1", 8000, 32)
        cfg = build_config(["--model", "hash:64", "--host", "0.0.0.0",
                            "--port", "9100", "--max-batch", "8"])
        assert cfg.model == "hash:64"
        assert (cfg.host, cfg.port, cfg.max_batch) == ("0.0.0.0", 9100, 8)
