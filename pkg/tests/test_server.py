import json
import threading
from concurrent.futures import ThreadPoolExecutor

import httpx
import numpy as np
import pytest

from mpnet.bundle import ModelBundle, save_bundle
from mpnet.dataset import zscore_fit
from mpnet.evaluate import decision_boundary_grid
from mpnet.featurize import FeatureGroup, Target, assemble, baseline_spec
from mpnet.learners import train
from mpnet.server import ModelRegistry, serve
from mpnet.synth import make_classification_dataset, make_regression_dataset


def build_bundle(name, ds, spec, kind, hp=None, task=None):
    matrix = assemble(ds, spec)
    stats = zscore_fit(matrix)
    model = train(
        kind,
        stats.transform(matrix.rows),
        matrix.target_values,
        hp,
        task=task or ("classification" if spec.target is Target.DEFECT_CLASS else "regression"),
        columns=matrix.column_names,
        seed=0,
    )
    return ModelBundle(name=name, model=model, spec=spec, stats=stats)


@pytest.fixture(scope="module")
def bundles_dir(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("models")
    reg_ds = make_regression_dataset(100, seed=61, noise=0.01)
    cls_ds = make_classification_dataset(150, seed=62)
    depth_spec = baseline_spec(Target.DEPTH, extra=(FeatureGroup.BEAM_DIAMETER,))
    cls_spec = baseline_spec(Target.DEFECT_CLASS, extra=(FeatureGroup.LAYER_THICKNESS,))
    save_bundle(
        build_bundle("depth_rf", reg_ds, depth_spec, "random_forest", {"n_estimators": 10}),
        outdir / "depth_rf.json",
    )
    save_bundle(
        build_bundle("defect_tree", cls_ds, cls_spec, "decision_tree", {"max_depth": 8}),
        outdir / "defect_tree.json",
    )
    # a leaky bundle the server must refuse to load
    leaky_spec = baseline_spec(Target.DEPTH, extra=(FeatureGroup.ABSORPTIVITY2,))
    save_bundle(
        build_bundle("leaky", reg_ds, leaky_spec, "ridge", {"lam": 1e-8}),
        outdir / "leaky.json",
    )
    return outdir


@pytest.fixture(scope="module")
def client(bundles_dir):
    with pytest.warns(UserWarning, match="absorptivity2"):
        registry = ModelRegistry.load_dir(bundles_dir)
    httpd = serve(registry, port=0)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    with httpx.Client(base_url=base, timeout=10.0) as c:
        yield c, registry
    httpd.shutdown()


PREDICT_BODY = {
    "model": "depth_rf",
    "process": "LPBF",
    "material": "SS316L",
    "power_w": 180.0,
    "velocity_m_s": 0.9,
    "beam_diameter_um": 80.0,
}


class TestEndpoints:
    def test_materials_lists_registry(self, client):
        c, _ = client
        materials = c.get("/materials").json()
        names = {m["name"] for m in materials}
        assert "SS316L" in names and len(names) == 29
        ss = next(m for m in materials if m["name"] == "SS316L")
        assert ss["rho"] == 8000.0 and ss["tm"] == 1688.0

    def test_models_excludes_leaky_bundle(self, client):
        c, _ = client
        models = {m["name"] for m in c.get("/models").json()}
        assert models == {"depth_rf", "defect_tree"}

    def test_predict_regression_includes_rosenthal(self, client):
        c, _ = client
        r = c.post("/predict", json=PREDICT_BODY)
        assert r.status_code == 200
        body = r.json()
        assert body["depth_um"] > 0
        assert body["rosenthal"]["width_um"] == pytest.approx(
            2 * body["rosenthal"]["depth_um"], rel=1e-12
        )

    def test_predict_classification_probs(self, client):
        c, _ = client
        r = c.post("/predict", json={**PREDICT_BODY, "model": "defect_tree", "layer_thickness_um": 30.0})
        assert r.status_code == 200
        probs = r.json()["class_probs"]
        assert set(probs) == {"desirable", "keyhole", "lack_of_fusion", "balling"}
        assert sum(probs.values()) == pytest.approx(1.0, abs=1e-9)

    def test_processmap_matches_library_call(self, client, bundles_dir):
        c, registry = client
        body = {
            "model": "defect_tree",
            "material": "SS316L",
            "p_range": [80, 300],
            "v_range": [0.4, 1.8],
            "resolution": 7,
            "fixed": {"beam_diameter_um": 80.0, "layer_thickness_um": 30.0},
        }
        r = c.post("/processmap", json=body)
        assert r.status_code == 200
        served = r.json()
        direct = decision_boundary_grid(
            registry.bundles["defect_tree"],
            "SS316L",
            (80, 300),
            (0.4, 1.8),
            7,
            fixed={"beam_diameter": 80e-6, "layer_thickness": 30e-6},
        )
        assert served["grid"] == direct["grid"].tolist()
        assert served["p_axis"] == direct["p_axis"].tolist()
        assert served["v_axis"] == direct["v_axis"].tolist()


class TestErrors:
    def test_unknown_model_404(self, client):
        c, _ = client
        r = c.post("/predict", json={**PREDICT_BODY, "model": "missing"})
        assert r.status_code == 404

    def test_unknown_material_404(self, client):
        c, _ = client
        r = c.post("/predict", json={**PREDICT_BODY, "material": "Adamantium"})
        assert r.status_code == 404

    def test_missing_fields_400_with_names(self, client):
        c, _ = client
        r = c.post("/predict", json={"model": "depth_rf", "process": "LPBF"})
        assert r.status_code == 400
        assert set(r.json()["fields"]) == {"material", "power_w", "velocity_m_s"}

    def test_malformed_json_400(self, client):
        c, _ = client
        r = c.post("/predict", content=b"{oops", headers={"Content-Type": "application/json"})
        assert r.status_code == 400

    def test_invalid_resolution_400(self, client):
        c, _ = client
        r = c.post("/processmap", json={
            "model": "defect_tree", "material": "SS316L",
            "p_range": [1, 2], "v_range": [1, 2], "resolution": 100000,
        })
        assert r.status_code == 400

    def test_missing_required_feature_400(self, client):
        c, _ = client
        body = dict(PREDICT_BODY)
        del body["beam_diameter_um"]
        r = c.post("/predict", json=body)
        assert r.status_code == 400
        assert "beam_diameter" in r.json()["error"]

    def test_unknown_endpoint_404(self, client):
        c, _ = client
        assert c.post("/train", json={}).status_code == 404
        assert c.get("/nothing").status_code == 404


class TestConcurrency:
    def test_parallel_predictions_match_serial(self, client):
        c, _ = client
        serial = c.post("/predict", json=PREDICT_BODY).json()

        def call(_):
            return c.post("/predict", json=PREDICT_BODY).json()

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(call, range(16)))
        assert all(r == serial for r in results)

    def test_registry_swap_atomic(self, bundles_dir):
        with pytest.warns(UserWarning):
            registry = ModelRegistry.load_dir(bundles_dir)
        httpd = serve(registry, port=0)
        thread = threading.Thread(target=httpd.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{httpd.server_address[1]}"
        try:
            with httpx.Client(base_url=base, timeout=10.0) as c:
                assert len(c.get("/models").json()) == 2
                empty = ModelRegistry(bundles={})
                httpd.swap_registry(empty)
                assert c.get("/models").json() == []
        finally:
            httpd.shutdown()


def test_static_file_serving(tmp_path, bundles_dir):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html>explorer</html>")
    (static / "app.js").write_text("console.log('hi')")
    with pytest.warns(UserWarning):
        registry = ModelRegistry.load_dir(bundles_dir)
    httpd = serve(registry, port=0, static_dir=static)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    try:
        with httpx.Client(base_url=base, timeout=10.0) as c:
            r = c.get("/")
            assert r.status_code == 200 and "explorer" in r.text
            assert c.get("/app.js").status_code == 200
            assert c.get("/../secret").status_code == 404
            assert c.get("/missing.js").status_code == 404
    finally:
        httpd.shutdown()
