import json

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from csmri import dataio, harness
from csmri.cli import main
from csmri.service import app

client = TestClient(app)

CORPUS_CONFIG = {
    "crop": [48, 48],
    "volumes": [
        {"id": "a", "height": 64, "width": 64, "coils": 4, "track": "multi-coil",
         "noise_sigma": 0.01},
        {"id": "b", "height": 64, "width": 64, "coils": 4, "track": "single-coil",
         "noise_sigma": 0.01},
    ],
}


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("svc_corpus")
    resp = client.post(
        "/simulate", json={"config": CORPUS_CONFIG, "out_dir": str(out), "seed": 3}
    )
    assert resp.status_code == 200, resp.text
    assert len(resp.json()["volumes"]) == 2
    return out


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_simulate_requires_config(tmp_path):
    resp = client.post("/simulate", json={"out_dir": str(tmp_path)})
    assert resp.status_code == 422


def test_mask_endpoint(corpus, tmp_path):
    resp = client.post(
        "/mask",
        json={
            "corpus_dir": str(corpus),
            "out_dir": str(tmp_path / "masked"),
            "kind": "random",
            "acceleration": 4,
            "seed": 1,
        },
    )
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert len(body["volumes"]) == 2
    for vid, r in body["achieved_accelerations"].items():
        assert 1.5 < r < 8.0
    record = dataio.read_volume(body["volumes"][0])
    assert record.is_test_style
    assert record.mask is not None
    # unsampled columns are zero
    keep = record.mask.keep
    assert np.abs(record.kspace.data[..., ~keep]).max() == 0


def test_reconstruct_and_report_endpoints(corpus, tmp_path):
    plan = {
        "corpus_dir": str(corpus),
        "out_dir": str(tmp_path / "results"),
        "tracks": ["single-coil", "multi-coil"],
        "accelerations": [4],
        "mask_kinds": ["random"],
        "lambdas": [0.01],
        "regularizer": "TV",
        "max_iters": 20,
        "seed": 7,
    }
    resp = client.post("/reconstruct", json={"plan": plan})
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["n_failures"] == 0
    assert body["cell_count"] == 4

    structured = body["report_paths"]["structured"]
    resp2 = client.post(
        "/report",
        json={"results_path": structured, "out_dir": str(tmp_path / "re"), "stem": "again"},
    )
    assert resp2.status_code == 200
    re_emitted = json.load(open(resp2.json()["report_paths"]["structured"]))
    assert re_emitted == json.load(open(structured))


def test_evaluate_endpoint(corpus, tmp_path):
    recon_dir = tmp_path / "recon"
    recon_dir.mkdir()
    for path in harness.corpus_volume_paths(corpus):
        record = dataio.read_volume(path)
        dataio.write_reconstruction(record.target(), recon_dir / path.name)
    resp = client.post(
        "/evaluate",
        json={
            "recon_dir": str(recon_dir),
            "corpus_dir": str(corpus),
            "out_dir": str(tmp_path / "eval"),
        },
    )
    assert resp.status_code == 200, resp.text
    assert resp.json()["n_failures"] == 0


def test_cli_end_to_end(tmp_path):
    runner = CliRunner()
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(CORPUS_CONFIG))
    corpus_dir = tmp_path / "corpus"

    result = runner.invoke(
        main,
        ["simulate", "--config", str(config_path), "--out", str(corpus_dir), "--seed", "3"],
    )
    assert result.exit_code == 0, result.output
    assert "wrote 2 volumes" in result.output

    plan_path = tmp_path / "plan.json"
    plan_path.write_text(
        json.dumps(
            {
                "corpus_dir": str(corpus_dir),
                "out_dir": str(tmp_path / "results"),
                "accelerations": [4],
                "lambdas": [0.01],
                "max_iters": 10,
                "seed": 1,
            }
        )
    )
    result = runner.invoke(main, ["reconstruct", "--plan", str(plan_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "results" / "results.txt").exists()

    result = runner.invoke(
        main,
        ["mask", "--corpus", str(corpus_dir), "--out", str(tmp_path / "masked"),
         "--acceleration", "4", "--seed", "2"],
    )
    assert result.exit_code == 0, result.output
    assert "achieved" in result.output

    recon_dir = tmp_path / "recon"
    recon_dir.mkdir()
    for path in harness.corpus_volume_paths(corpus_dir):
        record = dataio.read_volume(path)
        dataio.write_reconstruction(record.target(), recon_dir / path.name)
    result = runner.invoke(
        main,
        ["evaluate", "--recon", str(recon_dir), "--corpus", str(corpus_dir),
         "--out", str(tmp_path / "eval")],
    )
    assert result.exit_code == 0, result.output
