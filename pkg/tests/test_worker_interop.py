"""Cross-implementation check: the TypeScript analyzer worker is a drop-in
replacement for the bundled one over the same wire protocol. Skipped unless
it has been built (cd sandbox-worker && npm install && npm run build)."""

import json
import pathlib

import pytest

from backgen.detection import CheckPhase, Detector
from backgen.engine import SessionConfig, generate
from backgen.providers import ScriptedModel
from backgen.sandbox import SandboxClient
from backgen.suite import build_suite

WORKER_JS = (pathlib.Path(__file__).parent.parent / "sandbox-worker" / "dist"
             / "worker.js")

pytestmark = pytest.mark.skipif(not WORKER_JS.exists(),
                                reason="sandbox-worker is not built")


@pytest.fixture(scope="module")
def ts_client():
    with SandboxClient(["node", str(WORKER_JS)]) as c:
        yield c


def test_ts_worker_matches_bundled_worker_on_error_corpus(ts_client, client):
    corpus = json.loads((pathlib.Path(__file__).parent / "fixtures"
                         / "error_corpus.json").read_text())
    for entry in corpus:
        extra = {k: v for k, v in entry.items()
                 if k in ("timeout_ms", "memory_limit_mb")}
        ours = client.request(entry["mode"], entry["code"], **extra)
        theirs = ts_client.request(entry["mode"], entry["code"], **extra)
        assert theirs["error_type"] == ours["error_type"], entry["name"]
        assert theirs.get("lineno") == ours.get("lineno"), entry["name"]


def test_engine_runs_against_ts_worker(ts_client):
    st = build_suite()[0]
    result = generate(st.task.redacted(),
                      ScriptedModel.from_json(st.model_json),
                      SessionConfig(max_generation_length=48), ts_client)
    assert result.status == "eos"
    assert result.rollback_count == st.expected_rollbacks


def test_detector_downgrade_path_against_ts_worker(ts_client):
    detector = Detector(ts_client)
    assert detector.detect("if x:\n", CheckPhase.STATIC_ONLY).result == "success"
    report = detector.detect("x = (1\ny = 2\n", CheckPhase.STATIC_ONLY)
    assert report.failed and report.lineno == 1
