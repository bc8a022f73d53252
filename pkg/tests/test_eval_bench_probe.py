import io

import httpx
import pytest
from PIL import Image

from dermvlm.errors import ConfigurationError, InvalidInputError, ServiceUnreachableError
from dermvlm.evaluation import (
    latency_bench,
    probe_behavior,
    read_trace_csv,
    synthetic_baseline_trace,
    write_trace_csv,
)
from dermvlm.model import build_model, build_tokenizer
from dermvlm.serve import DiagnosisService, ServeConfig, create_app
from dermvlm.synth import SynthSpec, generate_corpus
from dermvlm.train import corpus_tokenizer, heldin_split

from conftest import tiny_config


@pytest.fixture(scope="module")
def bundle():
    return generate_corpus(SynthSpec(n_images=6, seed=41))


@pytest.fixture(scope="module")
def model(bundle):
    m = build_model(tiny_config(image_size=64, seed=5), corpus_tokenizer(bundle))
    m.eval()
    return m


def _cases(bundle, n):
    cases = []
    for rec in bundle.records[:n]:
        buf = io.BytesIO()
        Image.fromarray(bundle.images[rec["path"]]).save(buf, format="PNG")
        cases.append((rec["path"], buf.getvalue()))
    return cases


def test_baseline_trace_is_minutes_scale_and_deterministic():
    a = synthetic_baseline_trace(n=40, seed=3)
    b = synthetic_baseline_trace(n=40, seed=3)
    assert a == b
    assert 120 < sorted(a)[len(a) // 2] < 900


def test_trace_csv_roundtrip(tmp_path):
    trace = synthetic_baseline_trace(n=10, seed=1)
    write_trace_csv(trace, tmp_path / "t.csv")
    back = read_trace_csv(tmp_path / "t.csv")
    assert [round(x, 6) for x in trace] == [round(x, 6) for x in back]
    with pytest.raises(InvalidInputError):
        read_trace_csv(tmp_path / "missing.csv")


def test_bench_validates_inputs(bundle):
    with pytest.raises(InvalidInputError, match="empty case set"):
        latency_bench("http://127.0.0.1:1", [], [1.0])
    with pytest.raises(InvalidInputError, match="baseline"):
        latency_bench("http://127.0.0.1:1", _cases(bundle, 1), [])


def test_bench_unreachable_service_fails_before_cases(bundle):
    with pytest.raises(ServiceUnreachableError):
        latency_bench(
            "http://127.0.0.1:9",  # discard port: connection refused
            _cases(bundle, 1),
            [300.0],
            timeout_s=0.5,
        )


def test_bench_over_inprocess_transport(model, bundle):
    from starlette.testclient import TestClient

    service = DiagnosisService(ServeConfig(), model=model)
    client = TestClient(create_app(service), base_url="http://testserver")
    baseline = [300.0] * 10
    report = latency_bench(
        "http://testserver", _cases(bundle, 2), baseline, timeout_s=30.0, client=client
    )
    assert len(report.rows) == 8  # 2 cases x 4 prompts
    assert report.baseline["p50"] == 300.0
    assert report.service["p50"] < 300.0
    assert report.ratio_p50 > 1.0
    assert report.all_within_timeout
    # percentiles are order statistics of the emitted rows
    latencies = sorted(r["latency_s"] for r in report.rows)
    assert report.service["p50"] in latencies


def test_probe_on_untrained_model_scores_near_zero(model, bundle):
    report = probe_behavior(model, heldin_split(bundle, 4))
    assert report.n_cases == 4
    assert 0.0 <= report.concept_recall <= 1.0
    assert report.class_accuracy <= 0.5
    assert len(report.rows) == 4
    assert {"planted", "named", "reply_describe"} <= set(report.rows[0])


def test_probe_empty_split_rejected(model, bundle):
    empty = heldin_split(bundle, 0)
    with pytest.raises(InvalidInputError):
        probe_behavior(model, empty)


def test_probe_vocabulary_mismatch_is_configuration_error(bundle):
    bad_tok = build_tokenizer(["totally unrelated words"])
    bad_model = build_model(tiny_config(image_size=64, seed=6), bad_tok)
    with pytest.raises(ConfigurationError, match="vocabulary"):
        probe_behavior(bad_model, bundle)
