import json
import math
import os
import subprocess

import pytest

import llmdetect

HUMAN = ["yeah", "honestly", "lol", "dog", "store", "weird", "kinda", "went", "yesterday"]
AI = ["furthermore", "comprehensive", "insights", "overall", "crucial", "notably", "delve", "landscape"]


def toy_corpus(n=60):
    texts, labels = [], []
    for i in range(n):
        pool = AI if i % 2 else HUMAN
        words = [pool[(i * 7 + k) % len(pool)] for k in range(12)]
        texts.append(" ".join(words) + f" the n{i}")
        labels.append(i % 2)
    return texts, labels


def test_tokenize_and_clean():
    assert llmdetect.tokenize("Hello, World!") == ["hello", "world"]
    assert llmdetect.tokenize("Hello", lowercase=False) == ["Hello"]
    assert llmdetect.clean_text("a\n b  ") == "a b"


@pytest.mark.parametrize("kind", ["nb", "lr", "rf", "gbt", "mlp"])
def test_fit_predict_roundtrip(tmp_path, kind):
    texts, labels = toy_corpus()
    det = llmdetect.Detector.fit(texts, labels, classifier=kind, seed=1)
    p = det.predict_proba(texts)
    assert len(p) == len(texts)
    assert all(0.0 <= v <= 1.0 for v in p)
    acc = sum((v >= 0.5) == bool(y) for v, y in zip(p, labels)) / len(labels)
    assert acc >= 0.9
    assert det.predict_proba(texts, batch_size=7) == p

    path = tmp_path / "model.json"
    det.save(str(path))
    again = llmdetect.Detector.load(str(path))
    assert again.predict_proba(texts) == p
    assert again.training_fingerprint == det.training_fingerprint


def test_explain_signs():
    texts, labels = toy_corpus()
    det = llmdetect.Detector.fit(texts, labels)
    out = det.explain("honestly furthermore dog insights", num_samples=400, top_k=4, seed=2)
    weights = {a["word"]: a["weight"] for a in out["attributions"]}
    assert weights["furthermore"] > 0 > weights["honestly"]
    assert math.isclose(out["p_ai"] + out["p_human"], 1.0)


def test_metrics():
    report = llmdetect.evaluate([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0])
    assert report["metrics"]["Accuracy"] == 1.0
    assert report["metrics"]["auc"] == 1.0
    points, auc = llmdetect.roc_curve([0.9, 0.8, 0.3, 0.1], [1, 0, 1, 0])
    assert auc == 0.75
    assert points[0][:2] == (0.0, 0.0) and points[-1][:2] == (1.0, 1.0)
    assert len(llmdetect.det_curve([0.9, 0.1], [1, 0])) == 3
    assert abs(llmdetect.probit(0.975) - 1.959963984540054) < 1e-12


def test_errors_carry_kind():
    with pytest.raises(llmdetect.LlmdetectError, match="single_class"):
        llmdetect.Detector.fit(["a", "b"], [1, 1])
    with pytest.raises(llmdetect.LlmdetectError, match="file_not_found"):
        llmdetect.Detector.load("/nonexistent/model.json")


def test_stub_datagen():
    docs = llmdetect.generate_paired_stub(["one two three", "four five"], seed=5)
    assert [d[2] for d in docs] == [0, 1, 0, 1]
    assert docs[1] == ("0-ai", "[ELAB] [SUM] one two three ~5 ~5", 1)


def test_train_from_config(tmp_path):
    texts, labels = toy_corpus()
    data = tmp_path / "train.jsonl"
    data.write_text("".join(json.dumps({"text": t, "label": y}) + "\n" for t, y in zip(texts, labels)))
    summary = llmdetect.train({"paths": {"train_data": str(data), "model_out": str(tmp_path / "m.json")}, "seed": 3})
    assert summary["classifier"] == "naive_bayes"
    assert (tmp_path / "m.json").exists()


@pytest.mark.skipif("LLMDETECT_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_help():
    out = subprocess.run([os.environ["LLMDETECT_CLI"], "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "datagen" in out.stdout
