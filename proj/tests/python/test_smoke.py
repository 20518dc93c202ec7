import json
import math

import numpy as np
import pytest

import agr


def test_split_arithmetic():
    assert agr.split_sizes(459146) == (367317, 45914, 45915)
    with pytest.raises(agr.ConfigError):
        agr.split_sizes(10, 0.5, 0.5, 0.5)


def test_prompts_match_golden_files(golden_dir):
    assert agr.render_prompt("aesthetic").encode() == (golden_dir / "prompt_a.txt").read_bytes()
    assert agr.render_prompt("item").encode() == (golden_dir / "prompt_b.txt").read_bytes()


def test_keyword_parsing():
    assert agr.parse_keywords("Red, Silk.\nred\n") == ["red", "silk"]
    with pytest.raises(agr.AgrError):
        agr.parse_keywords(" , \n")


def test_metric_closed_forms():
    ranked = [10, 11, 12, 13]
    assert agr.ndcg_at_k(ranked, [10], 4) == 1.0
    assert agr.ndcg_at_k(ranked, [11], 4) == pytest.approx(1 / math.log2(3), abs=1e-15)
    assert agr.recall_at_k(ranked, [11, 13, 99], 2) == pytest.approx(1 / 3)
    assert agr.precision_at_k(ranked, [11, 13, 99], 2) == 0.5


def test_bpr_loss_is_stable():
    assert agr.bpr_loss(0.0, 0.0) == pytest.approx(math.log(2))
    assert agr.bpr_loss(50.0, -50.0) == pytest.approx(0.0, abs=1e-40)
    assert agr.bpr_loss(-50.0, 50.0) == pytest.approx(100.0)


def test_planted_world_shape():
    w = agr.planted_world(users=30, items=60, holdout_fraction=0.1)
    assert len(w["cold_items"]) == 6
    assert len(w["user_keywords"]) == 30
    cold = set(w["cold_items"])
    assert all(i not in cold for _, i in w["interactions"])


def test_pipeline_through_python(trained):
    s = trained["summary"]
    assert s["epochs_run"] >= 1
    assert trained["model"].read_bytes()[:4] == b"AGR1"

    report = agr.evaluate(str(trained["model"]), str(trained["data"]), k=10)
    assert report["mode"] == "standard"
    assert 0.0 <= report["recall"] <= 1.0
    assert report["recall"] > 3 * report["random_recall"]
    for key in ("k", "users", "ndcg", "precision", "checkpoint_hash", "dataset_hash", "config"):
        assert key in report

    cold = agr.evaluate(str(trained["model"]), str(trained["data"]), k=10, cold_start=True)
    assert cold["mode"] == "cold_start"

    m = agr.Model(str(trained["model"]), str(trained["data"]))
    u, i = m.user_embeddings(), m.item_embeddings()
    assert isinstance(u, np.ndarray) and u.shape == (len(m.users), 16)
    assert i.shape == (len(m.items), 16)
    assert m.score(m.users[0], m.items[0]) == pytest.approx(float(u[0] @ i[0]), rel=1e-12)
    assert m.checkpoint_hash == report["checkpoint_hash"]

    rec = agr.recommend(str(trained["model"]), str(trained["data"]), m.users[0], k=5, explain=True)
    assert len(rec["items"]) == 5
    scores = [x["score"] for x in rec["items"]]
    assert scores == sorted(scores, reverse=True)
    assert all("shared_keywords" in x for x in rec["items"])


def test_errors_map_to_exception_classes(trained, tmp_path):
    with pytest.raises(agr.LookupFailure):
        agr.recommend(str(trained["model"]), str(trained["data"]), "no-such-user")
    with pytest.raises(agr.ConfigError):
        agr.train(str(trained["data"]), str(trained["model"]))  # exists, no force
    with pytest.raises(agr.ConfigError):
        agr.prepare("/dev/null", str(tmp_path / "x"), split="0.5,0.5,0.5")

    # A checkpoint header edited to point at other vocabularies is rejected.
    raw = trained["model"].read_bytes()
    n = int.from_bytes(raw[4:8], "little")
    header = json.loads(raw[8 : 8 + n])
    header["vocab_hashes"]["items"] = "0000000000000000"
    text = json.dumps(header).encode()
    bad = tmp_path / "bad.agr"
    bad.write_bytes(raw[:4] + len(text).to_bytes(4, "little") + text + raw[8 + n :])
    with pytest.raises(agr.IntegrityError):
        agr.evaluate(str(bad), str(trained["data"]))
