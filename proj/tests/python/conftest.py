import json
import os
from collections import defaultdict
from pathlib import Path

import pytest

import agr

GOLDEN = Path(__file__).resolve().parent.parent / "golden"


@pytest.fixture(scope="session")
def golden_dir():
    return GOLDEN


@pytest.fixture(scope="session")
def raw_world(tmp_path_factory):
    """A small planted world written as tool inputs: interactions, item metadata, fixture answers."""
    root = tmp_path_factory.mktemp("world")
    w = agr.planted_world(users=80, items=160, item_keywords=12, aesthetic_keywords=6, seed=11)
    with open(root / "interactions.tsv", "w") as f:
        for u, i in w["interactions"] + w["cold_interactions"]:
            f.write(f"{u}\t{i}\n")
    item_kw, aes_kw = defaultdict(list), defaultdict(list)
    for i, k in w["item_attributes"]:
        item_kw[i].append(k)
    for i, k in w["aesthetic_attributes"]:
        aes_kw[i].append(k)
    with open(root / "items.jsonl", "w") as f:
        for n, i in enumerate(sorted(item_kw)):
            f.write(json.dumps({"item_id": i, "price": 10 + n % 50, "image_ref": f"img/{i}.jpg"}) + "\n")
    fixture = {i: {"item": ", ".join(item_kw[i]), "aesthetic": ", ".join(aes_kw[i])} for i in item_kw}
    (root / "fixture.json").write_text(json.dumps(fixture))
    return root


@pytest.fixture(scope="session")
def trained(raw_world, tmp_path_factory):
    """prepare -> extract -> train through the Python API."""
    root = tmp_path_factory.mktemp("run")
    data = root / "data"
    agr.prepare(str(raw_world / "interactions.tsv"), str(data), items=str(raw_world / "items.jsonl"),
                min_users=2, holdout_items=0.1, seed=3)
    attrs = root / "attrs.jsonl"
    agr.extract(str(data / "items.jsonl"), str(attrs), backend="fixture", fixture=str(raw_world / "fixture.json"))
    model = root / "model.agr"
    summary = agr.train(str(data), str(model), attrs=str(attrs), dim=16, layers=2, epochs=15)
    return {"root": root, "data": data, "attrs": attrs, "model": model, "summary": summary}


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("AGR_CLI")
    if not path:
        pytest.skip("AGR_CLI not set")
    return path
