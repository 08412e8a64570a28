import json
from importlib import resources

import pytest


def golden_documents():
    golden_dir = resources.files("voxtrain") / "golden"
    names = sorted(p.name for p in golden_dir.iterdir() if p.name.endswith(".json"))
    return [(name, json.loads((golden_dir / name).read_text(encoding="utf-8")))
            for name in names]


@pytest.fixture(scope="session")
def goldens():
    docs = golden_documents()
    assert docs, "golden IRs must be packaged with the trainer"
    return docs


@pytest.fixture
def chain_ir_doc(goldens):
    by_name = dict(goldens)
    return by_name["chain_small.json"]["ir"]
