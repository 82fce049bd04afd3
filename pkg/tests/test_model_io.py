import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from core_logic.quantum_model import GenericHqmm
from hqmm_lib.errors import HqmmStructureError, ModelFileError
from hqmm_lib.model_io import (
    FILE_VERSION, document_for, dumps_document, is_hqmm_document, load_model_file, model_from_dict,
    model_to_dict, save_model_file,
)
from services.catalog import build


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_hmm_document_layout():
    document = model_to_dict(build("rnc", {"p": 0.5, "q": 0.7}))
    assert document["version"] == FILE_VERSION
    assert document["states"] == ["A", "B", "C"]
    assert document["transitions"]["0"][2] == [0.7, 0.0, 0.0]
    assert document["flags"] == ["epsilon-machine"]
    assert document["parameters"] == {"p": 0.5, "q": 0.7}


def test_saved_hmm_loads_back(tmp_path):
    model = build("perturbed-coin-3state", {"eps": 0.3})
    path = save_model_file(str(tmp_path / "coin.json"), model)
    loaded = load_model_file(path)
    assert loaded.state_labels == model.state_labels
    assert_allclose(loaded.transitions, model.transitions)
    assert_allclose(loaded.initial, model.initial)
    assert loaded.flags == model.flags


def test_missing_initial_is_replaced_by_the_stationary_distribution():
    document = model_to_dict(build("rnc", {"p": 0.4, "q": 0.7}))
    del document["initial"]
    model = model_from_dict(document)
    assert model.stationary
    assert_allclose(model.initial, [0.5, 0.2, 0.3], atol=1e-9)


def test_reducible_model_without_initial_falls_back_to_uniform():
    document = model_to_dict(build("perturbed-coin-em", {"eps": 1.0}))
    del document["initial"]
    model = model_from_dict(document)
    assert not model.stationary
    assert_allclose(model.initial, [0.5, 0.5])


def test_symbols_without_matrices_never_fire():
    document = {"symbols": ["a", "b"], "states": ["s"], "transitions": {"a": [[1.0]]}, "initial": [1.0]}
    model = model_from_dict(document)
    assert model.transitions[1, 0, 0] == 0.0


@pytest.mark.parametrize("document, message", [
    ({"states": ["s"], "transitions": {}}, "missing key 'symbols'"),
    ({"symbols": ["0"], "states": ["s"], "transitions": [[1.0]]}, "must map"),
    ({"symbols": ["0"], "states": ["s"], "transitions": {"1": [[1.0]]}}, "undeclared"),
    ({"symbols": ["0"], "states": ["s", "t"], "transitions": {"0": [[1.0]]}, "initial": [1.0, 0.0]}, "shape"),
    (["not", "an", "object"], "JSON object"),
])
def test_malformed_documents(document, message):
    with pytest.raises(ModelFileError, match=message):
        model_from_dict(document)


def test_file_errors(tmp_path):
    with pytest.raises(ModelFileError, match="not found"):
        load_model_file(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text("{ not json", encoding="utf-8")
    with pytest.raises(ModelFileError, match="decode"):
        load_model_file(str(broken))


def test_hqmm_documents(tmp_path):
    h = build("monras-2level")
    document = document_for(h)
    assert is_hqmm_document(document)
    assert document["dimension"] == 2
    assert document["rho"][0][0] == [0.5, 0.0]
    loaded = load_model_file(write_json(tmp_path / "monras.json", document))
    assert isinstance(loaded, GenericHqmm)
    assert loaded.symbol_labels == ("0", "1", "2", "3")
    assert_allclose(loaded.rho, np.eye(2) / 2)


def test_invalid_hqmm_keeps_its_structure_error(tmp_path):
    document = document_for(build("monras-2level"))
    document["kraus"]["3"] = []
    document["kraus"]["2"] = [[[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]]
    with pytest.raises(HqmmStructureError):
        load_model_file(write_json(tmp_path / "leaky.json", document))


def test_hqmm_missing_symbol_operators(tmp_path):
    document = document_for(build("monras-2level"))
    del document["kraus"]["1"]
    with pytest.raises(ModelFileError, match="no Kraus operators"):
        load_model_file(write_json(tmp_path / "partial.json", document))


def test_dumps_is_stable():
    text = dumps_document(document_for(build("rnc-merged")))
    assert text.endswith("}\n")
    assert text == dumps_document(document_for(build("rnc-merged")))
