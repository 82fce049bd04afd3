import json
import logging

import numpy as np

from core_logic.hmm_core import make_hmm
from core_logic.quantum_model import GenericHqmm, make_generic_hqmm
from hqmm_lib.config import status_console
from hqmm_lib.errors import HqmmStructureError, ModelFileError, StationaryDistributionError

FILE_VERSION = "1.0"


# --- HMM DOCUMENTS ---

def model_to_dict(model):
    document = {
        "name": model.name,
        "symbols": list(model.symbol_labels),
        "states": list(model.state_labels),
        "transitions": {label: model.transitions[r].tolist() for r, label in enumerate(model.symbol_labels)},
        "initial": model.initial.tolist(),
        "version": FILE_VERSION,
    }
    if model.flags:
        document["flags"] = sorted(model.flags)
    if model.parameters:
        document["parameters"] = dict(model.parameters)
    return document


def _require(data, key, source):
    if key not in data:
        raise ModelFileError(f"{source}: missing key '{key}'.")
    return data[key]


def model_from_dict(data, source="model document"):
    if not isinstance(data, dict):
        raise ModelFileError(f"{source}: expected a JSON object at the top level.")
    name = str(data.get("name", "model"))
    symbols = _require(data, "symbols", source)
    states = _require(data, "states", source)
    transitions = _require(data, "transitions", source)
    if not isinstance(transitions, dict):
        raise ModelFileError(f"{source}: 'transitions' must map each symbol label to an n x n array.")
    unknown = set(transitions) - {str(s) for s in symbols}
    if unknown:
        raise ModelFileError(f"{source}: transitions given for undeclared symbol(s) {sorted(unknown)}.")

    n = len(states)
    try:
        matrices = [transitions.get(str(s), np.zeros((n, n)).tolist()) for s in symbols]
        flags = data.get("flags", ())
        parameters = data.get("parameters", {})
        initial = data.get("initial")
        if initial is not None:
            return make_hmm(name, states, symbols, matrices, initial, flags, parameters)
        try:
            return make_hmm(name, states, symbols, matrices, None, flags, parameters)
        except StationaryDistributionError as e:
            # keep the model loadable so validation can report what is wrong with it
            logging.warning(f"{source}: {e} Falling back to a uniform initial distribution.")
            status_console.print(f"[yellow]Warning: {e} Using a uniform initial distribution.[/yellow]")
            return make_hmm(name, states, symbols, matrices, [1.0 / n] * n, flags, parameters)
    except (ValueError, TypeError) as e:
        raise ModelFileError(f"{source}: {e}") from e


# --- GENERIC HQMM DOCUMENTS ---

def _complex_to_pairs(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]


def _pairs_to_complex(pairs, source):
    array = np.asarray(pairs, dtype=float)
    if array.ndim != 3 or array.shape[2] != 2:
        raise ModelFileError(f"{source}: complex matrices must be d x d arrays of [re, im] pairs.")
    return array[..., 0] + 1j * array[..., 1]


def hqmm_to_dict(h):
    document = {
        "name": h.name,
        "dimension": h.dimension,
        "symbols": list(h.symbol_labels),
        "kraus": {label: [_complex_to_pairs(k) for k in h.kraus[r]] for r, label in enumerate(h.symbol_labels)},
        "rho": _complex_to_pairs(h.rho),
        "version": FILE_VERSION,
    }
    if h.parameters:
        document["parameters"] = dict(h.parameters)
    return document


def hqmm_from_dict(data, source="HQMM document"):
    symbols = [str(s) for s in _require(data, "symbols", source)]
    dimension = int(_require(data, "dimension", source))
    kraus = _require(data, "kraus", source)
    missing = [s for s in symbols if s not in kraus]
    if missing:
        raise ModelFileError(f"{source}: no Kraus operators for symbol(s) {missing}.")
    try:
        operators = [[_pairs_to_complex(k, source) for k in kraus[s]] for s in symbols]
        rho = _pairs_to_complex(_require(data, "rho", source), source)
        if rho.shape != (dimension, dimension):
            raise ModelFileError(f"{source}: rho has shape {rho.shape}, declared dimension is {dimension}.")
        return make_generic_hqmm(str(data.get("name", "hqmm")), symbols, operators, rho, data.get("parameters"))
    except HqmmStructureError:
        raise
    except (ValueError, TypeError) as e:
        raise ModelFileError(f"{source}: {e}") from e


def is_hqmm_document(data):
    return isinstance(data, dict) and "kraus" in data


def document_for(model):
    return hqmm_to_dict(model) if isinstance(model, GenericHqmm) else model_to_dict(model)


# --- FILES ---

def load_model_file(filepath):
    """Reads a model file; returns an Hmm or a GenericHqmm depending on its keys."""
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ModelFileError(f"Model file {filepath} not found.") from None
    except json.JSONDecodeError as e:
        raise ModelFileError(f"Could not decode model file {filepath}: {e}") from e
    except OSError as e:
        raise ModelFileError(f"Error reading model file {filepath}: {e}") from e

    model = hqmm_from_dict(data, filepath) if is_hqmm_document(data) else model_from_dict(data, filepath)
    kind = "HQMM" if is_hqmm_document(data) else "HMM"
    logging.info(f"{kind} '{model.name}' loaded from {filepath}")
    return model


def dumps_document(document):
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def save_model_file(filepath, model):
    text = dumps_document(document_for(model))
    try:
        with open(filepath, 'w', encoding='utf-8') as f:
            f.write(text)
    except OSError as e:
        raise ModelFileError(f"Error saving model to {filepath}: {e}") from e
    logging.info(f"Model '{model.name}' saved to {filepath}")
    return filepath
