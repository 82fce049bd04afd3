import math
import re
from decimal import Decimal

_ASSIGNMENT = re.compile(r"^\s*([A-Za-z_][\w-]*)\s*=\s*(.+?)\s*$")

# Greek spellings accepted for the coin parameter
_PARAM_ALIASES = {"epsilon": "eps", "ε": "eps", "e": "eps"}


def normalize_param_name(name):
    name = name.strip().lower()
    return _PARAM_ALIASES.get(name, name)


def parse_param_assignments(assignments):
    # ['p=0.5', 'q=0,0.7,1'] -> {'p': [0.5], 'q': [0.0, 0.7, 1.0]}
    parsed = {}
    for raw in assignments or []:
        match = _ASSIGNMENT.match(raw)
        if not match:
            raise ValueError(f"Parameter '{raw}' is not of the form name=value")
        name, values = normalize_param_name(match.group(1)), match.group(2)
        try:
            parsed[name] = [float(v) for v in values.split(",") if v.strip()]
        except ValueError as e:
            raise ValueError(f"Parameter '{raw}' has a non-numeric value") from e
        if not parsed[name]:
            raise ValueError(f"Parameter '{raw}' has no value")
    return parsed


def single_values(parsed):
    # Collapses parse_param_assignments output to one value per name (first wins).
    return {name: values[0] for name, values in parsed.items()}


def parameter_grid(start, stop, step):
    # Inclusive grid start, start+step, ..., stop computed in decimal so 0.01 steps land exactly.
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if start > stop:
        raise ValueError(f"start ({start}) must not exceed stop ({stop})")
    d_start, d_stop, d_step = Decimal(repr(start)), Decimal(repr(stop)), Decimal(repr(step))
    count = int((d_stop - d_start) / d_step + Decimal("1e-9")) + 1
    return [float(d_start + k * d_step) for k in range(count)]


def format_symbol_stream(symbol_labels, indices):
    labels = [symbol_labels[int(k)] for k in indices]
    if all(len(label) == 1 for label in symbol_labels):
        return "".join(labels)
    return ",".join(labels)


def join_state_labels(labels):
    if all(len(label) == 1 for label in labels):
        return "".join(labels)
    return "+".join(labels)


def format_number(value):
    # Full double precision, locale-independent ('.' decimal separator).
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if math.isnan(value):
        return "nan"
    return repr(float(value))
