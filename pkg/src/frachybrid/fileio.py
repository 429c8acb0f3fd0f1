"""Input parsing and artifact writing for the command-line front end.

System descriptions are JSON documents validated against fixed schemas
(unknown fields are rejected).  CSV artifacts carry 12 significant digits;
JSON artifacts use Python's shortest round-trip float repr.  Every file is
written to a temporary sibling first and then renamed into place.
"""

import csv
import io
import json
import math
import os
import tempfile

import jsonschema
import numpy as np

from .sysmodel import PseudoPolynomial, ResetClosedLoop, SwitchingSystem

CSV_FORMAT = "%.12g"

_MATRIX = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}
_COUNT = {"type": "integer", "minimum": 0}

SCHEMAS = {
    "switching": {
        "type": "object",
        "additionalProperties": False,
        "required": ["kind", "alpha", "subsystems"],
        "properties": {
            "kind": {"const": "switching"},
            "alpha": {"type": "number"},
            "subsystems": {
                "type": "array", "minItems": 1,
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["label", "A"],
                    "properties": {"label": {"type": "string"}, "A": _MATRIX},
                },
            },
        },
    },
    "reset": {
        "type": "object",
        "additionalProperties": False,
        "required": ["kind", "alpha", "A_cl", "B_cl", "C_cl", "n_plant", "n_controller",
                     "n_reset_controller", "n_reset_states", "C_p"],
        "properties": {
            "kind": {"const": "reset"},
            "alpha": {"type": "number"},
            "A_cl": _MATRIX, "B_cl": _MATRIX, "C_cl": _MATRIX, "C_p": _MATRIX,
            "n_plant": _COUNT, "n_controller": _COUNT,
            "n_reset_controller": _COUNT, "n_reset_states": _COUNT,
        },
    },
    "pseudo_poly": {
        "type": "object",
        "additionalProperties": False,
        "required": ["kind", "base_order", "coeffs"],
        "properties": {
            "kind": {"const": "pseudo_poly"},
            "base_order": {"type": "number"},
            "coeffs": {"type": "array", "minItems": 2, "items": {"type": "number"}},
        },
    },
}


class InputError(ValueError):
    """Malformed or schema-violating input; maps to the usage exit code."""


def _reject_constant(name):
    raise ValueError(f"non-finite literal {name} is not allowed")


def parse_document(text, source="<input>"):
    """Parse and validate one system description; returns the raw dict."""
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("kind") not in SCHEMAS:
        raise InputError(f"{source}: 'kind' must be one of {sorted(SCHEMAS)}")
    try:
        jsonschema.validate(doc, SCHEMAS[doc["kind"]])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"{source}: at {where}: {exc.message}") from None
    return doc


def load_document(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_document(text, str(path))


def build_system(doc):
    """Turn a validated document into the matching domain object."""
    kind = doc["kind"]
    try:
        if kind == "switching":
            subs = tuple((s["label"], np.array(s["A"], dtype=float)) for s in doc["subsystems"])
            return SwitchingSystem(float(doc["alpha"]), subs)
        if kind == "reset":
            return ResetClosedLoop(
                float(doc["alpha"]), np.array(doc["A_cl"], dtype=float),
                np.array(doc["B_cl"], dtype=float), np.array(doc["C_cl"], dtype=float),
                doc["n_plant"], doc["n_controller"], doc["n_reset_controller"],
                doc["n_reset_states"], np.array(doc["C_p"], dtype=float))
        return PseudoPolynomial(float(doc["base_order"]), tuple(float(c) for c in doc["coeffs"]))
    except (ValueError, TypeError) as exc:
        raise InputError(f"invalid {kind} description: {exc}") from None


# --------------------------------------------------------------------------
# writers


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and ``os.replace``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def format_number(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return CSV_FORMAT % float(v)


def csv_text(header, columns):
    """CSV text from equal-length columns; floats at 12 significant digits."""
    columns = [np.asarray(c) for c in columns]
    rows = len(columns[0]) if columns else 0
    if any(len(c) != rows for c in columns):
        raise ValueError("CSV columns differ in length")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for k in range(rows):
        w.writerow([c[k] if c.dtype.kind in "OUS" else format_number(c[k]) for c in columns])
    return buf.getvalue()


def write_csv(path, header, columns):
    return atomic_write(path, csv_text(header, columns))


def read_csv(path):
    """Read back a numeric CSV artifact as ``(header, {name: array})``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(v) for v in col])
        except ValueError:
            out[name] = np.array(col, dtype=object)
    return header, out


def sweep_csv(path, report):
    n = len(report.omega)
    return write_csv(path, ["omega", "arg1_rad", "arg2_rad", "delta_rad", "threshold_rad"],
                     [report.omega, report.phase_a, report.phase_b, report.delta,
                      np.full(n, math.pi / 2)])


def hbeta_csv(path, report):
    return write_csv(path, ["omega", "phase_rad", "magnitude"],
                     [report.omega, report.phase, report.magnitude])


def trajectory_csv(path, traj):
    X = np.asarray(traj.states)
    header = ["t", "y", "mode"] + [f"x{i + 1}" for i in range(X.shape[1])]
    cols = [traj.times, traj.outputs, np.asarray(traj.modes, dtype=int)] + list(X.T)
    return write_csv(path, header, cols)


def events_csv(path, traj):
    ev = traj.events
    return write_csv(path, ["t", "kind", "mode_before", "mode_after"],
                     [np.array([e.time for e in ev], dtype=float),
                      np.array([e.kind for e in ev], dtype=object),
                      np.array([e.mode_before for e in ev], dtype=int),
                      np.array([e.mode_after for e in ev], dtype=int)])


def jsonable(obj):
    """Plain JSON types; numpy values converted, non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def json_text(obj):
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    return atomic_write(path, json_text(obj))
