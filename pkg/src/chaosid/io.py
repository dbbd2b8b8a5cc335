"""File formats shared by the command line tools.

Three formats live here: a strict CSV dialect for time series and plot-ready
tables, a canonical JSON rendering for every structured artifact, and a flat
key=value configuration format.

CSV dialect: comma separators, '.' decimal point, UTF-8, LF or CRLF line
endings, lines starting with '#' ignored, optional single header row detected
by being non-numeric.

JSON artifacts are written through :func:`canonical_json`, which sorts object
keys and renders floats with 17 significant digits so that a rewrite of the
same data is byte-identical and doubles survive a round trip exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .embedding import DelayEmbedding, TimeSeries
from .errors import ConfigError, InputError, NotFoundError
from .model import (
    Exponential,
    FitReport,
    ForcingBasis,
    Polynomial,
    Product,
    Sinusoid,
    StateSpaceModel,
)
from .symmetry import SymmetryReport, SymmetryTransform, TransformClass

EMBEDDING_SCHEMA = "embedding/1"
MODEL_SCHEMA = "model/1"
SYMMETRY_SCHEMA = "symmetry/1"
COMPARISON_SCHEMA = "comparison/1"
REPORT_SCHEMA = "run-report/1"


def _format_float(x):
    if np.isnan(x):
        return "NaN"
    if np.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def canonical_json(value, indent=0):
    """Render ``value`` as deterministic JSON text.

    Keys are sorted, floats carry 17 significant digits, and non-finite
    numbers use the Infinity/NaN literals that :func:`json.loads` accepts.
    """
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = []
        for key in sorted(value):
            rendered = canonical_json(value[key], indent + 1)
            parts.append(f"{inner}{json.dumps(str(key))}: {rendered}")
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if len(value) == 0:
            return "[]"
        parts = [canonical_json(v, indent + 1) for v in value]
        if all(isinstance(v, (bool, int, float, np.integer, np.floating)) for v in value):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(inner + p for p in parts) + "\n" + pad + "]"
    if isinstance(value, np.ndarray):
        return canonical_json(value.tolist(), indent)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _format_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    raise TypeError(f"cannot serialize {type(value).__name__} to JSON")


def write_json(path, value):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(value))
        fh.write("\n")


def load_json(path):
    if not os.path.exists(path):
        raise NotFoundError(f"no such file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _expect_schema(doc, schema, path):
    found = doc.get("schema") if isinstance(doc, dict) else None
    if found != schema:
        raise InputError(f"{path} has schema {found!r}, expected {schema!r}")


# ---------------------------------------------------------------------------
# CSV


def _parse_row(cells):
    values = []
    for cell in cells:
        try:
            values.append(float(cell))
        except ValueError:
            return None
    return values


def read_series(path, dt=1.0):
    """Read a multi-channel time series CSV into a TimeSeries.

    Columns are channels.  A single leading header row supplies channel
    labels when its cells do not parse as numbers.
    """
    if not os.path.exists(path):
        raise NotFoundError(f"no such file: {path}")
    labels = None
    rows = []
    width = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            parsed = _parse_row(cells)
            if parsed is None:
                if not rows and labels is None:
                    labels = cells
                    continue
                raise InputError(f"{path}:{lineno}: non-numeric cell in data row")
            if width is None:
                width = len(parsed)
            elif len(parsed) != width:
                raise InputError(
                    f"{path}:{lineno}: row has {len(parsed)} cells, expected {width}"
                )
            rows.append(parsed)
    if not rows:
        raise InputError(f"{path}: no data rows")
    values = np.asarray(rows, dtype=float)
    if labels is not None and len(labels) != values.shape[1]:
        raise InputError(
            f"{path}: header names {len(labels)} columns, data has {values.shape[1]}"
        )
    return TimeSeries(values=values, dt=dt, labels=tuple(labels) if labels else None)


def write_table(path, header, rows, comments=()):
    """Write a plot-ready CSV table.

    ``rows`` is an iterable of value sequences; floats are rendered with
    repr so they round-trip exactly.  ``comments`` become '#' footer lines.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")
        for comment in comments:
            fh.write(f"# {comment}\n")


def _csv_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_series(path, series, comments=()):
    labels = series.labels or tuple(f"ch{i}" for i in range(series.values.shape[1]))
    write_table(path, labels, series.values, comments=comments)


# ---------------------------------------------------------------------------
# Embedding

def write_embedding(path, embedding):
    doc = {
        "schema": EMBEDDING_SCHEMA,
        "tau": embedding.tau,
        "m": embedding.m,
        "dt": embedding.dt,
        "source_channel": embedding.source_channel,
        "states": embedding.states,
    }
    write_json(path, doc)


def read_embedding(path):
    doc = load_json(path)
    _expect_schema(doc, EMBEDDING_SCHEMA, path)
    try:
        return DelayEmbedding(
            states=np.asarray(doc["states"], dtype=float),
            tau=int(doc["tau"]),
            m=int(doc["m"]),
            source_channel=int(doc["source_channel"]),
            dt=float(doc["dt"]),
        )
    except KeyError as exc:
        raise InputError(f"{path}: missing embedding field {exc}") from exc


# ---------------------------------------------------------------------------
# Forcing basis terms

def term_to_dict(term):
    if isinstance(term, Sinusoid):
        return {
            "type": "sinusoid",
            "omega": term.omega,
            "phi": term.phi,
            "time_power": term.time_power,
        }
    if isinstance(term, Exponential):
        return {"type": "exponential", "rate": term.rate, "time_power": term.time_power}
    if isinstance(term, Polynomial):
        return {
            "type": "polynomial",
            "degree": term.degree,
            "coeffs": list(term.coeffs) if term.coeffs is not None else None,
            "time_power": term.time_power,
        }
    if isinstance(term, Product):
        return {
            "type": "product",
            "first": term_to_dict(term.first),
            "second": term_to_dict(term.second),
        }
    raise TypeError(f"unknown basis term {type(term).__name__}")


def term_from_dict(doc):
    kind = doc.get("type")
    if kind == "sinusoid":
        return Sinusoid(
            omega=float(doc["omega"]),
            phi=float(doc["phi"]),
            time_power=float(doc.get("time_power", 1.0)),
        )
    if kind == "exponential":
        return Exponential(
            rate=float(doc["rate"]), time_power=float(doc.get("time_power", 1.0))
        )
    if kind == "polynomial":
        coeffs = doc.get("coeffs")
        return Polynomial(
            degree=int(doc["degree"]),
            coeffs=tuple(float(c) for c in coeffs) if coeffs is not None else None,
            time_power=float(doc.get("time_power", 1.0)),
        )
    if kind == "product":
        return Product(
            first=term_from_dict(doc["first"]), second=term_from_dict(doc["second"])
        )
    raise InputError(f"unknown basis term type {kind!r}")


def basis_to_list(basis):
    return [term_to_dict(t) for t in basis.terms]


def basis_from_list(items):
    return ForcingBasis(tuple(term_from_dict(d) for d in items))


# ---------------------------------------------------------------------------
# Model

def write_model(path, model):
    doc = {
        "schema": MODEL_SCHEMA,
        "a": model.A,
        "b": model.B,
        "c": model.C,
        "dt": model.dt,
        "basis": basis_to_list(model.basis),
        "embedding_tau": model.embedding_tau,
        "embedding_channel": model.embedding_channel,
    }
    write_json(path, doc)


def read_model(path):
    doc = load_json(path)
    _expect_schema(doc, MODEL_SCHEMA, path)
    try:
        return StateSpaceModel(
            A=np.asarray(doc["a"], dtype=float),
            B=np.asarray(doc["b"], dtype=float),
            C=np.asarray(doc["c"], dtype=float),
            basis=basis_from_list(doc["basis"]),
            dt=float(doc["dt"]),
            embedding_tau=int(doc.get("embedding_tau", 0)),
            embedding_channel=int(doc.get("embedding_channel", 0)),
        )
    except KeyError as exc:
        raise InputError(f"{path}: missing model field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: bad model data: {exc}") from exc


def fit_report_to_dict(report):
    return {
        "residual_rms": list(np.atleast_1d(report.residual_rms)),
        "one_step_nrmse": list(np.atleast_1d(report.one_step_nrmse)),
        "free_run_nrmse": list(np.atleast_1d(report.free_run_nrmse)),
        "condition_estimate": report.condition_estimate,
        "ridge_lambda": report.ridge_lambda,
        "basis_description": list(report.basis_description),
        "warnings": list(report.warnings),
    }


# ---------------------------------------------------------------------------
# Symmetry report

def transform_to_dict(t):
    return {
        "class": t.transform_class.value,
        "source_segment": t.source_segment,
        "target_segment": t.target_segment,
        "residual": t.residual,
        "rotation": t.rotation,
        "scale": t.scale,
        "translation": t.translation,
        "affine": t.affine if t.affine is not None else None,
    }


def transform_from_dict(doc):
    affine = doc.get("affine")
    return SymmetryTransform(
        transform_class=TransformClass(doc["class"]),
        rotation=np.asarray(doc["rotation"], dtype=float),
        scale=float(doc["scale"]),
        translation=np.asarray(doc["translation"], dtype=float),
        affine=np.asarray(affine, dtype=float) if affine is not None else None,
        residual=float(doc["residual"]),
        source_segment=int(doc["source_segment"]),
        target_segment=int(doc["target_segment"]),
    )


def symmetry_report_to_dict(report):
    return {
        "schema": SYMMETRY_SCHEMA,
        "class_histogram": {cls.value: n for cls, n in report.class_histogram.items()},
        "dominant_class": report.dominant_class.value if report.dominant_class else None,
        "tie": report.tie,
        "threshold": report.threshold,
        "diameter": report.diameter,
        "recommended_basis": basis_to_list(report.recommended_basis),
        "transforms": [transform_to_dict(t) for t in report.transforms],
        "warnings": list(report.warnings),
    }


def write_symmetry_report(path, report):
    write_json(path, symmetry_report_to_dict(report))


def read_symmetry_report(path):
    doc = load_json(path)
    _expect_schema(doc, SYMMETRY_SCHEMA, path)
    try:
        histogram = {
            TransformClass(name): int(n) for name, n in doc["class_histogram"].items()
        }
        dominant = doc.get("dominant_class")
        return SymmetryReport(
            transforms=[transform_from_dict(d) for d in doc["transforms"]],
            class_histogram=histogram,
            dominant_class=TransformClass(dominant) if dominant else None,
            recommended_basis=basis_from_list(doc["recommended_basis"]),
            threshold=float(doc["threshold"]),
            diameter=float(doc["diameter"]),
            tie=bool(doc.get("tie", False)),
            warnings=list(doc.get("warnings", [])),
        )
    except KeyError as exc:
        raise InputError(f"{path}: missing symmetry field {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: bad symmetry data: {exc}") from exc


# ---------------------------------------------------------------------------
# Validation metrics

def dimension_to_dict(est):
    if est is None:
        return None
    return {
        "dimension": est.dimension,
        "r_squared": est.r_squared,
        "fit_range": list(est.fit_range),
        "reliable": est.reliable,
        "n_points": est.n_points,
        "warnings": list(est.warnings),
    }


def lyapunov_to_dict(est):
    if est is None:
        return None
    return {
        "exponent": est.exponent,
        "fit_range": list(est.fit_range),
        "n_pairs": est.n_pairs,
        "warnings": list(est.warnings),
    }


def comparison_to_dict(report):
    return {
        "schema": COMPARISON_SCHEMA,
        "nrmse": list(np.atleast_1d(report.nrmse)),
        "histogram_distance": list(np.atleast_1d(report.histogram_distance)),
        "dimension_delta": report.dimension_delta,
        "reference_dimension": report.reference_dimension,
        "modeled_dimension": report.modeled_dimension,
        "warnings": list(report.warnings),
    }


# ---------------------------------------------------------------------------
# Config

def parse_config(path, defaults):
    """Parse a flat key=value config file against ``defaults``.

    Unknown keys are rejected.  Values are coerced to the type of the
    default for the same key; booleans accept true/false/1/0.
    """
    if not os.path.exists(path):
        raise NotFoundError(f"no such config file: {path}")
    values = dict(defaults)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in defaults:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, text, defaults[key], path, lineno)
    return values


def _coerce(key, text, default, path, lineno):
    kind = type(default)
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in ("true", "1"):
                return True
            if lowered in ("false", "0"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(
            f"{path}:{lineno}: bad value {text!r} for {key!r}, expected {kind.__name__}"
        ) from exc
