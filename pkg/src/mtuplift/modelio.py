"""Plain-text model documents.

A document is a header line ``mtuplift-model<TAB>1`` followed by sections::

    [name]
    key<TAB>value<TAB>value...

Floats are written with 17 significant digits, so reading a document back
reproduces every coefficient exactly.  A multi-treatment model is a
directory holding ``manifest.txt`` and one ``treatment_<t>.model`` per
treatment label.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._fileutil import atomic_directory, atomic_open, fmt
from .baselearn import LinearModel
from .calibrate import CalibratedLearner, IsotonicModel
from .errors import DatasetError, ValidationError
from .metalearn import FittedMetaModel, MultiTreatmentModel

FORMAT = "mtuplift-model"
MANIFEST_FORMAT = "mtuplift-manifest"
VERSION = "1"
MANIFEST = "manifest.txt"


def model_filename(t: int) -> str:
    return f"treatment_{int(t)}.model"


def _check_token(s):
    if any(c in s for c in "\t\n\r"):
        raise ValidationError(f"name {s!r} contains a tab or newline and cannot be serialized")
    return s


def dumps(sections, fmt_name=FORMAT) -> str:
    lines = [f"{fmt_name}\t{VERSION}"]
    for name, fields in sections:
        lines.append(f"[{name}]")
        for key, values in fields.items():
            lines.append("\t".join([key, *(_check_token(str(v)) for v in values)]))
    return "\n".join(lines) + "\n"


def loads(text: str, fmt_name=FORMAT, source="<string>"):
    lines = text.splitlines()
    if not lines or lines[0].split("\t") != [fmt_name, VERSION]:
        raise DatasetError(f"{source}: not a {fmt_name} version {VERSION} document", row=1)
    sections = {}
    current = None
    for line_no, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = {}
            sections[line[1:-1]] = current
            continue
        if current is None:
            raise DatasetError(f"{source}: field outside a section", row=line_no)
        key, *values = line.split("\t")
        current[key] = values
    return sections


def _floats(values):
    return np.array([float(v) for v in values], dtype=np.float64)


def _linear_fields(m: LinearModel):
    return {
        "type": ["linear"],
        "kind": [m.kind],
        "features": list(m.feature_names),
        "intercept": [fmt(m.intercept)],
        "weights": [fmt(w) for w in m.weights],
    }


def _linear_from(fields) -> LinearModel:
    return LinearModel(
        _floats(fields["weights"]), float(fields["intercept"][0]), fields["kind"][0],
        tuple(fields.get("features", [])),
    )


def _outcome_sections(name, model):
    if isinstance(model, LinearModel):
        return [(name, _linear_fields(model))]
    if isinstance(model, CalibratedLearner):
        out = [(name, {"type": ["calibrated"], "folds": [str(model.k)]})]
        for i, (base, iso) in enumerate(model.folds):
            out.append((f"{name}.fold{i}.base", _linear_fields(base)))
            out.append((
                f"{name}.fold{i}.iso",
                {
                    "type": ["isotonic"],
                    "knots_x": [fmt(v) for v in iso.knots_x],
                    "knots_y": [fmt(v) for v in iso.knots_y],
                },
            ))
        return out
    raise ValidationError(f"cannot serialize outcome model of type {type(model).__name__}")


def _outcome_from(sections, name):
    fields = sections[name]
    kind = fields["type"][0]
    if kind == "linear":
        return _linear_from(fields)
    if kind == "calibrated":
        folds = []
        for i in range(int(fields["folds"][0])):
            iso = sections[f"{name}.fold{i}.iso"]
            folds.append((
                _linear_from(sections[f"{name}.fold{i}.base"]),
                IsotonicModel(_floats(iso["knots_x"]), _floats(iso["knots_y"])),
            ))
        return CalibratedLearner(tuple(folds))
    raise DatasetError(f"section {name!r}: unknown model type {kind!r}")


SUBMODELS = ("s_model", "mu0", "mu1", "tau0", "tau1", "propensity")


def linear_to_text(model: LinearModel) -> str:
    return dumps([("model", _linear_fields(model))])


def linear_from_text(text: str) -> LinearModel:
    return _linear_from(loads(text)["model"])


def meta_to_text(model: FittedMetaModel) -> str:
    sections = [(
        "meta",
        {
            "kind": [model.kind],
            "features": list(model.feature_names),
            "binary_outcome": [str(model.binary_outcome).lower()],
            "calibrated": [str(model.calibrated).lower()],
        },
    )]
    for name in SUBMODELS:
        sub = getattr(model, name)
        if sub is not None:
            sections.extend(_outcome_sections(name, sub))
    return dumps(sections)


def meta_from_text(text: str, source="<string>") -> FittedMetaModel:
    sections = loads(text, source=source)
    try:
        meta = sections["meta"]
        subs = {name: _outcome_from(sections, name) for name in SUBMODELS if name in sections}
        return FittedMetaModel(
            meta["kind"][0],
            tuple(meta["features"]),
            meta["binary_outcome"][0] == "true",
            meta["calibrated"][0] == "true",
            **subs,
        )
    except (KeyError, IndexError, ValueError) as exc:
        raise DatasetError(f"{source}: malformed model document ({exc})") from None


def save_multi(model: MultiTreatmentModel, path, extra=None) -> None:
    """Write a model directory atomically (replacing any existing one)."""
    manifest = {
        "kind": [model.kind],
        "calibrated": [str(model.calibrated).lower()],
        "treatments": [str(t) for t in model.treatment_labels],
        "features": list(model.feature_names),
    }
    for key, value in (extra or {}).items():
        manifest[key] = [str(v) for v in (value if isinstance(value, (list, tuple)) else [value])]
    with atomic_directory(path) as tmp:
        for t in model.treatment_labels:
            with atomic_open(tmp / model_filename(t)) as fh:
                fh.write(meta_to_text(model.per_treatment[t]))
        with atomic_open(tmp / MANIFEST) as fh:
            fh.write(dumps([("manifest", manifest)], MANIFEST_FORMAT))


def read_manifest(path) -> dict:
    path = Path(path) / MANIFEST
    return loads(path.read_text(encoding="utf-8"), MANIFEST_FORMAT, str(path))["manifest"]


def load_multi(path) -> MultiTreatmentModel:
    path = Path(path)
    manifest = read_manifest(path)
    per_treatment = {}
    for t in (int(v) for v in manifest["treatments"]):
        file = path / model_filename(t)
        per_treatment[t] = meta_from_text(file.read_text(encoding="utf-8"), str(file))
    return MultiTreatmentModel(
        manifest["kind"][0],
        tuple(manifest["features"]),
        per_treatment,
        manifest["calibrated"][0] == "true",
    )
