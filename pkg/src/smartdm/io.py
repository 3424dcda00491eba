"""Spec JSON, CSV and result-bundle persistence."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .glm import CandidateModel
from .objective import ProblemSpec

FORMAT_VERSION = 1


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, rows):
    """Headerless CSV with shortest round-trip decimals; 1-D input becomes one column."""
    arr = rows
    if isinstance(rows, np.ndarray):
        arr = rows[:, None] if rows.ndim == 1 else rows
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in arr:
            vals = row if isinstance(row, (tuple, list)) else np.atleast_1d(row)
            w.writerow([_fmt(v) for v in vals])


def read_csv(path):
    """Read a headerless numeric CSV as a 2-D float array."""
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise InvalidInput(f"{path} is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInput(f"{path} has ragged rows")
    return np.array(rows)


def _matrix(a):
    return [[float(v) for v in row] for row in np.atleast_2d(np.asarray(a, dtype=float))]


def spec_to_dict(spec):
    """JSON-ready dictionary; identical ``X`` matrices are stored once under ``matrices``."""
    keys, matrices, models = {}, {}, []
    for mdl in spec.models:
        digest = hashlib.sha256(np.ascontiguousarray(mdl.X).tobytes() + str(mdl.X.shape).encode()).hexdigest()
        if digest not in keys:
            keys[digest] = f"X{len(keys)}"
            matrices[keys[digest]] = _matrix(mdl.X)
        models.append({
            "X_ref": keys[digest],
            "snr": [float(v) for v in mdl.snr],
            "c_X": [float(v) for v in mdl.c_X],
            "w": float(mdl.w),
            "phi": float(mdl.phi),
        })
    d = spec.d
    return {
        "format": FORMAT_VERSION,
        "name": spec.name,
        "n": spec.n,
        "p": spec.p,
        "contrasts": spec.n_contrasts,
        "A": _matrix(spec.A) if spec.A.size else [],
        "B": _matrix(spec.B) if spec.B.size else [],
        "C": _matrix(spec.C) if spec.C.size else [],
        "d": (_matrix(d) if d.ndim == 2 else [float(v) for v in d]),
        "extra": spec.extra,
        "matrices": matrices,
        "models": models,
    }


def dumps_spec(spec):
    return json.dumps(spec_to_dict(spec), indent=1, allow_nan=False) + "\n"


def _field(doc, key, where="spec"):
    if key not in doc:
        raise InvalidInput(f"{where}: missing field '{key}'")
    return doc[key]


def _array(value, name):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"field '{name}' is not numeric") from exc
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"field '{name}' contains non-finite values")
    return arr


def spec_from_dict(doc, base_dir=None):
    """Build a :class:`ProblemSpec`; ``X_csv`` paths resolve against ``base_dir``."""
    if not isinstance(doc, dict):
        raise InvalidInput("spec must be a JSON object")
    base_dir = Path(base_dir) if base_dir is not None else Path(".")
    n = int(_field(doc, "n"))
    p = int(_field(doc, "p"))
    matrices = doc.get("matrices", {})
    raw_models = _field(doc, "models")
    if not isinstance(raw_models, list) or not raw_models:
        raise InvalidInput("field 'models' must be a non-empty list")
    models = []
    for i, m in enumerate(raw_models):
        where = f"models[{i}]"
        if "X" in m:
            X = _array(m["X"], f"{where}.X")
        elif "X_ref" in m:
            if m["X_ref"] not in matrices:
                raise InvalidInput(f"{where}.X_ref: unknown matrix '{m['X_ref']}'")
            X = _array(matrices[m["X_ref"]], f"matrices.{m['X_ref']}")
        elif "X_csv" in m:
            path = base_dir / m["X_csv"]
            if not path.exists():
                raise InvalidInput(f"{where}.X_csv: file not found: {path}")
            X = read_csv(path)
        else:
            raise InvalidInput(f"{where}: needs one of 'X', 'X_ref' or 'X_csv'")
        try:
            models.append(CandidateModel(X, _array(_field(m, "snr", where), f"{where}.snr"),
                                         _array(_field(m, "c_X", where), f"{where}.c_X"),
                                         float(m.get("w", 1.0)), float(m.get("phi", 0.5))))
        except InvalidInput as exc:
            raise type(exc)(f"{where}: {exc}") from exc

    def opt(key):
        v = doc.get(key)
        return None if v is None or (isinstance(v, list) and not v) else _array(v, key)

    return ProblemSpec(models, n, p, opt("A"), opt("B"), opt("C"), opt("d"),
                       int(doc.get("contrasts", 1)), str(doc.get("name", "")),
                       dict(doc.get("extra", {})))


def loads_spec(text, base_dir=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return spec_from_dict(doc, base_dir)


def load_spec(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInput(f"cannot read spec {path}: {exc.strerror}") from exc
    return loads_spec(text, path.parent)


def save_spec(spec, path):
    Path(path).write_text(dumps_spec(spec))


def write_result(result, directory):
    """``Z_hat.csv``, ``c_hat.csv``, ``objective.txt`` and ``trace.csv`` for one solver run."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(directory / "Z_hat.csv", np.asarray(result.Z_hat))
    write_csv(directory / "c_hat.csv", np.asarray(result.c_hat))
    (directory / "objective.txt").write_text(_fmt(result.F_hat) + "\n")
    write_csv(directory / "trace.csv", [(int(j), F, a, bool(acc)) for j, F, a, acc in result.trace])


def read_design(directory):
    """``(Z, c)`` from a bundle directory."""
    directory = Path(directory)
    for name in ("Z_hat.csv", "c_hat.csv"):
        if not (directory / name).exists():
            raise InvalidInput(f"{directory} has no {name}")
    Z = read_csv(directory / "Z_hat.csv")
    c = read_csv(directory / "c_hat.csv")
    return Z, (c[:, 0] if c.shape[1] == 1 else c)


def write_manifest(directory, manifest):
    Path(directory, "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cosine(a, b):
    a = np.ravel(a)
    b = np.ravel(b)
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(a @ b) / denom if denom > 0 else math.nan
