"""CSV files with a one-line JSON metadata header.

Layout::

    # {"kind": ..., "seed": ...}
    value
    0.123...

Floats are written with ``repr`` so a round trip is exact and reruns are
byte-identical.
"""
import csv
import json
import os

import numpy as np

from .errors import IoError
from .mellin import SampleSet


def _fmt(x):
    return repr(float(x))


def ensure_dir(path, create=False):
    """Return ``path`` if it is a directory; make it only when ``create`` is set."""
    if os.path.isdir(path):
        return path
    if create:
        try:
            os.makedirs(path, exist_ok=True)
        except OSError as exc:
            raise IoError(f"cannot create {path}: {exc}") from exc
        return path
    raise IoError(f"output directory {path!r} does not exist (use --create)")


def write_table(path, header, rows, meta=None):
    """Write rows of numbers/strings; floats via repr."""
    try:
        with open(path, "w", newline="") as fh:
            if meta is not None:
                fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path


def read_table(path):
    """Return ``(meta, header, rows)`` with rows as lists of strings."""
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    meta = {}
    if lines and lines[0].startswith("#"):
        try:
            meta = json.loads(lines[0][1:])
        except json.JSONDecodeError as exc:
            raise IoError(f"bad metadata header in {path}") from exc
        lines = lines[1:]
    if not lines:
        raise IoError(f"{path} has no header row")
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def write_samples(path, samples, meta=None):
    info = {"seed": samples.seed, "model_tag": samples.model_tag}
    info.update(meta or {})
    return write_table(path, ["value"], ([v] for v in samples.values), info)


def read_samples(path):
    meta, header, rows = read_table(path)
    if header[:1] != ["value"]:
        raise IoError(f"{path}: expected a 'value' column")
    try:
        values = np.array([float(r[0]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise IoError(f"{path}: non-numeric sample value") from exc
    return SampleSet(values, seed=int(meta.get("seed", 0)), model_tag=meta.get("model_tag", ""))


def write_estimate(path, estimate, meta=None):
    cfg = estimate.config.to_dict() if hasattr(estimate.config, "to_dict") else {}
    info = {"config": cfg, "cutoffs": estimate.bandwidth_or_cutoffs,
            "imag_residue": estimate.imag_residue}
    info.update(meta or {})
    return write_table(path, ["x", "density"], zip(estimate.x_grid, estimate.values), info)


def read_estimate(path):
    """Return ``(meta, x, values)``."""
    meta, header, rows = read_table(path)
    if header[:2] != ["x", "density"]:
        raise IoError(f"{path}: expected columns x, density")
    arr = np.array([[float(a), float(b)] for a, b in rows]).reshape(-1, 2)
    return meta, arr[:, 0], arr[:, 1]
