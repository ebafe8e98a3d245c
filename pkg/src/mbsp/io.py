"""File formats: sample records, CSV curves, JSON reports and run manifests.

Sample files key every value by exact grid coordinates ``(n, k, q)``: the
instant ``nT + T q/Q_k``.  The binary layout is little-endian::

    header  : magic b"MBSP", version u32, count u64
    record  : n i64, k u16, q u32, re f64, im f64

A CSV file with header ``n,k,q,re,im`` carries the same records.
Every writer goes through a temporary file and ``os.replace`` so readers
never observe a partial file.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import struct
import sys
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import ValidationError

MAGIC = b"MBSP"
VERSION = 1
HEADER = struct.Struct("<4sIQ")
RECORD = np.dtype([("n", "<i8"), ("k", "<u2"), ("q", "<u4"), ("re", "<f8"), ("im", "<f8")])


@contextmanager
def atomic_open(path, mode: str = "w"):
    """Open a temporary sibling of ``path`` and move it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"newline": ""})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, doc) -> None:
    with atomic_open(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=False, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def write_csv(path, header, columns) -> None:
    """Columns of equal length under a header row; floats keep full precision."""
    cols = [np.asarray(c) for c in columns]
    if len({len(c) for c in cols}) > 1:
        raise ValidationError("CSV columns differ in length")
    with atomic_open(path) as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty CSV")
    head, body = rows[0], rows[1:]
    return {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(head)}


# -- sample records ------------------------------------------------------------

def pack_records(n, k, q, values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    rec = np.empty(len(values), dtype=RECORD)
    rec["n"], rec["k"], rec["q"] = n, k, q
    rec["re"], rec["im"] = values.real, values.imag
    return rec


def write_samples(path, n, k, q, values) -> None:
    """Write records; the format follows the suffix (``.csv`` or binary)."""
    rec = pack_records(n, k, q, values)
    if str(path).endswith(".csv"):
        write_csv(path, ["n", "k", "q", "re", "im"],
                  [rec["n"], rec["k"], rec["q"], rec["re"], rec["im"]])
        return
    with atomic_open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, len(rec)))
        fh.write(rec.tobytes())


def read_samples(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(n, k, q, values)`` from a binary or CSV sample file."""
    if str(path).endswith(".csv"):
        cols = read_csv(path)
        try:
            return (cols["n"].astype(np.int64), cols["k"].astype(np.int64),
                    cols["q"].astype(np.int64), cols["re"] + 1j * cols["im"])
        except KeyError as exc:
            raise ValidationError(f"{path}: missing column {exc}") from None
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    if len(data) < HEADER.size:
        raise ValidationError(f"{path}: truncated header")
    magic, version, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValidationError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValidationError(f"{path}: unsupported version {version}")
    if len(data) != HEADER.size + count * RECORD.itemsize:
        raise ValidationError(f"{path}: expected {count} records")
    rec = np.frombuffer(data, dtype=RECORD, offset=HEADER.size, count=count)
    return (rec["n"].astype(np.int64), rec["k"].astype(np.int64), rec["q"].astype(np.int64),
            rec["re"] + 1j * rec["im"])


# -- provenance ------------------------------------------------------------------

def config_hash(doc: dict) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _versions() -> dict:
    import scipy
    from importlib import metadata
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"python": sys.version.split()[0], "platform": platform.platform(),
            "numpy": np.__version__, "scipy": scipy.__version__, "artifact": own}


def manifest(command: str, config: dict, seeds: dict, outputs, argv=None) -> dict:
    return {"command": command, "config_sha256": config_hash(config), "config": config,
            "seeds": seeds, "versions": _versions(), "argv": list(argv or []),
            "outputs": sorted(str(o) for o in outputs)}
