"""File formats: dataset containers, run traces, summaries, manifests.

Datasets rides in two interchangeable containers:

* CSV - one row per sample, d feature columns then the response column,
  written with 17 significant digits so float64 values round-trip exactly.
* NPZ - binary arrays X, y plus a JSON metadata header (n, d, family,
  seed, schema version) for exact replay.

Run traces are CSV with the fixed header
``iter,f_value,step_size,grad_ht_norm_sq,error_sq,support_size`` and 12
significant digits.  All writes are atomic (temp file + rename) so
concurrent sweep cells never observe partial artifacts.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .objectives import Dataset
from .optimizer import RunTrace

SCHEMA_VERSION = 1
TRACE_HEADER = "iter,f_value,step_size,grad_ht_norm_sq,error_sq,support_size"


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def config_hash(echo: dict) -> str:
    """Short content hash of a canonicalized configuration echo."""
    blob = json.dumps(echo, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def trace_csv_text(trace: RunTrace) -> str:
    lines = [TRACE_HEADER]
    has_err = trace.error_sq is not None
    for i in range(len(trace)):
        err = f"{trace.error_sq[i]:.12g}" if has_err else "nan"
        lines.append(
            f"{trace.iters[i]},{trace.f_value[i]:.12g},{trace.step_size[i]:.12g},"
            f"{trace.grad_ht_norm_sq[i]:.12g},{err},{trace.support_size[i]}"
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(trace: RunTrace, path) -> None:
    atomic_write_text(path, trace_csv_text(trace))


def write_summary_json(path, trace: RunTrace, echo: dict, iters_to_floor: int | None = None) -> None:
    """Final error, floor timing, status, and a hashed config echo."""
    summary = {
        "status": trace.status.value,
        "iterations": int(trace.iters[-1]),
        "final_f_value": float(trace.f_value[-1]),
        "final_error_sq": None if trace.error_sq is None else float(trace.error_sq[-1]),
        "final_support_size": int(trace.support_size[-1]),
        "iters_to_floor": iters_to_floor,
        "config": echo,
        "config_hash": config_hash(echo),
    }
    atomic_write_text(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_manifest(path, echo: dict, seeds: list[int], toolkit_version: str) -> None:
    """Everything required to reproduce the artifact directory byte-for-byte."""
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": toolkit_version,
        "seeds": list(map(int, seeds)),
        "config": echo,
        "config_hash": config_hash(echo),
    }
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def dataset_to_csv(data: Dataset, path) -> None:
    rows = []
    for i in range(data.n):
        feats = ",".join(f"{v:.17g}" for v in data.X[i])
        rows.append(f"{feats},{data.y[i]:.17g}")
    atomic_write_text(path, "\n".join(rows) + "\n")


def dataset_from_csv(path) -> Dataset:
    raw = np.loadtxt(path, delimiter=",", ndmin=2)
    if raw.shape[1] < 2:
        raise ValueError("dataset CSV needs at least one feature column and a response column")
    return Dataset(X=raw[:, :-1], y=raw[:, -1])


def dataset_to_npz(data: Dataset, path, family: str, seed: int) -> None:
    meta = {
        "schema_version": SCHEMA_VERSION,
        "n": data.n,
        "d": data.d,
        "family": family,
        "seed": int(seed),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    os.close(fd)
    try:
        with open(tmp, "wb") as fh:
            np.savez(fh, X=data.X, y=data.y, meta=json.dumps(meta, sort_keys=True))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_from_npz(path) -> tuple[Dataset, dict]:
    with np.load(path, allow_pickle=False) as archive:
        meta = json.loads(str(archive["meta"]))
        data = Dataset(X=archive["X"], y=archive["y"])
    if meta.get("n") != data.n or meta.get("d") != data.d:
        raise ValueError("NPZ metadata does not match array shapes")
    return data, meta
