"""On-disk model format.

A model directory holds

``model.bits``
    B packed one bit per entry, row-major over the r x N matrix, most
    significant bit first (``numpy.packbits`` big bit order); +1 -> 1,
    -1 -> 0. The final byte is zero-padded.
``model.json``
    r, n_samples, n_views, hyperparameters, view weights ``a``,
    ``objective_trace`` and the names/shapes of the projection files.
``h<v>.f64``
    projection H_v as raw little-endian float64, row-major r x s.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dataset import write_matrix_f64
from .errors import GmblError
from .optimizer import GmblHyperParams, GmblModel

FORMAT = "gmbl-model/1"


def pack_codes(b: np.ndarray) -> bytes:
    return np.packbits((np.asarray(b) > 0).astype(np.uint8).ravel(), bitorder="big").tobytes()


def unpack_codes(raw: bytes, r: int, n: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=r * n, bitorder="big")
    return np.where(bits.reshape(r, n) == 1, 1.0, -1.0)


def save_model(model: GmblModel, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    (path / "model.bits").write_bytes(pack_codes(model.b))
    h_files = []
    for v, h in enumerate(model.h):
        name = f"h{v}.f64"
        write_matrix_f64(path / name, h)
        h_files.append({"file": name, "shape": list(h.shape)})
    meta = {
        "format": FORMAT,
        "r": model.r,
        "n_samples": model.n_samples,
        "n_views": model.n_views,
        "bit_order": "big",
        "hyperparameters": vars(model.hp).copy(),
        "a": [float(x) for x in model.a],
        "objective_trace": [float(x) for x in model.objective_trace],
        "projections": h_files,
    }
    (path / "model.json").write_text(json.dumps(meta, indent=2) + "\n")
    return path


def load_model(path) -> GmblModel:
    path = Path(path)
    meta = json.loads((path / "model.json").read_text())
    if meta.get("format") != FORMAT:
        raise GmblError(f"{path}: unsupported model format {meta.get('format')!r}")
    r, n = meta["r"], meta["n_samples"]
    b = unpack_codes((path / "model.bits").read_bytes(), r, n)
    h = []
    for entry in meta["projections"]:
        shape = tuple(entry["shape"])
        h.append(np.fromfile(path / entry["file"], dtype="<f8").reshape(shape))
    hp = GmblHyperParams(**meta["hyperparameters"])
    return GmblModel(b, h, np.array(meta["a"]), hp, list(meta["objective_trace"]))
