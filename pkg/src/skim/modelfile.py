"""JSON model persistence.

Floats go through ``json``'s shortest round-trip repr, so a saved and
reloaded model reproduces forward outputs bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import FormatError
from .kernels import KernelSpec
from .network import HiddenLayer, SkimModel

FORMAT_VERSION = 1


def jsonable(x):
    """Recursively convert numpy values to JSON types; non-finite floats become ``None``."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def model_to_dict(model: SkimModel) -> dict:
    h = model.hidden
    return {
        "format_version": FORMAT_VERSION,
        "L": h.n_inputs,
        "n_event_inputs": h.n_event_inputs,
        "M": h.n_hidden,
        "N": model.n_outputs,
        "nonlinearity": h.nonlinearity,
        "w1": h.w1.ravel().tolist(),
        "kernel_bank": [k.to_dict() for k in h.kernels],
        "w2": model.w2.ravel().tolist(),
        "theta": model.theta.tolist(),
        "training": jsonable(model.meta),
    }


def model_from_dict(d: dict) -> SkimModel:
    try:
        if d["format_version"] != FORMAT_VERSION:
            raise FormatError(f"unsupported model format_version {d['format_version']}")
        L, M, N = int(d["L"]), int(d["M"]), int(d["N"])
        w1 = np.array(d["w1"], dtype=np.float64)
        w2 = np.array(d["w2"], dtype=np.float64)
        if w1.size != M * L or w2.size != N * M or len(d["kernel_bank"]) != M:
            raise FormatError("model dimensions are inconsistent")
        hidden = HiddenLayer(
            w1.reshape(M, L),
            [KernelSpec.from_dict(k) for k in d["kernel_bank"]],
            int(d["n_event_inputs"]),
            d["nonlinearity"],
        )
        return SkimModel(hidden, w2.reshape(N, M), np.array(d["theta"], dtype=np.float64),
                         meta=dict(d.get("training", {})))
    except KeyError as e:
        raise FormatError(f"model file missing field {e.args[0]!r}") from None


def save_model(model: SkimModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> SkimModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e})") from None
    return model_from_dict(d)
