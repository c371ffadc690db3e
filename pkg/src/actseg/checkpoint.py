"""Checkpoint persistence: ``manifest.json`` + ``params.bin``.

``params.bin`` is the concatenation of every parameter array as little-endian
IEEE-754 values, in manifest order; the manifest records names, shapes, dtype
and the config needed to rebuild the model. Round-trips are bitwise exact.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np
import torch

from .errors import ChecksumError, CompatibilityError, FormatError
from .graph import SkeletonGraph, build_skeleton_graph

FORMAT_VERSION = 1

_DTYPES = {
    "float64": (torch.float64, np.dtype("<f8")),
    "float32": (torch.float32, np.dtype("<f4")),
}


def _config_dict(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    for k, v in d.items():
        if isinstance(v, tuple):
            d[k] = list(v)
    return d


def save_checkpoint(model: torch.nn.Module, path, epoch: int = 0) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    params = list(model.named_parameters())
    dtype_name = "float64" if params[0][1].dtype == torch.float64 else "float32"
    _, np_dtype = _DTYPES[dtype_name]
    # float buffers (e.g. batch-norm running stats) ride along after the
    # parameters; integer buffers are derivable and skipped
    buffers = [
        (name, b) for name, b in model.named_buffers() if b.is_floating_point()
    ]
    manifest = {
        "format_version": FORMAT_VERSION,
        "model_type": model.model_type,
        "config": _config_dict(model.cfg),
        "seed": getattr(model, "seed", 0),
        "epoch": int(epoch),
        "dtype": dtype_name,
        "params": [
            {"name": name, "shape": list(p.shape)} for name, p in params
        ],
        "buffers": [
            {"name": name, "shape": list(b.shape)} for name, b in buffers
        ],
    }
    graph = getattr(model, "graph", None)
    if graph is not None:
        manifest["graph"] = {
            "num_joints": graph.num_joints,
            "edges": [list(e) for e in graph.edges],
        }
    blob = b"".join(
        t.detach().cpu().numpy().astype(np_dtype, copy=False).tobytes()
        for _, t in list(params) + buffers
    )
    (path / "manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    (path / "params.bin").write_bytes(blob)


def _build_model(manifest: dict) -> torch.nn.Module:
    model_type = manifest.get("model_type")
    cfg_dict = dict(manifest["config"])
    seed = manifest.get("seed", 0)
    if model_type == "pomsgcn":
        from .models.pomsgcn import PomsgcnConfig, PomsgcnModel

        if "dilations" in cfg_dict and cfg_dict["dilations"] is not None:
            cfg_dict["dilations"] = tuple(cfg_dict["dilations"])
        graph_spec = manifest.get("graph")
        if graph_spec is None:
            raise CompatibilityError("pomsgcn checkpoint missing graph section")
        graph = build_skeleton_graph(graph_spec["num_joints"], graph_spec["edges"])
        return PomsgcnModel(PomsgcnConfig(**cfg_dict), graph, seed=seed)
    if model_type == "transformer":
        from .models.transformer import TransformerConfig, TransformerModel

        return TransformerModel(TransformerConfig(**cfg_dict), seed=seed)
    if model_type == "fusion":
        from .fusion import FusionClassifier, FusionClassifierConfig

        return FusionClassifier(FusionClassifierConfig(**cfg_dict), seed=seed)
    raise CompatibilityError(f"unknown model type {model_type!r}")


def load_checkpoint(path) -> tuple[torch.nn.Module, dict]:
    path = Path(path)
    manifest_path = path / "manifest.json"
    blob_path = path / "params.bin"
    if not manifest_path.exists() or not blob_path.exists():
        raise FormatError(f"{path} is not a checkpoint directory")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CompatibilityError(
            f"unsupported checkpoint format {manifest.get('format_version')!r}"
        )
    dtype_name = manifest.get("dtype", "float64")
    if dtype_name not in _DTYPES:
        raise CompatibilityError(f"unknown dtype {dtype_name!r}")
    torch_dtype, np_dtype = _DTYPES[dtype_name]
    blob = blob_path.read_bytes()
    entries = list(manifest["params"]) + list(manifest.get("buffers", []))
    expected = sum(int(np.prod(e["shape"])) for e in entries) * np_dtype.itemsize
    if len(blob) != expected:
        raise ChecksumError(
            f"params.bin has {len(blob)} bytes, manifest implies {expected}"
        )
    model = _build_model(manifest)
    model.to(torch_dtype)
    model_params = dict(model.named_parameters())
    model_buffers = {
        name: b for name, b in model.named_buffers() if b.is_floating_point()
    }
    n_params = len(manifest["params"])
    offset = 0
    with torch.no_grad():
        for i, entry in enumerate(entries):
            name = entry["name"]
            shape = tuple(entry["shape"])
            pool = model_params if i < n_params else model_buffers
            if name not in pool:
                raise CompatibilityError(f"unknown parameter name {name!r}")
            p = pool.pop(name)
            if tuple(p.shape) != shape:
                raise CompatibilityError(
                    f"parameter {name!r}: checkpoint shape {shape},"
                    f" model shape {tuple(p.shape)}"
                )
            count = int(np.prod(shape))
            values = np.frombuffer(
                blob, dtype=np_dtype, count=count, offset=offset
            ).reshape(shape)
            offset += count * np_dtype.itemsize
            p.copy_(torch.as_tensor(values.copy(), dtype=torch_dtype))
    if model_params:
        raise CompatibilityError(
            f"checkpoint missing parameters: {sorted(model_params)}"
        )
    model.eval()
    return model, manifest
