"""Self-describing JSON checkpoints with bit-exact float64 payloads."""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path

import numpy as np

from ntnbeam.actor import ActorConfig, ActorNetwork
from ntnbeam.diffnum import OptimizerState, Tensor

FORMAT_VERSION = "ntnbeam-checkpoint/1"


class CheckpointError(ValueError):
    pass


def fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _encode(arr: np.ndarray, encoding: str) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    doc = {"shape": list(arr.shape), "encoding": encoding}
    if encoding == "base64-f64le":
        doc["data"] = base64.b64encode(arr.tobytes()).decode("ascii")
    elif encoding == "list":
        doc["data"] = [float(v) for v in arr.ravel()]  # repr round-trips exactly
    else:
        raise CheckpointError(f"unknown encoding {encoding!r}")
    return doc


def _decode(doc: dict) -> np.ndarray:
    shape = tuple(doc["shape"])
    if doc["encoding"] == "base64-f64le":
        arr = np.frombuffer(base64.b64decode(doc["data"]), dtype="<f8").astype(np.float64)
    elif doc["encoding"] == "list":
        arr = np.asarray(doc["data"], dtype=np.float64)
    else:
        raise CheckpointError(f"unknown encoding {doc['encoding']!r}")
    return arr.reshape(shape)


def _actor_config_doc(cfg: ActorConfig) -> dict:
    return {
        "users": cfg.users, "antennas": cfg.antennas, "backbone": cfg.backbone, "width": cfg.width,
        "modes": list(cfg.modes), "hidden": cfg.hidden, "rank": cfg.rank, "kernel": cfg.kernel,
        "cnn_channels": list(cfg.cnn_channels), "clamp": cfg.clamp,
    }


def _actor_config_from(doc: dict) -> ActorConfig:
    d = dict(doc)
    d["modes"] = tuple(d["modes"])
    d["cnn_channels"] = tuple(d["cnn_channels"])
    return ActorConfig(**d)


def save_checkpoint(path, actors: dict, config: dict | None = None, episode: int = 0,
                    optimizers: dict | None = None, encoding: str = "base64-f64le") -> Path:
    """Write every actor (name -> ActorNetwork) and optimizer state to ``path``."""
    config = config or {}
    doc = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "config_fingerprint": fingerprint(config),
        "episode": int(episode),
        "actors": {},
        "optimizers": {},
    }
    for name, actor in actors.items():
        doc["actors"][name] = {
            "config": _actor_config_doc(actor.config),
            "params": {k: _encode(t.data, encoding) for k, t in actor.params.items()},
        }
    for name, st in (optimizers or {}).items():
        doc["optimizers"][name] = {
            "lr": st.lr, "beta1": st.beta1, "beta2": st.beta2, "eps": st.eps, "step": st.step,
            "m": {k: _encode(v, encoding) for k, v in st.m.items()},
            "v": {k: _encode(v, encoding) for k, v in st.v.items()},
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)
    return path


def load_checkpoint(path):
    """Return ``(actors, optimizers, document)``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not a checkpoint document ({exc})") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format {doc.get('format_version')!r}")
    actors = {}
    for name, a in doc["actors"].items():
        params = {k: Tensor(_decode(v), requires_grad=True, name=k) for k, v in a["params"].items()}
        actors[name] = ActorNetwork(_actor_config_from(a["config"]), params)
    optimizers = {}
    for name, o in doc.get("optimizers", {}).items():
        optimizers[name] = OptimizerState(
            lr=o["lr"], beta1=o["beta1"], beta2=o["beta2"], eps=o["eps"], step=o["step"],
            m={k: _decode(v) for k, v in o["m"].items()}, v={k: _decode(v) for k, v in o["v"].items()},
        )
    return actors, optimizers, doc
