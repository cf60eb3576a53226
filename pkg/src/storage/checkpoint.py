"""
Model checkpoints: a plain-text manifest plus one binary weight file.

Directory layout::

    manifest.txt   key=value lines; tensor index lines read
                   tensor.<name>=<d0>x<d1>...@<byte offset>
    weights.bin    tensors concatenated as little-endian float64

Floats in the manifest are written with repr() so they reload exactly.
"""

from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from baselines.autoregressive import ArModel
from baselines.gaussian_process import GpHyper, GpModel
from core.ordinal import BinPartition
from core.seq2seq import ORDINAL, REGRESSION, Seq2SeqModel
from utils.errors import ArtifactError
from utils.logger import get_logger

logger = get_logger("storage")

SCHEMA_VERSION = 1
MANIFEST = "manifest.txt"
WEIGHTS = "weights.bin"
DTYPE = np.dtype("<f8")

KIND_MORDRED = "mordred"
KIND_SEQ2SEQ_REG = "seq2seq-reg"
KIND_AR = "ar"
KIND_GP = "gp"
KINDS = (KIND_MORDRED, KIND_SEQ2SEQ_REG, KIND_AR, KIND_GP)

PathLike = Union[str, Path]


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "null"
    return str(value)


def write_checkpoint(path: PathLike, kind: str, header: Dict, tensors: Dict[str, np.ndarray]) -> Path:
    """Write manifest and weights; returns the checkpoint directory."""
    if kind not in KINDS:
        raise ArtifactError(f"Unknown checkpoint kind '{kind}'")
    folder = Path(path)
    folder.mkdir(parents=True, exist_ok=True)

    lines = [f"schema_version={SCHEMA_VERSION}", f"kind={kind}"]
    for key, value in header.items():
        if "=" in str(key) or "\n" in _format(value) or str(key).startswith("tensor."):
            raise ArtifactError(f"Header entry '{key}' cannot be stored in a manifest")
        lines.append(f"{key}={_format(value)}")

    offset = 0
    blobs = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype=DTYPE)
        shape = "x".join(str(d) for d in arr.shape) if arr.ndim else "scalar"
        lines.append(f"tensor.{name}={shape}@{offset}")
        blobs.append(arr.tobytes())
        offset += arr.nbytes

    (folder / MANIFEST).write_text("\n".join(lines) + "\n")
    (folder / WEIGHTS).write_bytes(b"".join(blobs))
    logger.info(f"Checkpoint '{kind}' written to {folder} ({len(tensors)} tensors, {offset} bytes)")
    return folder


def read_checkpoint(path: PathLike) -> Tuple[str, Dict[str, str], Dict[str, np.ndarray]]:
    """
    Returns:
        (kind, header of raw strings, tensors by name)

    Raises:
        FileNotFoundError: no manifest in the directory.
        ArtifactError: malformed manifest or truncated weights.
    """
    folder = Path(path)
    manifest = folder / MANIFEST
    if not manifest.exists():
        raise FileNotFoundError(f"Checkpoint manifest not found: {manifest}")

    header: Dict[str, str] = {}
    index = []
    for n, line in enumerate(manifest.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise ArtifactError(f"{manifest}:{n}: expected key=value, got '{line}'")
        key, value = line.split("=", 1)
        if key.startswith("tensor."):
            try:
                shape_text, offset = value.rsplit("@", 1)
                shape = () if shape_text == "scalar" else tuple(int(d) for d in shape_text.split("x"))
                index.append((key[len("tensor."):], shape, int(offset)))
            except ValueError:
                raise ArtifactError(f"{manifest}:{n}: bad tensor entry '{line}'")
        else:
            header[key] = value

    if header.get("schema_version") != str(SCHEMA_VERSION):
        raise ArtifactError(f"Unsupported checkpoint schema {header.get('schema_version')!r}")
    kind = header.pop("kind", None)
    header.pop("schema_version")
    if kind not in KINDS:
        raise ArtifactError(f"Unknown checkpoint kind {kind!r}")

    raw = (folder / WEIGHTS).read_bytes() if (folder / WEIGHTS).exists() else b""
    tensors = {}
    for name, shape, offset in index:
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * DTYPE.itemsize
        if end > len(raw):
            raise ArtifactError(f"Weights file truncated while reading tensor '{name}'")
        tensors[name] = np.frombuffer(raw, dtype=DTYPE, count=count, offset=offset).reshape(shape).copy()
    return kind, header, tensors


def _bool(text: str) -> bool:
    return text == "true"


def save_seq2seq(path: PathLike, model: Seq2SeqModel, seed: Optional[int] = None,
                 extra: Optional[Dict] = None) -> Path:
    kind = KIND_MORDRED if model.mode == ORDINAL else KIND_SEQ2SEQ_REG
    header = {
        "mode": model.mode,
        "n_u": model.n_u,
        "lookback": model.lookback,
        "p_drop": float(model.p_drop),
        "handoff_dropout": model.handoff_dropout,
        "seed": seed,
    }
    if model.partition is not None:
        header.update({
            "bin_count": model.partition.bin_count,
            "lower_bound": float(model.partition.lower_bound),
            "upper_bound": float(model.partition.upper_bound),
        })
    header.update(extra or {})
    return write_checkpoint(path, kind, header, model.params)


def load_seq2seq(path: PathLike) -> Tuple[Seq2SeqModel, Dict[str, str]]:
    kind, header, tensors = read_checkpoint(path)
    if kind not in (KIND_MORDRED, KIND_SEQ2SEQ_REG):
        raise ArtifactError(f"Checkpoint at {path} holds a '{kind}' model, not a seq2seq network")
    try:
        mode = header["mode"]
        partition = None
        if mode == ORDINAL:
            partition = BinPartition(float(header["lower_bound"]), float(header["upper_bound"]),
                                     int(header["bin_count"]))
        elif mode != REGRESSION:
            raise ArtifactError(f"Unknown mode '{mode}' in checkpoint")
        model = Seq2SeqModel(mode, int(header["n_u"]), tensors, float(header["p_drop"]), partition,
                             int(header["lookback"]), _bool(header.get("handoff_dropout", "false")))
    except (KeyError, ValueError) as e:
        raise ArtifactError(f"Inconsistent seq2seq checkpoint at {path}: {e}")
    return model, header


def save_ar(path: PathLike, m: ArModel, extra: Optional[Dict] = None) -> Path:
    header = {
        "order": m.order,
        "innovation_variance": float(m.innovation_variance),
        "obs_variance": float(m.obs_variance),
    }
    header.update(extra or {})
    return write_checkpoint(path, KIND_AR, header, {"coefficients": m.coefficients})


def load_ar(path: PathLike) -> Tuple[ArModel, Dict[str, str]]:
    kind, header, tensors = read_checkpoint(path)
    if kind != KIND_AR:
        raise ArtifactError(f"Checkpoint at {path} holds a '{kind}' model, not an AR model")
    try:
        m = ArModel(tensors["coefficients"], float(header["innovation_variance"]),
                    float(header["obs_variance"]))
    except (KeyError, ValueError) as e:
        raise ArtifactError(f"Inconsistent AR checkpoint at {path}: {e}")
    return m, header


def save_gp(path: PathLike, m: GpModel, extra: Optional[Dict] = None) -> Path:
    header = {
        "lookback": m.lookback,
        "signal_variance": float(m.hyper.signal_variance),
        "noise_variance": float(m.hyper.noise_variance),
        "jitter": float(m.jitter),
        "log_marginal_likelihood": float(m.log_marginal_likelihood),
        "initial_log_marginal_likelihood": float(m.initial_log_marginal_likelihood),
    }
    header.update(extra or {})
    tensors = {
        "lengthscales": m.hyper.lengthscales,
        "X": m.X,
        "y": m.y,
        "chol": m.chol,
        "alpha": m.alpha,
    }
    return write_checkpoint(path, KIND_GP, header, tensors)


def load_gp(path: PathLike) -> Tuple[GpModel, Dict[str, str]]:
    kind, header, tensors = read_checkpoint(path)
    if kind != KIND_GP:
        raise ArtifactError(f"Checkpoint at {path} holds a '{kind}' model, not a GP")
    try:
        hyper = GpHyper(float(header["signal_variance"]), tensors["lengthscales"],
                        float(header["noise_variance"]))
        m = GpModel(hyper, tensors["X"], tensors["y"], tensors["chol"], tensors["alpha"],
                    float(header["jitter"]), float(header["log_marginal_likelihood"]),
                    float(header["initial_log_marginal_likelihood"]))
    except (KeyError, ValueError) as e:
        raise ArtifactError(f"Inconsistent GP checkpoint at {path}: {e}")
    return m, header


def checkpoint_kind(path: PathLike) -> str:
    return read_checkpoint(path)[0]
