"""Flat parameter storage with named sections, plus the checkpoint container.

All learnable weights live in one contiguous 1-D float64 array; named
sections are reshaped views into it.  Perturbing ``store.flat[i]`` therefore
reaches every weight, which is what the finite-difference gradient checks
rely on.  Checkpoints are a versioned text container: a metadata block, then
one section per block with shape and round-trip-exact decimal values.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = "pocketflow-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or version-incompatible checkpoint file."""


class ParamStore:
    """Named, shaped views over one flat float64 vector."""

    def __init__(self, sections: dict[str, tuple[int, ...]]):
        self._shapes = dict(sections)
        total = 0
        offsets: dict[str, int] = {}
        for name, shape in self._shapes.items():
            offsets[name] = total
            total += int(np.prod(shape, dtype=int)) if shape else 1
        self._flat = np.zeros(total)
        # reshaped views share memory with _flat, so flat-index perturbations
        # (finite differences) and section writes see each other
        self._views = {
            name: self._flat[offsets[name] : offsets[name] + max(1, int(np.prod(shape, dtype=int)))].reshape(shape)
            for name, shape in self._shapes.items()
        }

    @property
    def flat(self) -> np.ndarray:
        return self._flat

    @flat.setter
    def flat(self, value: np.ndarray) -> None:
        # permits in-place augmented assignment (flat -= g); rebinding to a
        # different array would silently orphan the section views
        if value is not self._flat:
            raise AttributeError("flat cannot be rebound; write into flat[...] instead")

    @property
    def size(self) -> int:
        return self._flat.size

    @property
    def shapes(self) -> dict[str, tuple[int, ...]]:
        return dict(self._shapes)

    def section_names(self) -> list[str]:
        return list(self._shapes)

    def __contains__(self, name: str) -> bool:
        return name in self._shapes

    def __getitem__(self, name: str) -> np.ndarray:
        """Writable view of one section; mutations hit ``flat`` directly."""
        return self._views[name]

    def set(self, name: str, values: np.ndarray) -> None:
        view = self[name]
        view[...] = np.asarray(values, dtype=float).reshape(view.shape)

    def zeros_like(self) -> "ParamStore":
        return ParamStore(self._shapes)

    def copy(self) -> "ParamStore":
        out = ParamStore(self._shapes)
        out.flat[:] = self.flat
        return out


def _format_value(v: float) -> str:
    # repr round-trips float64 exactly in Python 3
    return repr(float(v))


def save_checkpoint(
    path: str | Path,
    store: ParamStore,
    meta: dict[str, str] | None = None,
) -> None:
    """Write the parameter store (and optional flat metadata) as text."""
    lines = [f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}"]
    for key, value in (meta or {}).items():
        if any(c in key for c in " =\n") or "\n" in value:
            raise CheckpointError(f"invalid metadata entry {key!r}")
        lines.append(f"meta {key}={value}")
    for name in store.section_names():
        shape = store.shapes[name]
        shape_txt = "x".join(str(d) for d in shape) if shape else "scalar"
        lines.append(f"section {name} {shape_txt}")
        values = store[name].reshape(-1)
        for i in range(0, values.size, 8):
            lines.append(" ".join(_format_value(v) for v in values[i : i + 8]))
    Path(path).write_text("".join(line + "\n" for line in lines))


def load_checkpoint(path: str | Path) -> tuple[ParamStore, dict[str, str]]:
    """Read a checkpoint back into a fresh store plus its metadata."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    version = lines[0].removeprefix(CHECKPOINT_MAGIC).strip()
    if version != f"v{CHECKPOINT_VERSION}":
        raise CheckpointError(f"{path}: unsupported version {version!r}")

    meta: dict[str, str] = {}
    sections: dict[str, tuple[int, ...]] = {}
    payload: dict[str, list[float]] = {}
    current: str | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("meta "):
            key, _, value = line.removeprefix("meta ").partition("=")
            meta[key] = value
        elif line.startswith("section "):
            _, name, shape_txt = line.split(" ", 2)
            shape = () if shape_txt == "scalar" else tuple(
                int(d) for d in shape_txt.split("x")
            )
            sections[name] = shape
            payload[name] = []
            current = name
        elif line.strip():
            if current is None:
                raise CheckpointError(f"{path}:{lineno}: values before any section")
            payload[current].extend(float(tok) for tok in line.split())

    store = ParamStore(sections)
    for name, shape in sections.items():
        expected = int(np.prod(shape, dtype=int)) if shape else 1
        if len(payload[name]) != expected:
            raise CheckpointError(
                f"{path}: section {name} has {len(payload[name])} values, expected {expected}"
            )
        store.set(name, np.array(payload[name]))
    if not np.all(np.isfinite(store.flat)):
        raise CheckpointError(f"{path}: non-finite parameter values")
    return store, meta


def max_relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-7) -> float:
    """Largest elementwise relative difference, ignoring joint near-zeros.

    Pairs whose magnitudes both sit below ``floor`` are treated as equal;
    used for comparing analytic against finite-difference gradients.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    scale = np.maximum(np.abs(a), np.abs(b))
    mask = scale > floor
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(a[mask] - b[mask]) / scale[mask]))


def softplus(x: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable log(1 + exp(x))."""
    x = np.asarray(x, dtype=float)
    return np.logaddexp(0.0, x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function (softplus derivative)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus_inverse(y: float) -> float:
    """Raw value r with softplus(r) = y, for y > 0."""
    if y <= 0:
        raise ValueError("softplus is positive")
    return y + math.log(-math.expm1(-y)) if y > 1e-10 else math.log(math.expm1(y))
