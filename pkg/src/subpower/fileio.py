"""Binary file formats for tensors, ensembles and subspaces.

All formats are little-endian with a 4-byte magic:

* ``SPT1`` tensor:    magic, u32 order m, u32 dim D, D**m f64 row-major.
* ``SPE1`` ensemble:  magic, u32 D, u32 m, u32 K, K f64 weights,
  D*K f64 components column-major.
* ``SPS1`` subspace:  magic, u32 D, u32 n, u32 K, K f64 singular values
  (NaN-filled when unknown), D**n * K f64 basis column-major.
"""

from __future__ import annotations

import struct

import numpy as np

from .subspace import TensorSubspace
from .tensors import ComponentEnsemble, SymTensor

__all__ = [
    "save_tensor",
    "load_tensor",
    "save_ensemble",
    "load_ensemble",
    "save_subspace",
    "load_subspace",
]

_TENSOR_MAGIC = b"SPT1"
_ENSEMBLE_MAGIC = b"SPE1"
_SUBSPACE_MAGIC = b"SPS1"


def _read_exact(f, count: int) -> bytes:
    buf = f.read(count)
    if len(buf) != count:
        raise ValueError("truncated file")
    return buf


def _read_f64(f, count: int) -> np.ndarray:
    return np.frombuffer(_read_exact(f, 8 * count), dtype="<f8").astype(np.float64)


def save_tensor(path, t: SymTensor) -> None:
    with open(path, "wb") as f:
        f.write(_TENSOR_MAGIC)
        f.write(struct.pack("<II", t.order, t.dim))
        f.write(t.ravel().astype("<f8").tobytes())


def load_tensor(path) -> SymTensor:
    with open(path, "rb") as f:
        if _read_exact(f, 4) != _TENSOR_MAGIC:
            raise ValueError(f"{path}: not an SPT1 tensor file")
        m, d = struct.unpack("<II", _read_exact(f, 8))
        data = _read_f64(f, d**m)
    return SymTensor(data.reshape((d,) * m))


def save_ensemble(path, e: ComponentEnsemble) -> None:
    with open(path, "wb") as f:
        f.write(_ENSEMBLE_MAGIC)
        f.write(struct.pack("<III", e.dim, e.order, e.rank))
        f.write(e.weights.astype("<f8").tobytes())
        f.write(e.components.ravel(order="F").astype("<f8").tobytes())


def load_ensemble(path) -> ComponentEnsemble:
    with open(path, "rb") as f:
        if _read_exact(f, 4) != _ENSEMBLE_MAGIC:
            raise ValueError(f"{path}: not an SPE1 ensemble file")
        d, m, k = struct.unpack("<III", _read_exact(f, 12))
        weights = _read_f64(f, k)
        comps = _read_f64(f, d * k).reshape((d, k), order="F")
    return ComponentEnsemble(order=m, weights=weights, components=comps)


def save_subspace(path, s: TensorSubspace) -> None:
    with open(path, "wb") as f:
        f.write(_SUBSPACE_MAGIC)
        f.write(struct.pack("<III", s.dim, s.half_order, s.rank))
        sv = s.singular_values
        if sv is None:
            sv = np.full(s.rank, np.nan)
        f.write(np.asarray(sv, dtype="<f8").tobytes())
        f.write(s.basis.ravel(order="F").astype("<f8").tobytes())


def load_subspace(path) -> TensorSubspace:
    with open(path, "rb") as f:
        if _read_exact(f, 4) != _SUBSPACE_MAGIC:
            raise ValueError(f"{path}: not an SPS1 subspace file")
        d, n, k = struct.unpack("<III", _read_exact(f, 12))
        sv = _read_f64(f, k)
        basis = _read_f64(f, (d**n) * k).reshape((d**n, k), order="F")
    return TensorSubspace(
        dim=d,
        half_order=n,
        basis=basis,
        singular_values=None if np.all(np.isnan(sv)) else sv,
    )
