"""Dense symmetric tensor algebra.

Tensors of order ``m`` over R^D are stored as full ``(D,)*m`` C-order
(row-major) numpy arrays: index ``(i_1, ..., i_m)`` sits at flat offset
``sum(i_k * D**(m-k))``.  No symmetric compression is attempted; at the
scales this package targets (``D**m`` up to a few tens of millions) the
dense layout keeps every reshape bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from math import factorial

import numpy as np

from .seeding import as_rng

__all__ = [
    "SymTensor",
    "DenseTensor",
    "ComponentEnsemble",
    "sym_outer_power",
    "symmetrize",
    "frobenius_inner",
    "frobenius_norm",
    "contract",
    "flatten",
    "tensorize",
    "vec_power",
    "khatri_rao_power",
    "cp_synthesize",
    "add_gaussian_noise",
    "is_symmetric",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SymTensor:
    """Dense symmetric tensor of order ``m`` over R^D.

    Attributes
    ----------
    data:
        Read-only ``(D,)*m`` float64 array, row-major.
    """

    data: np.ndarray

    def __post_init__(self):
        data = self.data
        if data.ndim < 1:
            raise ValueError("tensor must have order >= 1")
        if len(set(data.shape)) != 1:
            raise ValueError(f"all modes must have equal length, got shape {data.shape}")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def order(self) -> int:
        return self.data.ndim

    def ravel(self) -> np.ndarray:
        """Row-major vectorization of length D**m."""
        return self.data.reshape(-1)

    def __repr__(self):
        return f"SymTensor(dim={self.dim}, order={self.order})"


@dataclass(frozen=True)
class DenseTensor:
    """General dense tensor with arbitrary mode lengths, row-major."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self):
        return f"DenseTensor(dims={list(self.dims)})"


def _as_array(t) -> np.ndarray:
    if isinstance(t, (SymTensor, DenseTensor)):
        return t.data
    return np.asarray(t, dtype=np.float64)


@dataclass(frozen=True)
class ComponentEnsemble:
    """Weights and unit directions of a symmetric CP model.

    The ensemble represents ``T = sum_i weights[i] * components[:, i]^(x order)``
    where every column of ``components`` has unit 2-norm.
    """

    order: int
    weights: np.ndarray
    components: np.ndarray = field(repr=False)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        components = np.ascontiguousarray(self.components, dtype=np.float64)
        if components.ndim != 2:
            raise ValueError("components must be a D x K matrix")
        if weights.shape[0] != components.shape[1]:
            raise ValueError("weights length must match the number of columns")
        if weights.shape[0] < 1:
            raise ValueError("rank must be at least 1")
        norms = np.linalg.norm(components, axis=0)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("all component columns must have unit norm (tol 1e-12)")
        object.__setattr__(self, "weights", _freeze(weights))
        object.__setattr__(self, "components", _freeze(components))

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    @property
    def rank(self) -> int:
        return self.components.shape[1]

    def __repr__(self):
        return f"ComponentEnsemble(dim={self.dim}, order={self.order}, rank={self.rank})"


def sym_outer_power(a, p: int) -> SymTensor:
    """Rank-one symmetric tensor ``a^(x p)``.

    Entry ``(i_1, ..., i_p)`` equals ``a[i_1] * ... * a[i_p]``.  The input
    is used exactly as supplied; no normalization is performed.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if p < 1:
        raise ValueError("power must be a positive integer")
    if a.size == 0:
        raise ValueError("vector must be nonempty")
    out = a
    for _ in range(p - 1):
        out = np.multiply.outer(out, a)
    return SymTensor(out.reshape((a.size,) * p))


def symmetrize(t) -> SymTensor:
    """Orthogonal projection onto the symmetric subspace.

    Averages the entries over all ``m!`` permutations of the modes.
    Idempotent and linear; requires all mode lengths to be equal.
    """
    data = _as_array(t)
    m = data.ndim
    if len(set(data.shape)) != 1:
        raise ValueError("symmetrize requires equal mode lengths")
    if m == 1:
        return SymTensor(data.copy())
    acc = np.zeros_like(data)
    for perm in permutations(range(m)):
        acc += data.transpose(perm)
    acc /= factorial(m)
    return SymTensor(acc)


def frobenius_inner(t, s) -> float:
    """Frobenius inner product; shapes must agree exactly."""
    a, b = _as_array(t), _as_array(s)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.dot(a.reshape(-1), b.reshape(-1)))


def frobenius_norm(t) -> float:
    a = _as_array(t)
    return float(np.linalg.norm(a.reshape(-1)))


def contract(t, s):
    """Contract the trailing modes of ``t`` against all modes of ``s``.

    ``(t . s)[i_1..i_{m1-m2}] = sum_j t[i.., j_1..j_{m2}] s[j_1..j_{m2}]``.
    Requires equal dim and ``order(t) >= order(s)``; equal orders collapse
    to the Frobenius inner product (a float is returned).
    """
    a, b = _as_array(t), _as_array(s)
    if a.ndim < b.ndim:
        raise ValueError("first tensor must have order >= second")
    if a.shape[0] != b.shape[0]:
        raise ValueError("tensors must share the same dim")
    left = a.ndim - b.ndim
    out = a.reshape(a.shape[0] ** left if left else 1, -1) @ b.reshape(-1)
    if left == 0:
        return float(out[0])
    return out.reshape(a.shape[:left])


def flatten(t, n: int) -> DenseTensor:
    """Reshape an order-``m`` tensor to a ``D^n x D^(m-n)`` matrix.

    Bit-exact row-major reindexing; ``tensorize`` inverts it.
    """
    data = _as_array(t)
    m, d = data.ndim, data.shape[0]
    if not 1 <= n < m:
        raise ValueError(f"flatten index must satisfy 1 <= n < {m}")
    return DenseTensor(data.reshape(d**n, d ** (m - n)))


def tensorize(vec, dim: int, order: int) -> np.ndarray:
    """Inverse of row-major vectorization: a ``(dim,)*order`` view/copy."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.size != dim**order:
        raise ValueError("length does not match dim**order")
    return vec.reshape((dim,) * order)


def vec_power(x, n: int) -> np.ndarray:
    """Row-major vectorization of ``x^(x n)``, i.e. the n-fold Kronecker power."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if n == 0:
        return np.ones(1)
    out = x
    for _ in range(n - 1):
        out = np.multiply.outer(out, x).reshape(-1)
    return out


def khatri_rao_power(a: np.ndarray, n: int) -> np.ndarray:
    """Columnwise Khatri-Rao power: column j equals ``vec(a_j^(x n))``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a D x K matrix")
    if n < 1:
        raise ValueError("power must be a positive integer")
    out = a
    for _ in range(n - 1):
        out = (out[:, None, :] * a[None, :, :]).reshape(-1, a.shape[1])
    return out


def cp_synthesize(ensemble: ComponentEnsemble) -> SymTensor:
    """Assemble ``sum_i lambda_i a_i^(x m)`` by direct accumulation."""
    d, m = ensemble.dim, ensemble.order
    acc = np.zeros((d,) * m)
    for i in range(ensemble.rank):
        acc += ensemble.weights[i] * sym_outer_power(ensemble.components[:, i], m).data
    return SymTensor(acc)


def add_gaussian_noise(t: SymTensor, sigma: float, rng) -> SymTensor:
    """Entrywise Gaussian perturbation followed by symmetric projection.

    Adds iid N(0, m! * sigma^2) noise to every entry of the full dense
    array and re-projects onto the symmetric subspace, so entries with
    all-distinct indices of the projected noise have variance sigma^2.
    ``sigma == 0`` returns the input unchanged, bit-exactly.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return t
    rng = as_rng(rng)
    m = t.order
    noise = rng.normal(0.0, np.sqrt(factorial(m)) * sigma, size=t.data.shape)
    return symmetrize(t.data + noise)


def is_symmetric(t, rng, samples: int = 100, rtol: float = 1e-12) -> bool:
    """Spot-check permutation invariance on random index tuples."""
    data = _as_array(t)
    rng = as_rng(rng)
    m, d = data.ndim, data.shape[0]
    scale = float(np.max(np.abs(data))) or 1.0
    for _ in range(samples):
        idx = tuple(rng.integers(0, d, size=m))
        perm = tuple(rng.permutation(m))
        ref = data[idx]
        other = data[tuple(idx[p] for p in perm)]
        if abs(ref - other) > rtol * max(abs(ref), abs(other), scale):
            return False
    return True
