"""Estimated tensor subspaces and the subspace power objective.

The functional maximized on the sphere is ``F(x) = ||P(x^(x n))||_F^2``
where ``P`` projects onto the column span of the flattened input tensor.
The projector is never materialized: a subspace carries only the
``D^n x K`` orthonormal basis ``U`` and ``P(T) = tensorize(U @ U.T @ vec(T))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundUndefinedError, EmptySubspaceError
from .tensors import SymTensor, flatten, vec_power

__all__ = [
    "TensorSubspace",
    "SubspaceErrorBound",
    "extract_subspace",
    "project_coeffs",
    "objective",
    "riemannian_gradient",
    "riemannian_hessian_quadratic",
    "tangent_basis",
    "max_tangent_hessian_eigenvalue",
    "subspace_distance",
    "lemma1_bound",
]

_UNIT_TOL = 1e-10


@dataclass(frozen=True)
class TensorSubspace:
    """Column-orthonormal basis of a subspace of order-``n`` tensors.

    ``basis`` has shape ``(dim**half_order, rank)``; each column is the
    vectorization of an order-``half_order`` tensor over R^dim.
    ``singular_values`` are the retained singular values of the flattening
    the basis was extracted from (descending), or None when not applicable.
    """

    dim: int
    half_order: int
    basis: np.ndarray = field(repr=False)
    singular_values: np.ndarray | None = None

    def __post_init__(self):
        basis = np.ascontiguousarray(self.basis, dtype=np.float64)
        if basis.ndim != 2 or basis.shape[0] != self.dim**self.half_order:
            raise ValueError("basis must have D**n rows")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
            raise ValueError("basis columns must be orthonormal (tol 1e-10)")
        basis.flags.writeable = False
        object.__setattr__(self, "basis", basis)
        if self.singular_values is not None:
            sv = np.asarray(self.singular_values, dtype=np.float64).reshape(-1)
            if sv.shape[0] != basis.shape[1]:
                raise ValueError("need one singular value per basis column")
            sv.flags.writeable = False
            object.__setattr__(self, "singular_values", sv)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def __repr__(self):
        return f"TensorSubspace(dim={self.dim}, half_order={self.half_order}, rank={self.rank})"


@dataclass(frozen=True)
class SubspaceErrorBound:
    """Perturbation data of a flattening and the resulting subspace bound.

    ``bound = delta_m / (sigma_k - delta_m)`` upper-bounds the projector
    distance between the rank-K column spans, valid when ``delta_m < sigma_k``.
    """

    delta_m: float
    sigma_k: float
    bound: float


def _check_unit(x: np.ndarray, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if abs(np.linalg.norm(x) - 1.0) > _UNIT_TOL:
        raise ValueError(f"{name} must have unit norm (tol {_UNIT_TOL:g})")
    return x


def extract_subspace(
    t_hat: SymTensor,
    n: int,
    *,
    rank: int | None = None,
    alpha: float | None = None,
) -> TensorSubspace:
    """Truncated SVD of the ``D^n x D^(m-n)`` flattening.

    Exactly one rank rule applies: a fixed ``rank`` K, or a singular-value
    threshold ``alpha`` (keep all values exceeding it).  With neither
    given, the numerical-rank threshold ``max(shape) * eps * sigma_1``
    is used, which recovers the exact rank of noiseless inputs.
    """
    if rank is not None and alpha is not None:
        raise ValueError("give either a fixed rank or a threshold, not both")
    m = flatten(t_hat, n).data
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if rank is not None:
        if not 1 <= rank <= min(m.shape):
            raise ValueError(f"rank must lie in [1, {min(m.shape)}]")
        k = rank
    else:
        if alpha is None:
            alpha = max(m.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
        elif alpha <= 0:
            raise ValueError("threshold must be positive")
        k = int(np.sum(s > alpha))
        if k == 0:
            raise EmptySubspaceError(
                f"no singular value exceeds threshold {alpha:g} (largest: {s[0]:g})"
            )
    return TensorSubspace(
        dim=t_hat.dim, half_order=n, basis=u[:, :k], singular_values=s[:k]
    )


def project_coeffs(s: TensorSubspace, t) -> np.ndarray:
    """Coefficients ``w = U.T vec(T)`` of the projection onto the subspace."""
    data = t.data if isinstance(t, SymTensor) else np.asarray(t, dtype=np.float64)
    vec = data.reshape(-1)
    if vec.size != s.basis.shape[0]:
        raise ValueError("tensor shape does not match the subspace")
    return s.basis.T @ vec


def objective(s: TensorSubspace, x) -> float:
    """Objective value ``F(x) = ||P(x^(x n))||_F^2`` for unit ``x``."""
    x = _check_unit(x)
    w = s.basis.T @ vec_power(x, s.half_order)
    return float(w @ w)


def _pull(s: TensorSubspace, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Contraction ``P(x^n) . x^(n-1)`` as a vector in R^D."""
    n, d = s.half_order, s.dim
    projected = s.basis @ w
    return projected.reshape(d, -1) @ vec_power(x, n - 1)


def riemannian_gradient(s: TensorSubspace, x) -> np.ndarray:
    """Sphere gradient ``2n P(x^n).x^(n-1) - 2n F(x) x``; tangent at x."""
    x = _check_unit(x)
    n = s.half_order
    w = s.basis.T @ vec_power(x, n)
    f = float(w @ w)
    return 2 * n * (_pull(s, x, w) - f * x)


def riemannian_hessian_quadratic(s: TensorSubspace, x, z) -> float:
    """Tangent Hessian quadratic form at unit ``x`` along unit ``z`` with z _|_ x.

    Value of ``2n^2 ||P(x^(n-1) z)||^2 + 2n(n-1) <P(x^n), x^(n-2) z^2>
    - 2n F(x)``.
    """
    x = _check_unit(x)
    z = _check_unit(z, "z")
    if abs(float(x @ z)) > _UNIT_TOL:
        raise ValueError("z must be orthogonal to x (tol 1e-10)")
    n = s.half_order
    w = s.basis.T @ vec_power(x, n)
    f = float(w @ w)
    xp = vec_power(x, n - 1)
    wz = s.basis.T @ np.multiply.outer(xp, z).reshape(-1)
    value = 2 * n * n * float(wz @ wz) - 2 * n * f
    if n >= 2:
        zz = np.multiply.outer(z, z).reshape(-1)
        cross = np.multiply.outer(vec_power(x, n - 2), zz).reshape(-1)
        value += 2 * n * (n - 1) * float((s.basis @ w) @ cross)
    return value


def tangent_basis(x) -> np.ndarray:
    """Deterministic orthonormal basis of the tangent space at unit ``x``.

    Columns 2..D of the Householder reflector mapping ``e_1`` onto ``-sign(x_1) x``.
    """
    x = _check_unit(x)
    d = x.size
    sign = 1.0 if x[0] >= 0 else -1.0
    v = x.copy()
    v[0] += sign
    v /= np.linalg.norm(v)
    h = np.eye(d) - 2.0 * np.outer(v, v)
    return h[:, 1:]


def max_tangent_hessian_eigenvalue(s: TensorSubspace, x) -> float:
    """Largest eigenvalue of the tangent-restricted sphere Hessian.

    Assembles the ``(D-1) x (D-1)`` bilinear form on the Householder
    tangent basis and solves it densely.
    """
    x = _check_unit(x)
    n, d = s.half_order, s.dim
    basis = tangent_basis(x)
    w = s.basis.T @ vec_power(x, n)
    f = float(w @ w)
    xp = vec_power(x, n - 1)
    # columns of kron(xp, basis) are vec(x^(n-1) t_j)
    wz = s.basis.T @ np.kron(xp[:, None], basis)
    h = 2 * n * n * (wz.T @ wz) - 2 * n * f * np.eye(d - 1)
    if n >= 2:
        projected = s.basis @ w
        cmat = (vec_power(x, n - 2) @ projected.reshape(-1, d * d)).reshape(d, d)
        h += 2 * n * (n - 1) * (basis.T @ cmat @ basis)
    return float(np.linalg.eigvalsh(h)[-1])


def subspace_distance(s1: TensorSubspace, s2: TensorSubspace) -> float:
    """Operator norm of the projector difference, in [0, 1].

    Equal ranks use principal angles (largest sine); unequal ranks fall
    back to a dense SVD of the projector difference.
    """
    if s1.dim != s2.dim or s1.half_order != s2.half_order:
        raise ValueError("subspaces must share dim and half-order")
    if s1.rank == s2.rank:
        cosines = np.linalg.svd(s1.basis.T @ s2.basis, compute_uv=False)
        c_min = float(np.clip(cosines.min() if cosines.size else 1.0, 0.0, 1.0))
        return float(np.sqrt(max(0.0, 1.0 - c_min * c_min)))
    diff = s1.basis @ s1.basis.T - s2.basis @ s2.basis.T
    return float(np.linalg.norm(diff, 2))


def lemma1_bound(m, m_hat, k: int) -> SubspaceErrorBound:
    """Perturbation bound for the span of the K leading left singular vectors.

    Requires the spectral perturbation to stay below the K-th singular
    value of the reference matrix; otherwise the bound is undefined.
    """
    m = np.asarray(m, dtype=np.float64)
    m_hat = np.asarray(m_hat, dtype=np.float64)
    if m.shape != m_hat.shape:
        raise ValueError("matrices must have equal shape")
    s = np.linalg.svd(m, compute_uv=False)
    if not 1 <= k <= s.size:
        raise ValueError("k out of range")
    sigma_k = float(s[k - 1])
    delta_m = float(np.linalg.norm(m - m_hat, 2))
    if delta_m >= sigma_k:
        raise BoundUndefinedError(
            f"perturbation {delta_m:g} reaches sigma_{k} = {sigma_k:g}"
        )
    return SubspaceErrorBound(
        delta_m=delta_m, sigma_k=sigma_k, bound=delta_m / (sigma_k - delta_m)
    )
