"""End-to-end symmetric CP decomposition with subspace deflation.

One SVD of the flattening fixes the rank and the working subspace.  Each
round finds a candidate direction by ascent on the deflated subspace,
polishes it against the full subspace, recovers its weight through the
pseudo-inverse of the truncated flattening, and removes the matched
direction from the working subspace.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ascent import AscentConfig, AscentTrace, run_spm_ascent, solve_component
from .errors import WeightUndefinedError
from .seeding import as_rng
from .subspace import TensorSubspace, extract_subspace
from .tensors import ComponentEnsemble, SymTensor, flatten, vec_power

__all__ = [
    "DecompositionResult",
    "MatchReport",
    "weight_estimate",
    "deflate_subspace",
    "decompose",
    "match_components",
    "write_result_csv",
]


@dataclass
class DecompositionResult:
    """Recovered weight/direction pairs in recovery order."""

    dim: int
    order: int
    rank: int
    weights: np.ndarray
    components: np.ndarray  # D x K, column k recovered at round k
    objectives: np.ndarray  # accepted objective per round
    restarts: np.ndarray  # restarts used per round


@dataclass
class MatchReport:
    """Alignment of an estimated decomposition against ground truth.

    ``permutation[i]`` is the truth index matched to estimated component
    ``i`` and ``signs[i]`` the matching sign.  ``weight_errors`` is the
    reciprocal-scale error ``|s^m / lambda_true - 1 / lambda_hat|``;
    ``weight_rel_errors`` is ``|lambda_hat - s^m lambda_true| / |lambda_true|``.
    ``contested`` lists estimated indices whose best truth match had
    already been taken by an earlier, stronger correlation.
    """

    permutation: np.ndarray
    signs: np.ndarray
    direction_errors: np.ndarray
    weight_errors: np.ndarray
    weight_rel_errors: np.ndarray
    contested: list[int] = field(default_factory=list)


def weight_estimate(a_hat, mk_pinv: np.ndarray) -> float:
    """Weight of a recovered direction from the truncated flattening.

    ``mk_pinv`` must be the pseudo-inverse of the transposed rank-K
    truncation, mapping R^(D^(m-n)) to R^(D^n); the weight is the
    reciprocal of ``vec(a^(x n))^T mk_pinv vec(a^(x (m-n)))``.
    """
    a_hat = np.asarray(a_hat, dtype=np.float64).reshape(-1)
    d = a_hat.size
    rows, cols = mk_pinv.shape
    n = round(np.log(rows) / np.log(d))
    tail = round(np.log(cols) / np.log(d))
    if d**n != rows or d**tail != cols:
        raise ValueError("pseudo-inverse shape is not (D^n, D^(m-n))")
    denom = float(vec_power(a_hat, n) @ (mk_pinv @ vec_power(a_hat, tail)))
    if abs(denom) < 1e-14:
        raise WeightUndefinedError(
            "deflation denominator is numerically zero; the direction is far "
            "from any component or its weight is near zero"
        )
    return 1.0 / denom


def deflate_subspace(s: TensorSubspace, v) -> TensorSubspace:
    """Orthonormal basis of the subspace intersected with ``v``-perp.

    Drops the rank by one whenever ``v`` has a component inside the
    subspace; otherwise warns and returns the input unchanged.
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        raise ValueError("deflation direction must be nonzero")
    coeffs = s.basis.T @ v
    inside = np.linalg.norm(coeffs)
    if inside <= 1e-12 * vnorm:
        warnings.warn("deflation direction already orthogonal to the subspace")
        return s
    u = (s.basis @ coeffs) / inside
    swept = s.basis - np.outer(u, u @ s.basis)
    q, _, _ = np.linalg.svd(swept, full_matrices=False)
    return TensorSubspace(dim=s.dim, half_order=s.half_order, basis=q[:, : s.rank - 1])


def decompose(
    t_hat: SymTensor,
    cfg: AscentConfig | None = None,
    *,
    rank: int | None = None,
    alpha: float | None = None,
    rng=0,
) -> DecompositionResult:
    """Full decomposition of a (possibly noisy) symmetric tensor.

    Rounds are sequential: ascent on the deflated subspace proposes a
    direction, a second ascent on the full subspace refines it (kept
    unrefined with a warning if that ascent stalls), the weight follows
    from the pseudo-inverse formula, and the direction is deflated away.
    """
    if t_hat.order < 3:
        raise ValueError("decomposition needs tensor order >= 3")
    cfg = cfg or AscentConfig()
    rng = as_rng(rng)
    d, m = t_hat.dim, t_hat.order
    n = (m + 1) // 2

    full = extract_subspace(t_hat, n, rank=rank, alpha=alpha)
    k_total = full.rank
    m_hat = flatten(t_hat, n).data
    u, s, vt = np.linalg.svd(m_hat, full_matrices=False)
    # pseudo-inverse of the transposed rank-K truncation, reused across rounds
    mk_pinv = u[:, :k_total] @ np.diag(1.0 / s[:k_total]) @ vt[:k_total]

    weights = np.empty(k_total)
    components = np.empty((d, k_total))
    objectives = np.empty(k_total)
    restarts = np.empty(k_total, dtype=int)

    working = full
    for k in range(k_total):
        trace = solve_component(working, cfg, rng)
        a_k = trace.final_x
        if k > 0:
            refined = run_spm_ascent(full, a_k, cfg)
            if refined.converged:
                a_k = refined.final_x
            else:
                warnings.warn(f"refinement did not converge at round {k + 1}")
        weights[k] = weight_estimate(a_k, mk_pinv)
        components[:, k] = a_k
        objectives[k] = trace.final_objective
        restarts[k] = trace.restarts_used
        if k + 1 < k_total:
            hyperplane = mk_pinv @ vec_power(a_k, m - n)
            working = deflate_subspace(working, hyperplane)
    return DecompositionResult(
        dim=d,
        order=m,
        rank=k_total,
        weights=weights,
        components=components,
        objectives=objectives,
        restarts=restarts,
    )


def match_components(truth: ComponentEnsemble, est: DecompositionResult) -> MatchReport:
    """Greedy sign/permutation alignment maximizing absolute correlation.

    Pairs are assigned in decreasing ``|<a_i, a_hat_j>|`` without reuse.
    Estimated components whose strongest correlation was already claimed
    are flagged as contested rather than silently mismatched.
    """
    if truth.rank != est.rank:
        raise ValueError("rank mismatch between truth and estimate")
    k = truth.rank
    corr = truth.components.T @ est.components  # truth x estimate
    order = np.argsort(-np.abs(corr), axis=None)
    permutation = np.full(k, -1, dtype=int)
    used_truth = np.zeros(k, dtype=bool)
    assigned = 0
    for flat in order:
        i, j = divmod(int(flat), k)
        if used_truth[i] or permutation[j] >= 0:
            continue
        permutation[j] = i
        used_truth[i] = True
        assigned += 1
        if assigned == k:
            break
    contested = [
        j for j in range(k) if permutation[j] != int(np.argmax(np.abs(corr[:, j])))
    ]
    signs = np.sign(corr[permutation, np.arange(k)])
    signs[signs == 0] = 1.0
    matched = truth.components[:, permutation] * signs
    direction_errors = np.linalg.norm(matched - est.components, axis=0)
    lam_true = truth.weights[permutation]
    sign_pow = signs**truth.order
    weight_errors = np.abs(sign_pow / lam_true - 1.0 / est.weights)
    weight_rel_errors = np.abs(est.weights - sign_pow * lam_true) / np.abs(lam_true)
    return MatchReport(
        permutation=permutation,
        signs=signs,
        direction_errors=direction_errors,
        weight_errors=weight_errors,
        weight_rel_errors=weight_rel_errors,
        contested=contested,
    )


def write_result_csv(path, result: DecompositionResult) -> None:
    """One row per component: k, weight, objective, restarts, direction."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["k", "lambda_hat", "objective", "restarts"]
            + [f"a_hat_{i}" for i in range(result.dim)]
        )
        for k in range(result.rank):
            writer.writerow(
                [k + 1, f"{result.weights[k]:.17g}", f"{result.objectives[k]:.17g}",
                 int(result.restarts[k])]
                + [f"{v:.17g}" for v in result.components[:, k]]
            )
