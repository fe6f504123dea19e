"""Landscape diagnostics for the subspace power functional.

Everything here is read-only analysis: Grammians of rank-one systems and
their conditioning, frame (incoherence) constants with certified upper
bounds, the thresholds that decide when high-value second-order points
must be components, restricted-isometry checks, and the rank-one
counterexample subspace that carries a spurious strict local maximizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import RankDeficiencyError
from .seeding import as_rng, unit_sphere
from .subspace import (
    TensorSubspace,
    _check_unit,
    max_tangent_hessian_eigenvalue,
    objective,
    riemannian_gradient,
    subspace_distance,
)
from .tensors import ComponentEnsemble, SymTensor, khatri_rao_power, vec_power

__all__ = [
    "Grammian",
    "FrameConstantEntry",
    "ThresholdSet",
    "CriticalityReport",
    "RipCheckResult",
    "RipPartition",
    "grammian",
    "component_subspace",
    "objective_via_grammian",
    "expansion_coefficients",
    "pm_objective",
    "estimate_rho",
    "thresholds",
    "certify_point",
    "spurious_construction",
    "rip_check",
    "rip_partition",
    "format_report",
    "report_rows",
    "frame_rows",
]


@dataclass(frozen=True)
class Grammian:
    """Entrywise power of the component Gram matrix, with extreme eigenvalues."""

    order: int
    matrix: np.ndarray = field(repr=False)
    min_eigenvalue: float = 0.0
    max_eigenvalue: float = 0.0

    def __repr__(self):
        return (
            f"Grammian(order={self.order}, size={self.matrix.shape[0]}, "
            f"eigs=[{self.min_eigenvalue:.3g}, {self.max_eigenvalue:.3g}])"
        )


@dataclass(frozen=True)
class FrameConstantEntry:
    """Interval estimate of one frame constant.

    ``lower`` is the best maximizer value found minus one (exact for
    dimension two, where the sup is resolved on an angular grid), and
    ``upper`` the eigenvalue bound from the half-order Grammian.
    """

    s: int
    lower: float
    upper: float
    maximizer: np.ndarray
    exact: bool = False


@dataclass(frozen=True)
class ThresholdSet:
    """Quantities entering the deterministic and overcomplete guarantees."""

    n: int
    dim: int
    rank: int
    rho2: float
    rho_n: float
    tau: float
    delta0: float
    eps_k: float

    def det_level(self, delta: float) -> float:
        """Objective level above which second-order points are components.

        Returns ``inf`` when ``tau <= 0`` (deterministic verdicts disabled).
        """
        if self.tau <= 0:
            return math.inf
        return (2 + 2 * self.tau + 3 * self.n**2) / (2 * self.tau) * delta


@dataclass
class CriticalityReport:
    """First/second-order data of a point plus theorem verdicts."""

    objective: float
    gradient_norm: float
    hessian_max_eigenvalue: float
    nearest_index: int
    nearest_sign: int
    nearest_distance: float
    subspace_delta: float
    cap_radius: float
    is_second_order: bool
    in_superlevel: bool
    within_cap: bool | None
    verdict: str
    zeta: np.ndarray = field(repr=False, default=None)
    expansion: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class RipCheckResult:
    """Worst submatrix isometry deviation found; certified only if exhaustive."""

    passed: bool
    worst_deviation: float
    exhaustive: bool
    checked: int


@dataclass(frozen=True)
class RipPartition:
    """Top-p correlation index set of a point and the induced bounds."""

    indices: np.ndarray
    in_set_sum: float
    in_set_ok: bool
    off_set_max: float
    off_set_ok: bool


def grammian(a: np.ndarray, n: int) -> Grammian:
    """Grammian ``G_n`` with entries ``<a_i, a_j>**n`` for unit columns."""
    a = np.asarray(a, dtype=np.float64)
    norms = np.linalg.norm(a, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("columns must have unit norm")
    g = (a.T @ a) ** n
    g = (g + g.T) / 2
    eigs = np.linalg.eigvalsh(g)
    return Grammian(
        order=n,
        matrix=g,
        min_eigenvalue=float(eigs[0]),
        max_eigenvalue=float(eigs[-1]),
    )


def component_subspace(a: np.ndarray, n: int) -> TensorSubspace:
    """Orthonormal basis of ``span{a_i^(x n)}`` from the Khatri-Rao power."""
    a = np.asarray(a, dtype=np.float64)
    kr = khatri_rao_power(a, n)
    u, s, _ = np.linalg.svd(kr, full_matrices=False)
    rank = int(np.sum(s > max(kr.shape) * np.finfo(np.float64).eps * s[0]))
    return TensorSubspace(dim=a.shape[0], half_order=n, basis=u[:, :rank])


def objective_via_grammian(a: np.ndarray, g: Grammian, x) -> float:
    """Objective through the Grammian identity, bypassing any subspace basis.

    Valid when the rank-one tensors are linearly independent; a minimal
    Grammian eigenvalue at or below 1e-10 raises ``RankDeficiencyError``.
    """
    x = _check_unit(x)
    if g.min_eigenvalue <= 1e-10:
        raise RankDeficiencyError(
            f"Grammian minimal eigenvalue {g.min_eigenvalue:g} is numerically zero"
        )
    eta = (np.asarray(a).T @ x) ** g.order
    return float(eta @ np.linalg.solve(g.matrix, eta))


def expansion_coefficients(a: np.ndarray, g: Grammian, x) -> np.ndarray:
    """Coefficients of the projected power in the rank-one system."""
    x = _check_unit(x)
    if g.min_eigenvalue <= 1e-10:
        raise RankDeficiencyError("Grammian is numerically singular")
    eta = (np.asarray(a).T @ x) ** g.order
    return np.linalg.solve(g.matrix, eta)


def pm_objective(t: SymTensor, x) -> float:
    """Full contraction ``<T, x^(x m)>``."""
    x = _check_unit(x)
    v = t.data.reshape(t.dim, -1) @ vec_power(x, t.order - 1)
    return float(v @ x)


def _incoherence_value(a: np.ndarray, s: int, x: np.ndarray) -> float:
    return float(np.sum(np.abs(a.T @ x) ** s))


def _ascend_incoherence(a: np.ndarray, s: int, x0: np.ndarray, iters: int = 400):
    """Monotone projected ascent on ``sum |<x, a_i>|^s`` over the sphere."""
    x = x0
    val = _incoherence_value(a, s, x)
    step = 1.0 / s
    for _ in range(iters):
        zeta = a.T @ x
        grad = s * (a @ (np.sign(zeta) * np.abs(zeta) ** (s - 1)))
        grad_t = grad - (grad @ x) * x
        gnorm = np.linalg.norm(grad_t)
        if gnorm <= 1e-14:
            break
        improved = False
        trial = step
        for _ in range(40):
            y = x + trial * grad_t
            y /= np.linalg.norm(y)
            cand = _incoherence_value(a, s, y)
            if cand > val:
                x, val = y, cand
                step = min(trial * 2.0, 1e3)
                improved = True
                break
            trial /= 2
        if not improved:
            break
    return x, val


def _exact_sup_dim2(a: np.ndarray, s: int, grid: int = 1_000_000):
    """Exact sup of the incoherence sum in dimension two.

    The objective is ``sum |cos(theta - phi_i)|^s`` with period pi; a
    dense angular grid isolates the global basin and a ternary-search
    refinement resolves the maximizer to machine precision.
    """
    phi = np.arctan2(a[1], a[0])

    def value(thetas):
        acc = np.zeros_like(thetas)
        for p in phi:
            acc += np.abs(np.cos(thetas - p)) ** s
        return acc

    thetas = np.linspace(0.0, np.pi, grid, endpoint=False)
    vals = np.empty(grid)
    chunk = 200_000
    for start in range(0, grid, chunk):
        vals[start : start + chunk] = value(thetas[start : start + chunk])
    best = int(np.argmax(vals))
    spacing = np.pi / grid
    lo, hi = thetas[best] - spacing, thetas[best] + spacing
    for _ in range(120):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if value(np.array([m1]))[0] < value(np.array([m2]))[0]:
            lo = m1
        else:
            hi = m2
    theta = (lo + hi) / 2
    x = np.array([np.cos(theta), np.sin(theta)])
    return x, float(value(np.array([theta]))[0])


def estimate_rho(a: np.ndarray, s: int, budget: int = 32, rng=0) -> FrameConstantEntry:
    """Interval estimate of the frame constant of order ``s``.

    The lower end comes from projected-gradient maximization over
    ``budget`` random restarts (plus every component and the top singular
    direction as warm starts); the upper end is the half-order Grammian
    eigenvalue bound.  Dimension two is resolved exactly on a grid.
    """
    a = np.asarray(a, dtype=np.float64)
    if s < 2:
        raise ValueError("frame constants are defined for s >= 2")
    rng = as_rng(rng)
    d = a.shape[0]
    half = grammian(a, max(s // 2, 1))
    upper = half.max_eigenvalue - 1.0

    if d == 2:
        x, best = _exact_sup_dim2(a, s)
        return FrameConstantEntry(s=s, lower=best - 1.0, upper=upper, maximizer=x, exact=True)

    starts = [a[:, j] for j in range(a.shape[1])]
    starts.append(np.linalg.svd(a, full_matrices=False)[0][:, 0])
    starts.extend(unit_sphere(rng, d) for _ in range(budget))
    best_x, best = None, -np.inf
    for x0 in starts:
        x, val = _ascend_incoherence(a, s, x0)
        if val > best:
            best_x, best = x, val
    return FrameConstantEntry(
        s=s, lower=best - 1.0, upper=upper, maximizer=best_x, exact=False
    )


def thresholds(rho2: float, rho_n: float, n: int, d: int, k: int) -> ThresholdSet:
    """Theorem thresholds from the frame constants.

    ``tau = 1/6 - n^2 rho2 - (n^2 + n) rho_n``; nonpositive ``tau``
    disables the deterministic verdicts (reported, never raised).  The
    overcomplete smallness parameter uses the natural logarithm.
    """
    tau = 1.0 / 6.0 - n**2 * rho2 - (n**2 + n) * rho_n
    delta0 = 2 * tau / (2 + 4 * tau + 3 * n**2) if tau > 0 else float("nan")
    eps_k = k * np.log(k) ** n / d**n if k > 1 else 0.0
    return ThresholdSet(
        n=n, dim=d, rank=k, rho2=rho2, rho_n=rho_n, tau=tau, delta0=delta0, eps_k=eps_k
    )


def certify_point(
    s: TensorSubspace,
    truth: ComponentEnsemble,
    x,
    thr: ThresholdSet,
    *,
    grad_tol: float = 1e-8,
    hess_tol: float = 1e-6,
    distance_slack: float = 1e-10,
) -> CriticalityReport:
    """Assemble criticality data for ``x`` and evaluate the theorem verdict.

    When the point is (numerically) second-order critical and its
    objective clears the deterministic level for the measured subspace
    error, the squared distance to the nearest signed component is
    checked against ``2 delta / n`` (with a small slack so the noiseless
    case is not failed by roundoff) and the outcome reported.
    """
    x = _check_unit(x)
    a = truth.components
    f = objective(s, x)
    grad_norm = float(np.linalg.norm(riemannian_gradient(s, x)))
    hess_eig = max_tangent_hessian_eigenvalue(s, x)

    zeta = a.T @ x
    signs = np.where(zeta >= 0, 1, -1)
    dists = np.linalg.norm(a * signs - x[:, None], axis=0)
    nearest = int(np.argmin(dists))

    exact = component_subspace(a, s.half_order)
    delta = subspace_distance(s, exact)

    g = grammian(a, s.half_order)
    expansion = (
        expansion_coefficients(a, g, x) if g.min_eigenvalue > 1e-10 else None
    )

    is_second_order = grad_norm <= grad_tol and hess_eig <= hess_tol
    in_superlevel = f >= thr.det_level(delta)
    cap_radius = math.sqrt(2 * delta / s.half_order) if delta >= 0 else 0.0
    within_cap = None
    if is_second_order and in_superlevel:
        within_cap = dists[nearest] ** 2 <= 2 * delta / s.half_order + distance_slack

    if not is_second_order:
        verdict = "not-critical"
    elif not in_superlevel:
        verdict = "below-level"
    elif within_cap:
        verdict = "certified-component"
    else:
        verdict = "counterexample"

    return CriticalityReport(
        objective=f,
        gradient_norm=grad_norm,
        hessian_max_eigenvalue=hess_eig,
        nearest_index=nearest,
        nearest_sign=int(signs[nearest]),
        nearest_distance=float(dists[nearest]),
        subspace_delta=delta,
        cap_radius=cap_radius,
        is_second_order=is_second_order,
        in_superlevel=in_superlevel,
        within_cap=within_cap,
        verdict=verdict,
        zeta=zeta,
        expansion=expansion,
    )


def spurious_construction(a, b, delta: float, n: int) -> TensorSubspace:
    """Rank-one perturbed subspace carrying a spurious strict maximizer.

    For orthonormal ``a``, ``b`` the span of
    ``sqrt(1 - delta^2) a^(x n) - delta b^(x n)`` sits at projector
    distance exactly ``delta`` from ``span{a^(x n)}`` while ``b`` is a
    strict local maximizer with objective value ``delta^2``.
    """
    a = _check_unit(a, "a")
    b = _check_unit(b, "b")
    if abs(float(a @ b)) > 1e-12:
        raise ValueError("a and b must be orthogonal")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    vec = np.sqrt(1.0 - delta**2) * vec_power(a, n) - delta * vec_power(b, n)
    vec /= np.linalg.norm(vec)
    return TensorSubspace(dim=a.size, half_order=n, basis=vec[:, None])


def rip_check(
    a: np.ndarray,
    p: int,
    delta: float,
    rng=0,
    *,
    max_exhaustive: int = 1_000_000,
    samples: int = 10_000,
) -> RipCheckResult:
    """Isometry deviation of ``D x p`` submatrices.

    Exhaustive over all column subsets when their count stays within
    ``max_exhaustive``; otherwise a random sample, in which case a pass
    is evidence, not a certificate.
    """
    a = np.asarray(a, dtype=np.float64)
    k = a.shape[1]
    if not 1 <= p <= k:
        raise ValueError("p must lie in [1, K]")
    g = a.T @ a
    total = comb(k, p)
    exhaustive = total <= max_exhaustive

    def deviations(index_sets: np.ndarray) -> np.ndarray:
        subs = g[index_sets[:, :, None], index_sets[:, None, :]]
        eigs = np.linalg.eigvalsh(subs)
        return np.max(np.abs(eigs - 1.0), axis=1)

    worst = 0.0
    checked = 0
    if exhaustive:
        from itertools import combinations, islice

        it = combinations(range(k), p)
        while True:
            block = np.array(list(islice(it, 20_000)), dtype=int)
            if block.size == 0:
                break
            worst = max(worst, float(np.max(deviations(block))))
            checked += block.shape[0]
    else:
        rng = as_rng(rng)
        sets = np.stack([rng.choice(k, size=p, replace=False) for _ in range(samples)])
        worst = float(np.max(deviations(sets)))
        checked = samples
    return RipCheckResult(
        passed=worst <= delta, worst_deviation=worst, exhaustive=exhaustive, checked=checked
    )


def rip_partition(a: np.ndarray, x, p: int, delta: float) -> RipPartition:
    """Split correlations into the top-``p`` set and the rest.

    Flags whether the in-set energy lies in ``[1 - delta, 1 + delta]``
    and whether the largest off-set squared correlation is at most
    ``(1 + delta) / p``.
    """
    a = np.asarray(a, dtype=np.float64)
    x = _check_unit(x)
    if not 1 <= p <= a.shape[1]:
        raise ValueError("p must lie in [1, K]")
    z2 = (a.T @ x) ** 2
    order = np.argsort(-z2, kind="stable")
    inside = order[:p]
    in_sum = float(np.sum(z2[inside]))
    off_max = float(np.max(z2[order[p:]])) if p < a.shape[1] else 0.0
    return RipPartition(
        indices=np.sort(inside),
        in_set_sum=in_sum,
        in_set_ok=(1 - delta) <= in_sum <= (1 + delta),
        off_set_max=off_max,
        off_set_ok=off_max <= (1 + delta) / p,
    )


def report_rows(report: CriticalityReport) -> list[tuple[str, str]]:
    """Flat (field, value) pairs for CSV output."""
    rows = [
        ("objective", f"{report.objective:.17g}"),
        ("gradient_norm", f"{report.gradient_norm:.17g}"),
        ("hessian_max_eigenvalue", f"{report.hessian_max_eigenvalue:.17g}"),
        ("nearest_index", str(report.nearest_index)),
        ("nearest_sign", str(report.nearest_sign)),
        ("nearest_distance", f"{report.nearest_distance:.17g}"),
        ("subspace_delta", f"{report.subspace_delta:.17g}"),
        ("cap_radius", f"{report.cap_radius:.17g}"),
        ("is_second_order", str(report.is_second_order).lower()),
        ("in_superlevel", str(report.in_superlevel).lower()),
        ("within_cap", "" if report.within_cap is None else str(report.within_cap).lower()),
        ("verdict", report.verdict),
    ]
    return rows


def format_report(report: CriticalityReport) -> str:
    """Human-readable criticality summary."""
    lines = [
        f"objective            {report.objective:.12g}",
        f"gradient norm        {report.gradient_norm:.3e}",
        f"max tangent Hessian  {report.hessian_max_eigenvalue:.3e}",
        f"nearest component    #{report.nearest_index} (sign {report.nearest_sign:+d}) "
        f"at distance {report.nearest_distance:.3e}",
        f"subspace error       {report.subspace_delta:.3e}",
        f"second-order point   {report.is_second_order}",
        f"in superlevel set    {report.in_superlevel}",
    ]
    if report.within_cap is not None:
        lines.append(f"within sqrt(2*delta/n) cap: {report.within_cap}")
    lines.append(f"verdict: {report.verdict}")
    return "\n".join(lines)


def frame_rows(entries: dict[int, FrameConstantEntry]) -> list[tuple[str, str, str, str]]:
    """CSV rows (s, lower, upper, exact) for frame constant estimates."""
    rows = []
    for s in sorted(entries):
        e = entries[s]
        rows.append((str(s), f"{e.lower:.17g}", f"{e.upper:.17g}", str(e.exact).lower()))
    return rows
