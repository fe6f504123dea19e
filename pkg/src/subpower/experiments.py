"""Experiment harness: random models, Monte-Carlo sweeps, result tables.

Every experiment draws its randomness from streams derived off a base
seed and the cell/trial labels, so results are reproducible and
independent of worker count.  Trials are dispatched to a process pool
when ``SPM_THREADS`` asks for more than one worker and merged in
deterministic order.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ascent import AscentConfig, run_pm_ascent, run_spm_ascent
from .decompose import decompose, match_components
from .landscape import grammian, objective_via_grammian
from .seeding import as_rng, derive_rng, unit_sphere
from .subspace import extract_subspace
from .tensors import ComponentEnsemble, add_gaussian_noise, cp_synthesize

__all__ = [
    "Cell",
    "ExperimentSpec",
    "ResultTable",
    "EXPERIMENTS",
    "gen_random_ensemble",
    "nearest_component_distance",
    "parse_spec",
    "run_experiment",
    "run_fig_recovery",
    "run_fig_noise",
    "run_fig_deflation",
    "run_fig_grammian",
    "run_fig_init",
    "read_table_csv",
]

COLUMNS = ["experiment", "D", "K", "m", "sigma", "trial", "k", "metric", "stat", "value"]

EXPERIMENTS = ("fig-recovery", "fig-noise", "fig-deflation", "fig-grammian", "fig-init")


@dataclass(frozen=True)
class Cell:
    """One grid point of an experiment."""

    d: int
    k: int
    m: int
    sigma: float = 0.0

    def __post_init__(self):
        if self.d < 2 or self.k < 1 or self.m < 3:
            raise ValueError("cell needs D >= 2, K >= 1, m >= 3")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass
class ExperimentSpec:
    """Grid, trial counts, seed and output directory of one experiment."""

    experiment: str
    cells: list[Cell]
    tensors: int = 20
    inits: int = 5
    trials: int = 25
    seed: int = 0
    outdir: str = "."

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not self.cells:
            raise ValueError("experiment needs at least one cell")
        if min(self.tensors, self.inits, self.trials) < 1:
            raise ValueError("trial counts must be at least 1")


class ResultTable:
    """Long-format result rows plus per-group summary statistics."""

    def __init__(self, rows: list[dict] | None = None):
        self.rows: list[dict] = rows or []

    def add(self, **kw) -> None:
        row = {c: kw.get(c, "") for c in COLUMNS}
        self.rows.append(row)

    @staticmethod
    def _match(cell_value, wanted) -> bool:
        try:
            return float(cell_value) == float(wanted)
        except (TypeError, ValueError):
            return str(cell_value) == str(wanted)

    def values(self, metric: str, stat: str = "value", **filters) -> np.ndarray:
        out = []
        for row in self.rows:
            if row["metric"] != metric or row["stat"] != stat:
                continue
            if any(not self._match(row[k], v) for k, v in filters.items()):
                continue
            out.append(float(row["value"]))
        return np.array(out)

    def append_summaries(self) -> None:
        """Mean and sample standard deviation per (cell, k, metric) group."""
        groups: dict[tuple, list[float]] = {}
        order: list[tuple] = []
        for row in self.rows:
            if row["stat"] != "value":
                continue
            key = (row["experiment"], row["D"], row["K"], row["m"], row["sigma"],
                   row["k"], row["metric"])
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(float(row["value"]))
        for key in order:
            vals = np.array(groups[key])
            exp, d, k_, m, sigma, kk, metric = key
            base = dict(experiment=exp, D=d, K=k_, m=m, sigma=sigma, k=kk, metric=metric)
            self.add(**base, stat="mean", value=float(np.mean(vals)))
            std = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            self.add(**base, stat="std", value=std)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(COLUMNS)
            for row in self.rows:
                out = []
                for c in COLUMNS:
                    v = row[c]
                    if c == "value":
                        out.append(f"{float(v):.17g}")
                    elif c == "sigma" and v != "":
                        out.append(repr(float(v)))
                    else:
                        out.append(str(v))
                writer.writerow(out)


def read_table_csv(path) -> ResultTable:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        return ResultTable(rows=list(reader))


def gen_random_ensemble(d: int, k: int, m: int, rng) -> ComponentEnsemble:
    """Random model: uniform unit directions, weights ``sqrt(D^m/K) * U[1/2, 2]``.

    The scaling puts the variance of each synthesized tensor entry near 1.
    """
    rng = as_rng(rng)
    a = rng.standard_normal((d, k))
    a /= np.linalg.norm(a, axis=0)
    lam = np.sqrt(d**m / k) * rng.uniform(0.5, 2.0, size=k)
    return ComponentEnsemble(order=m, weights=lam, components=a)


def nearest_component_distance(components: np.ndarray, x: np.ndarray) -> float:
    """``min_{i,s} ||x - s a_i||_2`` for unit columns and unit ``x``."""
    zeta = np.abs(components.T @ x)
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * float(np.max(zeta)))))


def _worker_count() -> int:
    env = os.environ.get("SPM_THREADS", "")
    if not env:
        return 1
    return max(1, int(env))


def _parallel(fn, tasks: list) -> list:
    workers = _worker_count()
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _make_tensor(seed: int, cell: Cell, t: int):
    """Shared tensor construction; the ensemble stream ignores sigma so a
    noiseless sweep reproduces the recovery experiment bit-for-bit."""
    ens = gen_random_ensemble(
        cell.d, cell.k, cell.m, derive_rng(seed, "ens", cell.d, cell.k, cell.m, t)
    )
    tensor = cp_synthesize(ens)
    if cell.sigma > 0:
        tensor = add_gaussian_noise(
            tensor,
            cell.sigma,
            derive_rng(seed, "noise", cell.d, cell.k, cell.m, cell.sigma, t),
        )
    return ens, tensor


def _recovery_trial(args) -> list[dict]:
    experiment, seed, cell, t, inits = args
    ens, tensor = _make_tensor(seed, cell, t)
    n = (cell.m + 1) // 2
    sub = extract_subspace(tensor, n, rank=cell.k)
    cfg = AscentConfig()
    rows = []
    base = dict(experiment=experiment, D=cell.d, K=cell.k, m=cell.m,
                sigma=cell.sigma, stat="value")
    for i in range(inits):
        x0 = unit_sphere(
            derive_rng(seed, "x0", cell.d, cell.k, cell.m, t, i), cell.d
        )
        spm = run_spm_ascent(sub, x0, cfg)
        pm = run_pm_ascent(tensor, x0, cfg)
        trial = t * inits + i
        rows.append(dict(base, trial=trial, metric="spm_error",
                         value=nearest_component_distance(ens.components, spm.final_x)))
        rows.append(dict(base, trial=trial, metric="spm_objective",
                         value=spm.final_objective))
        rows.append(dict(base, trial=trial, metric="spm_converged",
                         value=float(spm.converged)))
        rows.append(dict(base, trial=trial, metric="pm_error",
                         value=nearest_component_distance(ens.components, pm.final_x)))
        rows.append(dict(base, trial=trial, metric="pm_objective",
                         value=pm.final_objective))
    return rows


def run_fig_recovery(spec: ExperimentSpec) -> ResultTable:
    """Component recovery from shared initializations, subspace vs raw ascent."""
    tasks = [("fig-recovery", spec.seed, cell, t, spec.inits)
             for cell in spec.cells for t in range(spec.tensors)]
    table = ResultTable()
    for rows in _parallel(_recovery_trial, tasks):
        table.rows.extend(rows)
    table.append_summaries()
    return table


def run_fig_noise(spec: ExperimentSpec) -> ResultTable:
    """Noise sweep; adds a log-log slope of mean subspace error vs sigma."""
    tasks = [("fig-noise", spec.seed, cell, t, spec.inits)
             for cell in spec.cells for t in range(spec.tensors)]
    table = ResultTable()
    for rows in _parallel(_recovery_trial, tasks):
        table.rows.extend(rows)
    table.append_summaries()
    # slope per (D, K, m) group over its positive noise levels
    groups: dict[tuple, list[Cell]] = {}
    for cell in spec.cells:
        groups.setdefault((cell.d, cell.k, cell.m), []).append(cell)
    for (d, k, m), cells in groups.items():
        sigmas, means = [], []
        for cell in cells:
            if cell.sigma <= 0:
                continue
            vals = table.values("spm_error", stat="mean", D=d, K=k, m=m,
                                sigma=cell.sigma)
            if vals.size:
                sigmas.append(cell.sigma)
                means.append(vals[0])
        if len(sigmas) >= 2:
            slope = float(np.polyfit(np.log(sigmas), np.log(means), 1)[0])
            table.add(experiment="fig-noise", D=d, K=k, m=m,
                      metric="spm_error", stat="slope", value=slope)
    return table


def _deflation_trial(args) -> list[dict]:
    seed, cell, t = args
    ens, tensor = _make_tensor(seed, cell, t)
    cfg = AscentConfig()
    result = decompose(
        tensor, cfg, rank=cell.k,
        rng=derive_rng(seed, "dec", cell.d, cell.k, cell.m, cell.sigma, t),
    )
    report = match_components(ens, result)
    base = dict(experiment="fig-deflation", D=cell.d, K=cell.k, m=cell.m,
                sigma=cell.sigma, trial=t, stat="value")
    rows = []
    for k in range(cell.k):
        rows.append(dict(base, k=k + 1, metric="direction_error",
                         value=report.direction_errors[k]))
        rows.append(dict(base, k=k + 1, metric="weight_rel_error",
                         value=report.weight_rel_errors[k]))
    return rows


def run_fig_deflation(spec: ExperimentSpec) -> ResultTable:
    """Full decomposition per tensor; error indexed by recovery round."""
    tasks = [(spec.seed, cell, t) for cell in spec.cells for t in range(spec.tensors)]
    table = ResultTable()
    for rows in _parallel(_deflation_trial, tasks):
        table.rows.extend(rows)
    table.append_summaries()
    return table


def _grammian_trial(args) -> list[dict]:
    seed, cell, r = args
    ens = gen_random_ensemble(
        cell.d, cell.k, cell.m, derive_rng(seed, "ens", cell.d, cell.k, cell.m, r)
    )
    n = (cell.m + 1) // 2
    g = grammian(ens.components, n)
    return [dict(experiment="fig-grammian", D=cell.d, K=cell.k, m=cell.m,
                 sigma=cell.sigma, trial=r, k="", metric="grammian_min_eig",
                 stat="value", value=g.min_eigenvalue)]


def run_fig_grammian(spec: ExperimentSpec) -> ResultTable:
    """Minimal Grammian eigenvalue of random ensembles, per cell."""
    tasks = [(spec.seed, cell, r) for cell in spec.cells for r in range(spec.trials)]
    table = ResultTable()
    for rows in _parallel(_grammian_trial, tasks):
        table.rows.extend(rows)
    table.append_summaries()
    return table


def _init_trial(args) -> list[dict]:
    seed, cell, r = args
    rng = derive_rng(seed, "sample", cell.d, cell.k, cell.m, r)
    ens = gen_random_ensemble(cell.d, cell.k, cell.m, rng)
    x = unit_sphere(rng, cell.d)
    n = (cell.m + 1) // 2
    g = grammian(ens.components, n)
    rows = [dict(experiment="fig-init", D=cell.d, K=cell.k, m=cell.m,
                 sigma=cell.sigma, trial=r, k="", metric="objective_at_random",
                 stat="value", value=objective_via_grammian(ens.components, g, x))]
    if r == 0:
        rows.append(dict(experiment="fig-init", D=cell.d, K=cell.k, m=cell.m,
                         sigma=cell.sigma, trial=r, k="",
                         metric="objective_at_component", stat="value",
                         value=objective_via_grammian(ens.components, g,
                                                      ens.components[:, 0])))
    return rows


def run_fig_init(spec: ExperimentSpec) -> ResultTable:
    """Objective value at uniform random starts against fresh random subspaces."""
    tasks = [(spec.seed, cell, r) for cell in spec.cells for r in range(spec.trials)]
    table = ResultTable()
    for rows in _parallel(_init_trial, tasks):
        table.rows.extend(rows)
    table.append_summaries()
    for cell in spec.cells:
        n = (cell.m + 1) // 2
        mean = table.values("objective_at_random", stat="mean", D=cell.d,
                            K=cell.k, m=cell.m)
        if mean.size:
            ratio = mean[0] / (cell.k / cell.d**n)
            table.add(experiment="fig-init", D=cell.d, K=cell.k, m=cell.m,
                      sigma=cell.sigma, metric="objective_at_random",
                      stat="scaling_ratio", value=float(ratio))
    return table


_RUNNERS = {
    "fig-recovery": run_fig_recovery,
    "fig-noise": run_fig_noise,
    "fig-deflation": run_fig_deflation,
    "fig-grammian": run_fig_grammian,
    "fig-init": run_fig_init,
}


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    return _RUNNERS[spec.experiment](spec)


def parse_spec(text: str, experiment: str | None = None) -> ExperimentSpec:
    """Parse a flat ``key = value`` spec; ``cell`` lines may repeat.

    A cell line holds ``D K m sigma`` (sigma optional, default 0).
    """
    fields: dict[str, str] = {}
    cells: list[Cell] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"spec line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "cell":
            parts = value.split()
            if len(parts) not in (3, 4):
                raise ValueError(f"spec line {lineno}: cell needs 'D K m [sigma]'")
            cells.append(Cell(d=int(parts[0]), k=int(parts[1]), m=int(parts[2]),
                              sigma=float(parts[3]) if len(parts) == 4 else 0.0))
        else:
            fields[key] = value

    name = fields.pop("experiment", experiment)
    if name is None:
        raise ValueError("spec is missing the experiment name")
    if experiment is not None and name != experiment:
        raise ValueError(f"spec names experiment {name!r}, expected {experiment!r}")
    kwargs = {}
    for key in ("tensors", "inits", "trials", "seed"):
        if key in fields:
            kwargs[key] = int(fields.pop(key))
    if "outdir" in fields:
        kwargs["outdir"] = fields.pop("outdir")
    if fields:
        raise ValueError(f"unknown spec keys: {sorted(fields)}")
    return ExperimentSpec(experiment=name, cells=cells, **kwargs)
