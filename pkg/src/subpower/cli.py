"""Command-line interface.

Subcommands:

* ``gen``        synthesize a random model tensor (plus companion truth file)
* ``decompose``  run the full decomposition on a tensor file
* ``experiment`` run one of the named Monte-Carlo studies from a spec file
* ``certify``    first/second-order and theorem checks for given points

Exit codes: 0 success, 1 runtime/file failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .ascent import AscentConfig
from .decompose import decompose, write_result_csv
from .errors import NoComponentFoundError
from .experiments import EXPERIMENTS, gen_random_ensemble, parse_spec, run_experiment
from .fileio import load_ensemble, load_tensor, save_ensemble, save_tensor
from .landscape import (
    certify_point,
    estimate_rho,
    format_report,
    frame_rows,
    report_rows,
    thresholds,
)
from .seeding import derive_rng
from .subspace import extract_subspace
from .tensors import add_gaussian_noise, cp_synthesize

__all__ = ["main"]

_PAPER_SCALE = {"tensors": 100, "inits": 10, "trials": 100}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subpower",
        description="Symmetric tensor decomposition via the subspace power method.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a random model tensor")
    gen.add_argument("--d", type=int, required=True, help="ambient dimension")
    gen.add_argument("--k", type=int, required=True, help="rank")
    gen.add_argument("--m", type=int, required=True, help="tensor order")
    gen.add_argument("--sigma", type=float, default=0.0, help="entry noise level")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True, help="output tensor (.spt)")

    dec = sub.add_parser("decompose", help="decompose a tensor file")
    dec.add_argument("tensor", help="input tensor (.spt)")
    rank = dec.add_mutually_exclusive_group()
    rank.add_argument("--k", type=int, help="fixed rank")
    rank.add_argument("--alpha", type=float, help="singular value threshold")
    dec.add_argument("--tau", type=float, default=0.5, help="acceptance threshold")
    dec.add_argument("--gamma", type=float, default=None, help="ascent step size")
    dec.add_argument("--seed", type=int, default=0)
    dec.add_argument("-o", "--output", required=True, help="output csv")

    exp = sub.add_parser("experiment", help="run a Monte-Carlo study")
    exp.add_argument("name", choices=EXPERIMENTS)
    exp.add_argument("--spec", required=True, help="flat key=value spec file")
    exp.add_argument("-o", "--outdir", required=True)
    exp.add_argument("--plot", action="store_true", help="also emit an SVG per table")
    exp.add_argument("--full", action="store_true",
                     help="restore full-scale trial counts where the spec "
                          "does not pin them")

    cert = sub.add_parser("certify", help="criticality checks for points")
    cert.add_argument("tensor", help="input tensor (.spt)")
    cert.add_argument("points", help="text file, one point (D floats) per line")
    cert.add_argument("--truth", required=True, help="ground-truth ensemble (.spe)")
    rank = cert.add_mutually_exclusive_group()
    rank.add_argument("--k", type=int, help="fixed rank")
    rank.add_argument("--alpha", type=float, help="singular value threshold")
    cert.add_argument("--budget", type=int, default=16,
                      help="restarts for frame-constant estimation")
    cert.add_argument("--seed", type=int, default=0)
    cert.add_argument("-o", "--output", default=None, help="optional report csv")
    return parser


def _cmd_gen(args) -> int:
    rng = derive_rng(args.seed, "cli-gen", args.d, args.k, args.m)
    from .experiments import gen_random_ensemble

    ens = gen_random_ensemble(args.d, args.k, args.m, rng)
    tensor = cp_synthesize(ens)
    if args.sigma > 0:
        tensor = add_gaussian_noise(
            tensor, args.sigma, derive_rng(args.seed, "cli-noise", args.d, args.k, args.m)
        )
    out = Path(args.output)
    save_tensor(out, tensor)
    save_ensemble(out.with_suffix(".spe"), ens)
    print(f"wrote {out} and {out.with_suffix('.spe')}")
    return 0


def _cmd_decompose(args) -> int:
    tensor = load_tensor(args.tensor)
    cfg = AscentConfig(gamma=args.gamma, accept_tau=args.tau)
    try:
        result = decompose(tensor, cfg, rank=args.k, alpha=args.alpha,
                           rng=derive_rng(args.seed, "cli-decompose"))
    except NoComponentFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_result_csv(args.output, result)
    print(f"recovered {result.rank} components -> {args.output}")
    return 0


def _cmd_experiment(args) -> int:
    spec = parse_spec(Path(args.spec).read_text(encoding="utf-8"), args.name)
    if args.full:
        given = {
            line.split("=", 1)[0].strip()
            for line in Path(args.spec).read_text(encoding="utf-8").splitlines()
            if "=" in line
        }
        for key, value in _PAPER_SCALE.items():
            if key not in given:
                setattr(spec, key, value)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    table = run_experiment(spec)
    csv_path = outdir / f"{spec.experiment}.csv"
    table.write_csv(csv_path)
    print(f"wrote {csv_path}")
    if args.plot:
        from .plotting import render_table

        svg_path = outdir / f"{spec.experiment}.svg"
        render_table(table, spec.experiment, svg_path)
        print(f"wrote {svg_path}")
    return 0


def _load_points(path, dim: int) -> list[np.ndarray]:
    points = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        vals = np.array([float(v) for v in line.split()])
        if vals.size != dim:
            raise ValueError(f"{path}:{lineno}: expected {dim} coordinates")
        norm = np.linalg.norm(vals)
        if norm == 0:
            raise ValueError(f"{path}:{lineno}: zero point")
        points.append(vals / norm)
    if not points:
        raise ValueError(f"{path}: no points found")
    return points


def _cmd_certify(args) -> int:
    tensor = load_tensor(args.tensor)
    truth = load_ensemble(args.truth)
    n = (tensor.order + 1) // 2
    rank = args.k if args.k is not None else (None if args.alpha else truth.rank)
    sub = extract_subspace(tensor, n, rank=rank, alpha=args.alpha)

    rho2 = estimate_rho(truth.components, 2, budget=args.budget,
                        rng=derive_rng(args.seed, "rho", 2))
    rho_n = estimate_rho(truth.components, n, budget=args.budget,
                         rng=derive_rng(args.seed, "rho", n))
    # conservative (upper) ends of the frame constant intervals
    thr = thresholds(rho2.upper, rho_n.upper, n, tensor.dim, truth.rank)

    print("frame constants (s, lower, upper, exact):")
    for row in frame_rows({2: rho2, n: rho_n}):
        print("  " + ", ".join(row))
    print(f"tau = {thr.tau:.6g}, delta0 = {thr.delta0:.6g}, eps_K = {thr.eps_k:.6g}")

    points = _load_points(args.points, tensor.dim)
    reports = []
    for idx, x in enumerate(points):
        report = certify_point(sub, truth, x, thr)
        reports.append(report)
        print(f"\npoint {idx}:")
        print(format_report(report))
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            fields = [name for name, _ in report_rows(reports[0])]
            writer.writerow(["point"] + fields)
            for idx, report in enumerate(reports):
                writer.writerow([idx] + [v for _, v in report_rows(report)])
        print(f"\nwrote {args.output}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "decompose": _cmd_decompose,
    "experiment": _cmd_experiment,
    "certify": _cmd_certify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
