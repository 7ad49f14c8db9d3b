"""Command-line interface: ``sghelmholtz <command> [options]``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import precond as pc
from .experiments import ExperimentConfig, make_system, run_decay, run_solve, run_stats, run_sweep


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sghelmholtz",
        description="Stochastic Galerkin finite differences for the Helmholtz equation "
                    "with a random wavenumber.",
    )
    p.add_argument("command", nargs="?", default="solve",
                   choices=["solve", "sweep", "decay", "stats", "spectrum", "accept"])
    p.add_argument("--dim", type=int, default=1, choices=[1, 2])
    p.add_argument("--kbar", type=float, default=50.0, help="mean wavenumber (1D)")
    p.add_argument("--k1", type=float, default=30.0, help="bottom layer wavenumber (2D)")
    p.add_argument("--k2", type=float, default=15.0, help="middle layer wavenumber (2D)")
    p.add_argument("--k3", type=float, default=20.0, help="top layer wavenumber (2D)")
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--degree", type=int, default=None,
                   help="total polynomial degree r (default 3 in 1D, 2 in 2D)")
    p.add_argument("--beta", type=float, default=pc.DEFAULT_BETA)
    p.add_argument("--bc", choices=["dirichlet", "absorbing"], default="absorbing")
    p.add_argument("--precond", choices=["none", "csl", "mean", "meancsl"], default="mean")
    p.add_argument("--side", choices=["left", "right"], default="right")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--maxit", type=int, default=None)
    p.add_argument("--solver", choices=["direct", "gmres", "stationary"], default="gmres")
    p.add_argument("--q", type=int, default=None, help="interior nodes per axis (overrides the mesh rule)")
    p.add_argument("--mesh", choices=["mean", "max"], default="mean",
                   help="evaluate the mesh rule at the largest mean or the largest possible wavenumber")
    p.add_argument("--out", default="results")
    p.add_argument("--id", default=None, help="experiment directory name (default: the command)")
    p.add_argument("--write-matrix", action="store_true", help="also write matrix.mtx")
    p.add_argument("--kbars", type=float, nargs="+", help="sweep: mean wavenumbers")
    p.add_argument("--degrees", type=int, nargs="+", help="sweep: polynomial degrees")
    p.add_argument("--no-solve", action="store_true", help="sweep: assemble only")
    p.add_argument("--differences", action="store_true", help="decay: also ||x_(r-1) - x_r||")
    p.add_argument("--criteria", type=int, nargs="+", help="accept: criterion numbers to run")
    return p


def _config(args) -> ExperimentConfig:
    degree = args.degree if args.degree is not None else (3 if args.dim == 1 else 2)
    return ExperimentConfig(
        experiment=args.id or args.command, dim=args.dim, kbar=args.kbar, k1=args.k1,
        k2=args.k2, k3=args.k3, theta=args.theta, degree=degree, beta=args.beta, bc=args.bc,
        precond=args.precond, side=args.side, solver=args.solver, tol=args.tol,
        maxit=args.maxit, q=args.q, mesh=args.mesh, out=args.out,
        write_matrix=args.write_matrix,
    ).validate()


def _spectrum(cfg: ExperimentConfig) -> int:
    from .spectra import preconditioned_spectrum, write_spectrum_csv

    sys_ = make_system(cfg)
    kind = pc.Kind(cfg.precond)
    p = pc.build(sys_, kind, cfg.beta)
    rep = preconditioned_spectrum(sys_, p, cfg.side)
    outdir = cfg.directory
    outdir.mkdir(parents=True, exist_ok=True)
    write_spectrum_csv(outdir / "spectrum.csv", rep.eigenvalues)
    (outdir / "summary.txt").write_text(f"precond {p.tag}\nsize {sys_.size}\n" + rep.summary())
    print(rep.summary(), end="")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "accept":
            from .acceptance import CHECKS, format_line

            failed = 0
            for n in args.criteria or sorted(CHECKS):
                res = CHECKS[n]()
                failed += not res.passed
                print(format_line(res), flush=True)
            return 1 if failed else 0
        cfg = _config(args)
        if args.command == "solve":
            rep = run_solve(cfg)
            print(f"converged={rep.converged} iterations={rep.iterations} "
                  f"residual={rep.final_residual:.3e} time={rep.wall_time:.3f}s -> {cfg.directory}")
            return 0 if rep.converged else 2
        if args.command == "sweep":
            if args.kbars and cfg.dim != 1:
                raise ValueError("a wavenumber sweep is defined in 1D only")
            rows = run_sweep(cfg, kbars=args.kbars,
                             degrees=None if args.kbars else (args.degrees or [cfg.degree]),
                             solve=not args.no_solve)
            for row in rows:
                print(", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                                for k, v in row.items()))
            return 0
        if args.command == "decay":
            res = run_decay(cfg, differences=args.differences)
            print(f"slope of log magnitude: {res['slope']:.4f}")
            return 0
        if args.command == "stats":
            run_stats(cfg)
            print(f"wrote mean and variance grids to {cfg.directory}")
            return 0
        return _spectrum(replace(cfg))
    except (ValueError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
