"""Batch front end: decompose matrix files, run grid and convergence experiments, cost reports.

Exit codes: 0 success (and convergence), 1 bad input or configuration, 2 a
decomposition that did not converge.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .complexity import GateCostModel, cost_report
from .fixedpoint import FixedFormat, FixedPointError
from .matrixio import MatrixParseError, atomic_write_text, format_matrix, read_matrix
from .oracle import brute_svd
from .rotate import ScaleConfig
from .sweep import AlgorithmVariant, SvdConfig, decompose

OUT_ENV = "FASTSVD_OUT"
EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 1, 2

log = logging.getLogger("fastsvd")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    variant: AlgorithmVariant = AlgorithmVariant.ERFHSVD
    word_bits: int = 16
    frac_bits: int = 12
    internal_bits: int = 32
    scale_stages: str = "4"
    sweeps: int = 16
    tol: float = 2.0**-16
    trials: int = 100
    size: int = 70
    seed: int = 0
    out: Path = Path(".")

    def validate(self) -> "RunConfig":
        try:
            self.svd_config()
        except (ValueError, FixedPointError) as e:
            raise ConfigError(str(e)) from None
        if self.trials < 1:
            raise ConfigError("--trials must be at least 1")
        if self.size < 1:
            raise ConfigError("--size must be at least 1")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        return self

    def scale(self) -> ScaleConfig:
        if self.scale_stages == "bypass":
            return ScaleConfig(bypass=True)
        return ScaleConfig(stages=int(self.scale_stages))

    def svd_config(self) -> SvdConfig:
        return SvdConfig(
            input_format=FixedFormat(self.word_bits, self.frac_bits),
            internal_bits=self.internal_bits,
            scale=self.scale(),
            sweeps=self.sweeps,
            tol=self.tol,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are input errors; 2 is reserved for non-convergence
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, variant_default: str = "erfhsvd", repeat_variant: bool = False):
    variants = [v.value for v in AlgorithmVariant]
    if repeat_variant:
        p.add_argument("--variant", choices=variants, action="append", help="repeat to compare variants")
    else:
        p.add_argument("--variant", choices=variants, default=variant_default)
    p.add_argument("--bits", type=int, default=None, help="input word width (default 16)")
    p.add_argument("--frac-bits", type=int, default=None, help="input fraction bits (default 12)")
    p.add_argument("--internal-bits", type=int, default=32)
    p.add_argument("--scale-stages", choices=["1", "2", "3", "4", "bypass"], default="4")
    p.add_argument("--sweeps", type=int, default=16)
    p.add_argument("--tol", type=float, default=2.0**-16)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--size", type=int, default=70)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or .)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fastsvd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="decompose a matrix file")
    p.add_argument("matrix", type=Path)
    _common(p)

    p = sub.add_parser("grid", help="one-step ||D|| over a (tau1, tau2) grid")
    _common(p)
    p.add_argument("--tau-min", type=float, default=-10.0)
    p.add_argument("--tau-max", type=float, default=10.0)
    p.add_argument("--tau-step", type=float, default=0.05)
    p.add_argument("--symmetric", action="store_true", help="only the symmetric slice (1/tau2 = 0)")

    p = sub.add_parser("rmsodn", help="RMS off-diagonal norm per sweep over random trials")
    _common(p, repeat_variant=True)

    p = sub.add_parser("complexity", help="gate delay/area report")
    p.add_argument("--model", type=Path, default=None, help="key=value unit-cost file (default: unit costs)")
    p.add_argument("--bits", type=int, default=32, help="word width Lambda")
    p.add_argument("--out", type=Path, default=None)
    return parser


def _out_dir(arg: Path | None) -> Path:
    out = arg or Path(os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_config(args, variant=None, word_bits=16, frac_bits=12) -> RunConfig:
    return RunConfig(
        variant=AlgorithmVariant(variant or args.variant),
        word_bits=word_bits if args.bits is None else args.bits,
        frac_bits=frac_bits if args.frac_bits is None else args.frac_bits,
        internal_bits=args.internal_bits,
        scale_stages=args.scale_stages,
        sweeps=args.sweeps,
        tol=args.tol,
        trials=args.trials,
        size=args.size,
        seed=args.seed,
    ).validate()


def _g(x: float) -> str:
    return format(x, ".17g")


def cmd_decompose(args) -> int:
    rc = _run_config(args)
    cfg = rc.svd_config()
    A = read_matrix(args.matrix, cfg.input_format)
    if A.shape[0] != A.shape[1]:
        raise ConfigError(f"decompose needs a square matrix, got {A.shape[0]}x{A.shape[1]}")
    res = decompose(A, rc.variant, cfg)
    Af = A.to_float()
    n = A.shape[0]
    ref = brute_svd(Af)[1] if n <= 8 else np.linalg.svd(Af, compute_uv=False)
    norm = float(np.linalg.norm(Af))
    rec = float(np.linalg.norm(res.reconstruct() - Af)) / norm if norm else 0.0
    sv = float(np.abs(res.sigma_values() - ref).max() / ref[0]) if ref[0] else 0.0
    trace = "sweep,offdiag_norm\n" + "".join(f"{k},{_g(v)}\n" for k, v in enumerate(res.trace))
    summary = (
        f"variant {rc.variant.value}\n"
        f"size {n}\n"
        f"converged {str(res.converged).lower()}\n"
        f"sweeps {res.sweeps_used}\n"
        f"rotations {res.rotations}\n"
        f"overflow_events {res.overflow_events}\n"
        f"reconstruction_error {_g(rec)}\n"
        f"sigma_error_vs_oracle {_g(sv)}\n"
    )
    out = _out_dir(args.out)
    for name, text in (
        ("U.txt", format_matrix(res.U)),
        ("Sigma.txt", format_matrix(res.Sigma)),
        ("V.txt", format_matrix(res.V)),
        ("trace.csv", trace),
        ("summary.txt", summary),
    ):
        atomic_write_text(out / name, text)
    sys.stdout.write(summary)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_grid(args) -> int:
    rc = _run_config(args, word_bits=metrics.GRID_FORMAT.word_bits, frac_bits=metrics.GRID_FORMAT.frac_bits)
    taus = metrics.tau_range(args.tau_min, args.tau_max, args.tau_step)
    if not taus:
        raise ConfigError("empty grid: no tau values in [--tau-min, --tau-max]")
    tau2 = [math.inf] if args.symmetric else taus
    rows = metrics.grid_sweep(rc.variant, taus, tau2, rc.svd_config())
    out = _out_dir(args.out)
    atomic_write_text(out / f"grid_{rc.variant.value}.csv", metrics.grid_csv(rows))
    present = [r.D for r in rows if r.D is not None]
    print(f"{rc.variant.value}: {len(rows)} points, {len(present)} reachable, max D {_g(max(present, default=0.0))}")
    return EXIT_OK


def cmd_rmsodn(args) -> int:
    variants = args.variant or ["erfhsvd"]
    configs = [_run_config(args, variant=v) for v in variants]
    curves = [
        metrics.rms_odn_experiment(rc.size, rc.trials, rc.sweeps, rc.variant, rc.seed, rc.svd_config())
        for rc in configs
    ]
    out = _out_dir(args.out)
    for rc, curve in zip(configs, curves):
        atomic_write_text(out / f"rmsodn_{rc.variant.value}.csv", curve.to_csv())
        hit = curve.first_below(rc.tol)
        print(f"{rc.variant.value}: ratio <= {_g(rc.tol)} at sweep {hit if hit is not None else 'never'}")
    return EXIT_OK


def cmd_complexity(args) -> int:
    if args.bits < 2:
        raise ConfigError("--bits must be at least 2")
    model = GateCostModel.from_file(args.model) if args.model else GateCostModel()
    report = cost_report(args.bits, model)
    out = _out_dir(args.out)
    atomic_write_text(out / "complexity.csv", report.to_csv())
    atomic_write_text(out / "complexity.txt", report.to_text())
    sys.stdout.write(report.to_text())
    return EXIT_OK


COMMANDS = {"decompose": cmd_decompose, "grid": cmd_grid, "rmsodn": cmd_rmsodn, "complexity": cmd_complexity}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MatrixParseError, FixedPointError, ValueError, OSError) as e:
        log.error("%s", e)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
