"""Config-driven experiment runner.

Subcommands: ``assemble`` (Galerkin matrices plus a summary record),
``reduce`` (r-sweep of balanced truncation or Arnoldi with error and
passivity columns), ``verify`` (time-domain error-bound and certificate
checks), and ``report`` (merge of the emitted CSVs into one table keyed by
reduced dimension).  All numeric CSV fields carry 17 significant digits so
repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys as _sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .arnoldi import arnoldi_basis
from .bt_quadratic import (
    ReductionRow,
    balance,
    gramian_cache,
    h2_error,
    truncate,
    write_report_csv,
)
from .errors import NumericalError
from .galerkin import QuadraticOutputSystem, assemble, to_first_order, write_matrix_market
from .msd import MsdConfig, build_msd, config_from_dict, default_config, load_config
from .passivity import check_passivity, shifted_dissipation_certificate
from .polychaos import PcBasis
from .simulate import default_input, integrate, verify_error_bound

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "sweep_balanced_truncation",
    "sweep_arnoldi",
    "run_assemble",
    "run_reduce",
    "run_verify",
    "run_report",
    "main",
]

REDUCERS = ("balanced-truncation", "arnoldi")


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment run needs; flags override file values."""

    model: MsdConfig
    degree: int = 2
    reducer: str = "balanced-truncation"
    omega: float = 1.0
    r_min: int = 1
    r_max: int = 100
    sim_h: float = 0.01
    sim_T: float = 100.0
    sim_input: str = "default"
    verify_r: tuple[int, ...] = (10, 30, 50)
    out: str = "results"

    def __post_init__(self):
        if self.degree < 0:
            raise ConfigError(f"degree must be >= 0, got {self.degree}")
        if self.reducer not in REDUCERS:
            raise ConfigError(f"reducer must be one of {REDUCERS}, got {self.reducer!r}")
        if self.r_min < 1 or self.r_max < self.r_min:
            raise ConfigError(f"invalid r range [{self.r_min}, {self.r_max}]")
        if self.sim_h <= 0 or self.sim_T <= 0:
            raise ConfigError("simulation step and horizon must be positive")
        if self.sim_input not in ("default", "zero"):
            raise ConfigError(f"input signal must be 'default' or 'zero', got {self.sim_input!r}")
        if any(r < 1 for r in self.verify_r):
            raise ConfigError("verification dimensions must be >= 1")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Merge config file (if any) and command-line flags into one config."""
    raw = _load_json(args.config) if args.config else {}
    try:
        model_entry = raw.get("model")
        if model_entry is None:
            model = default_config()
        elif isinstance(model_entry, str):
            path = Path(model_entry)
            if not path.is_absolute() and args.config:
                path = Path(args.config).parent / path
            model = load_config(path)
        else:
            model = config_from_dict(model_entry)

        r_entry = raw.get("r", {})
        sim = raw.get("simulation", {})
        cfg = ExperimentConfig(
            model=model,
            degree=int(raw.get("degree", 2)),
            reducer=str(raw.get("reducer", "balanced-truncation")),
            omega=float(raw.get("omega", 1.0)),
            r_min=int(r_entry.get("min", 1)),
            r_max=int(r_entry.get("max", 100)),
            sim_h=float(sim.get("h", 0.01)),
            sim_T=float(sim.get("T", 100.0)),
            sim_input=str(sim.get("input", "default")),
            verify_r=tuple(int(r) for r in sim.get("r_values", (10, 30, 50))),
            out=str(raw.get("out", "results")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc

    overrides = {}
    if args.degree is not None:
        overrides["degree"] = args.degree
    if getattr(args, "reducer", None) is not None:
        overrides["reducer"] = args.reducer
    if getattr(args, "omega", None) is not None:
        overrides["omega"] = args.omega
    if getattr(args, "rmax", None) is not None:
        overrides["r_max"] = args.rmax
    if args.out is not None:
        overrides["out"] = args.out
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


def _assemble_fom(cfg: ExperimentConfig, validate: bool = True):
    sys = build_msd(cfg.model)
    basis = PcBasis(q=sys.q, d=cfg.degree)
    galerkin = assemble(sys, basis, validate=validate)
    return galerkin


def sweep_balanced_truncation(fom: QuadraticOutputSystem, r_values, bal=None) -> list[ReductionRow]:
    """One ReductionRow per requested dimension, sharing a single balance step."""
    if bal is None:
        bal = balance(fom)
    rows = []
    for r in r_values:
        rom = truncate(bal, fom, r)
        lam = check_passivity(rom.system).lambda_max
        stable = rom.is_stable
        err = rel = None
        if stable:
            err = h2_error(fom, rom, cache=bal.cache)
            rel = err / bal.cache.norm if bal.cache.norm > 0 else None
        rows.append(
            ReductionRow(
                r=r, sigma=float(bal.sigma[r - 1]), h2_abs=err, h2_rel=rel,
                lambda_max=lam, stable=stable,
            )
        )
    return rows


def sweep_arnoldi(fom: QuadraticOutputSystem, r_values, omega: float = 1.0, cache=None) -> list[ReductionRow]:
    """Arnoldi rows over nested Krylov prefixes; unstable rows carry no error."""
    r_values = list(r_values)
    if not r_values:
        return []
    if cache is None:
        cache = gramian_cache(fom)
    V, _ = arnoldi_basis(fom, max(r_values), omega=omega)
    G_A = V.T @ (fom.A @ V)
    G_N = V.T @ (fom.N @ V)
    G_B = V.T @ fom.B
    rows = []
    for r in r_values:
        N_r = G_N[:r, :r]
        rom = QuadraticOutputSystem(
            A=G_A[:r, :r], B=G_B[:r], N=0.5 * (N_r + N_r.T), label="rom"
        )
        lam = check_passivity(rom).lambda_max
        abscissa = float(np.linalg.eigvals(rom.A).real.max())
        stable = abscissa < -1e-12
        err = rel = None
        if stable:
            err = h2_error(fom, rom, cache=cache)
            rel = err / cache.norm if cache.norm > 0 else None
        rows.append(ReductionRow(r=r, sigma=None, h2_abs=err, h2_rel=rel, lambda_max=lam, stable=stable))
    return rows


def run_assemble(cfg: ExperimentConfig) -> dict:
    """Write Galerkin matrices (Matrix Market) and a summary record."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    galerkin = _assemble_fom(cfg)
    write_matrix_market(out / "galerkin_M.mtx", galerkin.M, symmetry="symmetric")
    write_matrix_market(out / "galerkin_D.mtx", galerkin.D, symmetry="symmetric")
    write_matrix_market(out / "galerkin_K.mtx", galerkin.K, symmetry="symmetric")
    write_matrix_market(out / "galerkin_B.mtx", galerkin.B, symmetry="general")
    nnz = galerkin.nnz_percentages()
    summary = {
        "degree": cfg.degree,
        "parameters": galerkin.basis.q,
        "basis_size": galerkin.basis.size,
        "dimension": galerkin.dimension,
        "nnz_percent": {key: round(val, 2) for key, val in nnz.items()},
        "model": {
            "masses": list(cfg.model.masses),
            "springs": [list(e) for e in cfg.model.springs],
            "dampers": [list(e) for e in cfg.model.dampers],
            "input_spring": cfg.model.input_spring,
            "delta": cfg.model.delta,
        },
    }
    with open(out / "summary.json", "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def run_reduce(cfg: ExperimentConfig) -> Path:
    """Sweep the configured reducer over the r range and write the CSV."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    galerkin = _assemble_fom(cfg)
    fom = to_first_order(galerkin)
    if cfg.r_max > fom.m:
        raise ConfigError(f"r_max {cfg.r_max} exceeds the state dimension {fom.m}")
    r_values = range(cfg.r_min, cfg.r_max + 1)
    if cfg.reducer == "balanced-truncation":
        rows = sweep_balanced_truncation(fom, r_values)
        path = out / "reduce_bt.csv"
    else:
        rows = sweep_arnoldi(fom, r_values, omega=cfg.omega)
        path = out / "reduce_arnoldi.csv"
    write_report_csv(rows, path, include_stable=True)
    return path


def run_verify(cfg: ExperimentConfig) -> Path:
    """Error-bound and passivity checks for the configured dimensions.

    One row per verification dimension plus a sentinel row for the full
    system (r equal to the full state dimension), which must be passive.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    galerkin = _assemble_fom(cfg)
    fom = to_first_order(galerkin)
    bal = balance(fom)
    if any(r > bal.numerical_rank for r in cfg.verify_r):
        raise ConfigError(
            f"verification dimensions {cfg.verify_r} exceed the numerical rank {bal.numerical_rank}"
        )
    u = default_input if cfg.sim_input == "default" else None
    fom_traj = integrate(fom, u=u, h=cfg.sim_h, T=cfg.sim_T)

    def fmt(value) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return "true" if value else "false"
        return f"{value:.17g}"

    with open(out / "verify.csv", "w", encoding="ascii", newline="\n") as fh:
        fh.write("r,sup_error,bound,holds,lambda_max,passive,cert_residual\n")
        for r in cfg.verify_r:
            rom = truncate(bal, fom, r)
            check = verify_error_bound(
                fom, rom, u=u, h=cfg.sim_h, T=cfg.sim_T,
                cache=bal.cache, fom_trajectory=fom_traj,
            )
            report = check_passivity(rom.system)
            cert = shifted_dissipation_certificate(rom.system)
            fields = [str(r), fmt(check.observed), fmt(check.bound), fmt(check.holds),
                      fmt(report.lambda_max), fmt(report.passive), fmt(cert.composite_lambda_max)]
            fh.write(",".join(fields) + "\n")
        report = check_passivity(fom)
        cert = shifted_dissipation_certificate(fom)
        fields = [str(fom.m), "", "", "", fmt(report.lambda_max), fmt(report.passive),
                  fmt(cert.composite_lambda_max)]
        fh.write(",".join(fields) + "\n")
    return out / "verify.csv"


def run_report(cfg: ExperimentConfig) -> Path:
    """Merge the reduce/verify CSVs in the output directory, keyed by r."""
    out = Path(cfg.out)
    sources = {
        "bt": out / "reduce_bt.csv",
        "arnoldi": out / "reduce_arnoldi.csv",
        "verify": out / "verify.csv",
    }
    present = {name: path for name, path in sources.items() if path.exists()}
    if not present:
        raise FileNotFoundError(f"no reduction or verification CSVs found in {out}")

    merged: dict[int, dict[str, str]] = {}
    columns: list[str] = []
    for name, path in present.items():
        with open(path, "r", encoding="ascii", newline="") as fh:
            reader = csv.DictReader(fh)
            fields = [f for f in reader.fieldnames if f != "r"]
            prefixed = [f"{name}_{f}" for f in fields]
            columns.extend(prefixed)
            for row in reader:
                r = int(row["r"])
                target = merged.setdefault(r, {})
                for field, col in zip(fields, prefixed):
                    target[col] = row[field]

    report_path = out / "report.csv"
    with open(report_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(["r"] + columns) + "\n")
        for r in sorted(merged):
            row = merged[r]
            fh.write(",".join([str(r)] + [row.get(col, "") for col in columns]) + "\n")
    return report_path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgmor",
        description="Stochastic Galerkin assembly and energy-output model reduction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("assemble", "write Galerkin matrices and a summary record"),
        ("reduce", "sweep a reducer over r and write per-dimension diagnostics"),
        ("verify", "check output error bounds and dissipation certificates"),
        ("report", "merge emitted CSVs into one table"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", help="JSON experiment config")
        cmd.add_argument("--degree", type=int, help="total polynomial degree")
        cmd.add_argument("--reducer", choices=REDUCERS, help="reduction method")
        cmd.add_argument("--omega", type=float, help="Arnoldi expansion point")
        cmd.add_argument("--rmax", type=int, help="largest reduced dimension")
        cmd.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    runners = {
        "assemble": run_assemble,
        "reduce": run_reduce,
        "verify": run_verify,
        "report": run_report,
    }
    try:
        cfg = experiment_from_args(args)
        runners[args.command](cfg)
    except ConfigError as exc:
        print(f"sgmor: config error: {exc}", file=_sys.stderr)
        return 2
    except ValueError as exc:
        print(f"sgmor: config error: {exc}", file=_sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"sgmor: numerical failure: {exc}", file=_sys.stderr)
        return 3
    except OSError as exc:
        print(f"sgmor: I/O error: {exc}", file=_sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
