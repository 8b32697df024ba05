"""Command-line front end.

Subcommands::

    mchamiltonian run CONFIG       basis -> matrix -> spectrum -> thermo (+ oracle)
    mchamiltonian oracle CONFIG    oracle levels only
    mchamiltonian compare SPECTRUM_CSV ORACLE_CSV

Exit codes: 0 success, 2 configuration or usage error, 3 runtime error,
4 fatal diagnostic (no usable eigenvalue).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import oracle as oracle_mod
from ._core import BACKEND
from .config import ConfigError, RunConfig, echo_config, parse_config
from .model import PotentialKind
from .spectral import SpectrumError, diagonalize, thermodynamics
from .transition import build_matrix

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_DIAGNOSTIC = 4

log = logging.getLogger("mchamiltonian")


def oracle_energies(cfg: RunConfig, count: int | None = None) -> tuple[np.ndarray | None, str]:
    """Reference levels for the configured model and a label saying where they came from."""
    model = cfg.model()
    count = count or cfg["oracle.levels"]
    exact = oracle_mod.analytic_levels(model, count)
    if exact is not None:
        return exact, "analytic"
    if model.kind is PotentialKind.ZERO:
        return None, "none (free particle has a continuous spectrum)"
    if model.dimension > 2:
        return None, "none (no grid oracle above two dimensions)"
    d = model.dimension
    low = cfg["oracle.grid_low"] * (d if len(cfg["oracle.grid_low"]) == 1 else 1)
    high = cfg["oracle.grid_high"] * (d if len(cfg["oracle.grid_high"]) == 1 else 1)
    pts = cfg["oracle.grid_points"] if d == 1 else min(cfg["oracle.grid_points"], 200)
    res = oracle_mod.grid_hamiltonian_levels(model, pts, low, high, count)
    return res.energies, f"finite-difference grid (boundary amplitude {res.boundary_amplitude:.3g})"


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def run_pipeline(cfg: RunConfig, out_dir: Path, threads: int = 1) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = cfg.replace(output__dir=str(out_dir))
    _write(out_dir / "run_echo.cfg", echo_config(cfg))
    model = cfg.model()
    basis, sigma_fallback = cfg.basis(model)
    _write(out_dir / "basis.tsv", basis.to_text())

    t0 = time.perf_counter()
    matrix = build_matrix(model, basis, cfg.sampler(), symmetric_fill=cfg["mc.symmetric_fill"], threads=threads)
    t_matrix = time.perf_counter() - t0
    if "binary" in cfg["output.formats"]:
        (out_dir / "matrix.bin").write_bytes(matrix.to_bytes())
        _write(out_dir / "matrix.csv", matrix.to_csv())

    diag = {
        "backend": BACKEND,
        "n_nodes": len(basis),
        "sigma_fallback": sigma_fallback,
        "relative_error_level": matrix.relative_error_level,
        "max_asymmetry": matrix.asymmetry,
        "flagged_entries": int(matrix.flagged.sum()),
    }
    rel = np.divide(matrix.errors, np.abs(matrix.values), out=np.zeros_like(matrix.errors),
                    where=matrix.values != 0)
    for q in (50, 90, 100):
        diag[f"entry_rel_error_p{q}"] = float(np.percentile(rel, q))

    try:
        spectrum = diagonalize(matrix, model.params, basis, cfg["spectral.solver"], cfg["spectral.floor_scale"])
    except SpectrumError as exc:
        diag["fatal"] = str(exc)
        _write(out_dir / "diagnostics.txt", _format_diag(diag))
        log.error("%s", exc)
        return EXIT_DIAGNOSTIC

    exact = None
    if cfg["oracle.enabled"]:
        exact, source = oracle_energies(cfg, max(cfg["oracle.levels"], 1))
        diag["oracle"] = source
        if exact is not None:
            _write(out_dir / "oracle.csv", oracle_mod.oracle_csv(exact))
    _write(out_dir / "spectrum.csv", spectrum.to_csv(exact))
    _write(out_dir / "wavefunctions.csv", spectrum.wavefunctions_csv(cfg["output.wavefunctions"]))
    thermo = thermodynamics(spectrum, cfg["output.beta"])
    _write(out_dir / "thermo.csv", thermo.to_csv())

    diag.update(
        n_kept=len(spectrum),
        n_discarded=spectrum.n_discarded,
        lambda_floor=spectrum.lambda_floor,
        floor_policy=f"max(1e-12, {cfg['spectral.floor_scale']!r} * relative_error_level) * max eigenvalue",
        degenerate_multiplets=sum(1 for g in spectrum.multiplets() if len(g) > 1),
        thermo_truncation_weight_max=float(np.max(thermo.truncation_weight)),
        matrix_seconds=round(t_matrix, 3),
    )
    _write(out_dir / "diagnostics.txt", _format_diag(diag))
    print(_table(spectrum.energies, exact))
    return EXIT_OK


def _format_diag(diag: dict) -> str:
    return "".join(f"{k} = {v}\n" for k, v in diag.items())


def _table(energies, exact, limit: int = 20) -> str:
    lines = []
    if exact is None:
        lines.append(f"{'n':>4}  {'E_eff':>18}")
        for i, e in enumerate(energies[:limit], 1):
            lines.append(f"{i:>4}  {e:18.12f}")
    else:
        lines.append(f"{'n':>4}  {'E_eff':>18}  {'E_exact':>18}  {'rel_err':>10}")
        for i, e in enumerate(energies[:limit], 1):
            if i <= len(exact):
                lines.append(f"{i:>4}  {e:18.12f}  {exact[i - 1]:18.12f}  {(e - exact[i - 1]) / exact[i - 1]:10.2e}")
    return "\n".join(lines)


def _read_column(path: Path, column: str) -> list[float]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and column not in rows[0]:
        raise ConfigError(f"{path}: missing column {column!r}")
    return [float(r[column]) for r in rows if r[column] != ""]


def compare_tables(spectrum_csv: Path, oracle_csv: Path) -> str:
    eff = _read_column(spectrum_csv, "E_eff")
    exact = _read_column(oracle_csv, "E_exact")
    buf = io.StringIO()
    buf.write("n,E_eff,E_exact,rel_err\n")
    for i, (e, x) in enumerate(zip(eff, exact), 1):
        buf.write(f"{i},{e:.17g},{x:.17g},{(e - x) / x:.17g}\n")
    return buf.getvalue()


def _load(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mchamiltonian", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="full pipeline")
    p.add_argument("config")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--output-dir")
    p = sub.add_parser("oracle", help="oracle levels only")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p = sub.add_parser("compare", help="merge a spectrum and an oracle table")
    p.add_argument("spectrum")
    p.add_argument("oracle")
    p.add_argument("-o", "--output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "compare":
            text = compare_tables(Path(args.spectrum), Path(args.oracle))
            if args.output:
                Path(args.output).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        cfg = _load(args.config)
        out_dir = Path(args.output_dir or cfg["output.dir"])
        if args.command == "oracle":
            exact, source = oracle_energies(cfg)
            if exact is None:
                log.error("no oracle for this model: %s", source)
                return EXIT_RUNTIME
            out_dir.mkdir(parents=True, exist_ok=True)
            _write(out_dir / "oracle.csv", oracle_mod.oracle_csv(exact))
            print(f"# {source}")
            print(_table(exact, None))
            return EXIT_OK
        return run_pipeline(cfg, out_dir, max(1, args.threads))
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
