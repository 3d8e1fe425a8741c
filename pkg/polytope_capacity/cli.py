"""Command-line front end.

Reports go to standard output (JSON or CSV); diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import voluptuous as vol

from .capacity import CapacityResult, CutReport, SkippedCut, cut_experiment, cut_sweep, ehz, lr, psi_ehz
from .characteristic import (
    Boundary,
    Closed,
    Leafwise,
    PsiTwisted,
    path_from_json,
    path_to_json,
    reconstruct,
    verify,
)
from .config import SolverConfig
from .const import (
    DEFAULT_MODE,
    DEFAULT_PERM_BUDGET,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    DOMAIN,
    EXIT_BUDGET,
    EXIT_HYPOTHESIS,
    EXIT_MALFORMED,
    EXIT_OK,
    EXIT_VERIFICATION,
    KIND_EHZ,
    KIND_LR,
    MODE_EXACT,
    MODES,
    SCHEMA_VERSION,
    TRANSLATE_AUTO,
    TRANSLATE_NONE,
)
from .exceptions import (
    BudgetExceededError,
    HypothesisViolationError,
    ReconstructionError,
    ValidationError,
)
from .oracle2d import ehz_oracle_2d, lr_oracle, polygon_area
from .polytope import Polytope, load_polytope
from .symplectic import load_psi

_LOGGER = logging.getLogger(__name__)

_CSV_COLUMNS = ("input", "capacity", "value", "mode", "seed")


class VerificationFailed(Exception):
    """Reconstructed certificate failed its residual checks."""

    def __init__(self, report: dict[str, Any]) -> None:
        super().__init__("certificate verification failed")
        self.report = report


# ───────────────────────────── parsing ─────────────────────────────────


def _float_triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected nx,ny,c")
    return float(parts[0]), float(parts[1]), float(parts[2])


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mode", choices=MODES, default=DEFAULT_MODE)
    common.add_argument("--perm-budget", type=int, default=DEFAULT_PERM_BUDGET)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--emit-path", type=Path, default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=DEFAULT_WORKERS)
    common.add_argument("--tol-feas", type=float, default=None)
    common.add_argument(
        "--translate", choices=(TRANSLATE_AUTO, TRANSLATE_NONE), default=TRANSLATE_AUTO
    )
    common.add_argument("--omega-sign", type=int, choices=(1, -1), default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="polytope-capacity",
        description="Symplectic capacities of convex polytopes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ehz", parents=[common], help="Ekeland-Hofer-Zehnder capacity")
    p.add_argument("file", type=Path)

    p = sub.add_parser("psi-ehz", parents=[common], help="Ψ-EHZ capacity")
    p.add_argument("file", type=Path)
    p.add_argument("--psi", type=Path, required=True)

    p = sub.add_parser("lr", parents=[common], help="coisotropic capacity c_LR")
    p.add_argument("file", type=Path)
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("cut-experiment", parents=[common], help="line-cut experiment")
    p.add_argument("file", type=Path)
    p.add_argument("--line", type=_float_triple, required=True)
    p.add_argument("--capacity", choices=(KIND_LR, KIND_EHZ), default=KIND_LR)
    p.add_argument("--sweep", type=_float_list, default=None)

    p = sub.add_parser("oracle", parents=[common], help="planar area oracles")
    p.add_argument("file", type=Path)
    p.add_argument("--which", choices=("area", "lr", "ehz2d"), required=True)

    p = sub.add_parser("verify", parents=[common], help="check a path certificate")
    p.add_argument("pathfile", type=Path)
    p.add_argument("file", type=Path)
    return parser


def _config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig.from_options(
        {
            "mode": args.mode,
            "perm_budget": args.perm_budget,
            "seed": args.seed,
            "workers": args.threads,
            "feas_tol": args.tol_feas,
            "translate": args.translate,
            "omega_sign": args.omega_sign,
        }
    )


def _digest(*paths: Path) -> str:
    sha = hashlib.sha256()
    for path in paths:
        sha.update(path.read_bytes())
    return sha.hexdigest()


# ───────────────────────────── reports ─────────────────────────────────


def _certificate(result: CapacityResult) -> dict[str, Any]:
    return {
        "sigma": list(result.sigma),
        "beta": result.beta.tolist(),
        "v": result.v.tolist(),
        "objective": result.objective,
        "translation": result.translation.tolist(),
    }


def _base_report(args: argparse.Namespace, config: SolverConfig, *inputs: Path) -> dict[str, Any]:
    return {
        "schema": SCHEMA_VERSION,
        "command": args.command,
        "input_digest": _digest(*inputs),
        "mode": config.mode,
        "perm_budget": config.perm_budget if config.mode != MODE_EXACT else None,
        "seed": config.seed,
        "workers": config.workers,
    }


def _certify(
    poly: Polytope,
    result: CapacityResult,
    boundary: Boundary,
    args: argparse.Namespace,
    config: SolverConfig,
) -> dict[str, Any]:
    """Reconstruct, optionally export, and verify the minimizing path."""
    path = reconstruct(poly, result, boundary, config=config)
    if args.emit_path is not None:
        args.emit_path.write_text(
            json.dumps(path_to_json(path, boundary), indent=2), encoding="utf-8"
        )
        _LOGGER.info("wrote path certificate to %s", args.emit_path)
    return verify(path, poly, boundary, result.value, config=config).as_dict()


def _capacity_report(
    args: argparse.Namespace,
    config: SolverConfig,
    poly: Polytope,
    result: CapacityResult,
    boundary: Boundary,
    inputs: tuple[Path, ...],
) -> dict[str, Any]:
    report = _base_report(args, config, *inputs)
    report.update(
        capacity=result.kind,
        value=result.value,
        certificate=_certificate(result),
        permutations=result.evaluated,
        verification=_certify(poly, result, boundary, args, config),
    )
    return report


def _cut_entry(rep: CutReport | SkippedCut) -> dict[str, Any]:
    if isinstance(rep, SkippedCut):
        return {"offset": rep.offset, "skipped": rep.reason}
    return {
        "offset": rep.offset,
        "values": {
            "whole": rep.whole.value,
            "lower": rep.lower.value,
            "upper": rep.upper.value,
        },
        "margin": rep.margin,
        "holds": rep.holds(),
    }


def _csv_rows(report: dict[str, Any], source: str) -> list[tuple[Any, ...]]:
    mode, seed = report.get("mode"), report.get("seed")
    if "value" in report:
        return [(source, report["capacity"], f"{report['value']:.17g}", mode, seed)]
    rows = []
    for entry in [report] + report.get("sweep", []):
        for part, value in entry.get("values", {}).items():
            label = f"{report['capacity']}:{part}@{entry.get('offset')}"
            rows.append((source, label, f"{value:.17g}", mode, seed))
    return rows


def _emit(report: dict[str, Any], fmt: str, source: str) -> None:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        writer.writerows(_csv_rows(report, source))
        sys.stdout.write(buf.getvalue())
    else:
        sys.stdout.write(json.dumps(report, indent=2) + "\n")


# ──────────────────────────── commands ─────────────────────────────────


def _run_command(args: argparse.Namespace, config: SolverConfig) -> dict[str, Any]:
    if args.command == "verify":
        path, boundary = path_from_json(args.pathfile, config=config)
        poly = load_polytope(args.file, config=config)
        check = verify(path, poly, boundary, path.total_time, config=config)
        report = _base_report(args, config, args.pathfile, args.file)
        report.update(value=path.total_time, capacity="path", verification=check.as_dict())
        if not check.passed():
            raise VerificationFailed(report)
        return report

    poly = load_polytope(args.file, config=config)

    if args.command == "ehz":
        result = ehz(poly, config=config)
        report = _capacity_report(args, config, poly, result, Closed(), (args.file,))
    elif args.command == "psi-ehz":
        psi = load_psi(args.psi, config=config)
        result = psi_ehz(poly, psi, config=config)
        report = _capacity_report(
            args, config, poly, result, PsiTwisted(psi), (args.file, args.psi)
        )
    elif args.command == "lr":
        result = lr(poly, poly.n, args.k, config=config)
        report = _capacity_report(
            args, config, poly, result, Leafwise(poly.n, args.k), (args.file,)
        )
    elif args.command == "cut-experiment":
        nx, ny, c = args.line
        report = _base_report(args, config, args.file)
        report["capacity"] = args.capacity
        main_cut = cut_experiment(poly, (nx, ny), c, capacity=args.capacity, config=config)
        report.update(_cut_entry(main_cut))
        report["expected_sign"] = main_cut.expected_sign
        if args.sweep:
            sweep = cut_sweep(poly, (nx, ny), args.sweep, capacity=args.capacity, config=config)
            report["sweep"] = [_cut_entry(r) for r in sweep]
        return report
    else:  # oracle
        oracle = {"area": polygon_area, "ehz2d": ehz_oracle_2d}.get(args.which)
        value = oracle(poly) if oracle else lr_oracle(poly, config=config)
        report = _base_report(args, config, args.file)
        report.update(capacity=f"oracle:{args.which}", value=value)
        return report

    if not all(
        report["verification"][key] <= config.reconstruct_tol
        for key in ("boundary_residual", "facet_residual", "containment_violation")
    ) or not report["verification"]["facets_unique"]:
        raise VerificationFailed(report)
    return report


def run(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv``, dispatch, print the report; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.verbose:
        logging.getLogger(DOMAIN).setLevel(logging.DEBUG)
    source = str(getattr(args, "file", ""))
    try:
        config = _config(args)
        report = _run_command(args, config)
    except VerificationFailed as err:
        _emit(err.report, args.format, source)
        _LOGGER.error("verification failed: %s", err.report.get("verification"))
        return EXIT_VERIFICATION
    except ReconstructionError as err:
        _LOGGER.error("reconstruction failed: %s", err)
        return EXIT_VERIFICATION
    except BudgetExceededError as err:
        _LOGGER.error("budget exceeded: %s", err)
        return EXIT_BUDGET
    except HypothesisViolationError as err:
        _LOGGER.error("hypothesis violated: %s", err)
        return EXIT_HYPOTHESIS
    except (ValidationError, vol.Invalid, json.JSONDecodeError, OSError) as err:
        _LOGGER.error("malformed input: %s", err)
        return EXIT_MALFORMED
    _emit(report, args.format, source)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
