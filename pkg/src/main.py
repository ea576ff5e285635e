#!/usr/bin/env python3
"""Main entrypoint for the paracontact geometry verifier."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, TypeVar, cast

import numpy as np
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from src import constants
from src.connection import christoffel, extract_alpha_beta
from src.curvature import curvature
from src.curvfamily import (
    concircular,
    conformal,
    pc_bochner,
    projective,
    projective_ricci,
    pseudo_projective,
)
from src.dsl import ModelSpec, load_builtin, load_model
from src.errors import GeometryError
from src.model import assemble
from src.sampling import sample_points
from src.settings import RunConfig, Tolerances
from src.verify import Report, Verifier, format_number


class Args(argparse.Namespace):
    command: str
    name: str | None
    config: Path | None
    model: Path | None
    builtin: str | None
    points: int | None
    seed: int | None
    format: str | None
    tol: list[str] | None
    at: str | None
    workers: int | None
    log_level: str | None
    rich_logs: bool
    print_config_and_exit: bool


logger = logging.getLogger(__name__)

TENSOR_NAMES = (
    "g",
    "phi",
    "gamma",
    "riemann",
    "ricci",
    "scal",
    "P",
    "C",
    "concircular",
    "Ptilde",
    "Pbar",
    "B",
    "alphabeta",
)


def _common_arguments() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)

    source = parent.add_mutually_exclusive_group()
    source.add_argument(
        "--builtin",
        choices=constants.BUILTIN_MODELS,
        help="Use one of the embedded models",
    )
    source.add_argument(
        "--model",
        type=Path,
        help="Path to a model file",
    )

    parent.add_argument(
        "--config",
        type=Path,
        help="Path to YAML configuration file",
    )

    parent.add_argument(
        "--at",
        help="Comma-separated coordinates of a single point, e.g. 0,0,0",
    )

    parent.add_argument(
        "--tol",
        action="append",
        metavar="NAME=VALUE",
        help="Override one tolerance, e.g. --tol curvature=1e-5 (repeatable)",
    )

    parent.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="Set the logging level (default: WARNING, or value from config file if specified)",
    )

    parent.add_argument(
        "--rich-logs",
        action="store_true",
        help="Enable rich colored logging output",
    )

    parent.add_argument(
        "--print-config-and-exit",
        action="store_true",
        help="Print the resolved configuration as JSON and exit without running",
    )
    return parent


def parse_args() -> Args:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        description="Pointwise verifier for trans-para-Sasakian geometry",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    parent = _common_arguments()

    verify = subparsers.add_parser(
        "verify",
        parents=[parent],
        help="Run every claim and theorem on sampled points",
    )
    verify.add_argument("--points", type=int, help="Number of sample points (default: 100)")
    verify.add_argument("--seed", type=int, help="Seed of the point sampler (default: 42)")
    verify.add_argument(
        "--format",
        choices=["text", "json"],
        help="Report format (default: text)",
    )
    verify.add_argument(
        "--workers",
        type=int,
        help="Threads used to evaluate sample points (default: 1)",
    )

    tensor = subparsers.add_parser(
        "tensor",
        parents=[parent],
        help="Print the components of one tensor at a point",
    )
    tensor.add_argument("name", help=f"Tensor to print, one of: {', '.join(TENSOR_NAMES)}")

    return cast(Args, parser.parse_args())


def configure_logging(log_level: str, use_rich: bool = False) -> None:
    """Configure logging on stderr with optional rich formatting.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        use_rich: Whether to use rich colored logging
    """
    if use_rich:
        try:
            from rich.logging import RichHandler

            logging.basicConfig(
                level=getattr(logging, log_level),
                format="%(message)s",
                datefmt="[%X]",
                handlers=[
                    RichHandler(
                        console=Console(stderr=True),
                        show_path=True,
                        show_time=True,
                        show_level=True,
                        markup=True,
                        rich_tracebacks=True,
                    )
                ],
            )
        except ImportError:
            # Fall back to standard logging if rich is not available
            logging.basicConfig(
                level=getattr(logging, log_level),
                format="%(asctime)s [%(name)s:%(filename)s:%(lineno)d] %(levelname)s: %(message)s",
                stream=sys.stderr,
            )
    else:
        logging.basicConfig(
            level=getattr(logging, log_level),
            format="%(asctime)s [%(name)s:%(filename)s:%(lineno)d] %(levelname)s: %(message)s",
            stream=sys.stderr,
        )


T = TypeVar("T")


def first_not_none(*values: T | None) -> T | None:
    for v in values:
        if v is not None:
            return v
    return None


def parse_tolerance_overrides(items: list[str] | None) -> dict[str, float]:
    """Turn `name=value` strings into a dict of tolerance overrides.

    Raises:
        ValueError: an item is not of the form name=value with a numeric value.
    """
    overrides: dict[str, float] = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ValueError(f"tolerance override {item!r} is not of the form name=value")
        try:
            overrides[name.strip()] = float(value)
        except ValueError as e:
            raise ValueError(f"tolerance override {item!r} has a non-numeric value") from e
    return overrides


def parse_point(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as e:
        raise ValueError(f"--at expects comma-separated numbers, got {text!r}") from e


def build_config(args: Args, config_dict: dict) -> RunConfig:
    """Resolve the run configuration with priority CLI > YAML > defaults."""
    tolerances = dict(config_dict.get("tolerances") or {})
    tolerances.update(parse_tolerance_overrides(args.tol))

    # A model source on the command line replaces the one from the file
    cli_source = args.model is not None or args.builtin is not None
    return RunConfig(
        model_path=args.model if cli_source else config_dict.get("model_path"),
        builtin=args.builtin if cli_source else config_dict.get("builtin"),
        points=first_not_none(
            getattr(args, "points", None), config_dict.get("points"), constants.DEFAULT_POINTS
        ),
        seed=first_not_none(
            getattr(args, "seed", None), config_dict.get("seed"), constants.DEFAULT_SEED
        ),
        tolerances=Tolerances(**tolerances),
        output_format=first_not_none(
            getattr(args, "format", None), config_dict.get("output_format"), "text"
        ),
        at=first_not_none(parse_point(args.at), config_dict.get("at")),
        workers=first_not_none(getattr(args, "workers", None), config_dict.get("workers"), 1),
    )


def load_spec(config: RunConfig) -> ModelSpec:
    if config.builtin is not None:
        return load_builtin(config.builtin)
    return load_model(config.model_path)


def check_point(spec: ModelSpec, at: list[float]) -> tuple[float, ...]:
    """Validate a query point against the model's dimension and box.

    Raises:
        ValueError: wrong number of coordinates or a coordinate outside the box.
    """
    if len(at) != spec.dim:
        raise ValueError(f"--at needs {spec.dim} coordinates for model {spec.name!r}, got {len(at)}")
    for name, x, (lo, hi) in zip(spec.coords, at, spec.box):
        if not lo <= x <= hi:
            raise ValueError(f"coordinate {name} = {x} lies outside the box [{lo}, {hi}]")
    return tuple(at)


def render_report(report: Report, console: Console) -> None:
    """Text rendering of a verification report."""
    console.print(f"model {report.model}, {report.points} points, seed {report.seed}")

    claims = Table(title="Claims")
    for column in ("claim", "points", "max residual", "tolerance", "status"):
        claims.add_column(column)
    for c in report.claims:
        claims.add_row(
            c.claim_id,
            str(c.points_tested),
            f"{c.max_residual:.3e}",
            f"{c.tolerance:.0e}",
            c.status,
        )
    console.print(claims)

    theorems = Table(title="Theorems")
    for column in ("theorem", "hypothesis", "conclusion", "standing assumption", "status"):
        theorems.add_column(column)
    for t in report.theorems:
        theorems.add_row(
            t.theorem_id,
            f"{t.hypothesis_residual:.3e}",
            f"{t.conclusion_residual:.3e}",
            "met" if t.standing_assumption_met else "not met",
            t.status,
        )
    console.print(theorems)

    fit = report.einstein_fit
    console.print(
        f"Einstein fit: lambda = {format_number(fit.lambda_)}, mu = {format_number(fit.mu)},"
        f" residual {fit.fit_residual:.3e} ({fit.verdict})"
    )
    summary = report.alpha_beta_summary
    console.print(
        f"At the box centre: alpha = {format_number(summary.alpha)},"
        f" beta = {format_number(summary.beta)} ({summary.structure_type})"
    )
    for note in report.notes:
        console.print(f"note: {note}", markup=False)


def cmd_verify(config: RunConfig, spec: ModelSpec) -> int:
    if config.at is not None:
        points = [check_point(spec, config.at)]
    else:
        points = sample_points(spec, config.points, config.seed)
    verifier = Verifier(spec, points, config.tolerances, config.workers)
    report = verifier.report(config.seed)

    if config.output_format == "json":
        print(json.dumps(report.model_dump(mode="json", by_alias=True), indent=2))
    else:
        render_report(report, Console(highlight=False))

    if report.passed:
        logger.info("All checks passed for model %r", spec.name)
        return constants.EXIT_OK
    logger.warning("Checks failed for model %r", spec.name)
    return constants.EXIT_CHECK_FAILED


def _components(label: str, values: np.ndarray) -> list[str]:
    """One `label(i,j,...) = value` line per component, row-major, 1-based."""
    return [
        f"{label}({','.join(str(i + 1) for i in index)}) = {format_number(float(values[index]))}"
        for index in np.ndindex(values.shape)
    ]


def tensor_lines(spec: ModelSpec, name: str, point: tuple[float, ...]) -> list[str]:
    """Printed components of the named tensor at `point`.

    Raises:
        ValueError: `name` is not a known tensor.
    """
    if name not in TENSOR_NAMES:
        raise ValueError(f"unknown tensor {name!r}; valid names: {', '.join(TENSOR_NAMES)}")
    ps = assemble(spec, point)
    if name == "g":
        return _components("g", ps.g.value)
    if name == "phi":
        return _components("phi", ps.phi.value)

    ch = christoffel(ps)
    if name == "gamma":
        return _components("gamma", ch.gamma)
    if name == "alphabeta":
        ab = extract_alpha_beta(spec, point, ps, ch)
        return [f"alpha = {format_number(ab.alpha)}, beta = {format_number(ab.beta)}"]

    cd = curvature(ps, ch)
    tensors: dict[str, Callable[[], np.ndarray]] = {
        "riemann": lambda: cd.riem,
        "ricci": lambda: cd.ric,
        "P": lambda: projective(cd).components.components,
        "C": lambda: conformal(cd).components.components,
        "concircular": lambda: concircular(cd).components.components,
        "Ptilde": lambda: projective_ricci(cd).components.components,
        "Pbar": lambda: pseudo_projective(cd, *spec.pp_params).components.components,
        "B": lambda: pc_bochner(ps, cd).components.components,
    }
    if name == "scal":
        return [f"scal = {format_number(cd.scal)}"]
    return _components(name, tensors[name]())


def cmd_tensor(config: RunConfig, spec: ModelSpec, name: str) -> int:
    if config.at is None:
        raise ValueError("tensor needs a point, pass --at")
    point = check_point(spec, config.at)
    for line in tensor_lines(spec, name, point):
        print(line)
    return constants.EXIT_OK


def main() -> int:
    """Main function."""
    args = parse_args()

    # Load config file early if specified, so we can use logging settings from it
    config_dict = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as f:
                config_dict = yaml.safe_load(f) or {}
        except Exception as e:
            # Can't use logger yet since logging isn't configured
            print(
                f"Error loading config file {args.config}: {type(e).__name__}: {e}",
                file=sys.stderr,
            )
            return constants.EXIT_INPUT_ERROR

    # Configure logging with priority: CLI args > YAML config > defaults
    config_log_level = config_dict.get("log_level")
    if config_log_level and isinstance(config_log_level, str):
        config_log_level = config_log_level.upper()

    log_level = first_not_none(args.log_level, config_log_level, "WARNING")
    rich_logs = args.rich_logs or config_dict.get("rich_logs", False)

    configure_logging(log_level, rich_logs)

    try:
        if args.config:
            logger.info("Using configuration from %s", args.config)

        config = build_config(args, config_dict)

        # If print-config-and-exit flag is set, output config and exit
        if args.print_config_and_exit:
            logger.info("Printing resolved configuration")
            print(json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True))
            return constants.EXIT_OK

        spec = load_spec(config)
        logger.info("Loaded model %r from %s", spec.name, config.model_label)

        if args.command == "tensor":
            return cmd_tensor(config, spec, args.name)
        return cmd_verify(config, spec)

    except ValidationError as e:
        logger.error(
            "Invalid config\n"
            + "\n".join(
                [
                    f"{''.join([str(loc) for loc in err['loc']])}: {err['msg']} (got {err['input']})"
                    for err in e.errors()
                ]
            )
        )
        return constants.EXIT_INPUT_ERROR
    except (GeometryError, ValueError, OSError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return constants.EXIT_INPUT_ERROR
    except KeyboardInterrupt:
        logger.info("Verifier stopped by user")
        return constants.EXIT_CHECK_FAILED
    except Exception as e:
        logger.error("Error running verifier: %s", e, exc_info=True)
        return constants.EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
