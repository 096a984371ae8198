"""
ionfilm - steady stress and linear-stability growth rates for ion-irradiated
viscoelastic films.

    ionfilm <steady|dispersion|neutral|viscous|verify|stability> --config <path>
            [--out <path>] [--format csv|json] [--gamma-ratio <G>] [--tol <rel>]

Exit codes: 0 success, 1 config error, 2 numerical non-convergence,
3 verification failure.
"""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from core.errors import FilmError
from core.settings import settings
from film.run_config import MODES, OutputSpec, load_run_config
from film.services.runs import RUNNERS
from film.utils import to_csv_text, to_json_text, write_text

logger = logging.getLogger("ionfilm")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionfilm",
        description="Steady stress, dispersion sweeps, neutral-stability curves and dual-path verification",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", type=Path, help="key = value [unit] file, or YAML")
    parser.add_argument("--out", type=Path, help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--gamma-ratio", help="override Gamma = B/G ('inf' for incompressible)")
    parser.add_argument("--tol", type=float, help="verification tolerance (relative)")
    parser.add_argument("--n-steps", type=int, help="RK4 steps for the shooting oracle")
    parser.add_argument("--measured-stress", type=float, help="measured lateral stress, GPa")
    parser.add_argument("--samples", type=int, help="samples for the stability sweep")
    parser.add_argument("--seed", type=int, help="random seed for the stability sweep")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    started = time.perf_counter()
    try:
        cfg = load_run_config(
            args.mode,
            args.config,
            OutputSpec(path=args.out, format=args.format),
            {
                "gamma_ratio": args.gamma_ratio,
                "tol": args.tol,
                "n_steps": args.n_steps,
                "measured_stress": None if args.measured_stress is None else f"{args.measured_stress!r} GPa",
                "samples": args.samples,
                "seed": args.seed,
            },
        )
        logger.info(f"🚀 ionfilm {settings.VERSION}: mode {cfg.mode}")
        report = RUNNERS[cfg.mode](cfg)
    except FilmError as e:
        logger.error(f"❌ {type(e).__name__}: {e.detail}")
        print(f"ionfilm: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"❌ Invalid input: {e}")
        print(f"ionfilm: invalid input: {e}", file=sys.stderr)
        return 1
    except (ArithmeticError, RuntimeError) as e:
        logger.exception(f"❌ Numerical failure: {e}")
        return 2

    runtime = time.perf_counter() - started
    if cfg.output.format == "json":
        text = to_json_text(cfg, report.rows, runtime, summary=report.summary)
    else:
        text = to_csv_text(report.rows, report.columns)
    write_text(text, cfg.output.path, sys.stdout)

    logger.info(f"✅ {cfg.mode} finished in {runtime:.2f}s")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
