"""
levy-extract command line
"""
import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .core.errors import LevyExtractError, ParameterError
from .exporters.console import ConsoleExporter
from .models.flow import ARCHITECTURES
from .pipeline.config import load_run_config
from .pipeline.stages import ExperimentPipeline, train_directory
from .pipeline.storage import STAGES

logger = logging.getLogger(__name__)

COMMANDS = ("simulate", "train", "extract", "report", "all")
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-extract",
        description="Learn drift, diffusion and alpha-stable jump parameters from short-burst SDE data",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  levy-extract all --config configs/ex1_cubic_1d.json --workers 4
  levy-extract extract --config configs/ex1_cubic_1d.json --force-stage extraction
  levy-extract train --dataset runs/ex1_cubic_1d/dataset --arch nsf1d --out /tmp/models
exit codes: 0 success, 2 validation error, 3 numerical failure, 4 missing inputs
""",
    )
    parser.add_argument("command", choices=COMMANDS, help="stage to run (all = every stage in order)")
    parser.add_argument("--config", help="run-config JSON file")
    parser.add_argument("--workers", type=int, default=1, help="concurrent bursts / grid points (default: 1)")
    parser.add_argument("--force-stage", choices=STAGES, help="recompute this stage and every later one")
    parser.add_argument("--dataset", help="train: dataset directory (instead of --config)")
    parser.add_argument("--arch", choices=ARCHITECTURES, help="train: flow architecture for --dataset")
    parser.add_argument("--out", help="train: model output directory for --dataset")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging and artifact listing")
    return parser


async def run_command(args: argparse.Namespace) -> int:
    """Dispatch one subcommand"""
    if args.command == "train" and args.dataset:
        if not args.arch or not args.out:
            raise ParameterError("train --dataset needs --arch and --out")
        manifest = await train_directory(Path(args.dataset), args.arch, Path(args.out), workers=args.workers)
        print(f"trained {len(manifest.files) // 2} bursts into {args.out}, aborted: {len(manifest.failed)}")
        return 0
    if not args.config:
        raise ParameterError(f"{args.command} needs --config")

    config = load_run_config(args.config)
    pipeline = ExperimentPipeline(config, workers=args.workers, force_stage=args.force_stage,
                                  console=ConsoleExporter(verbose=args.verbose))
    if args.command == "simulate":
        dataset = await pipeline.run_simulate()
        print(f"dataset: {len(dataset.bursts)} bursts x {dataset.n_samples} samples -> {pipeline.stage_dir('dataset')}")
    elif args.command == "train":
        models = await pipeline.run_train()
        trained = sum(m is not None for m in models)
        print(f"models: {trained}/{len(models)} trained -> {pipeline.stage_dir('models')}")
    elif args.command == "extract":
        result = await pipeline.run_extract()
        await pipeline.console.export(result)
    elif args.command == "report":
        await pipeline.run_report()
    else:
        await pipeline.run_all()
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else getattr(logging, args.log_level),
                        format=LOG_FORMAT)
    try:
        return asyncio.run(run_command(args))
    except LevyExtractError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("\n中断しました", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
