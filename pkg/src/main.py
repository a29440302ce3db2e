"""Command-line entry point for tileseg."""
import argparse
import sys
from typing import List, Optional

from src.graph.repeats import RepeatedRuns
from src.graph.workflow import PipelineWorkflow
from src.stages import PIPELINE, STAGES
from src.utils.config import RunConfig, config, load_run_config
from src.utils.exceptions import TileSegException
from src.utils.logger import attach_run_log, detach_run_log, logger

PIPELINE_COMMAND = "pipeline"
SUMMARIZE_COMMAND = "summarize"


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per stage plus ``pipeline`` and ``summarize``."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration file")
    common.add_argument("--seed", type=int, metavar="U64", help="override the run seed")
    common.add_argument("--out", metavar="DIR", help="override paths.out_dir")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        dest="overrides",
        help="override one config key, e.g. train.micro_batches=8 (repeatable)",
    )

    parser = argparse.ArgumentParser(
        prog="tileseg",
        description="Multi-stage tumor segmentation of synthetic giga-pixel slides",
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for stage in PIPELINE:
        summary = (stage.__doc__ or "").split("\n")[0]
        commands.add_parser(stage.command, parents=[common], help=summary)
    commands.add_parser(PIPELINE_COMMAND, parents=[common], help="run every stage in order")
    summarize = commands.add_parser(
        SUMMARIZE_COMMAND,
        parents=[common],
        help="train and evaluate repeatedly on one dataset; mean and std of the metrics",
    )
    summarize.add_argument(
        "--runs", type=int, default=3, metavar="K", help="number of runs with derived seeds"
    )
    return parser


def run_command(command: str, run_config: RunConfig, runs: int = 1) -> None:
    """Run one subcommand; ``runs`` is used by ``summarize`` only.

    Raises:
        TileSegException: If the stage (or a pipeline stage) fails
    """
    if command == PIPELINE_COMMAND:
        state = PipelineWorkflow().execute(run_config)
        if state["errors"]:
            raise TileSegException(state["errors"][0])
        return
    if command == SUMMARIZE_COMMAND:
        RepeatedRuns(runs).execute(run_config)
        return
    STAGES[command]().run(run_config)


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point.

    Returns:
        0 on success, 1 on a stage or configuration failure, 2 on invalid
        environment settings, 130 when interrupted
    """
    args = build_parser().parse_args(argv)

    if not config.validate():
        print("error: invalid environment settings (see log)", file=sys.stderr)
        return 2

    run_log = None
    try:
        run_config = load_run_config(args.config, args.overrides, args.seed, args.out)
        run_log = attach_run_log(run_config.out_dir)
        logger.info(f"Running {args.command} (seed {run_config.seed}, out {run_config.out_dir})")
        run_command(args.command, run_config, getattr(args, "runs", 1))
        return 0

    except KeyboardInterrupt:
        print("\ncancelled", file=sys.stderr)
        return 130
    except TileSegException as e:
        logger.error(f"{args.command} failed: {str(e)}")
        print(f"error: {str(e)}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}")
        print(f"error: unexpected {type(e).__name__}: {str(e)}", file=sys.stderr)
        return 1
    finally:
        if run_log is not None:
            detach_run_log(run_log)


if __name__ == "__main__":
    sys.exit(main())
