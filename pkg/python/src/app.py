import argparse
import os
import sys
import logging

# --- bootstrap so running as a script works ---
if __package__ is None or __package__ == "":
    # Running as script: add parent to sys.path for "src.*" imports
    sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))
    from src.config import PRESETS_DIR, ExitCode
    from src.errors import ParseError, QFlowError, ValidationError
    from src.parsing import ScenarioConfig, format_config, load_config
    from src.presets import list_presets, load_preset
    from src.render import emit_plots, print_run_summary
    from src.scenarios import run_scenario
else:
    # Running as module: use relative imports
    from .config import PRESETS_DIR, ExitCode
    from .errors import ParseError, QFlowError, ValidationError
    from .parsing import ScenarioConfig, format_config, load_config
    from .presets import list_presets, load_preset
    from .render import emit_plots, print_run_summary
    from .scenarios import run_scenario

logger = logging.getLogger(__name__)


def _resolve(target: str) -> ScenarioConfig:
    """A config file path, or the name of a bundled preset."""
    if os.path.exists(target):
        return load_config(target)
    return load_preset(target)


def cmd_run(args) -> int:
    cfg = _resolve(args.target).with_overrides(seed=args.seed, output_dir=args.out)
    manifest, book = run_scenario(cfg)
    emit_plots(manifest)
    print_run_summary(manifest, book.results)
    return int(ExitCode.CHECK_FAILED if book.failed else ExitCode.OK)


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    logger.info(f"{args.config} is a valid {cfg.scenario.value} config")
    if args.print:
        print(format_config(cfg), end="")
    return int(ExitCode.OK)


def cmd_presets(args) -> int:
    for name, description in list_presets(args.dir):
        print(f"{name:<28} {description}")
    return int(ExitCode.OK)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qflow", description="Bohmian trajectory and interference scenarios")
    ap.add_argument("--verbose", action="store_true", help="Enable verbose logging")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario from a config file or preset name")
    run.add_argument("target", help="Path to a TOML config, or a preset name")
    run.add_argument("--seed", type=int, default=None, help="Override the config seed")
    run.add_argument("--out", default=None, help="Override the output directory")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="Parse and validate a config without running it")
    validate.add_argument("config", help="Path to a TOML config")
    validate.add_argument("--print", action="store_true", help="Print the config with defaults filled in")
    validate.set_defaults(func=cmd_validate)

    presets = sub.add_parser("presets", help="Bundled scenario presets")
    presets_sub = presets.add_subparsers(dest="presets_command", required=True)
    listing = presets_sub.add_parser("list", help="List bundled presets")
    listing.add_argument("--dir", default=PRESETS_DIR, help="Presets directory")
    listing.set_defaults(func=cmd_presets)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    # Configure logging
    log_level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    try:
        return args.func(args)
    except (ParseError, ValidationError) as e:
        logger.error(f"Invalid config: {e}")
        return int(ExitCode.CONFIG_ERROR)
    except QFlowError as e:
        logger.error(f"Run failed: {e}")
        return int(ExitCode.CHECK_FAILED)
    except OSError as e:
        logger.error(f"Cannot read config: {e}")
        return int(ExitCode.CONFIG_ERROR)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        sys.exit(0)
