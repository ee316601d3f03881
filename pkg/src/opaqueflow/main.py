"""Command-line entry point for opaqueflow."""

import argparse
import functools
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Optional

import yaml
from dotenv import load_dotenv

from opaqueflow.config.loader import configure_logging, load_settings, reload_settings
from opaqueflow.errors import InvalidArgumentError, ManifestError, ScenarioError, UrlError
from opaqueflow.models import ScenarioResult
from opaqueflow.policy import disclosure_report, disclosure_report_json, load_manifest
from opaqueflow.scenarios import builtin_scenarios, load_scenario, resolve_scenario, run_scenario
from opaqueflow.transports import create_transport_from_config

__all__ = ["cmd_check", "cmd_disclose", "cmd_list", "cmd_run", "main", "run"]

EXIT_OK = 0
EXIT_EXPECTATION_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_IO_ERROR = 3


def _exit_codes(fn: Callable[..., int]) -> Callable[..., int]:
    """Map input and I/O errors raised by a command to exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs) -> int:
        try:
            return fn(*args, **kwargs)
        except (ManifestError, ScenarioError, UrlError, InvalidArgumentError, UnicodeDecodeError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INVALID_INPUT
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO_ERROR

    return wrapper


def _banner(title: str) -> None:
    print("\n" + "=" * 60)
    print(title)
    print("=" * 60)


@_exit_codes
def cmd_check(manifest_path: str | Path) -> int:
    """Validate a manifest."""
    manifest = load_manifest(manifest_path)
    print(
        f"OK {manifest.app_id}: "
        f"{len(manifest.declared_labels)} labels, {len(manifest.rules)} rules"
    )
    return EXIT_OK


@_exit_codes
def cmd_disclose(manifest_path: str | Path, output_format: str = "text") -> int:
    """Print the install-time disclosure of every allowed flow."""
    manifest = load_manifest(manifest_path)
    if output_format == "json":
        print(disclosure_report_json(manifest))
    else:
        print(disclosure_report(manifest))
    return EXIT_OK


def cmd_list() -> int:
    """Print the names of the built-in scenarios."""
    for name in builtin_scenarios():
        print(name)
    return EXIT_OK


@_exit_codes
def cmd_run(
    scenario_name_or_path: str,
    log_path: Optional[str | Path] = None,
    settings: Optional[dict] = None,
) -> int:
    """
    Run a built-in or file-defined scenario.

    Returns 0 when every expectation holds and the run raised no errors,
    1 otherwise.
    """
    settings = settings if settings is not None else load_settings()
    scenario = load_scenario(resolve_scenario(scenario_name_or_path))
    transport = create_transport_from_config(settings)
    handle_bytes = int(settings.get("runtime", {}).get("handle_bytes", 16))

    result = run_scenario(scenario, transport=transport, handle_bytes=handle_bytes)
    _print_result(result, transport.name)

    if log_path:
        export = result.export_log()
        Path(log_path).write_text(export + "\n" if export else "", encoding="utf-8")
        print(f"\nAttempt log saved to: {log_path}")

    return EXIT_OK if result.passed else EXIT_EXPECTATION_FAILED


def _print_result(result: ScenarioResult, transport_name: str) -> None:
    _banner(f"SCENARIO: {result.name} (transport: {transport_name})")

    print("\nAttempts:")
    if result.attempts:
        for attempt in result.attempts:
            suffix = f"  [{attempt.status.value}]"
            if attempt.error:
                suffix += f" {attempt.error}"
            print(f"  {attempt.export_line()}{suffix}")
    else:
        print("  (none)")

    print("\nExpectations:")
    for expectation in result.expectations:
        mark = "PASS" if expectation.passed else "FAIL"
        print(f"  [{mark}] line {expectation.line}: {expectation.description} ({expectation.detail})")

    if result.errors:
        print("\nErrors:")
        for error in result.errors:
            print(f"  {error}")

    _banner(
        f"{'PASSED' if result.passed else 'FAILED'}: "
        f"delivered={result.delivered} denied={result.denied} blocked={result.blocked}"
    )


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--settings",
        type=str,
        default=None,
        help="Alternate settings YAML file",
    )

    parser = argparse.ArgumentParser(
        prog="opaqueflow",
        description="opaqueflow - opacified computation with URL-filtered flow policies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exit codes:
  0  success / all expectations hold
  1  a scenario expectation failed
  2  invalid manifest, scenario, URL or configuration
  3  I/O error

Examples:
  opaqueflow check login.manifest
  opaqueflow disclose login.manifest --format json
  opaqueflow run login-exfiltration --log attempts.log
  OPAQUEFLOW_TRANSPORT=http opaqueflow run my.scenario
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="Validate a manifest")
    check.add_argument("manifest", help="Path to the manifest file")

    disclose = sub.add_parser("disclose", parents=[common], help="Print the flow disclosure report")
    disclose.add_argument("manifest", help="Path to the manifest file")
    disclose.add_argument(
        "--format",
        dest="output_format",
        choices=["text", "json"],
        default=None,
        help="Report format (default: cli.default_format from settings)",
    )

    run_cmd = sub.add_parser("run", parents=[common], help="Run a scenario")
    run_cmd.add_argument("scenario", help="Built-in scenario name or path to a .scenario file")
    run_cmd.add_argument("--log", dest="log_path", default=None, help="Write the attempt log export here")

    sub.add_parser("list", parents=[common], help="List built-in scenarios")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """CLI entry point with argument parsing; returns the exit code."""
    load_dotenv()
    args = _build_parser().parse_args(argv)

    try:
        settings = reload_settings(args.settings) if args.settings else load_settings()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO_ERROR
    except yaml.YAMLError as e:
        print(f"error: invalid settings file: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    configure_logging(settings)

    if args.command == "check":
        return cmd_check(args.manifest)
    if args.command == "disclose":
        output_format = args.output_format or settings.get("cli", {}).get("default_format", "text")
        return cmd_disclose(args.manifest, output_format)
    if args.command == "run":
        return cmd_run(args.scenario, log_path=args.log_path, settings=settings)
    return cmd_list()


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
