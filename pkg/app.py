"""
Preferred Frame vs Multisimultaneity - Command-line front end

Classify timing regimes, print analytic predictions, sample runs and
reproduce the discriminating scenarios.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Check Python version
if sys.version_info < (3, 10):
    print("\n⚠️  Python Version Warning", file=sys.stderr)
    print(f"You are using Python {sys.version_info.major}.{sys.version_info.minor}", file=sys.stderr)
    print("This app needs Python 3.10 or newer\n", file=sys.stderr)

from simultaneity import __version__
from simultaneity.config import ConfigDocument, bundled_scenarios, load_document
from simultaneity.errors import ConfigValidationError, UndefinedRegimeError
from simultaneity.experiment import choice_events, classify_timing, frame_time_table, has_two_choice_sites
from simultaneity.kinematics import influence_speed
from simultaneity.montecarlo import RunPlan
from simultaneity.reports import distribution_to_dict
from simultaneity.suite import run_paper_suite, write_run
from simultaneity.theories import TheoryModel, predict
from simultaneity.utils import load_env_settings, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_VALIDATION = 2
EXIT_UNDEFINED_REGIME = 3
EXIT_IO = 4


def print_banner():
    """Print application banner."""
    banner = f"""
    ╔═══════════════════════════════════════════════════════════╗
    ║   Preferred Frame vs Multisimultaneity  (v{__version__:<8})       ║
    ║   Moving beam-splitters, moving detectors, one photon     ║
    ╚═══════════════════════════════════════════════════════════╝
    """
    print(banner, file=sys.stderr)


def report_validation(error: ConfigValidationError, source: str) -> int:
    """Print line-referenced violations and return the validation exit code."""
    for violation in error.violations:
        where = f"{source}:{violation.line}" if violation.line is not None else source
        print(f"❌ {where}: {violation.field}: {violation.rule} ({violation.message})", file=sys.stderr)
    logger.error(f"Validation failed for {source}: {len(error.violations)} violation(s)")
    return EXIT_VALIDATION


def cmd_classify(args, settings) -> int:
    """Print the timing class plus every device's frame times."""
    document = load_document(args.config)
    cfg = document.config
    if not has_two_choice_sites(cfg):
        print("single choice site (beam-splitter placement): no timing class applies")
        return EXIT_OK

    timing = classify_timing(cfg, tol=args.tolerance)
    first, second = choice_events(cfg)
    print(f"timing: {timing.value}")
    print(f"choice events: {first.device_id} (t={first.event.t}, x={first.event.x}), "
          f"{second.device_id} (t={second.event.t}, x={second.event.x})")
    speed = influence_speed(first.event, second.event, cfg.preferred_frame)
    print(f"influence speed in preferred frame (beta={cfg.preferred_frame_beta}): {speed:.6g} c")
    print()
    print(f"{'device':<8} {'kind':<14} {'beta':>8} {('t(' + first.device_id + ')'):>14} {('t(' + second.device_id + ')'):>14}")
    for row in frame_time_table(cfg):
        times = row["times"]
        print(f"{row['id']:<8} {row['kind']:<14} {row['beta']:>8.4f} "
              f"{times[first.device_id]:>14.9f} {times[second.device_id]:>14.9f}")
    return EXIT_OK


def _model(args, document: ConfigDocument) -> TheoryModel:
    return TheoryModel(args.model) if args.model else document.model


def _override(value, default):
    return default if value is None else value


def cmd_predict(args, settings) -> int:
    """Print the analytic distribution as JSON on stdout."""
    document = load_document(args.config)
    alpha_default, beta_default = document.settings[0]
    alpha = alpha_default if args.alpha is None else args.alpha
    beta = beta_default if args.beta is None else args.beta
    model = _model(args, document)
    violations = RunPlan(document.config, model, ((alpha, beta),), document.trials, document.seed).validate()
    if violations:
        raise ConfigValidationError(violations)
    dist = predict(model, document.config, alpha, beta)
    print(json.dumps(distribution_to_dict(dist), indent=2))
    return EXIT_OK


def cmd_run(args, settings) -> int:
    """Sample the document's run plan and write records and report."""
    document = load_document(args.config)
    plan = document.plan(model=_model(args, document), trials=args.trials, seed=args.seed)
    out_dir = Path(args.out)
    print(f"\n⬇️  Sampling {plan.trials} trials x {len(plan.settings)} settings ({plan.model.value}, seed {plan.seed})...",
          file=sys.stderr)
    paths = write_run(plan, out_dir, args.format, _override(args.tolerance_k, settings.tolerance_k),
                      workers=_override(args.workers, settings.workers), progress=True)
    for path in paths:
        print(f"✅ Wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_paper_suite(args, settings) -> int:
    """Run every bundled scenario and print a pass/fail table."""
    out_dir = Path(args.out) if args.out else None
    results = run_paper_suite(
        trials=args.trials,
        out_dir=out_dir,
        k=_override(args.tolerance_k, settings.tolerance_k),
        workers=_override(args.workers, settings.workers),
        progress=True,
    )

    print("\n" + "=" * 72)
    print("📊 Scenario Suite")
    print("=" * 72)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        flag = "  (small sample: tolerance widened)" if r.small_sample else ""
        print(f"{mark}  {r.name:<28} {r.criterion}{flag}")
        for line in r.diagnostics:
            print(f"      {line}")
    print("=" * 72)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} scenarios passed")
    if out_dir is not None:
        print(f"📂 Report saved to: {out_dir / 'suite_report.json'}")
    return EXIT_OK if passed == len(results) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Preferred-frame QM versus Multisimultaneity for moving interferometers",
    )
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", required=True,
                       help=f"config file, or a bundled scenario: {', '.join(bundled_scenarios())}")

    def add_model(p):
        p.add_argument("--model", choices=[m.value for m in TheoryModel], default=None,
                       help="theory to use (default: the document's model)")

    classify = sub.add_parser("classify", help="timing class of a setup")
    add_config(classify)
    classify.add_argument("--tolerance", type=float, default=1e-12, help="simultaneity tolerance")
    classify.set_defaults(handler=cmd_classify)

    predict_cmd = sub.add_parser("predict", help="analytic distribution as JSON")
    add_config(predict_cmd)
    add_model(predict_cmd)
    predict_cmd.add_argument("--alpha", type=float, default=None, help="phase setting on side i")
    predict_cmd.add_argument("--beta", type=float, default=None, help="phase setting on side j")
    predict_cmd.set_defaults(handler=cmd_predict)

    run_cmd = sub.add_parser("run", help="sample a run and write result files")
    add_config(run_cmd)
    add_model(run_cmd)
    run_cmd.add_argument("--trials", type=int, default=None, help="trials per setting")
    run_cmd.add_argument("--seed", type=int, default=None, help="master seed")
    run_cmd.add_argument("--out", required=True, help="output directory")
    run_cmd.add_argument("--format", choices=["csv", "json"], default="csv", help="records file format")
    run_cmd.add_argument("--tolerance-k", type=float, default=None, help="significance multiplier")
    run_cmd.add_argument("--workers", type=int, default=None, help="sampling threads")
    run_cmd.set_defaults(handler=cmd_run)

    suite = sub.add_parser("paper-suite", help="run every bundled scenario")
    suite.add_argument("--out", default=None, help="output directory for suite_report.json")
    suite.add_argument("--trials", type=int, default=None, help="trials per setting for every scenario")
    suite.add_argument("--tolerance-k", type=float, default=None, help="significance multiplier")
    suite.add_argument("--workers", type=int, default=None, help="sampling threads")
    suite.set_defaults(handler=cmd_paper_suite)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point; returns the exit code."""
    args = build_parser().parse_args(argv)
    settings = load_env_settings()
    setup_logging("INFO" if args.verbose else settings.log_level, settings.log_file)
    if args.command in ("run", "paper-suite"):
        print_banner()

    source = getattr(args, "config", None) or args.command
    try:
        return args.handler(args, settings)
    except ConfigValidationError as e:
        return report_validation(e, source)
    except UndefinedRegimeError as e:
        logger.error(f"{source}: {e}")
        print(f"❌ {source}: {e}", file=sys.stderr)
        return EXIT_UNDEFINED_REGIME
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(f"❌ I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\n⚠️  Interrupted by user.", file=sys.stderr)
        sys.exit(EXIT_FAILED)
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        print(f"\n❌ An error occurred: {str(e)}", file=sys.stderr)
        sys.exit(EXIT_FAILED)
