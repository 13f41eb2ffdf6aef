"""Command-line front end: ``python -m trendtest <command>``.

Exit codes report operational success only: 0 when a report was produced
(whatever the statistical decision), 2 for malformed input, 3 when no
adjacent level pair can be compared.
"""

import argparse
import dataclasses
import hashlib
import io
import json
import logging
import sys
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from trendtest import __version__
from trendtest.configuration import Configuration
from trendtest.contingency import read_table_csv
from trendtest.data_model import read_csv
from trendtest.errors import DatasetError, NoComparablePairsError, SizeCapError, TableError
from trendtest.exactdist import CountPmf, exact_pmf, mc_count_pmf, permutation_pmf, total_variation
from trendtest.resampling import TestResult, bootstrap_test, dump_bootstrap_sample
from trendtest.simulation import (
    EstimatorReport,
    SimConfig,
    SimReport,
    estimator_diagnostics,
    location_shift,
    power_sim,
    run_fixed_table_test,
    type1_error_sim,
)
from trendtest.ustat import TiePolicy

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_PAIRS = 3

# flags that change how a run executes but not what it computes
_EXECUTION_FLAGS = {"threads", "progress", "verbose", "out", "func", "command"}


class RunManifest(BaseModel):
    """Everything needed to rerun a command."""

    model_config = ConfigDict(frozen=True)

    command: str
    config: dict[str, Any]
    seed: Optional[int]
    version: str
    input_sha256: Optional[str] = None
    started_at: datetime
    finished_at: datetime


class TestReport(BaseModel):
    __test__ = False

    manifest: RunManifest
    result: TestResult


class SimulationReport(BaseModel):
    manifest: RunManifest
    result: SimReport


class EstimatorDiagnosticsReport(BaseModel):
    manifest: RunManifest
    result: EstimatorReport


SCHEMAS: dict[str, type[BaseModel]] = {
    "test": TestReport,
    "sim": SimulationReport,
    "estimator": EstimatorDiagnosticsReport,
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _sha256(path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(args: argparse.Namespace, started: datetime, input_path: Optional[str] = None) -> RunManifest:
    config = {k: v for k, v in vars(args).items() if k not in _EXECUTION_FLAGS}
    return RunManifest(
        command=args.command,
        config=config,
        seed=getattr(args, "seed", None),
        version=__version__,
        input_sha256=_sha256(input_path),
        started_at=started,
        finished_at=datetime.now(timezone.utc),
    )


def _emit(report: BaseModel, out: Optional[str], **dump: Any) -> None:
    text = report.model_dump_json(indent=2, **dump) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _configuration(args: argparse.Namespace) -> Configuration:
    return dataclasses.replace(Configuration.from_runnable_config(), threads=args.threads)


def _progress(done: int, total: int, elapsed: float) -> None:
    rate = done / elapsed if elapsed > 0 else float("inf")
    print(f"{done}/{total} replications, {rate:.1f}/s", file=sys.stderr)


def _print_test_summary(result: TestResult) -> None:
    lines = [
        f"M = {result.m_observed:.4f}",
        f"critical value ({1 - result.alpha:.0%}) = {result.critical_value:.4f}",
        f"p-value = {result.p_value:.4f} (n_boot={result.n_boot})",
        f"decision: {'reject' if result.reject else 'do not reject'} H0 at alpha={result.alpha}",
        "pair  p_hat_x  p_hat_y  p_pooled",
    ]
    for l, px, py, pp in zip(result.pairs, result.p_hat_x, result.p_hat_y, result.p_pooled.p_pooled):
        lines.append(f"{l:>4}  {px:7.4f}  {py:7.4f}  {pp:8.4f}")
    if result.dropped_pairs:
        lines.append(f"dropped pairs: {list(result.dropped_pairs)}")
    if result.one_sided_pairs:
        lines.append(f"dropped with data in one group only: {list(result.one_sided_pairs)}")
    print("\n".join(lines), file=sys.stderr)


def _finish_test(args: argparse.Namespace, result: TestResult, started: datetime, input_path: str) -> int:
    _print_test_summary(result)
    if args.dump_boot:
        dump_bootstrap_sample(result, args.dump_boot, args.dump_format)
    exclude = None if args.include_boot else {"result": {"bootstrap_sample"}}
    _emit(TestReport(manifest=_manifest(args, started, input_path), result=result), args.out, exclude=exclude)
    return EXIT_OK


def cmd_test(args: argparse.Namespace) -> int:
    started = datetime.now(timezone.utc)
    dataset = read_csv(args.data, n_levels=args.levels)
    result = bootstrap_test(
        dataset,
        args.alpha,
        args.nboot,
        args.seed,
        TiePolicy(mode=args.ties, applies_to=args.tie_scope),
        configuration=_configuration(args),
    )
    return _finish_test(args, result, started, args.data)


def _sim_config(args: argparse.Namespace, power: bool) -> SimConfig:
    if args.config:
        return SimConfig.from_file(args.config)
    if args.sizes is None or args.p is None:
        raise DatasetError("either --config or both --sizes and --p are required")
    return SimConfig(
        k=len(args.p),
        sizes_x=args.sizes,
        sizes_y=args.sizes_y or args.sizes,
        true_p=args.p,
        true_p_y=args.p_y if power else None,
        n_rep=args.nrep,
        n_boot=args.nboot,
        alpha=args.alpha,
        seed=args.seed,
        family=args.family,
    )


def cmd_type1(args: argparse.Namespace) -> int:
    started = datetime.now(timezone.utc)
    sim = _sim_config(args, power=False)
    report = type1_error_sim(
        sim, configuration=_configuration(args), progress=_progress if args.progress else None
    )
    print(report.summary(), file=sys.stderr)
    _emit(SimulationReport(manifest=_manifest(args, started, args.config), result=report), args.out)
    return EXIT_OK


def cmd_power(args: argparse.Namespace) -> int:
    started = datetime.now(timezone.utc)
    if args.table:
        result = run_fixed_table_test(
            read_table_csv(args.table),
            args.nboot,
            args.alpha,
            args.seed,
            configuration=_configuration(args),
        )
        return _finish_test(args, result, started, args.table)
    sim = _sim_config(args, power=True)
    report = power_sim(
        sim, configuration=_configuration(args), progress=_progress if args.progress else None
    )
    print(report.summary(), file=sys.stderr)
    _emit(SimulationReport(manifest=_manifest(args, started, args.config), result=report), args.out)
    return EXIT_OK


def cmd_exact(args: argparse.Namespace) -> int:
    pmf = exact_pmf(args.n1, args.n2, args.p)
    frame = pd.DataFrame({"k": range(len(pmf.mass)), "probability": pmf.mass})
    oracle: Optional[CountPmf] = None
    if args.compare == "permutation":
        oracle = permutation_pmf(args.n1, args.n2)
    elif args.compare == "mc":
        oracle = mc_count_pmf(args.n1, args.n2, location_shift(args.p), args.nsims, args.seed)
    buffer = io.StringIO()
    if oracle is not None:
        frame[args.compare] = oracle.mass
    frame.to_csv(buffer, index=False)
    if oracle is not None:
        buffer.write(f"# total_variation,{total_variation(pmf, oracle)!r}\n")
    if args.out:
        Path(args.out).write_text(buffer.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buffer.getvalue())
    return EXIT_OK


def cmd_estimator(args: argparse.Namespace) -> int:
    started = datetime.now(timezone.utc)
    report = estimator_diagnostics(args.n1, args.n2, args.p, args.nreps, args.seed, args.family)
    _emit(EstimatorDiagnosticsReport(manifest=_manifest(args, started), result=report), args.out)
    return EXIT_OK


def cmd_schema(args: argparse.Namespace) -> int:
    sys.stdout.write(json.dumps(SCHEMAS[args.report].model_json_schema(), indent=2) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    defaults = Configuration.from_runnable_config()
    parser = argparse.ArgumentParser(prog="trendtest", description="Two-sample sequential trend test")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--alpha", type=float, default=defaults.alpha)
        sub.add_argument("--nboot", type=int, default=defaults.n_boot)
        sub.add_argument("--seed", type=int, default=defaults.seed)
        sub.add_argument("--threads", type=int, default=defaults.threads, help="parallel graph tasks")
        sub.add_argument("--out", help="write the JSON report here instead of stdout")

    def test_output(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--dump-boot", help="write the M* sample to this path")
        sub.add_argument("--dump-format", choices=["csv", "gnuplot"], default="csv")
        sub.add_argument("--include-boot", action="store_true", help="keep M* values in the JSON report")

    test = commands.add_parser("test", help="bootstrap trend test on a measurement CSV")
    test.add_argument("--data", required=True, help="CSV with group,level,value columns")
    test.add_argument("--levels", type=int, help="number of levels, if trailing levels have no records")
    test.add_argument("--ties", choices=["expected_half", "random_coin"], default=defaults.ties)
    test.add_argument("--tie-scope", choices=["all_exact_ties", "zero_zero_pairs"], default=defaults.tie_scope)
    common(test)
    test_output(test)
    test.set_defaults(func=cmd_test)

    for name, func in (("type1", cmd_type1), ("power", cmd_power)):
        sim = commands.add_parser(name, help=f"{name} simulation study")
        sim.add_argument("--config", help="SimConfig as JSON or TOML")
        sim.add_argument("--sizes", type=_ints, help="sub-sample sizes, e.g. 5,5,5,5")
        sim.add_argument("--sizes-y", type=_ints, help="group y sizes (default: --sizes)")
        sim.add_argument("--p", type=_floats, help="ground-truth probabilities, e.g. 0.4,0.2,0.3")
        sim.add_argument("--nrep", type=int, default=1000)
        sim.add_argument("--family", choices=["normal", "logistic"], default="normal")
        sim.add_argument("--progress", action="store_true", help="print replication throughput")
        common(sim)
        if name == "power":
            sim.add_argument("--p-y", type=_floats, help="group y probabilities")
            sim.add_argument("--table", help="fixed frequency table CSV; runs a single test")
            test_output(sim)
        sim.set_defaults(func=func)

    exact = commands.add_parser("exact", help="pmf of a pair count from the recurrence")
    exact.add_argument("--n1", type=int, required=True)
    exact.add_argument("--n2", type=int, required=True)
    exact.add_argument("--p", type=float, required=True)
    exact.add_argument("--compare", choices=["permutation", "mc"])
    exact.add_argument("--nsims", type=int, default=100_000)
    exact.add_argument("--seed", type=int, default=defaults.seed)
    exact.add_argument("--out")
    exact.set_defaults(func=cmd_exact)

    estimator = commands.add_parser("estimator", help="Monte Carlo behavior of the pair estimators")
    estimator.add_argument("--n1", type=int, required=True)
    estimator.add_argument("--n2", type=int, required=True)
    estimator.add_argument("--p", type=float, required=True)
    estimator.add_argument("--nreps", type=int, default=10_000)
    estimator.add_argument("--seed", type=int, default=defaults.seed)
    estimator.add_argument("--family", choices=["normal", "logistic"], default="normal")
    estimator.add_argument("--out")
    estimator.set_defaults(func=cmd_estimator)

    schema = commands.add_parser("schema", help="print the JSON schema of a report")
    schema.add_argument("report", choices=sorted(SCHEMAS))
    schema.set_defaults(func=cmd_schema)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except NoComparablePairsError as exc:
        logger.error("%s", exc)
        return EXIT_NO_PAIRS
    except (DatasetError, TableError, SizeCapError, ValidationError, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
