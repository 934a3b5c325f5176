"""Command-line front end.

Subcommands: simulate, ingest, train, sgt, fairness, suite and report. The
report goes to stdout and diagnostics to stderr. Exit status is 0 on success,
1 on a usage error (the synopsis is printed) and 2 on a data error. When
``--seed`` is omitted the ``UPLIFT_SGT_SEED`` environment variable is used,
falling back to 0. Files named with ``--out`` style flags are written
atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from uplift_sgt.campaign import CampaignSpec
from uplift_sgt.errors import (
    InvalidConfig,
    MissingColumn,
    MissingCounterfactuals,
    UpliftSGTError,
)
from uplift_sgt.fairness import evaluate_all
from uplift_sgt.fileio import atomic_write_text, dumps_json
from uplift_sgt.harness import (
    DEFAULT_BUDGETS,
    DEFAULT_COST,
    SuiteEntry,
    default_entries,
    run_suite,
    suite_csv,
    train_models,
)
from uplift_sgt.ingest import IngestConfig, ingest_files
from uplift_sgt.models import TrainConfig, load_model, save_model, train_logistic
from uplift_sgt.popio import population_csv, read_population
from uplift_sgt.sgt import selection_from_flags, step_one, step_two
from uplift_sgt.simulate import SimConfig, generate_history, generate_population, launch

SEED_ENV = "UPLIFT_SGT_SEED"
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

log = logging.getLogger("uplift_sgt")


class UsageError(Exception):
    """Bad invocation detected after argument parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _optional_ratio(text: str) -> float | None:
    if text.lower() == "none":
        return None
    return float(text)


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


# -- shared option groups ---------------------------------------------------


def _add_seed(p):
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (fallback: ${SEED_ENV}, then 0)")


def _add_sim(p):
    g = p.add_argument_group("simulation")
    g.add_argument("--n", type=int, default=SimConfig.n_individuals, help="population size")
    g.add_argument("--features", type=int, default=SimConfig.n_features)
    g.add_argument("--noise", type=float, default=SimConfig.noise_level)
    g.add_argument("--drift", type=float, default=SimConfig.drift_magnitude)
    g.add_argument("--positive-rate", type=float, default=SimConfig.positive_rate)
    g.add_argument("--signal", type=float, default=SimConfig.signal)
    g.add_argument("--correlation", type=float, default=SimConfig.protected_correlation)
    g.add_argument("--mix", type=_float_list, default=None, help="SureThing,LostCause,DoNotDisturb,Persuadable")


def _add_train(p):
    g = p.add_argument_group("training")
    g.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    g.add_argument("--max-iters", type=int, default=TrainConfig.max_iters)
    g.add_argument("--l2", type=float, default=TrainConfig.l2)
    g.add_argument(
        "--oversample-ratio", type=_optional_ratio, default=TrainConfig.oversample_ratio,
        help="target minority share, or 'none'",
    )


def _add_spec(p, budget: bool = True):
    g = p.add_argument_group("campaign")
    if budget:
        g.add_argument("--budget", type=float, default=CampaignSpec.budget_fraction)
    g.add_argument("--cost", type=float, default=DEFAULT_COST, help="intervention cost per treated individual")
    g.add_argument("--unit-value", type=float, default=CampaignSpec.unit_value)


def _checked(factory, **kwargs):
    """Build a config object; invalid flag values are usage errors."""
    try:
        return factory(**kwargs)
    except InvalidConfig as err:
        raise UsageError(str(err)) from None


def _sim_config(args, seed: int) -> SimConfig:
    return _checked(
        SimConfig,
        n_individuals=args.n,
        n_features=args.features,
        seed=seed,
        quadrant_mix=tuple(args.mix) if args.mix else None,
        noise_level=args.noise,
        drift_magnitude=args.drift,
        protected_correlation=args.correlation,
        positive_rate=args.positive_rate,
        signal=args.signal,
    )


def _train_config(args, seed: int) -> TrainConfig:
    return _checked(
        TrainConfig,
        learning_rate=args.lr,
        max_iters=args.max_iters,
        l2=args.l2,
        oversample_ratio=args.oversample_ratio,
        seed=seed,
    )


def _spec(args) -> CampaignSpec:
    return _checked(
        CampaignSpec,
        budget_fraction=getattr(args, "budget", CampaignSpec.budget_fraction),
        intervention_cost=args.cost,
        unit_value=args.unit_value,
    )


def _emit(text: str, out: str | None, stdout) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        stdout.write(text)


# -- subcommands ------------------------------------------------------------


def cmd_simulate(args, stdout) -> None:
    cfg = _sim_config(args, resolve_seed(args.seed))
    campaign = generate_history(cfg) if args.history else generate_population(cfg)
    text = population_csv(campaign.individuals, dict(campaign.outcomes))
    _emit(text, args.out, stdout)


def cmd_ingest(args, stdout) -> None:
    cfg = IngestConfig(
        age_threshold=args.age_threshold,
        income_threshold=args.income_threshold,
        test_months=args.test_months,
        validation_months=args.validation_months,
    )
    result = ingest_files(args.events, args.profiles, args.portfolio, cfg)
    for err in result.malformed:
        log.warning("skipped malformed row: %s", err)
    log.info(
        "%d records, %d malformed rows skipped, %d duplicates dropped, "
        "age threshold %g, income threshold %g",
        len(result.records), len(result.malformed), result.duplicates_dropped,
        result.age_threshold, result.income_threshold,
    )
    _emit(result.to_csv(), args.out, stdout)


def _arm_data(pop) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Training data per arm: counterfactual pairs if present, else observed KPI."""
    X = pop.features_start()
    if pop.outcomes:
        o_t, o_c = pop.outcome_arrays()
        return X, o_t, o_c
    if any(ind.treated is None or ind.kpi_observed is None for ind in pop.individuals):
        raise MissingColumn("training needs outcome columns or treated and kpi for every row")
    treated = np.array([bool(ind.treated) for ind in pop.individuals])
    kpi = np.array([ind.kpi_observed for ind in pop.individuals], dtype=float)
    return X, np.where(treated, kpi, np.nan), np.where(treated, np.nan, kpi)


def cmd_train(args, stdout) -> None:
    pop = read_population(args.population)
    cfg = _train_config(args, resolve_seed(args.seed))
    if pop.outcomes:
        models = train_models(pop, cfg)
        m_t, m_c = models.m_treat, models.m_control
    else:
        X, y_t, y_c = _arm_data(pop)
        mask = ~np.isnan(y_t)
        m_t = train_logistic(X[mask], y_t[mask], cfg)
        m_c = train_logistic(X[~mask], y_c[~mask], cfg)
    if args.out_treat:
        save_model(m_t, args.out_treat)
    if args.out_control:
        save_model(m_c, args.out_control)
    stdout.write(dumps_json({"treat": m_t.to_dict(), "control": m_c.to_dict()}))


def cmd_sgt(args, stdout) -> None:
    pop = read_population(args.population)
    m_t = load_model(args.treat_model)
    m_c = load_model(args.control_model)
    spec = _spec(args)
    if all(ind.treated is not None for ind in pop.individuals):
        population = pop.individuals
        selection = selection_from_flags(population)
    else:
        if not pop.outcomes:
            raise MissingCounterfactuals(
                "population has no treated flags and no outcome columns to launch the campaign"
            )
        selection = step_one(pop.individuals, m_t, m_c, spec)
        population = launch(pop, selection.intervention)
        if args.launched_out:
            atomic_write_text(args.launched_out, population_csv(population, dict(pop.outcomes)))
    labels = step_two(population, selection, m_t, m_c)
    _emit(labels.to_csv(), args.out, stdout)


def _read_columns(path) -> tuple[list[str], dict[str, list[str]]]:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumn(f"{path}: empty file") from None
    if "id" not in header:
        raise MissingColumn(f"{path}: missing column 'id'")
    cols: dict[str, list[str]] = {h: [] for h in header}
    for row in reader:
        if not row:
            continue
        for h, v in zip(header, row):
            cols[h].append(v.strip())
    return header, cols


def _value_column(path, header, preferred: Sequence[str]) -> str:
    for name in preferred:
        if name in header:
            return name
    rest = [h for h in header if h != "id"]
    if len(rest) == 1:
        return rest[0]
    raise MissingColumn(f"{path}: expected one of {', '.join(preferred)}")


def _aligned(path, preferred, ids: list[str]) -> np.ndarray:
    header, cols = _read_columns(path)
    col = _value_column(path, header, preferred)
    lookup = dict(zip(cols["id"], cols[col]))
    missing = [i for i in ids if i not in lookup]
    if missing:
        raise MissingColumn(f"{path}: no value for id(s) {', '.join(missing[:5])}")
    return np.array([int(float(lookup[i])) for i in ids])


def cmd_fairness(args, stdout) -> None:
    header, cols = _read_columns(args.membership)
    ids = cols["id"]
    preds = _aligned(args.preds, ("pred", "treated", "treated_in_campaign"), ids)
    labels = None
    if args.labels:
        labels = _aligned(args.labels, ("label", "sgt_label"), ids)
    attributes = [h for h in header if h != "id"]
    if args.attribute:
        attributes = [a for a in attributes if a in args.attribute]
    if not attributes:
        raise MissingColumn(f"{args.membership}: no protected attribute columns")
    reports = []
    for name in attributes:
        membership = np.array([int(float(v)) for v in cols[name]])
        reports.append(evaluate_all(preds, labels, membership, attribute=name).to_dict())
    _emit(dumps_json(reports), args.out, stdout)


def _suite_report(args) -> dict:
    seed = resolve_seed(args.seed)
    sim = _sim_config(args, seed)
    spec = _spec(args)
    train = _train_config(args, seed)
    if args.test:
        if not args.history:
            raise UsageError("--test requires --history")
        campaigns = [(read_population(args.history), read_population(args.test))]
        entries = [SuiteEntry(sim, spec, train)]
        return run_suite(entries, args.budgets, campaigns)
    entries = default_entries(args.campaigns, seed, sim, spec, train)
    return run_suite(entries, args.budgets)


def cmd_suite(args, stdout) -> None:
    report = _suite_report(args)
    if args.csv:
        atomic_write_text(args.csv, suite_csv(report))
    _emit(dumps_json(report), args.out, stdout)


def cmd_report(args, stdout) -> None:
    from uplift_sgt.plotting import render_suite_figures

    if args.suite:
        report = json.loads(Path(args.suite).read_text(encoding="utf-8"))
    else:
        report = _suite_report(args)
    out_dir = Path(args.out_dir)
    text = suite_csv(report)
    atomic_write_text(out_dir / "suite.csv", text)
    if not args.suite:
        atomic_write_text(out_dir / "suite.json", dumps_json(report))
    for path in render_suite_figures(report, out_dir, args.figure_budget):
        log.info("wrote %s", path)
    stdout.write(text)


def _add_suite_inputs(p):
    _add_seed(p)
    p.add_argument("--budgets", type=_float_list, default=list(DEFAULT_BUDGETS))
    p.add_argument("--campaigns", type=int, default=10)
    p.add_argument("--history", help="population CSV used for training (with --test)")
    p.add_argument("--test", help="population CSV to campaign on (with --history)")
    _add_sim(p)
    _add_train(p)
    _add_spec(p, budget=False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uplift-sgt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="generate a synthetic population CSV")
    _add_seed(p)
    _add_sim(p)
    p.add_argument("--history", action="store_true", help="emit the training population")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="turn event logs into monthly records")
    p.add_argument("--events", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--portfolio", required=True)
    p.add_argument("--age-threshold", type=float, default=None)
    p.add_argument("--income-threshold", type=float, default=None)
    p.add_argument("--test-months", type=int, default=1)
    p.add_argument("--validation-months", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit treatment and control response models")
    p.add_argument("--population", required=True)
    _add_seed(p)
    _add_train(p)
    p.add_argument("--out-treat")
    p.add_argument("--out-control")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sgt", help="select, launch and emit surrogate ground truth labels")
    p.add_argument("--population", required=True)
    p.add_argument("--treat-model", required=True)
    p.add_argument("--control-model", required=True)
    _add_spec(p)
    p.add_argument("--launched-out", help="write the launched population here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sgt)

    p = sub.add_parser("fairness", help="fairness report from prediction and membership files")
    p.add_argument("--preds", required=True)
    p.add_argument("--membership", required=True)
    p.add_argument("--labels")
    p.add_argument("--attribute", action="append", help="restrict to this attribute (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fairness)

    p = sub.add_parser("suite", help="run the strategy comparison suite (JSON)")
    _add_suite_inputs(p)
    p.add_argument("--csv", help="also write the flat CSV here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("report", help="CSV and figures from a suite report")
    p.add_argument("--suite", help="existing suite JSON; otherwise the suite is run")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--figure-budget", type=float, default=None)
    _add_suite_inputs(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    old_stderr = sys.stderr
    sys.stderr = stderr
    try:
        try:
            args = parser.parse_args(argv)
        except UsageError as err:
            print(err, file=stderr)
            return EXIT_USAGE
        except SystemExit as exc:  # --help
            return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

        handler = logging.StreamHandler(stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        log.handlers[:] = [handler]
        log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
        log.propagate = False
        try:
            args.func(args, stdout)
        except UsageError as err:
            parser.print_usage(stderr)
            print(f"uplift-sgt: error: {err}", file=stderr)
            return EXIT_USAGE
        except (UpliftSGTError, OSError, ValueError, KeyError) as err:
            print(f"uplift-sgt: data error: {type(err).__name__}: {err}", file=stderr)
            return EXIT_DATA
        return EXIT_OK
    finally:
        sys.stderr = old_stderr


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
