"""Command-line interface.

Exit codes: 0 success, 2 scenario validation failure, 3 precondition
failure inside an operation, 64 usage error.  Identical inputs, flags and
seed produce byte-identical output.
"""

from __future__ import annotations

import argparse
import os
import sys
from io import StringIO

import numpy as np

from . import io as sio
from .consensus import (
    consensus_expectation,
    cps_check,
    first_order_vector,
    verify_cps_decomposition,
)
from .errors import (
    CapabilityError,
    PreconditionError,
    ScenarioError,
)
from .game import heterogeneous_transform, solve_beta_game, solve_heterogeneous_game
from .interaction import (
    absorbing_components,
    build_first_order_map,
    build_interaction_structure,
)
from .market import (
    FixedDraw,
    cis_generating,
    empirical_price_stats,
    product_generating,
    simulate_market,
)
from .model import ModelSpec, validate_model
from .optimism import optimism_hypotheses
from .tyranny import CISSpec, build_pi_from_cis, validate_cis, verify_tyranny
from .trade import no_trade_test

fmt = sio.fmt


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    p = _Parser(prog="consensus-lab", description=__doc__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    commands = [
        ("validate", "check a scenario file against every model invariant"),
        ("build", "emit the interaction structure and first-order map"),
        ("consensus", "consensus expectation, weights, centralities, pseudopriors"),
        ("game-solve", "solve the coordination game at a given beta"),
        ("simulate-market", "run the trading simulator"),
        ("verify-optimism", "evaluate the optimism contagion bound"),
        ("verify-tyranny", "evaluate the least-informed bound (cis scenarios)"),
        ("no-trade", "search for a profitable separable trade"),
        ("report", "run every applicable analysis"),
    ]
    for name, help_text in commands:
        c = sub.add_parser(name, help=help_text)
        c.add_argument("scenario", help="path to a scenario JSON file")
        c.add_argument("--out", metavar="DIR", help="directory for CSV artifacts")
        c.add_argument("--format", choices=["csv", "txt"], default="txt")
        c.add_argument("--tol", type=float, default=1e-12,
                       help="probability validation tolerance")
        if name in ("game-solve", "simulate-market", "report"):
            c.add_argument("--beta", type=float, default=0.99)
        if name == "game-solve":
            c.add_argument("--beta-per-agent", metavar="LIST",
                           help="comma-separated per-agent weights, e.g. a=0.9,b=0.5")
        if name in ("verify-optimism", "report"):
            c.add_argument("--fbar", type=float, default=None,
                           help="optimism threshold (default: highest first-order value)")
        if name in ("simulate-market", "report"):
            c.add_argument("--runs", type=int, default=1 if name == "simulate-market" else 0)
            c.add_argument("--seed", type=int, default=0)
        if name == "simulate-market":
            c.add_argument("--state", help="fix the realized state")
            c.add_argument("--profile", metavar="LIST",
                           help="comma-separated realized signals, one per agent")
    return p


def _emit(args, name: str, content: str):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(content)


def _print_vec(out, title, labels, vec):
    out.write(f"{title}\n")
    for lab, v in zip(labels, np.asarray(vec)):
        out.write(f"  {lab} = {fmt(v)}\n")


def _as_model(scenario) -> ModelSpec:
    if isinstance(scenario, CISSpec):
        return build_pi_from_cis(scenario)
    return scenario


def cmd_validate(args, scenario, out) -> int:
    out.write("scenario is valid\n")
    return 0


def cmd_build(args, scenario, out) -> int:
    model = _as_model(scenario)
    structure = build_interaction_structure(model)
    fom = build_first_order_map(model)
    labels = structure.index.labels
    b_csv = StringIO()
    sio.write_matrix_csv(b_csv, labels, labels, structure.matrix)
    f_csv = StringIO()
    sio.write_matrix_csv(f_csv, labels, model.states, fom.matrix)
    _emit(args, "interaction.csv", b_csv.getvalue())
    _emit(args, "first_order.csv", f_csv.getvalue())
    if args.format == "csv":
        out.write("matrix,row,col,value\n")
        for line in b_csv.getvalue().splitlines()[1:]:
            out.write(f"interaction,{line}\n")
        for line in f_csv.getvalue().splitlines()[1:]:
            out.write(f"first_order,{line}\n")
        return 0
    out.write(f"signals: {len(labels)}\n")
    out.write(f"irreducible: {structure.irreducible}\n")
    out.write(f"aperiodic: {structure.aperiodic}\n")
    for comp in absorbing_components(structure):
        out.write(f"absorbing component: {','.join(comp)}\n")
    return 0


def cmd_consensus(args, scenario, out) -> int:
    model = _as_model(scenario)
    result = consensus_expectation(model)
    labels = result.structure.index.labels
    rows: list[tuple[str, str, str]] = []
    if result.value is not None:
        rows.append(("consensus", "", fmt(result.value)))
    for comp in result.components:
        rows.append(("component_consensus", "|".join(comp.signals), fmt(comp.value)))
        for lab, w in zip(comp.signals, comp.weights):
            rows.append(("weight", lab, fmt(w)))
    if result.centralities is not None:
        for a, e in zip(model.agents, result.centralities):
            rows.append(("centrality", a, fmt(e)))
    if result.pseudopriors is not None:
        for a in model.agents:
            for lab, v in zip(model.signals[a], result.pseudopriors[a]):
                rows.append(("pseudoprior", lab, fmt(v)))
    decomposition = None
    try:
        check = cps_check(model)
        if check.holds:
            decomposition = verify_cps_decomposition(model)
            rows.append(("cps_decomposition_gap", "", fmt(decomposition.gap)))
        else:
            rows.append(("cps_violation", "", fmt(check.max_violation)))
    except (CapabilityError, PreconditionError):
        pass
    if args.format == "csv":
        out.write("kind,label,value\n")
        for r in rows:
            out.write(",".join(r) + "\n")
    else:
        for kind, label, value in rows:
            out.write(f"{kind}{' ' + label if label else ''} = {value}\n")
        if decomposition is not None:
            out.write(
                "decomposition check "
                + ("PASS" if decomposition.passed else "FAIL")
                + "\n"
            )
    csv = StringIO()
    csv.write("kind,label,value\n")
    for r in rows:
        csv.write(",".join(r) + "\n")
    _emit(args, "consensus.csv", csv.getvalue())
    return 0


def _parse_beta_per_agent(raw: str, model: ModelSpec) -> np.ndarray:
    parts = [p for p in raw.split(",") if p]
    betas = np.zeros(model.n_agents)
    if all("=" in p for p in parts):
        given = {}
        for p in parts:
            name, _, val = p.partition("=")
            if name not in model.agents:
                raise PreconditionError(f"--beta-per-agent: unknown agent {name!r}")
            given[name] = float(val)
        missing = [a for a in model.agents if a not in given]
        if missing:
            raise PreconditionError(f"--beta-per-agent: missing agent(s) {missing}")
        for k, a in enumerate(model.agents):
            betas[k] = given[a]
    else:
        if len(parts) != model.n_agents:
            raise PreconditionError(
                f"--beta-per-agent: expected {model.n_agents} values"
            )
        betas = np.array([float(p) for p in parts])
    return betas


def cmd_game(args, scenario, out) -> int:
    model = _as_model(scenario)
    if getattr(args, "beta_per_agent", None):
        betas = _parse_beta_per_agent(args.beta_per_agent, model)
        solution = solve_heterogeneous_game(model, betas)
        _, beta_hat = heterogeneous_transform(model.network, betas)
        header = f"heterogeneous betas, common beta {fmt(beta_hat)}\n"
    else:
        solution = solve_beta_game(model, args.beta)
        header = f"beta {fmt(args.beta)}\n"
    csv = StringIO()
    csv.write("signal,action\n")
    for lab, a in zip(solution.labels, solution.actions):
        csv.write(f"{lab},{fmt(a)}\n")
    _emit(args, "actions.csv", csv.getvalue())
    if args.format == "csv":
        out.write(csv.getvalue())
    else:
        out.write(header)
        _print_vec(out, "actions", solution.labels, solution.actions)
        out.write(f"fixed-point residual = {fmt(solution.residual)}\n")
    return 0


def cmd_market(args, scenario, out) -> int:
    model = _as_model(scenario)
    if getattr(args, "state", None) or getattr(args, "profile", None):
        if not (args.state and args.profile):
            raise PreconditionError("fixed draws need both --state and --profile")
        draw = FixedDraw(args.state, tuple(args.profile.split(",")))
    elif isinstance(scenario, CISSpec):
        draw = cis_generating(scenario)
    else:
        draw = product_generating(model)
    prices = solve_beta_game(model, args.beta)
    seeds = np.random.SeedSequence(args.seed).spawn(args.runs)
    runs = [
        simulate_market(model, args.beta, s, draw, prices=prices,
                        initial_owner="centrality")
        for s in seeds
    ]
    stats = empirical_price_stats(runs)
    events_csv = StringIO()
    events_csv.write("run,period,seller,buyer,price,buyer_signal\n")
    for k, run in enumerate(runs):
        for e in run.events:
            events_csv.write(
                f"{k},{e.period},{e.seller},{e.buyer},{fmt(e.price)},{e.buyer_signal}\n"
            )
    summary_csv = StringIO()
    summary_csv.write("stat,label,value\n")
    summary_csv.write(f"runs,,{stats.n_runs}\n")
    summary_csv.write(f"trades,,{stats.n_trades}\n")
    if stats.mean_price is not None:
        summary_csv.write(f"mean_price,,{fmt(stats.mean_price)}\n")
        summary_csv.write(f"price_se,,{fmt(stats.price_se)}\n")
    summary_csv.write(f"mean_duration,,{fmt(stats.mean_duration)}\n")
    for a, m in stats.class_means.items():
        if m is not None:
            summary_csv.write(f"class_mean_price,{a},{fmt(m)}\n")
    _emit(args, "events.csv", events_csv.getvalue())
    _emit(args, "summary.csv", summary_csv.getvalue())
    if args.format == "csv":
        out.write(events_csv.getvalue())
        out.write(summary_csv.getvalue())
    else:
        out.write(f"{stats.n_runs} runs, {stats.n_trades} trades\n")
        if stats.mean_price is not None:
            out.write(
                f"mean price = {fmt(stats.mean_price)}"
                f" (se {fmt(stats.price_se)})\n"
            )
        out.write(f"mean duration = {fmt(stats.mean_duration)}\n")
    return 0


def cmd_optimism(args, scenario, out) -> int:
    model = _as_model(scenario)
    threshold = args.fbar
    if threshold is None:
        threshold = float(np.max(first_order_vector(model)))
    report = optimism_hypotheses(model, threshold)
    rows = [
        ("threshold", fmt(report.threshold)),
        ("drift", fmt(report.drift)),
        ("shortfall", fmt(report.shortfall)),
        ("hypotheses_hold", str(report.hypotheses_hold)),
        ("bound", fmt(report.bound)),
        ("consensus", fmt(report.consensus)),
    ]
    if args.format == "csv":
        out.write("field,value\n")
        for k, v in rows:
            out.write(f"{k},{v}\n")
    else:
        for k, v in rows:
            out.write(f"{k} = {v}\n")
        if report.hypotheses_hold:
            ok = report.consensus >= report.bound - 1e-9
            out.write("optimism bound " + ("PASS" if ok else "FAIL") + "\n")
    return 0


def cmd_tyranny(args, scenario, out) -> int:
    if not isinstance(scenario, CISSpec):
        raise PreconditionError(
            "verify-tyranny needs a common-interpretation scenario (kind: cis)"
        )
    report = verify_tyranny(scenario)
    rows = [
        ("consensus", fmt(report.consensus)),
        ("prior_expectation", fmt(report.prior_expectation)),
        ("gap", fmt(report.gap)),
        ("bound", fmt(report.bound)),
        ("eps", fmt(report.eps)),
        ("delta", fmt(report.delta)),
        ("belief_gap_max", fmt(report.belief_gap_max)),
        ("belief_gap_bound", fmt(report.belief_gap_bound)),
        ("max_passage_time", fmt(report.perturbation.max_passage_time)),
        ("passage_time_bound", fmt(report.passage_time_bound)),
        ("max_path_length", str(report.max_path_length)),
    ]
    if args.format == "csv":
        out.write("field,value\n")
        for k, v in rows:
            out.write(f"{k},{v}\n")
    else:
        for k, v in rows:
            out.write(f"{k} = {v}\n")
        out.write("tyranny bound " + ("PASS" if report.passed else "FAIL") + "\n")
    return 0


def cmd_no_trade(args, scenario, out) -> int:
    model = _as_model(scenario)
    structure = build_interaction_structure(model)
    result = no_trade_test(structure)
    if args.format == "csv":
        out.write("field,value\n")
        out.write(f"trade_found,{result.has_trade}\n")
        out.write(f"reducible,{result.reducible}\n")
        out.write(f"objective,{fmt(result.objective)}\n")
        if result.has_trade:
            for lab, x in zip(structure.index.labels, result.trade):
                out.write(f"payment.{lab},{fmt(x)}\n")
    else:
        out.write(f"reducible: {result.reducible}\n")
        if result.has_trade:
            out.write("strictly profitable separable trade found\n")
            _print_vec(out, "payments", structure.index.labels, result.trade)
        else:
            out.write("no strictly profitable separable trade exists\n")
    return 0


def cmd_report(args, scenario, out) -> int:
    model = _as_model(scenario)

    def section(title, fn):
        out.write(f"== {title} ==\n")
        try:
            fn()
        except (PreconditionError, CapabilityError) as exc:
            out.write(f"not applicable: {exc}\n")

    section("structure", lambda: cmd_build(args, scenario, out))
    section("consensus", lambda: cmd_consensus(args, scenario, out))
    if model.y is not None:
        args.beta_per_agent = None
        section("game", lambda: cmd_game(args, scenario, out))
    section("optimism", lambda: cmd_optimism(args, scenario, out))
    section("no-trade", lambda: cmd_no_trade(args, scenario, out))
    if isinstance(scenario, CISSpec):
        section("tyranny", lambda: cmd_tyranny(args, scenario, out))
    if getattr(args, "runs", 0):
        section("market", lambda: cmd_market(args, scenario, out))
    return 0


_HANDLERS = {
    "validate": cmd_validate,
    "build": cmd_build,
    "consensus": cmd_consensus,
    "game-solve": cmd_game,
    "simulate-market": cmd_market,
    "verify-optimism": cmd_optimism,
    "verify-tyranny": cmd_tyranny,
    "no-trade": cmd_no_trade,
    "report": cmd_report,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 64
    try:
        scenario = sio.load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    violations = (
        validate_cis(scenario, args.tol)
        if isinstance(scenario, CISSpec)
        else validate_model(scenario, args.tol)
    )
    if violations:
        for v in violations:
            print(f"invalid: {v}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[args.command](args, scenario, out)
    except (PreconditionError, CapabilityError) as exc:
        print(f"precondition failure: {exc}", file=sys.stderr)
        return 3


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
