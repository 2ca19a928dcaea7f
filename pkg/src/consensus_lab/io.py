"""Scenario files and CSV export.

A scenario is a JSON object discriminated by its top-level ``kind``:
``general`` (default) carries explicit interim beliefs, ``cis`` carries a
common-interpretation model (state priors plus signal technologies).
Unknown keys are rejected everywhere; error messages carry the file name
and the JSON path of the offending field.
"""

from __future__ import annotations

import json
from typing import Any, Iterable

import numpy as np

from .errors import ScenarioError
from .model import BasicVariable, InterimBelief, ModelSpec, Network
from .tyranny import CISSpec

#: Round-trippable float formatting used in every CSV cell.
FLOAT_FORMAT = "{:.17g}"


def fmt(x: float) -> str:
    return FLOAT_FORMAT.format(float(x))


def _fail(ctx: str, msg: str):
    raise ScenarioError(f"{ctx}: {msg}")


def _expect(obj, typ, ctx, what):
    if not isinstance(obj, typ):
        _fail(ctx, f"expected {what}, got {type(obj).__name__}")
    return obj


def _take(mapping: dict, ctx: str, required: Iterable[str], optional: Iterable[str] = ()):
    required = list(required)
    allowed = set(required) | set(optional)
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        _fail(ctx, f"unknown key(s) {unknown}; allowed: {sorted(allowed)}")
    for k in required:
        if k not in mapping:
            _fail(ctx, f"missing required key {k!r}")
    return mapping


def _number(obj, ctx) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        _fail(ctx, f"expected a number, got {type(obj).__name__}")
    return float(obj)


def _labels(obj, ctx) -> tuple[str, ...]:
    _expect(obj, list, ctx, "a list of labels")
    out = []
    for k, item in enumerate(obj):
        _expect(item, str, f"{ctx}[{k}]", "a string label")
        out.append(item)
    return tuple(out)


def _vector(obj, ctx, n=None) -> np.ndarray:
    _expect(obj, list, ctx, "a list of numbers")
    if n is not None and len(obj) != n:
        _fail(ctx, f"expected {n} entries, got {len(obj)}")
    try:
        return np.array([float(x) for x in obj])
    except (TypeError, ValueError):
        _fail(ctx, "entries must be numbers")


def _matrix(obj, ctx, shape) -> np.ndarray:
    _expect(obj, list, ctx, "a list of rows")
    if len(obj) != shape[0]:
        _fail(ctx, f"expected {shape[0]} rows, got {len(obj)}")
    return np.array([_vector(r, f"{ctx}[{k}]", shape[1]) for k, r in enumerate(obj)])


def _parse_network(obj, ctx, n) -> Network:
    if isinstance(obj, list):
        return Network(_matrix(obj, ctx, (n, n)))
    _expect(obj, dict, ctx, "a weight matrix or an object")
    _take(obj, ctx, ["weights"], ["diagonal_allowed"])
    return Network(
        _matrix(obj["weights"], f"{ctx}.weights", (n, n)),
        bool(obj.get("diagonal_allowed", False)),
    )


def _parse_y(obj, ctx, states) -> BasicVariable:
    _expect(obj, dict, ctx, "an object with values and max")
    _take(obj, ctx, ["values", "max"])
    vals = obj["values"]
    if isinstance(vals, dict):
        unknown = sorted(set(vals) - set(states))
        if unknown:
            _fail(f"{ctx}.values", f"unknown state(s) {unknown}")
        missing = [s for s in states if s not in vals]
        if missing:
            _fail(f"{ctx}.values", f"missing state(s) {missing}")
        vec = np.array([_number(vals[s], f"{ctx}.values.{s}") for s in states])
    else:
        vec = _vector(vals, f"{ctx}.values", len(states))
    return BasicVariable(vec, _number(obj["max"], f"{ctx}.max"))


def _parse_belief(obj, ctx, spec_agents, signals, states, owner) -> InterimBelief:
    _expect(obj, dict, ctx, "an object")
    _take(obj, ctx, [], ["marginals", "full"])
    others = [a for a in spec_agents if a != owner]
    if "full" in obj and "marginals" in obj:
        _fail(ctx, "give either marginals or full, not both")
    if "full" in obj:
        entries = _expect(obj["full"], list, f"{ctx}.full", "a list of entries")
        shape = (len(states),) + tuple(len(signals[j]) for j in others)
        joint = np.zeros(shape)
        for k, ent in enumerate(entries):
            ectx = f"{ctx}.full[{k}]"
            _expect(ent, dict, ectx, "an object")
            _take(ent, ectx, ["state", "others", "p"])
            if ent["state"] not in states:
                _fail(ectx, f"unknown state {ent['state']!r}")
            coord = [states.index(ent["state"])]
            oth = _expect(ent["others"], dict, f"{ectx}.others", "an object")
            for j in others:
                if j not in oth:
                    _fail(f"{ectx}.others", f"missing signal for agent {j}")
                if oth[j] not in signals[j]:
                    _fail(f"{ectx}.others", f"unknown signal {oth[j]!r} for {j}")
                coord.append(signals[j].index(oth[j]))
            extra = sorted(set(oth) - set(others))
            if extra:
                _fail(f"{ectx}.others", f"unexpected agent(s) {extra}")
            joint[tuple(coord)] += _number(ent["p"], f"{ectx}.p")
        return InterimBelief.from_full(joint, others)
    if "marginals" not in obj:
        _fail(ctx, "belief needs either marginals or full")
    m = _expect(obj["marginals"], dict, f"{ctx}.marginals", "an object")
    _take(m, f"{ctx}.marginals", ["state"], ["signals"])
    state_marginal = _vector(m["state"], f"{ctx}.marginals.state", len(states))
    sig = {}
    for j, vec in _expect(
        m.get("signals", {}), dict, f"{ctx}.marginals.signals", "an object"
    ).items():
        if j not in others:
            _fail(f"{ctx}.marginals.signals", f"{j!r} is not another agent")
        sig[j] = _vector(vec, f"{ctx}.marginals.signals.{j}", len(signals[j]))
    return InterimBelief(state_marginal, sig)


def _parse_signals(obj, ctx, agents) -> dict[str, tuple[str, ...]]:
    _expect(obj, dict, ctx, "an object keyed by agent")
    unknown = sorted(set(obj) - set(agents))
    if unknown:
        _fail(ctx, f"unknown agent(s) {unknown}")
    out = {}
    for a in agents:
        if a not in obj:
            _fail(ctx, f"missing signals for agent {a}")
        out[a] = _labels(obj[a], f"{ctx}.{a}")
    return out


def parse_scenario(data: Any, ctx: str = "scenario"):
    """Parse an already-decoded scenario object into a model."""
    _expect(data, dict, ctx, "a JSON object")
    kind = data.get("kind", "general")
    if kind == "general":
        _take(
            data,
            ctx,
            ["states", "agents", "signals", "beliefs", "network"],
            ["kind", "priors", "y"],
        )
        states = _labels(data["states"], f"{ctx}.states")
        agents = _labels(data["agents"], f"{ctx}.agents")
        signals = _parse_signals(data["signals"], f"{ctx}.signals", agents)
        bl = _expect(data["beliefs"], dict, f"{ctx}.beliefs", "an object")
        beliefs = {}
        all_signals = {t: a for a in agents for t in signals[a]}
        unknown = sorted(set(bl) - set(all_signals))
        if unknown:
            _fail(f"{ctx}.beliefs", f"unknown signal(s) {unknown}")
        for t, owner in all_signals.items():
            if t not in bl:
                _fail(f"{ctx}.beliefs", f"missing belief for signal {t}")
            beliefs[t] = _parse_belief(
                bl[t], f"{ctx}.beliefs.{t}", agents, signals, states, owner
            )
        network = _parse_network(data["network"], f"{ctx}.network", len(agents))
        priors = None
        if "priors" in data:
            pr = _expect(data["priors"], dict, f"{ctx}.priors", "an object")
            unknown = sorted(set(pr) - set(agents))
            if unknown:
                _fail(f"{ctx}.priors", f"unknown agent(s) {unknown}")
            priors = {
                a: _vector(v, f"{ctx}.priors.{a}", len(signals[a]))
                for a, v in pr.items()
            }
        y = _parse_y(data["y"], f"{ctx}.y", states) if "y" in data else None
        return ModelSpec(states, agents, signals, beliefs, network, priors, y)
    if kind == "cis":
        _take(
            data,
            ctx,
            ["states", "agents", "signals", "rho", "eta", "network"],
            ["kind", "y"],
        )
        states = _labels(data["states"], f"{ctx}.states")
        agents = _labels(data["agents"], f"{ctx}.agents")
        signals = _parse_signals(data["signals"], f"{ctx}.signals", agents)
        rho_obj = _expect(data["rho"], dict, f"{ctx}.rho", "an object")
        eta_obj = _expect(data["eta"], dict, f"{ctx}.eta", "an object")
        rho = {}
        eta = {}
        for a in agents:
            if a not in rho_obj:
                _fail(f"{ctx}.rho", f"missing prior for agent {a}")
            if a not in eta_obj:
                _fail(f"{ctx}.eta", f"missing technology for agent {a}")
            rho[a] = _vector(rho_obj[a], f"{ctx}.rho.{a}", len(states))
            eta[a] = _matrix(
                eta_obj[a], f"{ctx}.eta.{a}", (len(states), len(signals[a]))
            )
        network = _parse_network(data["network"], f"{ctx}.network", len(agents))
        y = _parse_y(data["y"], f"{ctx}.y", states) if "y" in data else None
        return CISSpec(states, agents, signals, rho, eta, network, y)
    _fail(f"{ctx}.kind", f"unknown kind {kind!r} (expected 'general' or 'cis')")


def load_scenario(path):
    """Load and parse a scenario file; raises ScenarioError with context."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_scenario(data, ctx=str(path))


def write_matrix_csv(fh, row_labels, col_labels, matrix):
    """Triplet CSV (row, col, value) with a header line."""
    fh.write("row,col,value\n")
    matrix = np.asarray(matrix)
    for i, r in enumerate(row_labels):
        for j, c in enumerate(col_labels):
            fh.write(f"{r},{c},{fmt(matrix[i, j])}\n")


def write_vector_csv(fh, labels, vector, value_name="value"):
    fh.write(f"label,{value_name}\n")
    for lab, v in zip(labels, np.asarray(vector)):
        fh.write(f"{lab},{fmt(v)}\n")
