"""Scenario files: a line-oriented description of states, ensembles, and
the computations to run on them.

Grammar
-------
A header line ``[kind]`` or ``[kind NAME]`` opens a section; ``key = value``
lines populate it; ``#`` starts a comment (outside quotes).  Values are
numbers, quoted strings, bare identifiers, or comma-separated lists of
those.  Section kinds:

``[grid]``
    ``x_min``, ``x_max``, ``n_points``.  Defaults to [-12, 12) with 2048
    points when omitted.
``[units]``
    ``hbar`` (default 1.0).
``[output]``
    ``format = csv | jsonl`` (default csv).
``[state NAME]``
    ``kind = gaussian`` with ``x0, p0, sigma``;
    ``kind = ho`` with ``n`` and optional ``mass, omega``;
    ``kind = superpose`` with ``terms = "COEFF NAME", ...`` where COEFF is
    a complex literal and NAME a previously declared state.
``[ensemble NAME]``
    ``group_weights = w1, w2, ...`` and one ``group_<k> = "W NAME", ...``
    per group, W being the conditional weight.  Alternatively counts mode:
    ``total = N``, ``group_counts = N1, ...``, and integer member counts
    in place of weights.
``[task]``
    ``kind = stats | classify | fluctuation_sample | clt_study |
    time_window`` plus kind-specific keys; ``id`` optional.  Stochastic
    tasks must carry an explicit ``seed``.

Reports are flat rows (one quantity per row) with a fixed field order,
written as RFC-4180-style CSV or JSON Lines; floats carry 17 significant
digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

from . import __version__
from .ensemble import Ensemble, EnsembleComponent, build_ensemble, ensemble_product, mixed_state_moments
from .errors import QuncertError, ScenarioParseError, UnknownReferenceError
from .fluctuations import (
    Exponential,
    MicroDistribution,
    TwoPoint,
    Uniform,
    batch_to_csv,
    clt_aggregate,
    estimate_moments,
    from_stats,
    sample,
)
from .grid import Grid, UnitSystem, WaveFunction, make_grid
from .observables import classify, uncertainty_product
from .states import GaussianRecipe, HarmonicRecipe, build_state, superpose
from .timewindow import (
    FreeParticle,
    HarmonicPotential,
    Potential,
    TimeWindow,
    window_from_ensemble,
    window_from_state,
)

DEFAULT_GRID = (-12.0, 12.0, 2048)

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


# --- scenario data model -----------------------------------------------------


@dataclass(frozen=True)
class SuperposeDecl:
    """Superposition by reference: (complex coefficient, state name) terms."""

    terms: Tuple[Tuple[complex, str], ...]


StateDecl = Union[GaussianRecipe, HarmonicRecipe, SuperposeDecl]


@dataclass(frozen=True)
class GroupDecl:
    """One ensemble group: weight (None in counts mode) and members.

    Each member is (number, state name); the number is the conditional
    weight, or the component count when the ensemble is in counts mode.
    """

    weight: Optional[float]
    members: Tuple[Tuple[float, str], ...]


@dataclass(frozen=True)
class EnsembleDecl:
    groups: Tuple[GroupDecl, ...]
    total: Optional[int] = None
    group_counts: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class StatsTask:
    task_id: str
    state: str
    kind: str = "stats"


@dataclass(frozen=True)
class ClassifyTask:
    task_id: str
    target: str  # state or ensemble name
    rel_tol: Optional[float] = None
    kind: str = "classify"


@dataclass(frozen=True)
class FluctuationSampleTask:
    task_id: str
    source: str  # state or ensemble name
    n: int
    seed: int
    points_out: Optional[str] = None
    kind: str = "fluctuation_sample"


@dataclass(frozen=True)
class CltStudyTask:
    task_id: str
    micro: MicroDistribution
    m_list: Tuple[int, ...]
    n: int
    seed: int
    kind: str = "clt_study"


@dataclass(frozen=True)
class TimeWindowTask:
    task_id: str
    target: str  # state or ensemble name
    potential: Potential
    kind: str = "time_window"


Task = Union[StatsTask, ClassifyTask, FluctuationSampleTask, CltStudyTask, TimeWindowTask]


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: Grid
    units: UnitSystem
    states: Tuple[Tuple[str, StateDecl], ...]
    ensembles: Tuple[Tuple[str, EnsembleDecl], ...]
    tasks: Tuple[Task, ...]
    output_format: str = "csv"

    def state_names(self) -> List[str]:
        return [n for n, _ in self.states]

    def ensemble_names(self) -> List[str]:
        return [n for n, _ in self.ensembles]


@dataclass(frozen=True)
class ReportRow:
    """One (task, quantity) record with provenance."""

    task_id: str
    kind: str
    quantity: str
    value: Union[float, int, str]
    classification: Optional[str] = None
    seed: Optional[int] = None
    scenario: str = ""
    version: str = __version__


REPORT_FIELDS = (
    "task_id",
    "kind",
    "quantity",
    "value",
    "classification",
    "seed",
    "scenario",
    "version",
)


# --- low-level line parsing --------------------------------------------------


def _strip_comment(line: str) -> str:
    out = []
    in_quote = False
    for ch in line:
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            break
        out.append(ch)
    return "".join(out)


def _parse_atom(tok: str, line_no: int, col: int):
    tok = tok.strip()
    if tok.startswith('"'):
        if len(tok) < 2 or not tok.endswith('"'):
            raise ScenarioParseError(line_no, col, f"unterminated string {tok!r}")
        return tok[1:-1]
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        pass
    if _NAME_RE.match(tok):
        return tok
    raise ScenarioParseError(line_no, col, f"cannot parse value {tok!r}")


def _parse_value(text: str, line_no: int, col: int):
    """A single atom, or a list when commas are present at top level."""
    tokens: List[str] = []
    cur: List[str] = []
    in_quote = False
    for ch in text:
        if ch == '"':
            in_quote = not in_quote
            cur.append(ch)
        elif ch == "," and not in_quote:
            tokens.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    tokens.append("".join(cur))
    if in_quote:
        raise ScenarioParseError(line_no, col, "unterminated string")
    atoms = [_parse_atom(t, line_no, col) for t in tokens]
    return atoms if len(atoms) > 1 else atoms[0]


@dataclass
class _Section:
    kind: str
    arg: Optional[str]
    line: int
    items: Dict[str, Tuple[object, int]] = field(default_factory=dict)

    def take(self, key, default=_sentinel := object()):
        if key in self.items:
            return self.items.pop(key)[0]
        if default is _sentinel:
            raise ScenarioParseError(
                self.line, 1, f"section [{self.kind}] is missing key {key!r}"
            )
        return default

    def finish(self):
        if self.items:
            key, (_, line) = next(iter(self.items.items()))
            raise ScenarioParseError(
                line, 1, f"unknown key {key!r} in section [{self.kind}]"
            )


def _split_sections(text: str) -> List[_Section]:
    sections: List[_Section] = []
    current: Optional[_Section] = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioParseError(line_no, len(line), "unterminated section header")
            head = line[1:-1].strip().split()
            if len(head) == 1:
                kind, arg = head[0], None
            elif len(head) == 2:
                kind, arg = head
                if not _NAME_RE.match(arg):
                    raise ScenarioParseError(line_no, 1, f"bad section name {arg!r}")
            else:
                raise ScenarioParseError(line_no, 1, f"bad section header {line!r}")
            current = _Section(kind=kind, arg=arg, line=line_no)
            sections.append(current)
            continue
        if "=" not in line:
            raise ScenarioParseError(line_no, 1, f"expected 'key = value', got {line!r}")
        if current is None:
            raise ScenarioParseError(line_no, 1, "key line before any section header")
        key, _, value_text = line.partition("=")
        key = key.strip()
        col = raw.index("=") + 2
        if not _NAME_RE.match(key):
            raise ScenarioParseError(line_no, 1, f"bad key {key!r}")
        if key in current.items:
            raise ScenarioParseError(line_no, 1, f"duplicate key {key!r}")
        if not value_text.strip():
            raise ScenarioParseError(line_no, col, f"missing value for {key!r}")
        current.items[key] = (_parse_value(value_text.strip(), line_no, col), line_no)
    return sections


# --- typed accessors ----------------------------------------------------------


def _as_list(value) -> list:
    return list(value) if isinstance(value, list) else [value]


def _want_number(value, line, what) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(line, 1, f"{what} must be a number, got {value!r}")
    return float(value)


def _want_int(value, line, what) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioParseError(line, 1, f"{what} must be an integer, got {value!r}")
    return value


def _want_name(value, line, what) -> str:
    if not isinstance(value, str) or not _NAME_RE.match(value):
        raise ScenarioParseError(line, 1, f"{what} must be a name, got {value!r}")
    return value


def _parse_weighted_ref(text: str, line: int, what: str) -> Tuple[complex, str]:
    parts = text.split()
    if len(parts) != 2:
        raise ScenarioParseError(
            line, 1, f"{what} must look like \"COEFF NAME\", got {text!r}"
        )
    coeff_text, name = parts
    try:
        coeff = complex(coeff_text)
    except ValueError:
        raise ScenarioParseError(
            line, 1, f"bad coefficient {coeff_text!r} in {what}"
        ) from None
    if not _NAME_RE.match(name):
        raise ScenarioParseError(line, 1, f"bad state name {name!r} in {what}")
    return coeff, name


def _parse_micro(text: str, line: int) -> MicroDistribution:
    parts = text.split()
    try:
        if parts[0] == "uniform" and len(parts) == 3:
            return Uniform(float(parts[1]), float(parts[2]))
        if parts[0] == "twopoint" and len(parts) == 3:
            return TwoPoint(float(parts[1]), float(parts[2]))
        if parts[0] == "exponential" and len(parts) == 2:
            return Exponential(float(parts[1]))
    except (ValueError, IndexError):
        pass
    raise ScenarioParseError(
        line,
        1,
        f"bad micro distribution {text!r}; expected 'uniform A B', "
        "'twopoint V1 V2' or 'exponential RATE'",
    )


def _parse_potential(text: str, line: int) -> Potential:
    parts = text.split()
    try:
        if parts[0] == "harmonic" and len(parts) == 3:
            return HarmonicPotential(float(parts[1]), float(parts[2]))
        if parts[0] == "free" and len(parts) in (1, 2):
            return FreeParticle(float(parts[1])) if len(parts) == 2 else FreeParticle()
    except (ValueError, IndexError):
        pass
    raise ScenarioParseError(
        line,
        1,
        f"bad potential {text!r}; expected 'harmonic MASS OMEGA' or 'free [MASS]'",
    )


# --- section interpreters ------------------------------------------------------


def _read_state(section: _Section, known: Dict[str, StateDecl]) -> StateDecl:
    line = section.line
    kind = section.take("kind")
    if kind == "gaussian":
        decl = GaussianRecipe(
            x0=_want_number(section.take("x0"), line, "x0"),
            p0=_want_number(section.take("p0"), line, "p0"),
            sigma=_want_number(section.take("sigma"), line, "sigma"),
        )
    elif kind == "ho":
        decl = HarmonicRecipe(
            n=_want_int(section.take("n"), line, "n"),
            mass=_want_number(section.take("mass", 1.0), line, "mass"),
            omega=_want_number(section.take("omega", 1.0), line, "omega"),
        )
    elif kind == "superpose":
        raw_terms = _as_list(section.take("terms"))
        terms = []
        for item in raw_terms:
            if not isinstance(item, str):
                raise ScenarioParseError(line, 1, f"bad superpose term {item!r}")
            coeff, name = _parse_weighted_ref(item, line, "superpose term")
            if name not in known:
                raise UnknownReferenceError(name, f"superpose term in [state {section.arg}]")
            terms.append((coeff, name))
        decl = SuperposeDecl(terms=tuple(terms))
    else:
        raise ScenarioParseError(line, 1, f"unknown state kind {kind!r}")
    section.finish()
    return decl


def _read_ensemble(section: _Section, known_states) -> EnsembleDecl:
    line = section.line
    total = section.take("total", None)
    if total is not None:
        total = _want_int(total, line, "total")
        raw_counts = _as_list(section.take("group_counts"))
        group_counts = tuple(_want_int(c, line, "group count") for c in raw_counts)
        group_weights = [None] * len(group_counts)
    else:
        raw_weights = _as_list(section.take("group_weights"))
        group_weights = [_want_number(w, line, "group weight") for w in raw_weights]
        group_counts = None

    groups = []
    for k in range(1, len(group_weights) + 1):
        raw_members = _as_list(section.take(f"group_{k}"))
        members = []
        for item in raw_members:
            if not isinstance(item, str):
                raise ScenarioParseError(line, 1, f"bad ensemble member {item!r}")
            coeff, name = _parse_weighted_ref(item, line, f"group_{k} member")
            if coeff.imag != 0:
                raise ScenarioParseError(
                    line, 1, f"ensemble member weight must be real, got {item!r}"
                )
            if name not in known_states:
                raise UnknownReferenceError(name, f"[ensemble {section.arg}] group_{k}")
            members.append((coeff.real, name))
        groups.append(GroupDecl(weight=group_weights[k - 1], members=tuple(members)))
    section.finish()
    return EnsembleDecl(groups=tuple(groups), total=total, group_counts=group_counts)


def _read_task(section: _Section, index: int, states, ensembles) -> Task:
    line = section.line
    task_id = section.take("id", f"task{index}")
    if not isinstance(task_id, str):
        task_id = str(task_id)
    kind = section.take("kind")

    def want_target(key):
        name = _want_name(section.take(key), line, key)
        if name not in states and name not in ensembles:
            raise UnknownReferenceError(name, f"task {task_id!r}")
        return name

    if kind == "stats":
        name = _want_name(section.take("state"), line, "state")
        if name not in states:
            raise UnknownReferenceError(name, f"task {task_id!r}")
        task = StatsTask(task_id, name)
    elif kind == "classify":
        rel_tol = section.take("rel_tol", None)
        if rel_tol is not None:
            rel_tol = _want_number(rel_tol, line, "rel_tol")
        task = ClassifyTask(task_id, want_target("target"), rel_tol)
    elif kind == "fluctuation_sample":
        points_out = section.take("points_out", None)
        if points_out is not None and not isinstance(points_out, str):
            raise ScenarioParseError(line, 1, "points_out must be a path string")
        task = FluctuationSampleTask(
            task_id,
            want_target("source"),
            n=_want_int(section.take("n"), line, "n"),
            seed=_want_int(section.take("seed"), line, "seed"),
            points_out=points_out,
        )
    elif kind == "clt_study":
        micro_text = section.take("micro")
        if not isinstance(micro_text, str):
            raise ScenarioParseError(line, 1, "micro must be a descriptor string")
        m_list = tuple(
            _want_int(m, line, "m_list entry") for m in _as_list(section.take("m_list"))
        )
        if not m_list:
            raise ScenarioParseError(line, 1, "m_list must be non-empty")
        task = CltStudyTask(
            task_id,
            micro=_parse_micro(micro_text, line),
            m_list=m_list,
            n=_want_int(section.take("n"), line, "n"),
            seed=_want_int(section.take("seed"), line, "seed"),
        )
    elif kind == "time_window":
        pot_text = section.take("potential")
        if not isinstance(pot_text, str):
            raise ScenarioParseError(line, 1, "potential must be a descriptor string")
        task = TimeWindowTask(
            task_id, want_target("target"), potential=_parse_potential(pot_text, line)
        )
    else:
        raise ScenarioParseError(line, 1, f"unknown task kind {kind!r}")
    section.finish()
    return task


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """Parse and fully validate scenario text.

    Validation resolves every cross-reference and builds the declared
    states and ensembles once (so weight and grid errors surface here,
    not at run time).

    Raises
    ------
    ScenarioParseError, UnknownReferenceError
        For malformed text or dangling names.
    QuncertError subclasses
        Domain errors propagated from state or ensemble construction.
    """
    sections = _split_sections(text)

    grid_spec = DEFAULT_GRID
    hbar = 1.0
    output_format = "csv"
    states: List[Tuple[str, StateDecl]] = []
    ensembles: List[Tuple[str, EnsembleDecl]] = []
    tasks: List[Task] = []
    seen = {"grid": False, "units": False, "output": False}

    state_map: Dict[str, StateDecl] = {}
    ensemble_map: Dict[str, EnsembleDecl] = {}
    task_index = 0
    for section in sections:
        if section.kind in seen:
            if seen[section.kind]:
                raise ScenarioParseError(
                    section.line, 1, f"duplicate [{section.kind}] section"
                )
            seen[section.kind] = True

        if section.kind == "grid":
            grid_spec = (
                _want_number(section.take("x_min"), section.line, "x_min"),
                _want_number(section.take("x_max"), section.line, "x_max"),
                _want_int(section.take("n_points"), section.line, "n_points"),
            )
            section.finish()
        elif section.kind == "units":
            hbar = _want_number(section.take("hbar"), section.line, "hbar")
            section.finish()
        elif section.kind == "output":
            output_format = section.take("format")
            if output_format not in ("csv", "jsonl"):
                raise ScenarioParseError(
                    section.line, 1, f"format must be csv or jsonl, got {output_format!r}"
                )
            section.finish()
        elif section.kind == "state":
            if section.arg is None:
                raise ScenarioParseError(section.line, 1, "state section needs a name")
            if section.arg in state_map:
                raise ScenarioParseError(
                    section.line, 1, f"duplicate state {section.arg!r}"
                )
            decl = _read_state(section, state_map)
            state_map[section.arg] = decl
            states.append((section.arg, decl))
        elif section.kind == "ensemble":
            if section.arg is None:
                raise ScenarioParseError(section.line, 1, "ensemble section needs a name")
            if section.arg in ensemble_map:
                raise ScenarioParseError(
                    section.line, 1, f"duplicate ensemble {section.arg!r}"
                )
            decl = _read_ensemble(section, state_map)
            ensemble_map[section.arg] = decl
            ensembles.append((section.arg, decl))
        elif section.kind == "task":
            task_index += 1
            tasks.append(_read_task(section, task_index, state_map, ensemble_map))
        else:
            raise ScenarioParseError(
                section.line, 1, f"unknown section kind {section.kind!r}"
            )

    scenario = Scenario(
        name=name,
        grid=make_grid(*grid_spec),
        units=UnitSystem(hbar),
        states=tuple(states),
        ensembles=tuple(ensembles),
        tasks=tuple(tasks),
        output_format=output_format,
    )
    realize(scenario)  # full validation: builds every state and ensemble
    return scenario


# --- realization and execution --------------------------------------------------


def realize(s: Scenario):
    """Build every declared state and ensemble; returns (states, ensembles)."""
    built_states: Dict[str, WaveFunction] = {}
    for name, decl in s.states:
        if isinstance(decl, SuperposeDecl):
            terms = [(c, built_states[ref]) for c, ref in decl.terms]
            built_states[name] = superpose(terms)
        else:
            built_states[name] = build_state(decl, s.grid, s.units)

    built_ensembles: Dict[str, Ensemble] = {}
    for name, decl in s.ensembles:
        groups = []
        for gi, group in enumerate(decl.groups, start=1):
            comps = []
            for ji, (number, ref) in enumerate(group.members, start=1):
                if decl.total is not None:
                    count = int(number)
                    if count != number:
                        raise ScenarioParseError(
                            1, 1, f"count {number!r} in counts-mode ensemble {name!r} "
                            "must be an integer"
                        )
                    comps.append(
                        EnsembleComponent(gi, ji, built_states[ref], None, count)
                    )
                else:
                    comps.append(
                        EnsembleComponent(gi, ji, built_states[ref], float(number))
                    )
            groups.append((group.weight, comps))
        counts = (
            (decl.total, decl.group_counts) if decl.total is not None else None
        )
        built_ensembles[name] = build_ensemble(groups, s.units, counts)
    return built_states, built_ensembles


def _rows_for_report(task, report, scenario_name, seed) -> List[ReportRow]:
    quantities = [
        ("count", report.count),
        ("mean_x", report.mean_x),
        ("var_x", report.var_x),
        ("mean_p", report.mean_p),
        ("var_p", report.var_p),
        ("corr_xp", report.corr_xp),
        ("skew_x", report.skew_x),
        ("skew_p", report.skew_p),
        ("excess_kurt_x", report.excess_kurt_x),
        ("excess_kurt_p", report.excess_kurt_p),
    ]
    return [
        ReportRow(task.task_id, task.kind, q, v, seed=seed, scenario=scenario_name)
        for q, v in quantities
        if v is not None
    ]


def run_scenario(s: Scenario, seed_override: Optional[int] = None) -> List[ReportRow]:
    """Execute every task and return report rows in declaration order.

    Output is a pure function of the scenario and the seeds; running the
    same scenario twice yields identical rows.  ``seed_override`` replaces
    the seed of every stochastic task.
    """
    built_states, built_ensembles = realize(s)

    def stats_for(name):
        if name in built_states:
            return uncertainty_product(built_states[name], s.units)
        return mixed_state_moments(built_ensembles[name])

    rows: List[ReportRow] = []
    for task in s.tasks:
        try:
            rows.extend(
                _run_task(task, s, built_states, built_ensembles, stats_for, seed_override)
            )
        except QuncertError as err:
            raise type(err)(f"task {task.task_id!r}: {err}") from err
    return rows


def _run_task(task, s, built_states, built_ensembles, stats_for, seed_override):
    name = s.name
    if isinstance(task, StatsTask):
        st = uncertainty_product(built_states[task.state], s.units)
        values = [
            ("mean_x", st.mean_x),
            ("var_x", st.var_x),
            ("mean_p", st.mean_p),
            ("var_p", st.var_p),
            ("product", st.product),
        ]
        return [
            ReportRow(task.task_id, task.kind, q, v, scenario=name) for q, v in values
        ]

    if isinstance(task, ClassifyTask):
        rel_tol = task.rel_tol
        if task.target in built_ensembles:
            kwargs = {} if rel_tol is None else {"rel_tol": rel_tol}
            verdict = ensemble_product(built_ensembles[task.target], **kwargs)
        else:
            product = uncertainty_product(built_states[task.target], s.units).product
            kwargs = {} if rel_tol is None else {"rel_tol": rel_tol}
            verdict = classify(product, s.units, **kwargs)
        values = [
            ("product", verdict.product),
            ("bound", verdict.bound),
            ("slack", verdict.slack),
        ]
        return [
            ReportRow(
                task.task_id,
                task.kind,
                q,
                v,
                classification=verdict.classification,
                scenario=name,
            )
            for q, v in values
        ]

    if isinstance(task, FluctuationSampleTask):
        seed = task.seed if seed_override is None else seed_override
        gaussian = from_stats(stats_for(task.source))
        batch = sample(gaussian, task.n, seed)
        if task.points_out is not None:
            batch_to_csv(batch, task.points_out)
        report = estimate_moments(batch)
        return _rows_for_report(task, report, name, seed)

    if isinstance(task, CltStudyTask):
        seed = task.seed if seed_override is None else seed_override
        rows = []
        for m in task.m_list:
            report = clt_aggregate(task.micro, m, task.n, seed)
            for quantity, value in (
                (f"m{m}_var", report.var_x),
                (f"m{m}_skew", report.skew_x),
                (f"m{m}_excess_kurt", report.excess_kurt_x),
            ):
                if value is not None:
                    rows.append(
                        ReportRow(
                            task.task_id, task.kind, quantity, value,
                            seed=seed, scenario=name,
                        )
                    )
        return rows

    if isinstance(task, TimeWindowTask):
        if task.target in built_ensembles:
            window = window_from_ensemble(built_ensembles[task.target], task.potential)
        else:
            window = window_from_state(
                built_states[task.target], task.potential, s.units
            )
        values = [
            ("mean_E", window.mean_E),
            ("delta_E", window.delta_E),
            ("delta_t", "unbounded" if window.is_unbounded else window.delta_t),
        ]
        return [
            ReportRow(task.task_id, task.kind, q, v, scenario=name) for q, v in values
        ]

    raise TypeError(f"not a task: {task!r}")


# --- serialization ---------------------------------------------------------------


def _format_number(value) -> str:
    if isinstance(value, int):
        return str(value)
    return format(value, ".17g")


def _format_complex(c: complex) -> str:
    return repr(c).strip("()")


def scenario_to_text(s: Scenario) -> str:
    """Serialize a scenario to its canonical textual form.

    Parsing the result yields a structurally identical scenario.
    """
    lines = ["[grid]"]
    lines.append(f"x_min = {_format_number(s.grid.x_min)}")
    lines.append(f"x_max = {_format_number(s.grid.x_max)}")
    lines.append(f"n_points = {s.grid.n_points}")
    lines.append("")
    lines.append("[units]")
    lines.append(f"hbar = {_format_number(s.units.hbar)}")
    lines.append("")
    lines.append("[output]")
    lines.append(f"format = {s.output_format}")

    for name, decl in s.states:
        lines.append("")
        lines.append(f"[state {name}]")
        if isinstance(decl, GaussianRecipe):
            lines.append("kind = gaussian")
            lines.append(f"x0 = {_format_number(decl.x0)}")
            lines.append(f"p0 = {_format_number(decl.p0)}")
            lines.append(f"sigma = {_format_number(decl.sigma)}")
        elif isinstance(decl, HarmonicRecipe):
            lines.append("kind = ho")
            lines.append(f"n = {decl.n}")
            lines.append(f"mass = {_format_number(decl.mass)}")
            lines.append(f"omega = {_format_number(decl.omega)}")
        elif isinstance(decl, SuperposeDecl):
            lines.append("kind = superpose")
            terms = ", ".join(
                f'"{_format_complex(c)} {ref}"' for c, ref in decl.terms
            )
            lines.append(f"terms = {terms}")
        else:
            raise TypeError(f"not a state declaration: {decl!r}")

    for name, decl in s.ensembles:
        lines.append("")
        lines.append(f"[ensemble {name}]")
        if decl.total is not None:
            lines.append(f"total = {decl.total}")
            counts = ", ".join(str(c) for c in decl.group_counts)
            lines.append(f"group_counts = {counts}")
            for k, group in enumerate(decl.groups, start=1):
                members = ", ".join(
                    f'"{int(w)} {ref}"' for w, ref in group.members
                )
                lines.append(f"group_{k} = {members}")
        else:
            weights = ", ".join(_format_number(g.weight) for g in decl.groups)
            lines.append(f"group_weights = {weights}")
            for k, group in enumerate(decl.groups, start=1):
                members = ", ".join(
                    f'"{_format_number(w)} {ref}"' for w, ref in group.members
                )
                lines.append(f"group_{k} = {members}")

    for task in s.tasks:
        lines.append("")
        lines.append("[task]")
        lines.append(f"id = {task.task_id}")
        lines.append(f"kind = {task.kind}")
        if isinstance(task, StatsTask):
            lines.append(f"state = {task.state}")
        elif isinstance(task, ClassifyTask):
            lines.append(f"target = {task.target}")
            if task.rel_tol is not None:
                lines.append(f"rel_tol = {_format_number(task.rel_tol)}")
        elif isinstance(task, FluctuationSampleTask):
            lines.append(f"source = {task.source}")
            lines.append(f"n = {task.n}")
            lines.append(f"seed = {task.seed}")
            if task.points_out is not None:
                lines.append(f'points_out = "{task.points_out}"')
        elif isinstance(task, CltStudyTask):
            micro = task.micro
            if isinstance(micro, Uniform):
                descr = f"uniform {_format_number(micro.a)} {_format_number(micro.b)}"
            elif isinstance(micro, TwoPoint):
                descr = f"twopoint {_format_number(micro.v1)} {_format_number(micro.v2)}"
            else:
                descr = f"exponential {_format_number(micro.rate)}"
            lines.append(f'micro = "{descr}"')
            lines.append("m_list = " + ", ".join(str(m) for m in task.m_list))
            lines.append(f"n = {task.n}")
            lines.append(f"seed = {task.seed}")
        elif isinstance(task, TimeWindowTask):
            lines.append(f"target = {task.target}")
            pot = task.potential
            if isinstance(pot, HarmonicPotential):
                descr = f"harmonic {_format_number(pot.mass)} {_format_number(pot.omega)}"
            elif isinstance(pot, FreeParticle):
                descr = f"free {_format_number(pot.mass)}"
            else:
                raise TypeError("tabulated potentials have no textual form")
            lines.append(f'potential = "{descr}"')
    lines.append("")
    return "\n".join(lines)


# --- report writers ---------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return _format_number(value)
    return str(value)


def write_csv(rows: Sequence[ReportRow], fh) -> None:
    """RFC-4180-style CSV with a header row and LF line endings."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for row in rows:
        writer.writerow([_cell(getattr(row, f)) for f in REPORT_FIELDS])


def _json_scalar(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, float):
        return _format_number(value)
    if isinstance(value, int):
        return str(value)
    return json.dumps(value)


def write_jsonl(rows: Sequence[ReportRow], fh) -> None:
    """One JSON object per row, fields in report order, floats at 17 digits."""
    for row in rows:
        parts = ", ".join(
            f"{json.dumps(f)}: {_json_scalar(getattr(row, f))}" for f in REPORT_FIELDS
        )
        fh.write("{" + parts + "}\n")
