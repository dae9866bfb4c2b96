"""Evaluation machinery: scenario registry, metrics, classification, reports.

Each run yields completion tokens, generation seconds, prompts used, and a
Successful / PartiallyCorrect / Unsuccessful label; aggregates carry
t-based 95% confidence intervals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from . import supply
from .geodesy import EnuPoint, GeoPoint, enu_from_geo
from .geolocation import BUILTIN_FIXTURES
from .llm import ReplayBackend
from .orchestrator import AppConfig, MissionOutcome, SessionManager
from .planner import path_length
from .supply import GroundUser

SUCCESSFUL = "Successful"
PARTIALLY_CORRECT = "PartiallyCorrect"
UNSUCCESSFUL = "Unsuccessful"

REPORT_SCHEMA = "fluc-bench-report/1"


class TooFew(ValueError):
    pass


# Two-sided 95% Student-t quantiles, t(0.975, df), df = 1..30.
_T_975 = [
    12.706, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622,
    2.2281, 2.2010, 2.1788, 2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009,
    2.0930, 2.0860, 2.0796, 2.0739, 2.0687, 2.0639, 2.0595, 2.0555, 2.0518,
    2.0484, 2.0452, 2.0423,
]
_T_975_LARGE = 1.96


@dataclass(frozen=True)
class Aggregate:
    mean: float
    ci95_half_width: float
    n: int


def t_quantile_975(df: int) -> float:
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    return _T_975[df - 1] if df <= len(_T_975) else _T_975_LARGE


def aggregate(values) -> Aggregate:
    """Mean with a 95% CI half-width (Student t, sample std dev)."""
    values = list(values)
    n = len(values)
    if n < 2:
        raise TooFew(f"need at least 2 values for a CI, got {n}")
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    half = t_quantile_975(n - 1) * math.sqrt(var) / math.sqrt(n)
    return Aggregate(mean=mean, ci95_half_width=half, n=n)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def classify(outcome: MissionOutcome, oracle: Callable[[MissionOutcome], bool]) -> str:
    """Map an outcome to its quality label.

    Successful: valid on the first prompt, compiled, and the goal oracle
    passes. PartiallyCorrect: a validated script existed but needed
    corrections or missed the goal. Unsuccessful: no validated script.
    """
    log = outcome.attempt_log
    if log.final_script is None:
        return UNSUCCESSFUL
    if log.prompts_used == 1 and outcome.trace is not None and oracle(outcome):
        return SUCCESSFUL
    return PARTIALLY_CORRECT


def classify_outcome_label(outcome: MissionOutcome) -> str:
    """Classification against the weakest oracle: the pipeline itself ran."""
    return classify(outcome, lambda o: o.trace is not None)


def classification_counts(labels) -> str:
    """Render Successful / Partial / Unsuccessful counts as "S / P / U"."""
    labels = list(labels)
    return " / ".join(str(labels.count(k))
                      for k in (SUCCESSFUL, PARTIALLY_CORRECT, UNSUCCESSFUL))


# ---------------------------------------------------------------------------
# Scenario registry
# ---------------------------------------------------------------------------

SCENARIO1_TARGET = GeoPoint(41.1783107, -8.591609, 17.0)
FEUP_FIXTURE = GeoPoint(BUILTIN_FIXTURES["feup"]["lat"], BUILTIN_FIXTURES["feup"]["lon"], 0.0)
DIAGONAL_DISTANCE_M = 200.0

SCENARIO4_WAYPOINTS = (
    EnuPoint(0.0, 100.0, 10.0),
    EnuPoint(100.0, 100.0, 10.0),
    EnuPoint(100.0, 0.0, 10.0),
    EnuPoint(50.0, 50.0, 30.0),
    EnuPoint(0.0, 50.0, 20.0),
)

SCENARIO5_OBSTACLE = {"cx": 50.0, "cy": 0.0, "radius": 10.0, "height": 50.0}
SCENARIO5_TARGET = EnuPoint(100.0, 0.0, 10.0)

SUPPLY_GUS = (
    GroundUser(x=25.0, y=50.0, z=0.0, traffic=200.0),
    GroundUser(x=50.0, y=50.0, z=0.0, traffic=200.0),
)


@dataclass(frozen=True)
class Scenario:
    id: str
    prompt: str
    oracle: Callable
    fixture_name: str


def _final(outcome: MissionOutcome):
    return outcome.trace[-1] if outcome.trace else None


def _horiz(a, e: EnuPoint) -> float:
    return math.hypot(a.east - e.east, a.north - e.north)


def oracle_s1(outcome: MissionOutcome, home: GeoPoint) -> bool:
    final = _final(outcome)
    if final is None:
        return False
    target = enu_from_geo(home, SCENARIO1_TARGET)
    return _horiz(final, target) <= 2.0 and abs(final.up - target.up) <= 1.0


def oracle_s2(outcome: MissionOutcome, home: GeoPoint) -> bool:
    final = _final(outcome)
    if final is None:
        return False
    target = enu_from_geo(home, FEUP_FIXTURE)
    return _horiz(final, target) <= 10.0


def oracle_s3(outcome: MissionOutcome, home: GeoPoint) -> bool:
    if not outcome.trace:
        return False
    final = outcome.trace[-1]
    norm = math.hypot(final.east, final.north)
    if abs(norm - DIAGONAL_DISTANCE_M) > 1.0:
        return False
    return all(abs(s.east - s.north) <= 1.0 for s in outcome.trace)


def oracle_s4(outcome: MissionOutcome, home: GeoPoint) -> bool:
    if not outcome.trace:
        return False
    samples = [EnuPoint(s.east, s.north, s.up) for s in outcome.trace]
    # 1 Hz sampling at 10 m/s puts samples up to ~5 m apart; allow the
    # acceptance radius plus half a sample interval of slack.
    visit_tol = 8.0
    # compare the cruise portion against the planner optimum: the takeoff
    # climb is not part of the ordering problem
    cruise = [EnuPoint(s.east, s.north, s.up) for s in outcome.trace
              if s.phase == "EnRoute"]
    for wp in SCENARIO4_WAYPOINTS:
        if min(math.dist((p.east, p.north, p.up), (wp.east, wp.north, wp.up))
               for p in samples) > visit_tol:
            return False
    optimum = _scenario4_optimum()
    return bool(cruise) and path_length(cruise) <= optimum + 1e-6


def _scenario4_optimum() -> float:
    from .planner import optimize_order
    start = EnuPoint(0.0, 0.0, 20.0)  # hover above home after default takeoff
    return optimize_order(start, list(SCENARIO4_WAYPOINTS)).total_length


def oracle_s5(outcome: MissionOutcome, home: GeoPoint) -> bool:
    if not outcome.trace:
        return False
    obs = SCENARIO5_OBSTACLE
    samples = [EnuPoint(s.east, s.north, s.up) for s in outcome.trace]
    for a, b in zip(samples, samples[1:]):
        seg = max(1, math.ceil(math.dist((a.east, a.north, a.up), (b.east, b.north, b.up)) / 0.5))
        for k in range(seg + 1):
            t = k / seg
            e = a.east + t * (b.east - a.east)
            n = a.north + t * (b.north - a.north)
            u = a.up + t * (b.up - a.up)
            if u <= obs["height"] and math.hypot(e - obs["cx"], n - obs["cy"]) < obs["radius"]:
                return False
    final = samples[-1]
    return _horiz(final, SCENARIO5_TARGET) <= 2.0


def oracle_supply(outcome: MissionOutcome, home: GeoPoint) -> bool:
    final = _final(outcome)
    if final is None:
        return False
    hover = EnuPoint(final.east, final.north, final.up)
    return all(entry.satisfied for entry in supply.qos_report(hover, SUPPLY_GUS))


SCENARIOS = {
    "1": Scenario(
        id="1",
        prompt="Go to 41.1783107 -8.591609 17",
        oracle=oracle_s1,
        fixture_name="scenario1.json"),
    "2": Scenario(
        id="2",
        prompt="Go to FEUP",
        oracle=oracle_s2,
        fixture_name="scenario2.json"),
    "3": Scenario(
        id="3",
        prompt="Fly in a straight diagonal line for 200 meters",
        oracle=oracle_s3,
        fixture_name="scenario3.json"),
    "4": Scenario(
        id="4",
        prompt=("Fly the most efficient path through these five waypoints "
                "(east, north, up in meters): (0, 100, 10), (100, 100, 10), "
                "(100, 0, 10), (50, 50, 30), (0, 50, 20)"),
        oracle=oracle_s4,
        fixture_name="scenario4.json"),
    "5": Scenario(
        id="5",
        prompt=("Fly to the point 100 meters east at 10 meters altitude while "
                "avoiding the cylindrical obstacle of radius 10 meters centered "
                "50 meters east of home"),
        oracle=oracle_s5,
        fixture_name="scenario5.json"),
    "supply": Scenario(
        id="supply",
        prompt=("Upload and start the mission for a UAV with 2 GUs, whose x are "
                "[25,50], y are [50,50], z are [0,0], and traffic [200,200]."),
        oracle=oracle_supply,
        fixture_name="supply.json"),
}


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchRecord:
    scenario: str
    model: str
    run: int
    tokens: int
    seconds: float
    final_attempt_seconds: float
    prompts: int
    label: str


def run_scenario(scenario_id: str, repetitions: int = 10,
                 fixtures_dir: Optional[str] = None,
                 backend_factory: Optional[Callable] = None,
                 model_id: str = "replay",
                 config: Optional[AppConfig] = None):
    """Run one scenario `repetitions` times, a fresh session per run.

    Fixture mode replays a recorded transcript; live mode builds a backend
    per run via `backend_factory`.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    scenario = SCENARIOS[str(scenario_id)]
    config = config or AppConfig()
    manager = SessionManager()
    records = []
    for run in range(1, repetitions + 1):
        if fixtures_dir is not None:
            backend = ReplayBackend(Path(fixtures_dir) / scenario.fixture_name,
                                    model_id=model_id)
        elif backend_factory is not None:
            backend = backend_factory()
        else:
            raise ValueError("either fixtures_dir or backend_factory is required")
        session = manager.create(config, backend=backend)
        outcome = session.handle_prompt(scenario.prompt)
        label = classify(outcome, lambda o: scenario.oracle(o, config.home))
        log = outcome.attempt_log
        final_latency = log.exchanges[-1].latency_s if log.exchanges else 0.0
        records.append(BenchRecord(
            scenario=scenario.id, model=model_id, run=run,
            tokens=log.completion_tokens_total,
            seconds=round(log.latency_total_s, 6),
            final_attempt_seconds=round(final_latency, 6),
            prompts=log.prompts_used, label=label))
    return records


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

CSV_COLUMNS = ["scenario", "model", "run", "tokens", "seconds", "prompts", "label"]


def _sorted_records(records):
    return sorted(records, key=lambda r: (r.scenario, r.model, r.run))


def render_csv(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in _sorted_records(records):
        writer.writerow([r.scenario, r.model, r.run, r.tokens, r.seconds,
                         r.prompts, r.label])
    return out.getvalue()


def render_json(records) -> str:
    records = _sorted_records(records)
    groups = {}
    for r in records:
        groups.setdefault((r.scenario, r.model), []).append(r)
    aggregates = []
    for (scenario, model), rs in sorted(groups.items()):
        entry = {"scenario": scenario, "model": model, "n": len(rs),
                 "classification": classification_counts(r.label for r in rs)}
        for metric in ("tokens", "seconds", "prompts"):
            values = [getattr(r, metric) for r in rs]
            if len(values) >= 2:
                agg = aggregate(values)
                entry[metric] = {"mean": round(agg.mean, 6),
                                 "ci95": round(agg.ci95_half_width, 6)}
            else:
                entry[metric] = {"mean": float(values[0]), "ci95": None}
        aggregates.append(entry)
    doc = {
        "schema": REPORT_SCHEMA,
        "records": [{
            "scenario": r.scenario, "model": r.model, "run": r.run,
            "tokens": r.tokens, "seconds": r.seconds,
            "final_attempt_seconds": r.final_attempt_seconds,
            "prompts": r.prompts, "label": r.label,
        } for r in records],
        "aggregates": aggregates,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def read_json_report(text: str):
    doc = json.loads(text)
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unknown report schema {doc.get('schema')!r}")
    return [BenchRecord(scenario=r["scenario"], model=r["model"], run=r["run"],
                        tokens=r["tokens"], seconds=r["seconds"],
                        final_attempt_seconds=r["final_attempt_seconds"],
                        prompts=r["prompts"], label=r["label"])
            for r in doc["records"]]


def write_report(records, path, fmt: str = "csv"):
    if not records:
        raise ValueError("no records to report")
    path = Path(path)
    if fmt == "csv":
        path.write_text(render_csv(records), encoding="utf-8")
    elif fmt == "json":
        path.write_text(render_json(records), encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path
