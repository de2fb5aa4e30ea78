"""JSON files for task sets, schedules and server programs.

Schedules and programs embed the task set they were computed from, so each
file is self-contained.  Readers raise :class:`DataError` with the path of
the offending field.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

import jsonschema

from .ets import EtsProgram, EtsServer
from .model import (TaskSet, TaskSpec, TimingAccuracyModel, expand_hyperperiod,
                    validate_taskset)
from .schedule import Placement, ScheduleSolution, ServerDraft

TICK_MS = 1


class DataError(ValueError):
    pass


_INT = {"type": "integer"}
_NUM = {"type": "number"}

_MODEL = {
    "type": "object",
    "required": ["shape", "v_max"],
    "properties": {
        "shape": {"enum": ["symmetric-linear", "spike", "right-sided-linear", "asymmetric-linear"]},
        "v_max": _NUM, "v_min": _NUM, "w": _INT, "w_l": _INT, "w_r": _INT,
    },
    "additionalProperties": False,
}

_TASKSET = {
    "type": "object",
    "required": ["tasks"],
    "properties": {
        "tick_ms": _NUM,
        "tasks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "wcet", "period", "ideal_offset", "model"],
                "properties": {"id": _INT, "wcet": _INT, "period": _INT, "deadline": _INT,
                               "ideal_offset": _INT, "model": _MODEL},
                "additionalProperties": False,
            },
        },
    },
}

_JOBS = {
    "type": "array",
    "items": {"type": "object", "required": ["task", "j", "theta"],
              "properties": {"task": _INT, "j": _INT, "theta": _INT}},
}

_SCHEDULE = {
    "type": "object",
    "required": ["feasible", "servers", "taskset"],
    "properties": {
        "algorithm": {"type": "string"},
        "feasible": {"type": "boolean"},
        "hyperperiod": _INT,
        "servers": {
            "type": "array",
            "items": {"type": "object", "required": ["kind", "alpha", "lambda", "jobs"],
                      "properties": {"kind": {"enum": ["exact", "quality"]}, "alpha": _INT,
                                     "lambda": _INT, "jobs": _JOBS}},
        },
        "taskset": {"type": "object"},
    },
}

_SERVER_FIELDS = ("index", "alpha", "lambda_init", "upsilon", "psi", "omega",
                  "lambda_final", "window_end", "priority", "period")

_PROGRAM = {
    "type": "object",
    "required": ["hyperperiod", "robustness", "servers", "taskset"],
    "properties": {
        "hyperperiod": _INT,
        "robustness": _INT,
        "servers": {
            "type": "array",
            "items": {"type": "object", "required": [*_SERVER_FIELDS, "kind", "jobs"],
                      "properties": {**{f: _INT for f in _SERVER_FIELDS},
                                     "kind": {"enum": ["exact", "quality"]}, "jobs": _JOBS}},
        },
        "taskset": {"type": "object"},
    },
}


def _where(err: jsonschema.ValidationError) -> str:
    path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return path.lstrip(".") or "<root>"


def _check(doc: Any, schema: dict, what: str) -> None:
    err = jsonschema.exceptions.best_match(jsonschema.Draft7Validator(schema).iter_errors(doc))
    if err is not None:
        raise DataError(f"{what}: {_where(err)}: {err.message}")


def loads(text: str, what: str = "input") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{what}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------- task sets

def model_to_dict(m: TimingAccuracyModel) -> dict:
    out: dict[str, Any] = {"shape": m.shape.value, "v_max": m.v_max, "v_min": m.v_min}
    if m.shape.value == "symmetric-linear":
        out["w"] = m.w
    elif m.shape.value == "right-sided-linear":
        out["w_r"] = m.w_r
    elif m.shape.value == "asymmetric-linear":
        out["w_l"], out["w_r"] = m.w_l, m.w_r
    return out


def taskset_to_dict(ts: TaskSet) -> dict:
    tasks = []
    for t in ts:
        d = {"id": t.id, "wcet": t.wcet, "period": t.period}
        if t.deadline != t.period:
            d["deadline"] = t.deadline
        d["ideal_offset"] = t.ideal_offset
        d["model"] = model_to_dict(t.model)
        tasks.append(d)
    return {"tick_ms": TICK_MS, "tasks": tasks}


def taskset_from_dict(doc: Any, what: str = "taskset") -> TaskSet:
    _check(doc, _TASKSET, what)
    tasks = []
    for d in doc["tasks"]:
        m = d["model"]
        model = TimingAccuracyModel(m["shape"], m["v_max"], m.get("v_min", 0),
                                    w=m.get("w", 1), w_l=m.get("w_l", 1), w_r=m.get("w_r", 1))
        tasks.append(TaskSpec(d["id"], d["wcet"], d["period"], d["ideal_offset"], model,
                              d.get("deadline")))
    ts = TaskSet(tasks)
    problems = validate_taskset(ts)
    if problems:
        raise DataError(f"{what}: " + "; ".join(map(str, problems)))
    return ts


# ---------------------------------------------------------------- schedules

def _jobs_doc(placements) -> list[dict]:
    return [{"task": p.job.task, "j": p.job.j, "theta": p.theta}
            for p in sorted(placements, key=lambda p: p.theta)]


def schedule_to_dict(sol: ScheduleSolution, ts: TaskSet) -> dict:
    doc: dict[str, Any] = {"algorithm": sol.algorithm, "feasible": sol.feasible,
                           "hyperperiod": sol.hyperperiod}
    if sol.unplaced is not None:
        doc["unplaced"] = {"task": sol.unplaced.task, "j": sol.unplaced.j}
    doc["servers"] = [{"kind": s.kind, "alpha": s.alpha, "lambda": s.lam,
                       "jobs": _jobs_doc(s.placements)} for s in sol.servers]
    doc["taskset"] = taskset_to_dict(ts)
    return doc


def _placements(jobs_doc, by_key: Mapping, where: str) -> list[Placement]:
    out = []
    for n, d in enumerate(jobs_doc):
        key = (d["task"], d["j"])
        if key not in by_key:
            raise DataError(f"{where}.jobs[{n}]: no job {key} in the embedded task set")
        out.append(Placement(by_key[key], d["theta"]))
    return out


def schedule_from_dict(doc: Any, what: str = "schedule") -> tuple[ScheduleSolution, TaskSet]:
    _check(doc, _SCHEDULE, what)
    ts = taskset_from_dict(doc["taskset"], f"{what}: taskset")
    by_key = {j.key: j for j in expand_hyperperiod(ts)}
    servers = [ServerDraft(s["kind"], s["alpha"], s["lambda"],
                           _placements(s["jobs"], by_key, f"servers[{k}]"))
               for k, s in enumerate(doc["servers"])]
    unplaced = None
    if "unplaced" in doc:
        unplaced = by_key.get((doc["unplaced"]["task"], doc["unplaced"]["j"]))
    hp = doc.get("hyperperiod", ts.hyperperiod)
    sol = ScheduleSolution(servers, hp, doc["feasible"], unplaced, doc.get("algorithm", "proposed"))
    return sol, ts


# ---------------------------------------------------------------- programs

def program_to_dict(prog: EtsProgram, ts: TaskSet) -> dict:
    servers = []
    for s in prog.servers:
        d = {f: getattr(s, f) for f in _SERVER_FIELDS}
        d["kind"] = s.kind
        d["jobs"] = _jobs_doc(s.placements)
        servers.append(d)
    return {"hyperperiod": prog.hyperperiod, "robustness": prog.robustness,
            "servers": servers, "taskset": taskset_to_dict(ts)}


def program_from_dict(doc: Any, what: str = "program") -> tuple[EtsProgram, TaskSet]:
    _check(doc, _PROGRAM, what)
    ts = taskset_from_dict(doc["taskset"], f"{what}: taskset")
    by_key = {j.key: j for j in expand_hyperperiod(ts)}
    servers = []
    for k, s in enumerate(doc["servers"]):
        placements = tuple(_placements(s["jobs"], by_key, f"servers[{k}]"))
        servers.append(EtsServer(kind=s["kind"], placements=placements,
                                 **{f: s[f] for f in _SERVER_FIELDS}))
    return EtsProgram(tuple(servers), doc["hyperperiod"], doc["robustness"]), ts
