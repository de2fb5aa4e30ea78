import json

import pytest

from etserve import serialize
from etserve.bench.generate import generate_system
from etserve.ets import finalize
from etserve.model import Shape, TaskSet, TaskSpec, TimingAccuracyModel
from etserve.schedule import schedule_proposed
from etserve.serialize import DataError

from conftest import sym


def test_taskset_round_trip(w_tasks):
    doc = serialize.taskset_to_dict(w_tasks)
    assert doc["tick_ms"] == 1
    assert doc["tasks"][0] == {"id": 1, "wcet": 2, "period": 6, "ideal_offset": 1,
                               "model": {"shape": "symmetric-linear", "v_max": 10, "v_min": 0, "w": 4}}
    assert serialize.taskset_from_dict(json.loads(serialize.dumps(doc))) == w_tasks


def test_every_shape_round_trips():
    models = [TimingAccuracyModel(Shape.SPIKE, 5, 1),
              TimingAccuracyModel(Shape.RIGHT_SIDED, 5, 1, w_r=3),
              TimingAccuracyModel(Shape.ASYMMETRIC, 5, 1, w_l=2, w_r=7)]
    ts = TaskSet([TaskSpec(i, 1, 10, 2, m) for i, m in enumerate(models)]
                 + [TaskSpec(9, 2, 10, 0, sym(3, 2))])
    assert serialize.taskset_from_dict(serialize.taskset_to_dict(ts)) == ts


def test_generated_sets_round_trip():
    for seed in range(10):
        ts = generate_system(10, 0.5, seed)
        assert serialize.taskset_from_dict(serialize.taskset_to_dict(ts)) == ts


def test_schema_error_names_the_field(w_tasks):
    doc = serialize.taskset_to_dict(w_tasks)
    doc["tasks"][1]["wcet"] = "two"
    with pytest.raises(DataError, match=r"tasks\[1\]\.wcet"):
        serialize.taskset_from_dict(doc)


def test_unknown_shape_rejected(w_tasks):
    doc = serialize.taskset_to_dict(w_tasks)
    doc["tasks"][0]["model"]["shape"] = "gaussian"
    with pytest.raises(DataError, match="shape"):
        serialize.taskset_from_dict(doc)


def test_semantic_violation_rejected(w_tasks):
    doc = serialize.taskset_to_dict(w_tasks)
    doc["tasks"][0]["ideal_offset"] = 5
    with pytest.raises(DataError, match="ideal_offset"):
        serialize.taskset_from_dict(doc)


def test_bad_json_reports_position():
    with pytest.raises(DataError, match="line 2 column"):
        serialize.loads('{"tasks":\n ]', "taskset")


def test_schedule_round_trip(w_tasks):
    sol = schedule_proposed(w_tasks)
    doc = serialize.schedule_to_dict(sol, w_tasks)
    assert [(s["kind"], s["alpha"], s["lambda"]) for s in doc["servers"]] == [
        ("quality", 0, 1), ("exact", 1, 2), ("quality", 3, 4), ("exact", 7, 2), ("quality", 9, 3)]
    back, ts = serialize.schedule_from_dict(json.loads(serialize.dumps(doc)))
    assert ts == w_tasks and back.feasible and back.hyperperiod == 12
    assert [(s.kind, s.alpha, s.lam, s.placements) for s in back.servers] == \
           [(s.kind, s.alpha, s.lam, s.placements) for s in sol.servers]


def test_infeasible_schedule_keeps_unplaced_job():
    ts = TaskSet([TaskSpec(0, 3, 4, 0, sym(1, 1)), TaskSpec(1, 2, 4, 0, sym(1, 1))])
    sol = schedule_proposed(ts)
    back, _ = serialize.schedule_from_dict(serialize.schedule_to_dict(sol, ts))
    assert not back.feasible and back.unplaced == sol.unplaced


def test_schedule_with_unknown_job(w_tasks):
    doc = serialize.schedule_to_dict(schedule_proposed(w_tasks), w_tasks)
    doc["servers"][1]["jobs"][0]["j"] = 7
    with pytest.raises(DataError, match=r"servers\[1\]\.jobs\[0\]"):
        serialize.schedule_from_dict(doc)


def test_program_round_trip(w_tasks):
    prog = finalize(schedule_proposed(w_tasks))
    doc = serialize.program_to_dict(prog, w_tasks)
    assert doc["robustness"] == 3
    assert doc["servers"][0]["window_end"] == 8 and doc["servers"][0]["kind"] == "exact"
    back, ts = serialize.program_from_dict(json.loads(serialize.dumps(doc)))
    assert back == prog and ts == w_tasks


def test_program_missing_field(w_tasks):
    doc = serialize.program_to_dict(finalize(schedule_proposed(w_tasks)), w_tasks)
    del doc["servers"][2]["omega"]
    with pytest.raises(DataError, match="omega"):
        serialize.program_from_dict(doc)
