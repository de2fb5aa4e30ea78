import json
import random

import pytest

from etserve import isa
from etserve.bench.generate import defect_plan, generate_system, inflate
from etserve.ets import finalize
from etserve.model import TaskSet, TaskSpec, expand_hyperperiod
from etserve.schedule import EXACT, schedule_proposed
from etserve.sim import (Coprocessor, LoadError, PrivilegeError, SimConfig, SimJob, SimServer,
                         load_program, run, servers_from_program, simulate_program)

from conftest import sym


def w_program(w_tasks):
    return finalize(schedule_proposed(w_tasks))


def dispatches(trace):
    return {(r.task, r.j): (r.dispatch, r.finish, r.terminated, r.met) for r in trace.records}


# ---------------------------------------------------------------- reference stepper

def tick_reference(servers, durations, horizon):
    """One decision per tick, written straight from the behavioural rules."""
    pending = [sorted(s.jobs, key=lambda j: j.prio) for s in servers]
    running = None          # [pos, job, start, remaining]
    out = {}
    for t in range(horizon + 1):
        if running and running[3] == 0:
            pos, job, start, _ = running
            out[job.key] = (start, t, None, t <= job.deadline)
            running = None
        for pos, s in enumerate(servers):
            if s.window_end == t:
                if running and running[0] == pos:
                    out[running[1].key] = (running[2], None, t, False)
                    running = None
                for job in pending[pos]:
                    out[job.key] = (None, None, t, False)
                pending[pos] = []
        if t == horizon:
            break
        if running is None:
            for pos in sorted(range(len(servers)), key=lambda p: servers[p].priority):
                s = servers[pos]
                ready = [j for j in pending[pos] if max(j.release, j.theta) <= t]
                if s.alpha <= t < s.window_end and ready:
                    job = ready[0]
                    pending[pos].remove(job)
                    running = [pos, job, t, durations.get(job.key, job.wcet)]
                    break
        if running:
            running[3] -= 1
    for pos in range(len(servers)):
        if running and running[0] == pos:
            out[running[1].key] = (running[2], None, horizon, False)
            running = None
        for job in pending[pos]:
            out[job.key] = (None, None, horizon, False)
    return out


# ---------------------------------------------------------------- worked instance

def test_defect_free_run(w_tasks):
    trace = simulate_program(w_program(w_tasks), w_tasks)
    assert dispatches(trace) == {(1, 1): (1, 3, None, True), (2, 1): (3, 5, None, True),
                                 (1, 2): (7, 9, None, True)}
    assert sum(r.dispatch == r.ideal for r in trace.records) == 2


def test_overrun_absorbed_by_extended_window(w_tasks):
    trace = simulate_program(w_program(w_tasks), w_tasks, {(1, 1): 4})
    assert dispatches(trace) == {(1, 1): (1, 5, None, True), (2, 1): (5, 7, None, True),
                                 (1, 2): (7, 9, None, True)}


def test_long_overrun_is_terminated(w_tasks):
    prog = w_program(w_tasks)
    trace = simulate_program(prog, w_tasks, {(1, 1): 8})
    got = dispatches(trace)
    assert got[(1, 1)] == (1, None, 8, False)
    assert got[(2, 1)] == (8, 10, None, True)
    assert got[(1, 2)] == (10, 12, None, True)
    ref = tick_reference(servers_from_program(prog), {(1, 1): 8}, 12)
    assert got == ref


def test_quality_of_completed_and_failed_jobs(w_tasks):
    trace = simulate_program(w_program(w_tasks), w_tasks, {(1, 1): 8})
    q = {(r.task, r.j): r.quality for r in trace.records}
    assert q[(1, 1)] == 0.0
    assert q[(2, 1)] == 0.0   # starts at 8 (offset 8, 6 late, w=4 -> floor 0)
    assert q[(1, 2)] == pytest.approx(10 - 10 * 3 / 4)


def test_multiple_hyperperiods(w_tasks):
    trace = simulate_program(w_program(w_tasks), w_tasks, horizon=24)
    assert len(trace.records) == 6 and all(r.met for r in trace.records)
    assert sorted(r.dispatch for r in trace.records) == [1, 3, 7, 13, 15, 19]


# ---------------------------------------------------------------- selection rules

def test_gse_and_lse(w_tasks):
    cpu = Coprocessor(SimConfig(servers_from_program(w_program(w_tasks)), w_tasks, 12))
    assert cpu.gse_select(0) is None
    assert cpu.gse_select(1) == 0
    job = cpu.lse_select(0, 1)
    cpu._dispatch(0, job, 1)
    assert cpu.gse_select(2) == 0 and cpu.lse_select(0, 2) is job
    cpu._complete(3)
    assert cpu.gse_select(3) == 1   # server 0 drained, still open until 8


def test_eligibility_gates_dispatch():
    j = SimJob(0, 1, release=0, deadline=20, wcet=1, ideal=3, theta=3, prio=0)
    ts = TaskSet([TaskSpec(0, 1, 20, 3, sym(1, 1))])
    cpu = Coprocessor(SimConfig((SimServer(0, 0, 20, 0, (j,)),), ts, 20))
    assert cpu.lse_select(0, 2) is None
    assert cpu.lse_select(0, 5) == j


def test_all_windows_closed_is_idle(w_tasks):
    cpu = Coprocessor(SimConfig(servers_from_program(w_program(w_tasks)), w_tasks, 12))
    assert cpu.gse_select(12) is None


# ---------------------------------------------------------------- configuration

def test_config_validation(w_tasks):
    servers = servers_from_program(w_program(w_tasks))
    with pytest.raises(LoadError, match="unknown job"):
        SimConfig(servers, w_tasks, 12, {(9, 9): 3})
    with pytest.raises(LoadError, match=">= 1"):
        SimConfig(servers, w_tasks, 12, {(1, 1): 0})


def test_load_worked_stream(w_tasks):
    prog = w_program(w_tasks)
    stream, sidecar = isa.assemble_program(prog)
    words = [isa.encode(i) for i in stream]
    servers = load_program(words, sidecar, w_tasks, kernel=True)
    assert [[j.key for j in s.jobs] for s in servers] == [[(1, 1)], [(2, 1)], [(1, 2)]]
    assert servers == servers_from_program(prog)


def test_user_mode_configuration_refused(w_tasks):
    stream, sidecar = isa.assemble_program(w_program(w_tasks))
    with pytest.raises(PrivilegeError):
        load_program(stream, sidecar, w_tasks)


def test_load_to_unconfigured_server(w_tasks):
    stream, sidecar = isa.assemble_program(w_program(w_tasks))
    stream = stream[:6] + [isa.PLd(5, 1, 2, 0)]
    with pytest.raises(LoadError, match="S5"):
        load_program(stream, [{"tid": 1, "j": 1, "server": 5, "theta": 1}], w_tasks, kernel=True)


def test_sidecar_mismatch(w_tasks):
    stream, sidecar = isa.assemble_program(w_program(w_tasks))
    with pytest.raises(LoadError, match="does not match"):
        load_program(stream, sidecar[::-1], w_tasks, kernel=True)
    with pytest.raises(LoadError, match="more entries"):
        load_program(stream, sidecar + sidecar[:1], w_tasks, kernel=True)


def test_trace_outputs(w_tasks):
    trace = simulate_program(w_program(w_tasks), w_tasks, {(1, 1): 8})
    lines = [json.loads(x) for x in trace.jsonl().splitlines()]
    assert lines[0] == {"task": 1, "j": 1, "server": 0, "dispatch": 1, "terminated": 8,
                        "met": False, "quality": 0.0}
    assert "finish" in lines[1] and "terminated" not in lines[1]
    rows = trace.timeline().splitlines()
    assert len(rows) == 12 and rows[0] == "0\tidle" and rows[1] == "1\tS0 tau1^1"


# ---------------------------------------------------------------- invariants on random systems

def random_cases(count, seed):
    rng = random.Random(seed)
    while count:
        ts = generate_system(rng.randint(2, 10), rng.uniform(0.1, 0.5), rng.getrandbits(32))
        sol = schedule_proposed(ts)
        if sol.feasible:
            count -= 1
            yield rng, ts, finalize(sol)


def test_matches_tick_reference_under_defects():
    for rng, ts, prog in random_cases(25, 1):
        jobs = expand_hyperperiod(ts)
        plan = defect_plan(jobs, rng.uniform(0, 0.6), rng.choice([0.5, 1.0, 3.0]), rng.getrandbits(32))
        servers = servers_from_program(prog)
        trace = run(SimConfig(servers, ts, prog.hyperperiod, plan))
        assert dispatches(trace) == tick_reference(servers, plan, prog.hyperperiod)


def test_defect_free_conformance_and_isolation():
    for _, ts, prog in random_cases(30, 2):
        trace = simulate_program(prog, ts)
        theta = {p.job.key: p.theta for s in prog.servers for p in s.placements}
        for r in trace.records:
            assert r.met and r.dispatch == theta[(r.task, r.j)]
        for s in prog.servers:
            if s.kind == EXACT:
                (p,) = s.placements
                assert p.theta == p.job.ideal
        windows = {s.index: (s.alpha, s.window_end) for s in prog.servers}
        for idx, spans in trace.busy.items():
            for start, end, _ in spans:
                assert windows[idx][0] <= start and end <= windows[idx][1]


def test_each_job_runs_in_one_piece():
    for rng, ts, prog in random_cases(15, 3):
        plan = defect_plan(expand_hyperperiod(ts), 0.5, 1.0, rng.getrandbits(32))
        trace = simulate_program(prog, ts, plan)
        spans = [x for v in trace.busy.values() for x in v]
        assert len({key for _, _, key in spans}) == len(spans)
        ordered = sorted(spans)
        assert all(a[1] <= b[0] for a, b in zip(ordered, ordered[1:]))
        for r in trace.records:
            if r.finish is not None:
                assert r.finish - r.dispatch == r.duration


def test_larger_overruns_never_help():
    for rng, ts, prog in random_cases(15, 4):
        jobs = expand_hyperperiod(ts)
        seed = rng.getrandbits(32)
        met = [simulate_program(prog, ts, defect_plan(jobs, 0.3, pe, seed)).met
               for pe in (0.0, 0.4, 0.8, 1.6, 3.0)]
        assert met == sorted(met, reverse=True)


def test_runs_are_deterministic():
    for rng, ts, prog in random_cases(5, 5):
        plan = defect_plan(expand_hyperperiod(ts), 0.3, 0.5, 99)
        a = simulate_program(prog, ts, plan)
        b = simulate_program(prog, ts, plan)
        assert a.jsonl() == b.jsonl() and a.busy == b.busy


def test_shifted_server():
    s = SimServer(0, 4, 10, 0, (SimJob(0, 1, 0, 20, 2, 4, 4, 0),))
    t = s.shifted(3)
    assert (t.alpha, t.window_end, t.jobs[0].theta, t.jobs[0].release) == (7, 13, 7, 0)


def test_inflate_is_exact():
    assert inflate(2, 0.5) == 3
    assert inflate(10, 0.1) == 11     # float 10*1.1 would round up to 12
    assert inflate(3, 0.0) == 3
