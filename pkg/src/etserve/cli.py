"""Command-line front end.

    etserve gen    --n 8 --u 0.4 --seed 7 --out ts.json
    etserve sched  --in ts.json --algo proposed --out sol.json
    etserve config --in sol.json --out prog.json
    etserve isa encode --in prog.json --kernel --out prog.bin --sidecar prog.side.json
    etserve isa decode --in prog.bin
    etserve sim    --in prog.json --pr 0.3 --pe 0.5 --out trace.jsonl
    etserve bench  --u 0.2 0.4 0.6 --systems 100 --out sweep.csv

Exit status: 0 success, 1 infeasible (a valid answer), 2 usage error,
3 bad input data.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import isa, serialize
from .bench.generate import defect_plan, generate_system
from .bench.metrics import compute_metrics
from .bench.sweep import (ALGORITHMS, DEFAULT_SEED, VARIANTS, make_grid, read_grid, run_sweep,
                          schedule_with, sim_servers, to_csv)
from .ets import finalize
from .model import HyperperiodOverflow, expand_hyperperiod
from .schedule import ScheduleSolution
from .sim import LoadError, SimConfig, load_program, run, servers_from_program

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3

log = logging.getLogger("etserve")


class Infeasible(Exception):
    pass


def _seed(text: str | None) -> int:
    if text is None:
        env = os.environ.get("ETSERVE_SEED")
        return int(env) if env else DEFAULT_SEED
    if text == "now":
        return time.time_ns() & (2**64 - 1)
    return int(text)


def _seed_arg(text: str) -> str:
    if text != "now":
        try:
            int(text)
        except ValueError:
            raise argparse.ArgumentTypeError("seed must be an integer or 'now'") from None
    return text


def _read_text(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write(path: str | None, data: str | bytes) -> None:
    if path is None or path == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    if isinstance(data, bytes):
        Path(path).write_bytes(data)
    else:
        Path(path).write_text(data)


# ---------------------------------------------------------------- subcommands

def cmd_gen(args) -> int:
    n = args.n if args.n is not None else max(1, round(args.u / 0.05))
    ts = generate_system(n, args.u, _seed(args.seed))
    _write(args.out, serialize.dumps(serialize.taskset_to_dict(ts)))
    return EXIT_OK


def cmd_sched(args) -> int:
    ts = serialize.taskset_from_dict(serialize.loads(_read_text(args.inp), "taskset"))
    sol = schedule_with(args.algo, ts)
    _write(args.out, serialize.dumps(serialize.schedule_to_dict(sol, ts)))
    if not sol.feasible:
        raise Infeasible(f"no feasible schedule; first unplaced job {sol.unplaced}")
    return EXIT_OK


def cmd_config(args) -> int:
    sol, ts = serialize.schedule_from_dict(serialize.loads(_read_text(args.inp), "schedule"))
    if not sol.feasible:
        raise Infeasible("schedule is marked infeasible; nothing to configure")
    prog = finalize(sol)
    _write(args.out, serialize.dumps(serialize.program_to_dict(prog, ts)))
    return EXIT_OK


def _instructions_from(text: str) -> tuple[list[isa.Instruction], list[dict] | None]:
    if text.lstrip().startswith("{"):
        prog, _ = serialize.program_from_dict(serialize.loads(text, "program"))
        return isa.assemble_program(prog)
    return isa.parse_listing(text), None


def cmd_isa_encode(args) -> int:
    instructions, sidecar = _instructions_from(_read_text(args.inp))
    for n, ins in enumerate(instructions):
        if ins.kernel and not args.kernel:
            raise LoadError(f"instruction {n} ({isa.to_asm(ins)}) is privileged; pass --kernel")
    _write(args.out, isa.pack_words([isa.encode(i) for i in instructions]))
    if args.sidecar:
        if sidecar is None:
            raise serialize.DataError("a sidecar needs a program file as input")
        _write(args.sidecar, serialize.dumps({"jobs": sidecar}))
    return EXIT_OK


def cmd_isa_decode(args) -> int:
    data = sys.stdin.buffer.read() if args.inp in (None, "-") else Path(args.inp).read_bytes()
    _write(args.out, isa.listing(isa.decode(w) for w in isa.unpack_words(data)))
    return EXIT_OK


def cmd_sim(args) -> int:
    doc = serialize.loads(_read_text(args.inp), "input")
    if isinstance(doc, dict) and "robustness" in doc:
        prog, ts = serialize.program_from_dict(doc)
        servers, hp = servers_from_program(prog), prog.hyperperiod
        sol = ScheduleSolution([], hp)
    else:
        sol, ts = serialize.schedule_from_dict(doc)
        if not sol.feasible:
            raise Infeasible("schedule is marked infeasible; nothing to simulate")
        servers, hp = sim_servers(sol.algorithm, sol), sol.hyperperiod
    if args.stream:
        if not args.sidecar:
            raise serialize.DataError("--stream needs --sidecar")
        words = isa.unpack_words(Path(args.stream).read_bytes())
        sidecar = serialize.loads(Path(args.sidecar).read_text(), "sidecar")
        if isinstance(sidecar, dict):
            sidecar = sidecar.get("jobs", [])
        servers = load_program(words, sidecar, ts, kernel=args.kernel)
    jobs = expand_hyperperiod(ts)
    plan = defect_plan(jobs, args.pr, args.pe, _seed(args.seed))
    trace = run(SimConfig(tuple(servers), ts, hp, plan, args.horizon))
    _write(args.out, trace.jsonl())
    if args.timeline:
        sys.stderr.write(trace.timeline())
    m = compute_metrics(trace, ts, sol)
    print(json.dumps({"algorithm": sol.algorithm, "jobs": len(trace.records), "met": trace.met,
                      "acceptance": m.acceptance, "exact_fraction": m.exact_fraction,
                      "norm_quality": m.norm_quality}, sort_keys=True),
          file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_bench(args) -> int:
    seed = _seed(args.seed)
    if args.config:
        grid = read_grid(Path(args.config).read_text())
    else:
        algos = args.algo or list(ALGORITHMS)
        grid = make_grid(args.u or [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8], algos,
                         args.pr or [0.0], args.pe or [0.0], args.systems, seed, args.n)
    rows = run_sweep(grid, workers=args.workers)
    _write(args.out, to_csv(rows))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="etserve", description="ETS-based timing-accurate I/O scheduling")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def io(sp, need_in=True):
        sp.add_argument("--in", dest="inp", required=need_in, help="input file ('-' for stdin)")
        sp.add_argument("--out", help="output file (default stdout)")

    def seed(sp):
        sp.add_argument("--seed", type=_seed_arg,
                        help=f"integer or 'now' (default $ETSERVE_SEED or {DEFAULT_SEED})")

    sp = sub.add_parser("gen", help="generate a random task set")
    io(sp, need_in=False)
    seed(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--u", type=float, default=0.4)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("sched", help="schedule one hyperperiod")
    io(sp)
    sp.add_argument("--algo", choices=ALGORITHMS + VARIANTS, default="proposed")
    sp.set_defaults(func=cmd_sched)

    sp = sub.add_parser("config", help="derive server parameters from a schedule")
    io(sp)
    sp.set_defaults(func=cmd_config)

    sp = sub.add_parser("isa", help="instruction stream encode/decode")
    isub = sp.add_subparsers(dest="isa_command", required=True)
    enc = isub.add_parser("encode", help="program JSON or assembly text -> binary stream")
    io(enc)
    enc.add_argument("--kernel", action="store_true", help="allow privileged (c-type) instructions")
    enc.add_argument("--sidecar", help="where to write the start-offset sidecar")
    enc.set_defaults(func=cmd_isa_encode)
    dec = isub.add_parser("decode", help="binary stream -> assembly text")
    io(dec)
    dec.set_defaults(func=cmd_isa_decode)

    sp = sub.add_parser("sim", help="simulate a program or schedule")
    io(sp)
    seed(sp)
    sp.add_argument("--pr", type=float, default=0.0)
    sp.add_argument("--pe", type=float, default=0.0)
    sp.add_argument("--horizon", type=int)
    sp.add_argument("--stream", help="configure from a binary stream instead")
    sp.add_argument("--sidecar", help="sidecar written by 'isa encode'")
    sp.add_argument("--kernel", action="store_true")
    sp.add_argument("--timeline", action="store_true", help="per-tick dump on stderr")
    sp.set_defaults(func=cmd_sim)

    sp = sub.add_parser("bench", help="schedulability / robustness sweep to CSV")
    sp.add_argument("--out")
    sp.add_argument("--config", help="INI grid file; overrides the grid flags")
    seed(sp)
    sp.add_argument("--algo", nargs="+", choices=ALGORITHMS + VARIANTS)
    sp.add_argument("--u", nargs="+", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--pr", nargs="+", type=float)
    sp.add_argument("--pe", nargs="+", type=float)
    sp.add_argument("--systems", type=int, default=1000)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (serialize.DataError, isa.EncodingError, isa.DecodingError, LoadError,
            HyperperiodOverflow, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
