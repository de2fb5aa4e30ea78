"""Co-processor instruction words, assembly text and SRAM addressing.

Word layout (bit 0 is the LSB)::

    [1:0]   class      00 c-type, 01 p-type, 10 i-type, 11 reserved
    [8:2]   tid        7 bits (zero for c-type and checked on decode)
    [11:9]  ets        3 bits
    [31:12] service    20 bits

    c-type service: [31] 0=set 1=enr, [30:12] 19-bit budget/start
    p/i-type:       [31] 0=ld (i-type: 1=run), [30:26] plen-1, [25:12] prio

``i.run`` carries only a tid; all other fields must be zero.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .ets import EtsProgram

CLASS_C, CLASS_P, CLASS_I, CLASS_RESERVED = 0, 1, 2, 3

ETS_BITS, TID_BITS, VALUE_BITS, PLEN_MAX, PRIO_BITS = 3, 7, 19, 32, 14
MAX_ETS = (1 << ETS_BITS) - 1
MAX_TID = (1 << TID_BITS) - 1
MAX_VALUE = (1 << VALUE_BITS) - 1
MAX_PRIO = (1 << PRIO_BITS) - 1


class EncodingError(ValueError):
    pass


class DecodingError(ValueError):
    pass


@dataclass(frozen=True)
class CSet:
    ets: int
    budget: int
    kernel = True


@dataclass(frozen=True)
class CEnr:
    ets: int
    start: int
    kernel = True


@dataclass(frozen=True)
class PLd:
    ets: int
    tid: int
    plen: int
    prio: int
    kernel = False


@dataclass(frozen=True)
class ILd:
    ets: int
    tid: int
    plen: int
    prio: int
    kernel = False


@dataclass(frozen=True)
class IRun:
    tid: int
    kernel = False


Instruction = Union[CSet, CEnr, PLd, ILd, IRun]


def _check(name: str, value: int, lo: int, hi: int) -> None:
    if not isinstance(value, int) or not lo <= value <= hi:
        raise EncodingError(f"{name} overflow: {value!r} not in [{lo}, {hi}]")


def encode(ins: Instruction) -> int:
    if isinstance(ins, (CSet, CEnr)):
        _check("ets", ins.ets, 0, MAX_ETS)
        value, sub = (ins.budget, 0) if isinstance(ins, CSet) else (ins.start, 1)
        _check("budget" if sub == 0 else "start", value, 0, MAX_VALUE)
        return sub << 31 | value << 12 | ins.ets << 9 | CLASS_C
    if isinstance(ins, (PLd, ILd)):
        _check("ets", ins.ets, 0, MAX_ETS)
        _check("tid", ins.tid, 0, MAX_TID)
        _check("plen", ins.plen, 1, PLEN_MAX)
        _check("prio", ins.prio, 0, MAX_PRIO)
        cls = CLASS_P if isinstance(ins, PLd) else CLASS_I
        return (ins.plen - 1) << 26 | ins.prio << 12 | ins.ets << 9 | ins.tid << 2 | cls
    if isinstance(ins, IRun):
        _check("tid", ins.tid, 0, MAX_TID)
        return 1 << 31 | ins.tid << 2 | CLASS_I
    raise EncodingError(f"not an instruction: {ins!r}")


def decode(word: int) -> Instruction:
    if not 0 <= word <= 0xFFFFFFFF:
        raise DecodingError(f"not a 32-bit word: {word!r}")
    cls = word & 0b11
    tid = word >> 2 & MAX_TID
    ets = word >> 9 & MAX_ETS
    sub = word >> 31
    if cls == CLASS_RESERVED:
        raise DecodingError("reserved opcode")
    if cls == CLASS_C:
        if tid:
            raise DecodingError("c-type word with non-zero tid field")
        value = word >> 12 & MAX_VALUE
        return CEnr(ets, value) if sub else CSet(ets, value)
    plen = (word >> 26 & 0x1F) + 1
    prio = word >> 12 & MAX_PRIO
    if cls == CLASS_P:
        if sub:
            raise DecodingError("reserved p-type sub-operation")
        return PLd(ets, tid, plen, prio)
    if sub:
        if word & ~(0x80000000 | MAX_TID << 2 | 0b11):
            raise DecodingError("i.run word with non-zero ets/service fields")
        return IRun(tid)
    return ILd(ets, tid, plen, prio)


def sram_address(tid: int, op_index: int) -> int:
    """12-bit I/O pool address: task id in the upper 7 bits, op order in the lower 5."""
    if not 0 <= tid <= MAX_TID:
        raise ValueError(f"tid {tid} out of range")
    if not 0 <= op_index <= 31:
        raise ValueError(f"op_index {op_index} out of range")
    return tid << 5 | op_index


# ---------------------------------------------------------------- assembly text

def to_asm(ins: Instruction) -> str:
    if isinstance(ins, CSet):
        return f"c.set {ins.budget}, S{ins.ets}"
    if isinstance(ins, CEnr):
        return f"c.enr {ins.start}, S{ins.ets}"
    if isinstance(ins, IRun):
        return f"i.run T{ins.tid}"
    mnemonic = "p.ld" if isinstance(ins, PLd) else "i.ld"
    return f"{mnemonic} T{ins.tid}, S{ins.ets}, len={ins.plen}, prio={ins.prio}"


_C_RE = re.compile(r"c\.(set|enr)\s+(\d+)\s*,\s*S(\d+)$")
_LD_RE = re.compile(r"([pi])\.ld\s+T(\d+)\s*,\s*S(\d+)\s*,\s*len=(\d+)\s*,\s*prio=(\d+)$")
_RUN_RE = re.compile(r"i\.run\s+T(\d+)$")


def parse_asm(line: str) -> Instruction:
    text = line.split("#", 1)[0].strip()
    if m := _C_RE.match(text):
        value, ets = int(m[2]), int(m[3])
        return CSet(ets, value) if m[1] == "set" else CEnr(ets, value)
    if m := _LD_RE.match(text):
        cls = PLd if m[1] == "p" else ILd
        return cls(int(m[3]), int(m[2]), int(m[4]), int(m[5]))
    if m := _RUN_RE.match(text):
        return IRun(int(m[1]))
    raise DecodingError(f"cannot parse instruction: {line.strip()!r}")


def parse_listing(text: str) -> list[Instruction]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.split("#", 1)[0].strip():
            continue
        try:
            out.append(parse_asm(line))
        except DecodingError as exc:
            raise DecodingError(f"line {lineno}: {exc}") from None
    return out


def listing(instructions: Iterable[Instruction]) -> str:
    return "".join(to_asm(i) + "\n" for i in instructions)


def pack_words(words: Sequence[int]) -> bytes:
    return struct.pack(f"<{len(words)}I", *words)


def unpack_words(data: bytes) -> list[int]:
    if len(data) % 4:
        raise DecodingError(f"stream length {len(data)} is not a multiple of 4")
    return list(struct.unpack(f"<{len(data) // 4}I", data))


# ---------------------------------------------------------------- program assembly

def assemble_program(prog: EtsProgram) -> tuple[list[Instruction], list[dict]]:
    """Instruction stream plus the per-job start-offset sidecar.

    Server configuration comes first (set, enroll), then one pre-load per
    job in server order and start order.  Every instruction is encoded once
    so field overflows surface here.
    """
    stream: list[Instruction] = []
    sidecar: list[dict] = []
    for s in prog.servers:
        stream += [CSet(s.index, s.lambda_final), CEnr(s.index, s.alpha)]
    for s in prog.servers:
        for rank, p in enumerate(sorted(s.placements, key=lambda p: p.theta)):
            stream.append(PLd(s.index, p.job.task, min(p.job.wcet, PLEN_MAX), rank))
            sidecar.append({"tid": p.job.task, "j": p.job.j, "server": s.index, "theta": p.theta})
    for ins in stream:
        encode(ins)
    return stream, sidecar
