"""Flat FHE instruction stream, its line-oriented text form, and the sidecar
plaintext-constant store.

IR lines look like::

    %h3 = PMULT %h1, @pt42 ; layer=conv1 group=g7

Handles are SSA: each instruction defines a fresh `%hN`. Plaintext operands
live in a separate binary store (header ``ORIONPT1``) so the text stays small.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field

import numpy as np

from .params import ScaleDescriptor

PADD = "PADD"
HADD = "HADD"
PMULT = "PMULT"
HMULT = "HMULT"
HROT = "HROT"
RESCALE = "RESCALE"
MODDOWN = "MODDOWN"
BOOTSTRAP = "BOOTSTRAP"

OPCODES = (PADD, HADD, PMULT, HMULT, HROT, RESCALE, MODDOWN, BOOTSTRAP)


class IrError(ValueError):
    pass


def scale_to_str(s: ScaleDescriptor) -> str:
    parts = []
    if s.delta_exp:
        parts.append(f"D^{s.delta_exp}")
    for lvl, e in s.prime_exps:
        parts.append(f"q{lvl}^{e}")
    return "*".join(parts) if parts else "1"


_TOKEN = re.compile(r"^(D|q(\d+))\^(-?\d+)$")


def scale_from_str(text: str) -> ScaleDescriptor:
    if text == "1":
        return ScaleDescriptor()
    delta = 0
    primes = {}
    for tok in text.split("*"):
        m = _TOKEN.match(tok)
        if not m:
            raise IrError(f"bad scale token {tok!r}")
        if m.group(1) == "D":
            delta += int(m.group(3))
        else:
            lvl = int(m.group(2))
            primes[lvl] = primes.get(lvl, 0) + int(m.group(3))
    return ScaleDescriptor(delta, tuple(primes.items()))


@dataclass
class FheInstruction:
    opcode: str
    dest: int
    args: tuple[int, ...] = ()
    pt: int | None = None          # plaintext id for PADD/PMULT
    k: int | None = None           # rotation amount (HROT) / target level (MODDOWN)
    hoist_group: str | None = None
    layer: str | None = None       # provenance: source layer name
    edge: str | None = None        # set when this value is a layer-boundary wire

    def to_line(self) -> str:
        if self.opcode in (PADD, PMULT):
            body = f"%h{self.dest} = {self.opcode} %h{self.args[0]}, @pt{self.pt}"
        elif self.opcode in (HADD, HMULT):
            body = f"%h{self.dest} = {self.opcode} %h{self.args[0]}, %h{self.args[1]}"
        elif self.opcode in (HROT, MODDOWN):
            body = f"%h{self.dest} = {self.opcode} %h{self.args[0]}, {self.k}"
        else:  # RESCALE, BOOTSTRAP
            body = f"%h{self.dest} = {self.opcode} %h{self.args[0]}"
        notes = []
        if self.layer:
            notes.append(f"layer={self.layer}")
        if self.hoist_group:
            notes.append(f"group={self.hoist_group}")
        if self.edge:
            notes.append(f"edge={self.edge}")
        return body + (" ; " + " ".join(notes) if notes else "")


_LINE = re.compile(
    r"^%h(\d+) = ([A-Z]+) %h(\d+)(?:, (?:%h(\d+)|@pt(\d+)|(-?\d+)))?$")


def _parse_line(body: str) -> FheInstruction:
    m = _LINE.match(body.strip())
    if not m:
        raise IrError(f"unparseable instruction {body!r}")
    dest, opcode, a0 = int(m.group(1)), m.group(2), int(m.group(3))
    if opcode not in OPCODES:
        raise IrError(f"unknown opcode {opcode!r}")
    instr = FheInstruction(opcode, dest, (a0,))
    if opcode in (PADD, PMULT):
        if m.group(5) is None:
            raise IrError(f"{opcode} needs a plaintext operand: {body!r}")
        instr.pt = int(m.group(5))
    elif opcode in (HADD, HMULT):
        if m.group(4) is None:
            raise IrError(f"{opcode} needs two ciphertext operands: {body!r}")
        instr.args = (a0, int(m.group(4)))
    elif opcode in (HROT, MODDOWN):
        if m.group(6) is None:
            raise IrError(f"{opcode} needs an integer operand: {body!r}")
        instr.k = int(m.group(6))
    return instr


@dataclass
class InputSpec:
    name: str
    handle: int
    level: int
    scale: ScaleDescriptor
    width: int                     # logical (replicated) width, <= slots


@dataclass
class FheProgram:
    slots: int
    instructions: list[FheInstruction] = field(default_factory=list)
    inputs: list[InputSpec] = field(default_factory=list)
    outputs: list[tuple[str, int]] = field(default_factory=list)

    def count(self, opcode: str) -> int:
        return sum(1 for i in self.instructions if i.opcode == opcode)

    def to_text(self) -> str:
        lines = ["; ckks-ir v1", f".slots {self.slots}"]
        for spec in self.inputs:
            lines.append(f".input %h{spec.handle} {spec.name} level={spec.level} "
                         f"scale={scale_to_str(spec.scale)} width={spec.width}")
        for name, handle in self.outputs:
            lines.append(f".output %h{handle} {name}")
        lines.extend(i.to_line() for i in self.instructions)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FheProgram":
        prog = cls(slots=0)
        for raw in text.splitlines():
            line = raw.split(";", 1)
            body, note = line[0].strip(), line[1].strip() if len(line) > 1 else ""
            if not body:
                continue
            if body.startswith(".slots"):
                prog.slots = int(body.split()[1])
            elif body.startswith(".input"):
                _, h, name, *kvs = body.split()
                kv = dict(x.split("=", 1) for x in kvs)
                prog.inputs.append(InputSpec(
                    name, int(h[2:]), int(kv["level"]),
                    scale_from_str(kv["scale"]), int(kv["width"])))
            elif body.startswith(".output"):
                _, h, name = body.split()
                prog.outputs.append((name, int(h[2:])))
            else:
                instr = _parse_line(body)
                for item in note.split():
                    key, val = item.split("=", 1)
                    if key == "layer":
                        instr.layer = val
                    elif key == "group":
                        instr.hoist_group = val
                    elif key == "edge":
                        instr.edge = val
                prog.instructions.append(instr)
        if prog.slots <= 0:
            raise IrError("program is missing a .slots directive")
        return prog

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.to_text())

    @classmethod
    def load(cls, path) -> "FheProgram":
        return cls.from_text(open(path).read())


@dataclass
class PlaintextConst:
    values: np.ndarray             # 1-D float64, the width-w logical vector
    scale: ScaleDescriptor
    level: int


PT_MAGIC = b"ORIONPT1"


class PlaintextStore:
    """Sidecar store of encoded plaintext constants, deduplicated by content.

    Deduplication doubles as the encoded-diagonal cache: identical
    (values, scale, level) triples share one entry across layers.
    """

    def __init__(self):
        self.entries: dict[int, PlaintextConst] = {}
        self._dedup: dict[tuple, int] = {}

    def add(self, values, scale: ScaleDescriptor, level: int) -> int:
        arr = np.ascontiguousarray(np.asarray(values, dtype=np.float64))
        if arr.ndim != 1:
            raise IrError("plaintext constants are 1-D slot vectors")
        key = (arr.tobytes(), scale, level)
        pid = self._dedup.get(key)
        if pid is None:
            pid = len(self.entries)
            self.entries[pid] = PlaintextConst(arr, scale, level)
            self._dedup[key] = pid
        return pid

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, pid: int) -> PlaintextConst:
        return self.entries[pid]

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(PT_MAGIC)
            f.write(struct.pack("<I", len(self.entries)))
            for pid in sorted(self.entries):
                e = self.entries[pid]
                f.write(struct.pack("<Iii", pid, e.level, e.scale.delta_exp))
                f.write(struct.pack("<I", len(e.scale.prime_exps)))
                for lvl, exp in e.scale.prime_exps:
                    f.write(struct.pack("<ii", lvl, exp))
                f.write(struct.pack("<Q", e.values.size))
                f.write(e.values.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "PlaintextStore":
        store = cls()
        with open(path, "rb") as f:
            if f.read(8) != PT_MAGIC:
                raise IrError(f"{path}: bad plaintext store header")
            (count,) = struct.unpack("<I", f.read(4))
            for _ in range(count):
                pid, level, delta = struct.unpack("<Iii", f.read(12))
                (nprimes,) = struct.unpack("<I", f.read(4))
                exps = tuple(struct.unpack("<ii", f.read(8)) for _ in range(nprimes))
                (size,) = struct.unpack("<Q", f.read(8))
                values = np.frombuffer(f.read(8 * size), dtype="<f8").copy()
                const = PlaintextConst(values, ScaleDescriptor(delta, exps), level)
                store.entries[pid] = const
                store._dedup[(values.tobytes(), const.scale, level)] = pid
        return store


class ProgramBuilder:
    """Incrementally builds an FheProgram plus its constant store."""

    def __init__(self, slots: int, store: PlaintextStore | None = None,
                 materialize: bool = True):
        self.program = FheProgram(slots=slots)
        self.store = store if store is not None else PlaintextStore()
        self.materialize = materialize
        self._next_handle = 0
        self._next_group = 0
        self._by_dest: dict[int, FheInstruction] = {}
        self.layer: str | None = None

    def fresh(self) -> int:
        h = self._next_handle
        self._next_handle += 1
        return h

    def new_hoist_group(self) -> str:
        g = f"g{self._next_group}"
        self._next_group += 1
        return g

    def declare_input(self, name: str, level: int, scale: ScaleDescriptor,
                      width: int) -> int:
        h = self.fresh()
        self.program.inputs.append(InputSpec(name, h, level, scale, width))
        return h

    def mark_output(self, handle: int, name: str) -> None:
        self.program.outputs.append((name, handle))

    def mark_edge(self, handle: int, wire: str) -> None:
        instr = self._by_dest.get(handle)
        if instr is not None:
            instr.edge = wire

    def constant(self, values, scale: ScaleDescriptor, level: int,
                 width: int | None = None) -> int:
        # materialize=False keeps only count metadata; programs built this
        # way can be analyzed and costed but not executed
        if not self.materialize:
            values = np.zeros(1)
        elif np.isscalar(values):
            values = np.full(width if width else self.program.slots, float(values))
        return self.store.add(values, scale, level)

    def _emit(self, opcode, a, b=None, pt=None, k=None, group=None) -> int:
        dest = self.fresh()
        args = (a,) if b is None else (a, b)
        instr = FheInstruction(opcode, dest, args, pt=pt, k=k,
                               hoist_group=group, layer=self.layer)
        self.program.instructions.append(instr)
        self._by_dest[dest] = instr
        return dest

    def padd(self, ct, pt):
        return self._emit(PADD, ct, pt=pt)

    def hadd(self, a, b):
        return self._emit(HADD, a, b)

    def pmult(self, ct, pt):
        return self._emit(PMULT, ct, pt=pt)

    def hmult(self, a, b):
        return self._emit(HMULT, a, b)

    def hrot(self, ct, k, group=None):
        return self._emit(HROT, ct, k=k, group=group)

    def rescale(self, ct):
        return self._emit(RESCALE, ct)

    def moddown(self, ct, level):
        return self._emit(MODDOWN, ct, k=level)

    def bootstrap(self, ct):
        return self._emit(BOOTSTRAP, ct)
