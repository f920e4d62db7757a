"""A minimal register machine with a quine instruction.

Programs are the coded procedure space of this package: deterministic,
fuel-bounded, and carrying a canonical injective serialization so that every
program is a number and every number decodes back (or fails loudly).

Semantics notes:

- Arithmetic is modulo 2**word_bits; memory addresses are taken modulo
  memory_cells.
- `SELF(ar, lr)` writes the program's own canonical serialization into memory
  starting at the address held in register ar and puts its length into
  register lr.  This is the operational form of the recursion theorem: the
  serialization is a compile-time constant, so no interpreter trickery is
  needed.
- Running past the final instruction rejects (an implicit reject halt).
- A classifier program answers by halting: accept means SAT, reject means
  UNSAT.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import DecodeError, InputError, ParseError

MAX_REGISTERS = 8
SERIAL_VERSION = 1

ACCEPT = "ACCEPT"
REJECT = "REJECT"
OUT_OF_FUEL = "OUT_OF_FUEL"

# op -> (opcode byte, operand kinds); operand kinds: "reg" (u8), "const"/"target" (u16)
OP_SPECS: dict[str, tuple[int, tuple[str, ...]]] = {
    "LOADI": (1, ("reg", "const")),
    "MOV": (2, ("reg", "reg")),
    "ADD": (3, ("reg", "reg")),
    "SUB": (4, ("reg", "reg")),
    "LOAD": (5, ("reg", "reg")),
    "STORE": (6, ("reg", "reg")),
    "JZ": (7, ("reg", "target")),
    "JMP": (8, ("target",)),
    "SELF": (9, ("reg", "reg")),
    "HALT_ACCEPT": (10, ()),
    "HALT_REJECT": (11, ()),
}

_OPCODE_TO_OP = {spec[0]: op for op, spec in OP_SPECS.items()}

REGISTER_OPS = ("LOADI", "MOV", "ADD", "SUB")  # no control flow, no memory
MEMORY_OPS = ("LOAD", "STORE", "SELF")


@dataclass(frozen=True)
class Instruction:
    op: str
    args: tuple[int, ...] = ()

    def __post_init__(self):
        if self.op not in OP_SPECS:
            raise InputError(f"unknown instruction {self.op!r}")
        kinds = OP_SPECS[self.op][1]
        if len(self.args) != len(kinds):
            raise InputError(
                f"{self.op} takes {len(kinds)} operands, got {len(self.args)}"
            )
        for a in self.args:
            if a < 0:
                raise InputError(f"{self.op}: negative operand {a}")


def LOADI(r, const):
    return Instruction("LOADI", (r, const))


def MOV(r, r2):
    return Instruction("MOV", (r, r2))


def ADD(r, r2):
    return Instruction("ADD", (r, r2))


def SUB(r, r2):
    return Instruction("SUB", (r, r2))


def LOAD(r, addr_reg):
    return Instruction("LOAD", (r, addr_reg))


def STORE(addr_reg, r):
    return Instruction("STORE", (addr_reg, r))


def JZ(r, target):
    return Instruction("JZ", (r, target))


def JMP(target):
    return Instruction("JMP", (target,))


def SELF(dest_addr_reg, len_reg):
    return Instruction("SELF", (dest_addr_reg, len_reg))


HALT_ACCEPT = Instruction("HALT_ACCEPT")
HALT_REJECT = Instruction("HALT_REJECT")


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...]
    register_count: int = 4
    word_bits: int = 16
    memory_cells: int = 65536

    def __post_init__(self):
        if not self.instructions:
            raise InputError("program needs at least one instruction")
        if not 1 <= self.register_count <= MAX_REGISTERS:
            raise InputError(f"register_count must be 1..{MAX_REGISTERS}")
        if not 1 <= self.word_bits <= 16:
            raise InputError("word_bits must be 1..16")
        if self.memory_cells < 1:
            raise InputError("memory_cells must be positive")
        limit = 1 << self.word_bits
        n = len(self.instructions)
        for idx, ins in enumerate(self.instructions):
            kinds = OP_SPECS[ins.op][1]
            for kind, a in zip(kinds, ins.args):
                if kind == "reg" and a >= self.register_count:
                    raise InputError(
                        f"instruction {idx}: register r{a} out of range "
                        f"(register_count={self.register_count})"
                    )
                if kind == "const" and a >= limit:
                    raise InputError(
                        f"instruction {idx}: constant {a} exceeds word size"
                    )
                if kind == "target" and a >= n:
                    raise InputError(
                        f"instruction {idx}: jump target {a} outside program"
                    )

    @property
    def word_mask(self) -> int:
        return (1 << self.word_bits) - 1


@dataclass(frozen=True)
class Config:
    pc: int
    registers: tuple[int, ...]
    memory: tuple[int, ...]


@dataclass(frozen=True)
class Halt:
    accept: bool


@dataclass(frozen=True)
class RunOutcome:
    tag: str
    steps_used: int
    final: Config


def initial_config(program: Program, input_bytes: bytes = b"") -> Config:
    if len(input_bytes) > program.memory_cells:
        raise InputError(
            f"input of {len(input_bytes)} bytes exceeds {program.memory_cells} memory cells"
        )
    memory = list(input_bytes) + [0] * (program.memory_cells - len(input_bytes))
    return Config(0, (0,) * program.register_count, tuple(memory))


def step(program: Program, config: Config) -> Config | Halt:
    """One deterministic step; returns the successor config or a halt signal."""
    n = len(program.instructions)
    if config.pc > n:
        raise InputError(f"pc {config.pc} outside program of {n} instructions")
    if config.pc == n:
        return Halt(accept=False)  # fell off the end
    ins = program.instructions[config.pc]
    op, args = ins.op, ins.args
    if op == "HALT_ACCEPT":
        return Halt(accept=True)
    if op == "HALT_REJECT":
        return Halt(accept=False)

    mask = program.word_mask
    pc = config.pc + 1
    regs = list(config.registers)
    memory = config.memory

    if op == "LOADI":
        regs[args[0]] = args[1] & mask
    elif op == "MOV":
        regs[args[0]] = regs[args[1]]
    elif op == "ADD":
        regs[args[0]] = (regs[args[0]] + regs[args[1]]) & mask
    elif op == "SUB":
        regs[args[0]] = (regs[args[0]] - regs[args[1]]) & mask
    elif op == "LOAD":
        regs[args[0]] = memory[regs[args[1]] % program.memory_cells]
    elif op == "STORE":
        mem = list(memory)
        mem[regs[args[0]] % program.memory_cells] = regs[args[1]]
        memory = tuple(mem)
    elif op == "JZ":
        pc = args[1] if regs[args[0]] == 0 else config.pc + 1
    elif op == "JMP":
        pc = args[0]
    elif op == "SELF":
        data = serialize(program)
        base = regs[args[0]]
        mem = list(memory)
        for j, byte in enumerate(data):
            mem[(base + j) % program.memory_cells] = byte
        memory = tuple(mem)
        regs[args[1]] = len(data) & mask
    else:  # pragma: no cover - OP_SPECS is exhaustive
        raise InputError(f"unhandled op {op}")
    return Config(pc, tuple(regs), memory)


def run(program: Program, input_bytes: bytes, fuel: int) -> RunOutcome:
    """Simulate up to `fuel` steps with the input loaded at memory address 0."""
    outcome, _ = run_recording_reads(program, input_bytes, fuel)
    return outcome


def run_recording_reads(
    program: Program, input_bytes: bytes, fuel: int
) -> tuple[RunOutcome, dict[int, int]]:
    """Like `run`, also returning the initial-memory cells the run read.

    The returned map covers LOAD addresses that were never written earlier in
    the run (by STORE or SELF) mapped to the value observed; exactly the cells
    a CNF encoding must pin for the run to be reproduced.
    """
    if len(input_bytes) > program.memory_cells:
        raise InputError(
            f"input of {len(input_bytes)} bytes exceeds {program.memory_cells} memory cells"
        )
    if fuel < 0:
        raise InputError("fuel must be nonnegative")
    n = len(program.instructions)
    mask = program.word_mask
    cells = program.memory_cells
    instrs = program.instructions
    regs = [0] * program.register_count
    memory = list(input_bytes) + [0] * (cells - len(input_bytes))
    written: set[int] = set()
    init_reads: dict[int, int] = {}
    self_data: bytes | None = None

    pc = 0
    steps = 0
    while steps < fuel:
        if pc == n:
            return (
                RunOutcome(REJECT, steps + 1, Config(pc, tuple(regs), tuple(memory))),
                init_reads,
            )
        ins = instrs[pc]
        op, args = ins.op, ins.args
        steps += 1
        if op == "HALT_ACCEPT":
            return (
                RunOutcome(ACCEPT, steps, Config(pc, tuple(regs), tuple(memory))),
                init_reads,
            )
        if op == "HALT_REJECT":
            return (
                RunOutcome(REJECT, steps, Config(pc, tuple(regs), tuple(memory))),
                init_reads,
            )
        if op == "LOADI":
            regs[args[0]] = args[1] & mask
            pc += 1
        elif op == "MOV":
            regs[args[0]] = regs[args[1]]
            pc += 1
        elif op == "ADD":
            regs[args[0]] = (regs[args[0]] + regs[args[1]]) & mask
            pc += 1
        elif op == "SUB":
            regs[args[0]] = (regs[args[0]] - regs[args[1]]) & mask
            pc += 1
        elif op == "LOAD":
            addr = regs[args[1]] % cells
            value = memory[addr]
            if addr not in written and addr not in init_reads:
                init_reads[addr] = value
            regs[args[0]] = value
            pc += 1
        elif op == "STORE":
            addr = regs[args[0]] % cells
            memory[addr] = regs[args[1]]
            written.add(addr)
            pc += 1
        elif op == "JZ":
            pc = args[1] if regs[args[0]] == 0 else pc + 1
        elif op == "JMP":
            pc = args[0]
        elif op == "SELF":
            if self_data is None:
                self_data = serialize(program)
            base = regs[args[0]]
            for j, byte in enumerate(self_data):
                addr = (base + j) % cells
                memory[addr] = byte
                written.add(addr)
            regs[args[1]] = len(self_data) & mask
            pc += 1
    return (
        RunOutcome(OUT_OF_FUEL, fuel, Config(pc, tuple(regs), tuple(memory))),
        init_reads,
    )


# Canonical serialization: version u8, register_count u8, word_bits u8,
# memory_cells u32le, instruction count u16le, then per instruction the
# opcode byte followed by operands (registers u8, constants/targets u16le).
# Fixed-width fields make the encoding canonical and self-delimiting.


def serialize(program: Program) -> bytes:
    out = bytearray()
    out.append(SERIAL_VERSION)
    out.append(program.register_count)
    out.append(program.word_bits)
    out += struct.pack("<I", program.memory_cells)
    out += struct.pack("<H", len(program.instructions))
    for ins in program.instructions:
        opcode, kinds = OP_SPECS[ins.op]
        out.append(opcode)
        for kind, a in zip(kinds, ins.args):
            if kind == "reg":
                out.append(a)
            else:
                out += struct.pack("<H", a)
    return bytes(out)


def deserialize(data: bytes) -> Program:
    def need(offset: int, count: int) -> None:
        if offset + count > len(data):
            raise DecodeError(
                f"truncated: need {count} more byte(s)", offset=len(data)
            )

    need(0, 9)
    if data[0] != SERIAL_VERSION:
        raise DecodeError(f"unsupported serialization version {data[0]}", offset=0)
    register_count = data[1]
    word_bits = data[2]
    memory_cells = struct.unpack_from("<I", data, 3)[0]
    count = struct.unpack_from("<H", data, 7)[0]
    pos = 9
    instructions = []
    for _ in range(count):
        need(pos, 1)
        opcode = data[pos]
        op = _OPCODE_TO_OP.get(opcode)
        if op is None:
            raise DecodeError(f"unknown opcode {opcode}", offset=pos)
        pos += 1
        args = []
        for kind in OP_SPECS[op][1]:
            if kind == "reg":
                need(pos, 1)
                args.append(data[pos])
                pos += 1
            else:
                need(pos, 2)
                args.append(struct.unpack_from("<H", data, pos)[0])
                pos += 2
        instructions.append(Instruction(op, tuple(args)))
    if pos != len(data):
        raise DecodeError("trailing bytes after program", offset=pos)
    try:
        return Program(tuple(instructions), register_count, word_bits, memory_cells)
    except InputError as exc:
        raise DecodeError(f"decoded program is ill-formed: {exc}", offset=pos) from exc


# Assembly: one instruction per line, `;` comments, optional `label:` lines,
# directives `.registers N`, `.wordbits N`, `.memory N` before the code.
# Jump targets may be labels or absolute instruction indices.

_MNEMONICS = {
    "loadi": "LOADI",
    "mov": "MOV",
    "add": "ADD",
    "sub": "SUB",
    "load": "LOAD",
    "store": "STORE",
    "jz": "JZ",
    "jmp": "JMP",
    "self": "SELF",
    "accept": "HALT_ACCEPT",
    "reject": "HALT_REJECT",
}
_OP_TO_MNEMONIC = {v: k for k, v in _MNEMONICS.items()}


def parse_asm(text: str) -> Program:
    register_count = 4
    word_bits = 16
    memory_cells = 65536
    labels: dict[str, int] = {}
    lines: list[tuple[int, str]] = []

    index = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        s = raw.split(";", 1)[0].strip()
        if not s:
            continue
        if s.startswith("."):
            parts = s.split()
            if len(parts) != 2:
                raise ParseError(f"malformed directive {s!r}", lineno)
            try:
                value = int(parts[1], 0)
            except ValueError:
                raise ParseError(f"malformed directive {s!r}", lineno) from None
            if parts[0] == ".registers":
                register_count = value
            elif parts[0] == ".wordbits":
                word_bits = value
            elif parts[0] == ".memory":
                memory_cells = value
            else:
                raise ParseError(f"unknown directive {parts[0]!r}", lineno)
            continue
        if s.endswith(":"):
            name = s[:-1].strip()
            if not name.isidentifier():
                raise ParseError(f"bad label {name!r}", lineno)
            if name in labels:
                raise ParseError(f"duplicate label {name!r}", lineno)
            labels[name] = index
            continue
        lines.append((lineno, s))
        index += 1

    def operand(tok: str, kind: str, lineno: int) -> int:
        tok = tok.strip()
        if kind == "reg":
            if not tok.startswith("r"):
                raise ParseError(f"expected register, got {tok!r}", lineno)
            try:
                return int(tok[1:])
            except ValueError:
                raise ParseError(f"expected register, got {tok!r}", lineno) from None
        if kind == "target" and tok in labels:
            return labels[tok]
        try:
            return int(tok, 0)
        except ValueError:
            if kind == "target":
                raise ParseError(f"unknown label {tok!r}", lineno) from None
            raise ParseError(f"expected number, got {tok!r}", lineno) from None

    instructions = []
    for lineno, s in lines:
        parts = s.split(None, 1)
        mnemonic = parts[0].lower()
        op = _MNEMONICS.get(mnemonic)
        if op is None:
            raise ParseError(f"unknown mnemonic {parts[0]!r}", lineno)
        kinds = OP_SPECS[op][1]
        raw_args = [a for a in (parts[1].split(",") if len(parts) > 1 else []) if a.strip()]
        if len(raw_args) != len(kinds):
            raise ParseError(
                f"{mnemonic} takes {len(kinds)} operand(s), got {len(raw_args)}", lineno
            )
        args = tuple(operand(a, k, lineno) for a, k in zip(raw_args, kinds))
        try:
            instructions.append(Instruction(op, args))
        except InputError as exc:
            raise ParseError(str(exc), lineno) from None

    try:
        return Program(tuple(instructions), register_count, word_bits, memory_cells)
    except InputError as exc:
        raise ParseError(f"ill-formed program: {exc}") from None


def format_asm(program: Program) -> str:
    """Canonical assembly text (numeric jump targets); parses back to `program`."""
    lines = [
        f".registers {program.register_count}",
        f".wordbits {program.word_bits}",
        f".memory {program.memory_cells}",
    ]
    for ins in program.instructions:
        mnemonic = _OP_TO_MNEMONIC[ins.op]
        kinds = OP_SPECS[ins.op][1]
        rendered = [f"r{a}" if k == "reg" else str(a) for k, a in zip(kinds, ins.args)]
        lines.append(("    " + mnemonic + " " + ", ".join(rendered)).rstrip())
    return "\n".join(lines) + "\n"
