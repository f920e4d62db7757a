import random

import pytest

from diagforge.errors import DecodeError, InputError, ParseError
from diagforge.machine import (
    ACCEPT,
    ADD,
    HALT_ACCEPT,
    HALT_REJECT,
    JMP,
    JZ,
    LOAD,
    LOADI,
    MOV,
    OUT_OF_FUEL,
    REJECT,
    SELF,
    STORE,
    SUB,
    Config,
    Halt,
    Program,
    deserialize,
    format_asm,
    initial_config,
    parse_asm,
    run,
    run_recording_reads,
    serialize,
    step,
)


def prog(instrs, **kw):
    kw.setdefault("register_count", 2)
    kw.setdefault("memory_cells", 16)
    return Program(tuple(instrs), **kw)


def test_step_halt_accept():
    p = prog([HALT_ACCEPT])
    assert step(p, initial_config(p)) == Halt(accept=True)


def test_step_loadi():
    p = prog([LOADI(0, 5), HALT_ACCEPT])
    c1 = step(p, initial_config(p))
    assert isinstance(c1, Config)
    assert c1.registers[0] == 5
    assert c1.pc == 1


def test_step_self_deposits_own_serialization():
    p = prog([SELF(0, 1), HALT_ACCEPT], memory_cells=64)
    c1 = step(p, initial_config(p))
    data = serialize(p)
    assert bytes(c1.memory[: len(data)]) == data
    assert c1.registers[1] == len(data)


def test_self_wraps_addresses_modulo_memory():
    p = prog([LOADI(0, 14), SELF(0, 1), HALT_ACCEPT], memory_cells=16)
    out = run(p, b"", 10)
    data = serialize(p)
    # bytes land at 14, 15, 0, 1, ... modulo 16; later writes win
    expected = [0] * 16
    for j, byte in enumerate(data):
        expected[(14 + j) % 16] = byte
    assert list(out.final.memory) == expected


def test_run_reject_counts_halt_step():
    out = run(prog([HALT_REJECT]), b"", 10)
    assert out.tag == REJECT
    assert out.steps_used == 1


def test_run_infinite_loop_out_of_fuel():
    out = run(prog([JMP(0)]), b"", 100)
    assert out.tag == OUT_OF_FUEL
    assert out.steps_used == 100


def test_run_fall_off_end_rejects():
    out = run(prog([LOADI(0, 1)]), b"", 10)
    assert out.tag == REJECT
    assert out.steps_used == 2


def test_run_input_too_long():
    with pytest.raises(InputError):
        run(prog([HALT_ACCEPT]), b"x" * 17, 10)


def test_arithmetic_wraps():
    p = prog([LOADI(0, 3), LOADI(1, 5), SUB(0, 1), HALT_ACCEPT], word_bits=4)
    out = run(p, b"", 10)
    assert out.final.registers[0] == (3 - 5) % 16


def test_load_store_roundtrip():
    p = prog(
        [LOADI(0, 7), LOADI(1, 9), STORE(0, 1), LOAD(1, 0), HALT_ACCEPT],
        register_count=2,
    )
    out = run(p, b"", 10)
    assert out.final.registers[1] == 9
    assert out.final.memory[7] == 9


def test_determinism_and_fuel_monotonicity():
    rng = random.Random(99)
    for _ in range(50):
        p = random_program(rng)
        base = run(p, b"", 40)
        assert base == run(p, b"", 40)
        if base.tag in (ACCEPT, REJECT):
            for extra in (1, 7):
                again = run(p, b"", 40 + extra)
                assert again.tag == base.tag
                assert again.steps_used == base.steps_used


def test_run_recording_reads_tracks_untouched_cells_only():
    # First LOAD sees initial memory; LOAD after STORE to the same cell does not.
    p = prog(
        [LOADI(0, 3), LOAD(1, 0), STORE(0, 1), LOAD(1, 0), HALT_ACCEPT],
        register_count=2,
    )
    _, reads = run_recording_reads(p, bytes([0, 0, 0, 42]), 10)
    assert reads == {3: 42}


def random_program(rng, max_len=6):
    n = rng.randint(1, max_len)
    instrs = []
    for _ in range(n):
        choice = rng.randrange(8)
        if choice == 0:
            instrs.append(LOADI(rng.randrange(2), rng.randrange(16)))
        elif choice == 1:
            instrs.append(MOV(rng.randrange(2), rng.randrange(2)))
        elif choice == 2:
            instrs.append(ADD(rng.randrange(2), rng.randrange(2)))
        elif choice == 3:
            instrs.append(SUB(rng.randrange(2), rng.randrange(2)))
        elif choice == 4:
            instrs.append(JZ(rng.randrange(2), rng.randrange(n)))
        elif choice == 5:
            instrs.append(JMP(rng.randrange(n)))
        else:
            instrs.append(rng.choice([HALT_ACCEPT, HALT_REJECT]))
    return prog(instrs)


def random_program_full(rng):
    """Programs over the whole instruction set, for serialization tests."""
    rc = rng.randint(1, 8)
    n = rng.randint(1, 10)
    instrs = []
    for _ in range(n):
        op = rng.choice(list(range(11)))
        r = lambda: rng.randrange(rc)
        if op == 0:
            instrs.append(LOADI(r(), rng.randrange(1 << 16)))
        elif op == 1:
            instrs.append(MOV(r(), r()))
        elif op == 2:
            instrs.append(ADD(r(), r()))
        elif op == 3:
            instrs.append(SUB(r(), r()))
        elif op == 4:
            instrs.append(LOAD(r(), r()))
        elif op == 5:
            instrs.append(STORE(r(), r()))
        elif op == 6:
            instrs.append(JZ(r(), rng.randrange(n)))
        elif op == 7:
            instrs.append(JMP(rng.randrange(n)))
        elif op == 8:
            instrs.append(SELF(r(), r()))
        else:
            instrs.append(rng.choice([HALT_ACCEPT, HALT_REJECT]))
    return Program(
        tuple(instrs),
        register_count=rc,
        word_bits=16,
        memory_cells=rng.choice([16, 256, 65536]),
    )


def test_serialize_round_trip_random():
    rng = random.Random(424242)
    for _ in range(500):
        p = random_program_full(rng)
        data = serialize(p)
        assert deserialize(data) == p
        assert serialize(deserialize(data)) == data


def test_serialize_injective_on_constant_change():
    a = prog([LOADI(0, 1), HALT_ACCEPT])
    b = prog([LOADI(0, 2), HALT_ACCEPT])
    assert serialize(a) != serialize(b)


def test_serialize_halt_accept_regression_lock():
    # Canonical bytes for the one-instruction accepting program with default
    # geometry: version 1, 4 registers, 16-bit words, 65536 cells, 1 instruction,
    # opcode 10.
    p = Program((HALT_ACCEPT,))
    assert serialize(p) == bytes([1, 4, 16, 0, 0, 1, 0, 1, 0, 10])


def test_deserialize_truncated_reports_offset():
    data = serialize(prog([LOADI(0, 5), HALT_ACCEPT]))
    with pytest.raises(DecodeError) as exc:
        deserialize(data[:-3])
    assert exc.value.offset is not None


def test_deserialize_trailing_bytes():
    data = serialize(prog([HALT_ACCEPT]))
    with pytest.raises(DecodeError, match="trailing"):
        deserialize(data + b"\x00")


def test_deserialize_bad_opcode():
    data = bytearray(serialize(prog([HALT_ACCEPT])))
    data[9] = 99
    with pytest.raises(DecodeError, match="opcode"):
        deserialize(bytes(data))


def test_program_validation():
    with pytest.raises(InputError):
        Program((JMP(5), HALT_ACCEPT))  # target out of range
    with pytest.raises(InputError):
        Program((MOV(3, 0),), register_count=2)
    with pytest.raises(InputError):
        Program(())


def test_asm_round_trip():
    rng = random.Random(77)
    for _ in range(100):
        p = random_program_full(rng)
        assert parse_asm(format_asm(p)) == p


def test_asm_labels_and_comments():
    text = """
    ; spin until r0 hits zero, then accept
    .registers 2
    .memory 32
    loadi r1, 1
    loop:
        jz r0, done
        sub r0, r1
        jmp loop
    done:
        accept
    """
    p = parse_asm(text)
    assert p.instructions[1] == JZ(0, 4)
    assert p.instructions[3] == JMP(1)
    assert p.instructions[4] == HALT_ACCEPT


def test_asm_errors_carry_line_numbers():
    with pytest.raises(ParseError, match="line 1"):
        parse_asm("bogus r1, r2")
    with pytest.raises(ParseError, match="unknown label"):
        parse_asm("jmp nowhere")
    with pytest.raises(ParseError, match="operand"):
        parse_asm("loadi r0")
