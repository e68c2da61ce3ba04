import io
import math

import pytest

from demon.exceptions import ParseError
from demon.models import (
    Cnot,
    CnotMode,
    Contact,
    InitKind,
    KetKind,
    Measure,
    Pulse,
    Ramp,
    RampMode,
)
from demon.program import format_angle, parse_program, serialize_program

HEADER = """\
PARAM mu1 2
PARAM mu2 1
PARAM B 1
PARAM T1 8
PARAM T2 1
PARAM gamma 1
"""


def _parse_error(text):
    with pytest.raises(ParseError) as info:
        parse_program(text)
    return info.value


def test_parses_every_statement():
    program = parse_program(HEADER + """\
INIT THERMAL   # both spins in contact with their reservoirs
CNOT 1 2
cnot 2 1 pulsed
PULSE 2 PI/2 3PI/2
WAIT 0.5
MEASURE 1
DEPHASE 2
CONTACT 1 ON
THERMALIZE 1
RAMP 1 0.25 100 ISOTHERMAL
CONTACT 1 off
""")
    assert program.params.T1 == 8.0
    assert program.init.kind == InitKind.THERMAL
    ops = program.instructions
    assert len(ops) == 10
    assert ops[0] == Cnot(control=1, target=2)
    assert ops[1].mode == CnotMode.PULSED
    assert ops[2] == Pulse(spin=2, angle=math.pi / 2, phase=3 * math.pi / 2)
    assert ops[4] == Measure(spin=1)
    assert ops[6] == Contact(spin=1, on=True)
    assert ops[8] == Ramp(spin=1, B_target=0.25, n_steps=100, mode=RampMode.ISOTHERMAL)


def test_accepts_crlf_and_streams():
    text = (HEADER + "INIT THERMAL\nCNOT 1 2\n").replace("\n", "\r\n")
    assert parse_program(io.StringIO(text)) == parse_program(text.replace("\r\n", "\n"))


def test_init_variants():
    tipped = parse_program(HEADER + "INIT THERMAL TIPPED PI/2\n")
    assert tipped.init.tipped == pytest.approx(math.pi / 2)
    state = parse_program(HEADER + "INIT STATE TIPPED 0.3 PLUS\n")
    assert state.init.kind == InitKind.STATE
    assert state.init.kets[0].theta == pytest.approx(0.3)
    assert state.init.kets[1].kind == KetKind.PLUS


def test_empty_program_has_no_instructions():
    assert parse_program(HEADER + "INIT THERMAL\n").instructions == ()


@pytest.mark.parametrize(
    "text,message,line,column",
    [
        ("", "missing PARAM block", 1, 1),
        ("INIT THERMAL\n", "missing PARAM block", 1, 1),
        ("PARAM mu1 2\nINIT THERMAL\n", "missing PARAM mu2", 2, 1),
        (HEADER, "missing INIT", 6, 1),
        (HEADER + "INIT THERMAL\nPARAM B 2\n", "PARAM after INIT", 8, 1),
        (HEADER + "INIT THERMAL\nINIT THERMAL\n", "duplicate INIT", 8, 1),
        ("PARAM mu1 2\nPARAM mu1 3\n", "duplicate parameter mu1", 2, 7),
        ("PARAM mu1 -1\n", "mu1 must be positive", 1, 11),
        ("PARAM gamma -1\n", "gamma must be non-negative", 1, 13),
        ("PARAM mu1 1.2.3\n", "malformed number '1.2.3'", 1, 11),
        ("PARAM spin 1\n", "unknown parameter 'spin'", 1, 7),
        ("CNOT 1 2\n", "instruction CNOT before parameters", 1, 1),
        (HEADER + "CNOT 1 2\n", "instruction CNOT before INIT", 7, 1),
        (HEADER + "INIT THERMAL\nFROB 1\n", "unknown keyword 'FROB'", 8, 1),
        (HEADER + "INIT THERMAL\nCNOT 1 1\n", "control and target must differ", 8, 8),
        (HEADER + "INIT THERMAL\nCNOT 1 3\n", "spin index must be 1 or 2, got '3'", 8, 8),
        (HEADER + "INIT THERMAL\nRAMP 1 0.5 10\n", "RAMP expects 4 argument(s), got 3", 8, 14),
        (HEADER + "INIT THERMAL\nRAMP 1 0 10 ADIABATIC\n", "ramp target field must be positive", 8, 8),
        (HEADER + "INIT THERMAL\nRAMP 1 1 10 SLOW\n", "expected one of ADIABATIC, ISOTHERMAL, got 'SLOW'", 8, 13),
        (HEADER + "INIT THERMAL\nWAIT -1\n", "duration must be non-negative", 8, 6),
        (HEADER + "INIT THERMAL\nMEASURE 1 2\n", "unexpected token '2'", 8, 11),
        (HEADER + "INIT STATE UP\n", "INIT STATE expects two kets", 7, 14),
    ],
)
def test_parse_errors(text, message, line, column):
    err = _parse_error(text)
    assert err.description == message
    assert (err.line, err.column) == (line, column)
    assert str(err) == f"line {line}, column {column}: {message}"


def test_format_angle():
    assert format_angle(math.pi) == "PI"
    assert format_angle(3 * math.pi / 2) == "3PI/2"
    assert format_angle(0.1) == "0.1"


def test_serialization_is_canonical():
    source = HEADER.lower() + """\
init thermal tipped 0.7
contact 2 on
ramp 2 3 50 isothermal
pulse 1 PI
"""
    text = serialize_program(parse_program(source))
    assert text.splitlines() == [
        "PARAM mu1 2.0",
        "PARAM mu2 1.0",
        "PARAM B 1.0",
        "PARAM T1 8.0",
        "PARAM T2 1.0",
        "PARAM gamma 1.0",
        "INIT THERMAL TIPPED 0.7",
        "CONTACT 2 ON",
        "RAMP 2 3.0 50 ISOTHERMAL",
        "PULSE 1 PI 0.0",
    ]
    assert text.endswith("\n") and "\r" not in text
    assert serialize_program(parse_program(text)) == text


def test_numeric_arguments_reach_the_instructions():
    program = parse_program(HEADER + """\
INIT THERMAL TIPPED 0.25
WAIT 1e-3
PULSE 1 -1e-17 0.5
CONTACT 2 ON
RAMP 2 2.5 40 ISOTHERMAL
""")
    assert program.params.gamma == 1.0
    assert program.init.tipped == 0.25
    assert program.instructions[0].duration == 1e-3
    assert program.instructions[1] == Pulse(spin=1, angle=-1e-17, phase=0.5)
    assert program.instructions[3].B_target == 2.5
