"""Line-oriented pulse-program text: parser and canonical serializer.

One statement per line, ``#`` starts a comment, keywords are case-insensitive::

    PARAM mu1 2
    PARAM mu2 1
    PARAM B 1
    PARAM T1 8
    PARAM T2 1
    PARAM gamma 1
    INIT THERMAL
    CNOT 1 2
    PULSE 2 PI/2 3PI/2
    RAMP 1 0.25 10000 ADIABATIC
"""
import logging
import math
import re
from typing import Callable, Dict, List, NamedTuple, Optional, TextIO, Tuple, Union

from pydantic import ValidationError

from demon.exceptions import ParseError
from demon.models import (
    Cnot,
    CnotMode,
    Contact,
    Dephase,
    InitDirective,
    InitKind,
    Instruction,
    Ket,
    KetKind,
    Measure,
    Pulse,
    PulseProgram,
    Ramp,
    RampMode,
    SpinParams,
    Thermalize,
    Wait,
)

logger = logging.getLogger(__name__)

PARAM_NAMES = ("mu1", "mu2", "B", "T1", "T2", "gamma")
# parameters that must be strictly positive; the others must be non-negative
_POSITIVE = {"mu1", "mu2", "T1", "T2"}

ANGLE_LITERALS = {"PI": math.pi, "PI/2": math.pi / 2, "3PI/2": 3 * math.pi / 2}

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INTEGER = re.compile(r"\d+\Z")
_TOKEN = re.compile(r"\S+")


class Token(NamedTuple):
    text: str
    column: int


class _Line:
    """Tokens of one statement with helpers that fail with the right column."""

    def __init__(self, number: int, tokens: List[Token], end_column: int):
        self.line_no = number
        self.tokens = tokens
        self.end_column = end_column

    @property
    def keyword(self) -> str:
        return self.tokens[0].text.upper()

    def error(self, message: str, index: Optional[int] = None) -> ParseError:
        column = self.tokens[index].column if index is not None else self.tokens[0].column
        return ParseError(message, self.line_no, column)

    def arity(self, low: int, high: Optional[int] = None) -> None:
        high = low if high is None else high
        n = len(self.tokens) - 1
        if n < low:
            raise ParseError(f"{self.keyword} expects {low} argument(s), got {n}",
                             self.line_no, self.end_column)
        if n > high:
            raise self.error(f"unexpected token {self.tokens[high + 1].text!r}", high + 1)

    def word(self, index: int) -> str:
        return self.tokens[index].text.upper()

    def number(self, index: int) -> float:
        text = self.tokens[index].text
        if not _NUMBER.match(text):
            raise self.error(f"malformed number {text!r}", index)
        value = float(text)
        if not math.isfinite(value):
            raise self.error(f"number out of range {text!r}", index)
        return value

    def integer(self, index: int) -> int:
        text = self.tokens[index].text
        if not _INTEGER.match(text):
            raise self.error(f"malformed integer {text!r}", index)
        return int(text)

    def angle(self, index: int) -> float:
        literal = ANGLE_LITERALS.get(self.word(index))
        return literal if literal is not None else self.number(index)

    def spin(self, index: int) -> int:
        text = self.tokens[index].text
        if text not in ("1", "2"):
            raise self.error(f"spin index must be 1 or 2, got {text!r}", index)
        return int(text)

    def choice(self, index: int, allowed: Dict[str, object]) -> object:
        value = allowed.get(self.word(index))
        if value is None:
            raise self.error(f"expected one of {', '.join(allowed)}, got {self.tokens[index].text!r}", index)
        return value


# ---------------------------------------------------------------------------
# statements
# ---------------------------------------------------------------------------

_CNOT_MODES = {m.name: m for m in CnotMode}
_RAMP_MODES = {m.name: m for m in RampMode}
_SWITCH = {"ON": True, "OFF": False}


def _pulse(line: _Line) -> Pulse:
    line.arity(2, 3)
    phase = line.angle(3) if len(line.tokens) > 3 else 0.0
    return Pulse(spin=line.spin(1), angle=line.angle(2), phase=phase)


def _wait(line: _Line) -> Wait:
    line.arity(1)
    duration = line.number(1)
    if duration < 0:
        raise line.error("duration must be non-negative", 1)
    return Wait(duration=duration)


def _cnot(line: _Line) -> Cnot:
    line.arity(2, 3)
    control, target = line.spin(1), line.spin(2)
    if control == target:
        raise line.error("control and target must differ", 2)
    mode = line.choice(3, _CNOT_MODES) if len(line.tokens) > 3 else CnotMode.IDEAL
    return Cnot(control=control, target=target, mode=mode)


def _single(factory: Callable[..., Instruction]) -> Callable[[_Line], Instruction]:
    def build(line: _Line) -> Instruction:
        line.arity(1)
        return factory(spin=line.spin(1))
    return build


def _contact(line: _Line) -> Contact:
    line.arity(2)
    return Contact(spin=line.spin(1), on=line.choice(2, _SWITCH))


def _ramp(line: _Line) -> Ramp:
    line.arity(4)
    spin = line.spin(1)
    b_target = line.number(2)
    if b_target <= 0:
        raise line.error("ramp target field must be positive", 2)
    n_steps = line.integer(3)
    if n_steps < 1:
        raise line.error("ramp needs at least one step", 3)
    return Ramp(spin=spin, B_target=b_target, n_steps=n_steps, mode=line.choice(4, _RAMP_MODES))


INSTRUCTIONS: Dict[str, Callable[[_Line], Instruction]] = {
    "PULSE": _pulse,
    "WAIT": _wait,
    "CNOT": _cnot,
    "MEASURE": _single(Measure),
    "DEPHASE": _single(Dephase),
    "CONTACT": _contact,
    "THERMALIZE": _single(Thermalize),
    "RAMP": _ramp,
}


def _ket(line: _Line, index: int) -> Tuple[Ket, int]:
    """Parse the ket starting at ``index``; returns it and the next token index."""
    if index >= len(line.tokens):
        raise ParseError("INIT STATE expects two kets", line.line_no, line.end_column)
    kind = line.choice(index, {k.name: k for k in KetKind})
    if kind == KetKind.TIPPED:
        if index + 1 >= len(line.tokens):
            raise ParseError("TIPPED expects an angle", line.line_no, line.end_column)
        return Ket(kind=kind, theta=line.angle(index + 1)), index + 2
    return Ket(kind=kind), index + 1


def _init(line: _Line) -> InitDirective:
    line.arity(1, 5)
    kind = line.choice(1, {k.name: k for k in InitKind})
    if kind == InitKind.THERMAL:
        if len(line.tokens) == 2:
            return InitDirective()
        line.arity(3)
        if line.word(2) != "TIPPED":
            raise line.error(f"expected TIPPED, got {line.tokens[2].text!r}", 2)
        return InitDirective(tipped=line.angle(3))
    first, nxt = _ket(line, 2)
    second, nxt = _ket(line, nxt)
    if nxt < len(line.tokens):
        raise line.error(f"unexpected token {line.tokens[nxt].text!r}", nxt)
    return InitDirective(kind=InitKind.STATE, kets=(first, second))


def _param(line: _Line, params: Dict[str, float]) -> None:
    line.arity(2)
    names = {n.upper(): n for n in PARAM_NAMES}
    name = names.get(line.word(1))
    if name is None:
        raise line.error(f"unknown parameter {line.tokens[1].text!r}", 1)
    if name in params:
        raise line.error(f"duplicate parameter {name}", 1)
    value = line.number(2)
    if name in _POSITIVE and value <= 0:
        raise line.error(f"{name} must be positive", 2)
    if value < 0:
        raise line.error(f"{name} must be non-negative", 2)
    params[name] = value


def _read(text: Union[str, TextIO]) -> str:
    return text.read() if hasattr(text, "read") else text


def parse_program(text: Union[str, TextIO]) -> PulseProgram:
    """Parse pulse-program text into a PulseProgram.

    Args:
        text: Program source or an open text stream; LF and CRLF line endings are accepted.

    Raises:
        ParseError: With the line and column of the first offending token.
    """
    params: Dict[str, float] = {}
    init: Optional[InitDirective] = None
    instructions: List[Instruction] = []
    last_line = 1

    for number, raw in enumerate(_read(text).replace("\r\n", "\n").split("\n"), start=1):
        code = raw.split("#", 1)[0].rstrip("\r")
        tokens = [Token(m.group(), m.start() + 1) for m in _TOKEN.finditer(code)]
        if not tokens:
            continue
        last_line = number
        line = _Line(number, tokens, len(code.rstrip()) + 1)
        keyword = line.keyword

        if keyword == "PARAM":
            if init is not None:
                raise line.error("PARAM after INIT")
            _param(line, params)
        elif keyword == "INIT":
            if init is not None:
                raise line.error("duplicate INIT")
            if not params:
                raise line.error("missing PARAM block")
            missing = [n for n in PARAM_NAMES if n not in params]
            if missing:
                raise line.error(f"missing PARAM {missing[0]}")
            init = _init(line)
        elif keyword in INSTRUCTIONS:
            if len(params) < len(PARAM_NAMES):
                raise line.error(f"instruction {keyword} before parameters")
            if init is None:
                raise line.error(f"instruction {keyword} before INIT")
            instructions.append(INSTRUCTIONS[keyword](line))
        else:
            raise line.error(f"unknown keyword {tokens[0].text!r}")

    if not params:
        raise ParseError("missing PARAM block", last_line)
    if init is None:
        raise ParseError("missing INIT", last_line)
    try:
        program = PulseProgram(params=SpinParams(**params), init=init, instructions=tuple(instructions))
    except ValidationError as err:
        raise ParseError(f"invalid program: {err.errors()[0]['msg']}", last_line) from err
    logger.debug(f"parsed {len(program.instructions)} instruction(s)")
    return program


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------

def format_number(x: float) -> str:
    """Shortest decimal that reads back to the same float."""
    return repr(float(x))


def format_angle(x: float) -> str:
    for literal, value in ANGLE_LITERALS.items():
        if x == value:
            return literal
    return format_number(x)


def _format_ket(ket: Ket) -> str:
    if ket.kind == KetKind.TIPPED:
        return f"TIPPED {format_angle(ket.theta)}"
    return ket.kind.name


def _format_instruction(op: Instruction) -> str:
    if isinstance(op, Pulse):
        return f"PULSE {op.spin} {format_angle(op.angle)} {format_angle(op.phase)}"
    if isinstance(op, Wait):
        return f"WAIT {format_number(op.duration)}"
    if isinstance(op, Cnot):
        return f"CNOT {op.control} {op.target} {op.mode.name}"
    if isinstance(op, Contact):
        return f"CONTACT {op.spin} {'ON' if op.on else 'OFF'}"
    if isinstance(op, Ramp):
        return f"RAMP {op.spin} {format_number(op.B_target)} {op.n_steps} {op.mode.name}"
    return f"{op.op} {op.spin}"


def serialize_program(program: PulseProgram) -> str:
    """Canonical text: all six PARAM lines, INIT, then one instruction per line, LF endings."""
    params = program.params.model_dump()
    lines = [f"PARAM {name} {format_number(params[name])}" for name in PARAM_NAMES]
    init = program.init
    if init.kind == InitKind.STATE:
        lines.append("INIT STATE " + " ".join(_format_ket(k) for k in init.kets))
    elif init.tipped is not None:
        lines.append(f"INIT THERMAL TIPPED {format_angle(init.tipped)}")
    else:
        lines.append("INIT THERMAL")
    lines.extend(_format_instruction(op) for op in program.instructions)
    return "\n".join(lines) + "\n"
