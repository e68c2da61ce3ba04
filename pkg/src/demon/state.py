# src/demon/state.py
import operator
from typing import Annotated, List, Tuple, TypedDict

from demon.models import LedgerEntry, PulseProgram
from demon.qmatrix import DensityMatrix


class ProgramState(TypedDict, total=False):
    """State folded through the executor graph, one instruction per pass."""
    program: PulseProgram
    # two-spin state after the last executed instruction
    rho: DensityMatrix
    # field seen by each spin
    fields: Tuple[float, float]
    # reservoir contact of each spin
    contact: Tuple[bool, bool]
    # index of the next instruction
    pc: int
    # one entry per executed instruction, in program order
    entries: Annotated[List[LedgerEntry], operator.add]
    # nats of information generated by MEASURE/DEPHASE
    info_generated: float

    guardrail_triggered: bool
    reason: str
