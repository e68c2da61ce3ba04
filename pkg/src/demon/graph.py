# src/demon/graph.py
"""Pulse-program executor: a StateGraph that folds one instruction per pass."""
import logging
from typing import Any, Callable, Dict, Optional

import numpy as np
from langgraph.constants import START
from langgraph.graph import END, StateGraph
from pydantic import ValidationError

from demon.engine import equilibrate, ramp, summarize_run, thermal_pair, tipped_pair
from demon.exceptions import EnginePreconditionError
from demon.guardrails import add_guardrails_to_graph
from demon.models import (
    Cnot,
    CnotMode,
    Contact,
    CycleLedger,
    CycleOutcome,
    Dephase,
    InitKind,
    LedgerEntry,
    Measure,
    Pulse,
    PulseProgram,
    Ramp,
    RampMode,
    RampSchedule,
    Thermalize,
    Wait,
)
from demon.qmatrix import DensityMatrix
from demon.spins import (
    apply_unitary,
    cnot_ideal,
    cnot_pulse_sequence,
    free_evolution,
    rotation_pulse,
)
from demon.state import ProgramState
from demon.thermo import delta_S_Q, measure, z_channel

logger = logging.getLogger(__name__)


# 1) Initial state
def initial_density(program: PulseProgram) -> DensityMatrix:
    """Two-spin state named by the INIT directive."""
    params, init = program.params, program.init
    if init.kind == InitKind.STATE:
        k1, k2 = init.kets
        return DensityMatrix.from_ket(np.kron(k1.amplitudes(), k2.amplitudes()))
    if init.tipped is not None:
        return tipped_pair(params, init.tipped)
    return thermal_pair(params)


def create_initial_state(program: PulseProgram) -> ProgramState:
    return ProgramState(
        program=program,
        rho=initial_density(program),
        fields=(program.params.B, program.params.B),
        contact=(False, False),
        pc=0,
        entries=[],
        info_generated=0.0,
        guardrail_triggered=False,
        reason="",
    )


# 2) Instruction handlers; each returns the state update of one instruction
def _unitary_update(state: ProgramState, u, label: str) -> Dict[str, Any]:
    rho, record = apply_unitary(state["rho"], u, state["program"].params, label, state["fields"])
    return {"rho": rho, "entries": [LedgerEntry(label=label, work_on_field=record.work_on_field)]}


def _pulse(op: Pulse, state: ProgramState) -> Dict[str, Any]:
    return _unitary_update(state, rotation_pulse(op.spec()), f"pulse {op.spin}")


def _wait(op: Wait, state: ProgramState) -> Dict[str, Any]:
    return _unitary_update(state, free_evolution(state["program"].params, op.duration), "wait")


def _cnot(op: Cnot, state: ProgramState) -> Dict[str, Any]:
    if op.mode == CnotMode.PULSED:
        u = cnot_pulse_sequence(state["program"].params, op.control, op.target)
    else:
        u = cnot_ideal(op.control, op.target)
    return _unitary_update(state, u, f"cnot {op.control} {op.target}")


def _projective(spin: int, state: ProgramState, label: str) -> Dict[str, Any]:
    rho = state["rho"]
    channel = z_channel(spin, rho.dim)
    gain = delta_S_Q(rho, channel)
    return {
        "rho": measure(rho, channel),
        "info_generated": state["info_generated"] + gain,
        "entries": [LedgerEntry(label=label)],
    }


def _measure(op: Measure, state: ProgramState) -> Dict[str, Any]:
    return _projective(op.spin, state, f"measure {op.spin}")


def _dephase(op: Dephase, state: ProgramState) -> Dict[str, Any]:
    return _projective(op.spin, state, f"dephase {op.spin}")


def _contact(op: Contact, state: ProgramState) -> Dict[str, Any]:
    contact = list(state["contact"])
    contact[op.spin - 1] = op.on
    return {
        "contact": tuple(contact),
        "entries": [LedgerEntry(label=f"contact {op.spin} {'on' if op.on else 'off'}")],
    }


def _thermalize(op: Thermalize, state: ProgramState) -> Dict[str, Any]:
    if not state["contact"][op.spin - 1]:
        logger.warning(f"THERMALIZE {op.spin} without reservoir contact does nothing")
        return {"entries": [LedgerEntry(label=f"thermalize {op.spin} skipped")]}
    rho, entry = equilibrate(op.spin, state["rho"], state["program"].params, state["fields"])
    return {"rho": rho, "entries": [entry]}


def _ramp(op: Ramp, state: ProgramState) -> Dict[str, Any]:
    in_contact = state["contact"][op.spin - 1]
    if op.mode == RampMode.ISOTHERMAL and not in_contact:
        raise EnginePreconditionError(f"isothermal RAMP {op.spin} needs reservoir contact")
    if op.mode == RampMode.ADIABATIC and in_contact:
        raise EnginePreconditionError(f"adiabatic RAMP {op.spin} needs the reservoir disconnected")
    fields = list(state["fields"])
    sched = RampSchedule(B_start=fields[op.spin - 1], B_end=op.B_target,
                         n_steps=op.n_steps, mode=op.mode)
    rho, entry = ramp(op.spin, state["rho"], sched, state["program"].params)
    fields[op.spin - 1] = op.B_target
    return {"rho": rho, "fields": tuple(fields), "entries": [entry]}


_HANDLERS: Dict[str, Callable[[Any, ProgramState], Dict[str, Any]]] = {
    "PULSE": _pulse,
    "WAIT": _wait,
    "CNOT": _cnot,
    "MEASURE": _measure,
    "DEPHASE": _dephase,
    "CONTACT": _contact,
    "THERMALIZE": _thermalize,
    "RAMP": _ramp,
}


# 3) Nodes and routing
def execute_instruction(state: ProgramState) -> Dict[str, Any]:
    pc = state["pc"]
    op = state["program"].instructions[pc]
    try:
        update = _HANDLERS[op.op](op, state)
    except EnginePreconditionError as err:
        if err.instruction_index is not None:
            raise
        raise err.at(pc) from err
    except ValidationError as err:
        detail = err.errors()[0]["msg"]
        raise EnginePreconditionError(f"{op.op}: {detail}", instruction_index=pc) from err
    logger.debug(f"[{pc}] {op.op} -> {update['entries'][0].label}")
    return {**update, "pc": pc + 1}


def next_instruction_router(state: ProgramState) -> str:
    if state["pc"] < len(state["program"].instructions):
        return "execute_instruction"
    return "finish"


workflow = StateGraph(ProgramState)
workflow.add_node("execute_instruction", execute_instruction)
workflow = add_guardrails_to_graph(
    workflow,
    route_after=next_instruction_router,
    routes={"execute_instruction": "execute_instruction", "finish": END},
)

workflow.add_conditional_edges(
    START,
    next_instruction_router,
    {"execute_instruction": "execute_instruction", "finish": END},
)
workflow.add_edge("execute_instruction", "density_matrix_check")
workflow.add_edge("report_violation", END)

# 4) Compile
graph = workflow.compile()


def run_program(program: PulseProgram, protocol: str = "program",
                closed_form_W: Optional[float] = None,
                work_tolerance: Optional[float] = None,
                closed_form: Optional[Dict[str, float]] = None,
                efficiency_bound: Optional[float] = None) -> CycleOutcome:
    """Execute ``program`` instruction by instruction and close its ledger.

    Raises:
        EnginePreconditionError: An instruction could not run; carries its index.
        InvariantViolationError: A state or ledger invariant failed.
    """
    start = create_initial_state(program)
    # three supersteps per instruction plus the entry edge
    limit = 3 * len(program.instructions) + 8
    final = graph.invoke(start, config={"recursion_limit": limit})
    ledger = CycleLedger(steps=tuple(final["entries"]))
    return summarize_run(
        protocol,
        program.params,
        ledger,
        start["rho"],
        final["rho"],
        initial_fields=start["fields"],
        final_fields=final["fields"],
        info_generated=final["info_generated"],
        closed_form_W=closed_form_W,
        work_tolerance=work_tolerance,
        closed_form=closed_form,
        efficiency_bound=efficiency_bound,
    )


__all__ = ["graph", "workflow", "create_initial_state", "run_program"]
