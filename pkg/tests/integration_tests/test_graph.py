import math

import numpy as np
import pytest

from demon.engine import swap_work_closed, tipped_pair
from demon.exceptions import EnginePreconditionError
from demon.graph import create_initial_state, graph, initial_density, run_program
from demon.program import parse_program
from demon.thermo import LN2

HEADER = """\
PARAM mu1 2
PARAM mu2 1
PARAM B 1
PARAM T1 8
PARAM T2 1
PARAM gamma 1
"""

SWAP = HEADER + """\
INIT THERMAL
CNOT 1 2
CNOT 2 1
CNOT 1 2
"""


def _run(body, header=HEADER):
    return run_program(parse_program(header + body))


def test_graph_has_guardrail_nodes():
    nodes = set(graph.get_graph().nodes)
    assert {"execute_instruction", "density_matrix_check", "ledger_check", "report_violation"} <= nodes


def test_swap_program_matches_closed_form():
    program = parse_program(SWAP)
    outcome = run_program(program)
    assert abs(outcome.simulated_W - swap_work_closed(program.params)) <= 1e-10
    assert [e.label for e in outcome.ledger.steps] == ["cnot 1 2", "cnot 2 1", "cnot 1 2"]
    assert outcome.residuals["first_law"] <= 1e-10


def test_pulsed_cnot_books_the_same_work():
    ideal = run_program(parse_program(SWAP))
    pulsed = run_program(parse_program(SWAP.replace("CNOT 1 2\n", "CNOT 1 2 PULSED\n")))
    assert pulsed.simulated_W == pytest.approx(ideal.simulated_W, abs=1e-9)


def test_selective_cnot_acts_as_the_ideal_gate():
    ideal = run_program(parse_program(SWAP))
    selective = run_program(parse_program(SWAP.replace("CNOT 2 1\n", "CNOT 2 1 SELECTIVE\n")))
    assert selective.simulated_W == ideal.simulated_W
    assert selective.final_state.distance(ideal.final_state) <= 1e-15


def test_tiny_negative_pulse_angle_runs():
    outcome = _run("INIT THERMAL\nPULSE 1 -1e-17\n")
    assert outcome.simulated_W == pytest.approx(0.0, abs=1e-15)


def test_empty_program_gives_empty_ledger():
    outcome = _run("INIT THERMAL\n")
    assert outcome.ledger.steps == ()
    assert outcome.ledger.totals() == {"W_out": 0.0, "Q_in": 0.0, "Q_out": 0.0, "dS_total": 0.0}
    assert outcome.efficiency is None


def test_basic_cycle_program():
    outcome = _run("""\
INIT THERMAL
CNOT 1 2
CNOT 2 1
CNOT 1 2
CONTACT 1 ON
THERMALIZE 1
CONTACT 1 OFF
CONTACT 2 ON
THERMALIZE 2
CONTACT 2 OFF
""")
    assert outcome.efficiency == pytest.approx(0.5, abs=1e-10)
    assert outcome.final_state.distance(outcome.initial_state) <= 1e-12


def test_measurement_generates_information():
    outcome = _run("INIT STATE PLUS DOWN\nMEASURE 1\n")
    assert outcome.info_generated == pytest.approx(LN2, abs=1e-12)
    assert outcome.ledger.steps[0].label == "measure 1"
    assert outcome.simulated_W == 0.0


def test_thermalize_without_contact_is_skipped():
    outcome = _run("INIT THERMAL\nTHERMALIZE 1\n")
    assert outcome.ledger.steps[0].label == "thermalize 1 skipped"
    assert outcome.ledger.steps[0].heat_from_res1 == 0.0


def test_pulses_conserve_energy_as_work():
    outcome = _run("INIT THERMAL\nPULSE 1 PI/2\nWAIT 0.3\nPULSE 2 PI 3PI/2\n")
    assert outcome.residuals["first_law"] <= 1e-10
    assert outcome.residuals["entropy_production"] >= -1e-10


def test_long_program_fits_recursion_limit():
    outcome = _run("INIT THERMAL\n" + "WAIT 0.1\n" * 40)
    assert len(outcome.ledger.steps) == 40


def test_isothermal_ramp_needs_contact():
    with pytest.raises(EnginePreconditionError) as info:
        _run("INIT THERMAL\nCNOT 1 2\nRAMP 1 0.5 10 ISOTHERMAL\n")
    assert info.value.instruction_index == 1
    assert str(info.value) == "instruction 1: isothermal RAMP 1 needs reservoir contact"


def test_adiabatic_ramp_needs_isolation():
    with pytest.raises(EnginePreconditionError) as info:
        _run("INIT THERMAL\nCONTACT 2 ON\nRAMP 2 0.5 10 ADIABATIC\n")
    assert info.value.instruction_index == 1


def test_ramp_from_zero_field_is_rejected():
    header = HEADER.replace("PARAM B 1", "PARAM B 0")
    with pytest.raises(EnginePreconditionError) as info:
        _run("INIT THERMAL\nRAMP 1 0.5 10 ADIABATIC\n", header=header)
    assert info.value.instruction_index == 0


def test_pulsed_cnot_needs_coupling():
    header = HEADER.replace("PARAM gamma 1", "PARAM gamma 0")
    with pytest.raises(EnginePreconditionError) as info:
        _run("INIT THERMAL\nWAIT 1\nCNOT 1 2 PULSED\n", header=header)
    assert info.value.instruction_index == 1


def test_initial_state_follows_init():
    tipped = parse_program(HEADER + "INIT THERMAL TIPPED 0.4\n")
    assert initial_density(tipped).distance(tipped_pair(tipped.params, 0.4)) <= 1e-14
    state = parse_program(HEADER + "INIT STATE UP DOWN\n")
    assert initial_density(state).populations()[2] == pytest.approx(1.0)
    start = create_initial_state(state)
    assert start["pc"] == 0 and start["contact"] == (False, False)
    assert np.isclose(math.fsum(start["rho"].populations()), 1.0)
