import numpy as np
import pytest

from demon.exceptions import InvariantViolationError
from demon.guardrails import (
    density_matrix_check,
    guardrail_router,
    ledger_check,
    report_violation,
)
from demon.models import LedgerEntry
from demon.qmatrix import DensityMatrix


def _unchecked(mat):
    return DensityMatrix.model_construct(mat=np.asarray(mat, dtype=complex))


def test_valid_state_passes():
    rho = DensityMatrix(mat=np.eye(4) / 4)
    result = density_matrix_check({"rho": rho})
    assert result == {"guardrail_triggered": False, "reason": ""}
    assert guardrail_router(result) == "continue"


@pytest.mark.parametrize(
    "mat,reason",
    [
        (np.diag([1.2, -0.2]), "rho has a negative eigenvalue"),
        (np.diag([0.5, 0.4]), "rho has trace 0.9"),
        ([[0.5, 0.1], [0.0, 0.5]], "rho is not Hermitian"),
    ],
)
def test_broken_states_trigger(mat, reason):
    result = density_matrix_check({"rho": _unchecked(mat)})
    assert result["guardrail_triggered"]
    assert result["reason"] == reason
    assert guardrail_router(result) == "report_violation"


def test_ledger_check_rejects_non_finite_flows():
    ok = LedgerEntry(label="cnot 1 2", work_on_field=0.1)
    bad = LedgerEntry.model_construct(label="ramp", work_on_field=float("nan"), heat_from_res1=0.0,
                                      heat_from_res2=0.0, entropy_to_res1=0.0, entropy_to_res2=0.0)
    assert not ledger_check({"entries": [ok]})["guardrail_triggered"]
    assert not ledger_check({"entries": []})["guardrail_triggered"]
    result = ledger_check({"entries": [ok, bad]})
    assert result["guardrail_triggered"]
    assert result["reason"] == "ramp: work_on_field is not finite"


def test_report_violation_names_the_instruction():
    with pytest.raises(InvariantViolationError) as info:
        report_violation({"pc": 3, "reason": "rho has a negative eigenvalue"})
    assert info.value.instruction_index == 2
    assert str(info.value) == "instruction 2: rho has a negative eigenvalue"
