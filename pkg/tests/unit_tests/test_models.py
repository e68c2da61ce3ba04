import math

import numpy as np
import pytest
from pydantic import ValidationError

from demon.models import (
    Cnot,
    CycleLedger,
    EfficiencyReport,
    InitDirective,
    InitKind,
    Ket,
    KetKind,
    LedgerEntry,
    PulseSpec,
    SpinDistribution,
    SpinParams,
    SweepParameter,
    SweepScale,
    SweepSpec,
    TemplateKnobs,
    WorkRecord,
)


def test_spin_params_domain():
    with pytest.raises(ValidationError):
        SpinParams(mu1=-1.0, mu2=1.0, B=1.0, T1=1.0, T2=1.0)
    with pytest.raises(ValidationError):
        SpinParams(mu1=1.0, mu2=1.0, B=1.0, T1=0.0, T2=1.0)
    with pytest.raises(ValidationError):
        SpinParams(mu1=1.0, mu2=1.0, B=float("nan"), T1=1.0, T2=1.0)


def test_spin_params_replace_revalidates():
    p = SpinParams(mu1=2.0, mu2=1.0, B=1.0, T1=8.0, T2=1.0)
    assert p.x1 == pytest.approx(0.25)
    assert p.replace(T1=4.0).x1 == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        p.replace(T2=-1.0)


def test_distribution_must_normalize():
    with pytest.raises(ValidationError):
        SpinDistribution(p_up=0.3, p_down=0.3)
    assert SpinDistribution.from_p_up(1.2).p_up == 1.0


def test_pulse_spec_wraps_angles():
    spec = PulseSpec.wrapped(1, 3 * math.pi, -math.pi / 2)
    assert spec.tip_angle == pytest.approx(math.pi)
    assert spec.phase == pytest.approx(3 * math.pi / 2)
    # negatives below the spacing of 2π wrap to zero, not to 2π
    tiny = PulseSpec.wrapped(1, -1e-17, -1e-17)
    assert (tiny.tip_angle, tiny.phase) == (0.0, 0.0)
    with pytest.raises(ValidationError):
        PulseSpec(target=3, tip_angle=1.0)


def test_work_record_conserves_energy():
    record = WorkRecord.coherent("flip", energy_before=-1.0, energy_after=-1.5)
    assert record.work_on_field == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        WorkRecord(label="bad", delta_spin_energy=1.0, work_on_field=1.0)


def test_efficiency_report_rejects_super_carnot():
    with pytest.raises(ValidationError):
        EfficiencyReport(carnot=0.5, quantum=0.6, generic=0.4, delta_S_Q=0.0, S_in=1.0, S_out=0.5)


def test_ledger_totals():
    ledger = CycleLedger().append(
        LedgerEntry(label="a", work_on_field=0.2),
        LedgerEntry(label="b", heat_from_res1=1.0, entropy_to_res1=-0.5),
        LedgerEntry(label="c", heat_from_res2=-0.8, entropy_to_res2=0.8),
    )
    assert ledger.totals() == pytest.approx({"W_out": 0.2, "Q_in": 1.0, "Q_out": 0.8, "dS_total": 0.3})
    assert ledger.first_law_residual() == pytest.approx(0.0, abs=1e-15)
    assert len(ledger.extend(ledger).steps) == 6


def test_cnot_control_and_target_differ():
    with pytest.raises(ValidationError):
        Cnot(control=1, target=1)


def test_ket_amplitudes():
    assert np.allclose(Ket(kind=KetKind.TIPPED, theta=0.0).amplitudes(), [1.0, 0.0])
    assert abs(Ket(kind=KetKind.PLUS).amplitudes()[1]) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(ValidationError):
        Ket(kind=KetKind.TIPPED)
    with pytest.raises(ValidationError):
        Ket(kind=KetKind.UP, theta=1.0)


def test_init_directive_shape():
    assert InitDirective().kind == InitKind.THERMAL
    with pytest.raises(ValidationError):
        InitDirective(kind=InitKind.STATE)
    with pytest.raises(ValidationError):
        InitDirective(kets=(Ket(kind=KetKind.UP), Ket(kind=KetKind.DOWN)))


def test_sweep_grids():
    linear = SweepSpec(parameter=SweepParameter.T2, start=0.1, end=1.0, count=10)
    assert linear.grid()[0] == pytest.approx(0.1)
    assert linear.grid()[-1] == pytest.approx(1.0)
    log = SweepSpec(parameter=SweepParameter.B, start=0.01, end=1.0, count=3, scale=SweepScale.LOG)
    assert log.grid() == pytest.approx([0.01, 0.1, 1.0])
    steps = SweepSpec(parameter=SweepParameter.N_STEPS, start=100, end=1000, count=4)
    assert steps.grid() == [100.0, 400.0, 700.0, 1000.0]
    with pytest.raises(ValidationError):
        SweepSpec(parameter=SweepParameter.B, start=0.0, end=1.0, count=3, scale=SweepScale.LOG)
    with pytest.raises(ValidationError):
        SweepSpec(parameter=SweepParameter.B, start=0.0, end=1.0, count=1)


def test_template_knobs_replace():
    knobs = TemplateKnobs(n_steps=500)
    assert knobs.replace(theta=0.2).n_steps == 500
    with pytest.raises(ValidationError):
        knobs.replace(theta=4.0)
