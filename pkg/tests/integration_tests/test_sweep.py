import pytest

from demon.engine import swap_work_closed
from demon.exceptions import EnginePreconditionError
from demon.models import SweepParameter, SweepScale, SweepSpec, TemplateKnobs, TemplateName
from demon.program import parse_program
from demon.sweep import run_sweep
from demon.templates import DEFAULT_PARAMS, build_template

HEADER = """\
PARAM mu1 2
PARAM mu2 1
PARAM B 1
PARAM T1 8
PARAM T2 1
PARAM gamma 1
"""

SWAP = parse_program(HEADER + "INIT THERMAL\nCNOT 1 2\nCNOT 2 1\nCNOT 1 2\n")


def test_program_sweep_over_field():
    spec = SweepSpec(parameter=SweepParameter.B, start=0.5, end=1.5, count=3)
    table = run_sweep(SWAP, spec)
    assert list(table["B"]) == [0.5, 1.0, 1.5]
    for b, w in zip(table["B"], table["simulated_W"]):
        assert w == pytest.approx(swap_work_closed(SWAP.params.replace(B=b)), abs=1e-10)
    assert {"protocol", "efficiency", "W_out", "Q_in", "Q_out", "dS_total"} <= set(table.columns)


def test_template_sweep_rebuilds_derived_fields():
    knobs = TemplateKnobs(n_steps=500)
    params = DEFAULT_PARAMS[TemplateName.CARNOT]
    base = build_template(TemplateName.CARNOT, params, knobs)
    spec = SweepSpec(parameter=SweepParameter.T2, start=0.5, end=1.0, count=3)
    table = run_sweep(base, spec, template=TemplateName.CARNOT, knobs=knobs, max_workers=2)
    assert list(table["T2"]) == [0.5, 0.75, 1.0]
    for t2, eff in zip(table["T2"], table["efficiency"]):
        assert eff == pytest.approx(1.0 - t2 / params.T1, abs=1e-2)


def test_theta_sweep_on_thermal_program():
    spec = SweepSpec(parameter=SweepParameter.THETA, start=0.0, end=1.0, count=2)
    table = run_sweep(SWAP, spec)
    assert len(table) == 2
    assert table["simulated_W"][0] == pytest.approx(swap_work_closed(SWAP.params), abs=1e-10)


def test_theta_sweep_needs_thermal_init():
    program = parse_program(HEADER + "INIT STATE UP DOWN\nCNOT 1 2\n")
    spec = SweepSpec(parameter=SweepParameter.THETA, start=0.0, end=1.0, count=2)
    with pytest.raises(EnginePreconditionError):
        run_sweep(program, spec)


def test_n_steps_sweep_rewrites_ramps():
    program = parse_program(HEADER + "INIT THERMAL\nCONTACT 2 ON\nRAMP 2 2 10 ISOTHERMAL\n")
    spec = SweepSpec(parameter=SweepParameter.N_STEPS, start=10, end=1000, count=3, scale=SweepScale.LOG)
    table = run_sweep(program, spec)
    assert list(table["n_steps"]) == [10.0, 100.0, 1000.0]
    # coarser ramps lose more work
    assert table["simulated_W"].is_monotonic_increasing


def test_out_of_domain_range_is_rejected():
    spec = SweepSpec(parameter=SweepParameter.T1, start=-1.0, end=1.0, count=3)
    with pytest.raises(EnginePreconditionError, match="invalid range"):
        run_sweep(SWAP, spec)
