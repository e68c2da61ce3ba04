"""Built-in pulse programs for the protocols of the engine, each with its closed forms."""
import logging
import math
from typing import Dict, List, Optional, Tuple

from demon.configuration import CONFIG, Tolerance, tolerance
from demon.engine import (
    adiabatic_targets,
    basic_efficiency,
    carnot_work_closed,
    info_gained_step1,
    ramp_tolerance,
    require_engine_mode,
    spin_gibbs,
    step_works_closed,
    swap_work_closed,
    tipped_efficiency_closed,
    tipped_populations,
    tipped_work_closed,
)
from demon.exceptions import EnginePreconditionError, InvariantViolationError
from demon.graph import run_program
from demon.models import (
    Cnot,
    Contact,
    CycleOutcome,
    Dephase,
    FieldRule,
    InitDirective,
    Instruction,
    Pulse,
    PulseProgram,
    Ramp,
    RampMode,
    SpinParams,
    TemplateKnobs,
    TemplateName,
    Thermalize,
    TippedSpec,
)
from demon.qmatrix import partial_trace
from demon.thermo import binary_entropy, entropy_of_x, gibbs_distribution

logger = logging.getLogger(__name__)

# erasure field when none is given: μ₂B′/T₂ = 20
DEFAULT_ERASURE_X = 20.0

_SWAP_PARAMS = SpinParams(mu1=2.0, mu2=1.0, B=1.0, T1=8.0, T2=1.0, gamma=1.0)
_CARNOT_PARAMS = SpinParams(mu1=1.0, mu2=1.5, B=1.0, T1=2.0, T2=1.0, gamma=1.0)

# parameters each template runs with unless overridden
DEFAULT_PARAMS: Dict[TemplateName, SpinParams] = {
    TemplateName.SWAP: _SWAP_PARAMS,
    TemplateName.BASIC: _SWAP_PARAMS,
    TemplateName.CARNOT: _CARNOT_PARAMS,
    # nearly zero field: spin 2 starts close to I/2
    TemplateName.ERASE: SpinParams(mu1=1.0, mu2=1.0, B=5e-7, T1=1.0, T2=0.5),
    TemplateName.TIPPED: _CARNOT_PARAMS,
}


def _swap() -> List[Instruction]:
    return [Cnot(control=1, target=2), Cnot(control=2, target=1), Cnot(control=1, target=2)]


def _with_contact(spin: int, *ops: Instruction) -> List[Instruction]:
    return [Contact(spin=spin, on=True), *ops, Contact(spin=spin, on=False)]


def _matched_legs(spin: int, B_adiabatic: float, B: float, n: int) -> List[Instruction]:
    """Adiabatic ramp to ``B_adiabatic``, then isothermal ramp back to ``B`` in contact."""
    return [Ramp(spin=spin, B_target=B_adiabatic, n_steps=n, mode=RampMode.ADIABATIC),
            *_with_contact(spin, Ramp(spin=spin, B_target=B, n_steps=n, mode=RampMode.ISOTHERMAL))]


def _n_steps(knobs: TemplateKnobs) -> int:
    return knobs.n_steps or CONFIG["engine"]["default_n_steps"]


def erasure_field(params: SpinParams, knobs: TemplateKnobs) -> float:
    return knobs.B_prime or DEFAULT_ERASURE_X * params.T2 / params.mu2


def erasure_target_x(params: SpinParams, spec: TippedSpec) -> float:
    """μ₂B*/T₂ at which the dephased tilted populations are thermal; negative when inverted."""
    star = tipped_populations(params, spec)
    return 0.5 * math.log(max(star.p_down, 1e-300) / max(star.p_up, 1e-300))


def build_template(name: TemplateName, params: SpinParams,
                   knobs: Optional[TemplateKnobs] = None) -> PulseProgram:
    """Instruction list of a built-in protocol."""
    knobs = knobs or TemplateKnobs()
    name = TemplateName(name)
    B = params.B
    init = InitDirective()
    ops: List[Instruction] = []

    if name == TemplateName.SWAP:
        ops = _swap()
    elif name == TemplateName.BASIC:
        ops = [*_swap(), *_with_contact(1, Thermalize(spin=1)), *_with_contact(2, Thermalize(spin=2))]
    elif name == TemplateName.CARNOT:
        require_engine_mode(params)
        n = _n_steps(knobs)
        b1, b2 = adiabatic_targets(params, knobs.field_rule)
        ops = [*_swap(), *_matched_legs(1, b1, B, n), *_matched_legs(2, b2, B, n)]
    elif name == TemplateName.ERASE:
        if B <= 0:
            raise EnginePreconditionError("erasure needs a positive base field")
        n = _n_steps(knobs)
        B_prime = erasure_field(params, knobs)
        ops = [*_with_contact(2, Ramp(spin=2, B_target=B_prime, n_steps=n, mode=RampMode.ISOTHERMAL)),
               Ramp(spin=2, B_target=B, n_steps=n, mode=RampMode.ADIABATIC)]
    else:
        require_engine_mode(params)
        n = _n_steps(knobs)
        init = InitDirective(tipped=knobs.theta)
        b1, _ = adiabatic_targets(params)
        x_star = erasure_target_x(params, TippedSpec(theta=knobs.theta))
        ops = [*_swap(), *_matched_legs(1, b1, B, n), Dephase(spin=2)]
        if x_star < 0:
            ops.append(Pulse(spin=2, angle=math.pi))
        b_star = max(min(abs(x_star), 300.0) * params.T2 / params.mu2,
                     B * CONFIG["engine"]["min_field_fraction"])
        ops.extend(_matched_legs(2, b_star, B, n))

    return PulseProgram(params=params, init=init, instructions=tuple(ops))


def template_expectations(name: TemplateName, params: SpinParams,
                          knobs: Optional[TemplateKnobs] = None
                          ) -> Tuple[Dict[str, float], Optional[float], Optional[float]]:
    """Closed forms, closed-form work and the work tolerance of a built-in protocol."""
    knobs = knobs or TemplateKnobs()
    name = TemplateName(name)
    carnot = 1.0 - params.T2 / params.T1

    if name in (TemplateName.SWAP, TemplateName.BASIC):
        closed = {"swap_work": swap_work_closed(params), **step_works_closed(params),
                  "info_gained_step1": info_gained_step1(params)}
        if name == TemplateName.BASIC:
            closed["basic_efficiency"] = basic_efficiency(params)
        return closed, closed["swap_work"], tolerance(Tolerance.LEDGER)

    if name == TemplateName.CARNOT:
        n = _n_steps(knobs)
        b1, b2 = adiabatic_targets(params, knobs.field_rule)
        w_c = carnot_work_closed(params)
        closed = {"carnot_work": w_c, "S1": entropy_of_x(params.x1), "S2": entropy_of_x(params.x2),
                  "B1": b1, "B2_prime": b2, "carnot_efficiency": carnot}
        tol = (ramp_tolerance(params, params.x2 - params.x1, n)
               if knobs.field_rule == FieldRule.MATCHED else None)
        return closed, w_c, tol

    if name == TemplateName.ERASE:
        B_prime = erasure_field(params, knobs)
        s_final = entropy_of_x(params.mu2 * B_prime / params.T2)
        closed = {"heat_dumped": params.T2 * (entropy_of_x(params.x2) - s_final),
                  "p_up": gibbs_distribution(spin_gibbs(params, 2, B_prime)).p_up,
                  "B_prime": B_prime}
        return closed, None, None

    spec = TippedSpec(theta=knobs.theta)
    n = _n_steps(knobs)
    s1, s2 = entropy_of_x(params.x1), entropy_of_x(params.x2)
    s_star = binary_entropy(tipped_populations(params, spec).p_up)
    gap = params.T2 * (s_star - s1)
    w_star = tipped_work_closed(params, spec)
    work = w_star + carnot_work_closed(params) - gap
    closed = {"work": work, "tipped_work": w_star, "route_gap": gap, "S_star": s_star,
              "S1": s1, "S2": s2, "quantum_efficiency": tipped_efficiency_closed(params, spec),
              "carnot_efficiency": carnot, "delta_S_Q": s_star - s1}
    tol = tolerance(Tolerance.ALGEBRAIC) + ramp_tolerance(params, params.x2, n)
    return closed, work, tol


def _residuals(name: TemplateName, outcome: CycleOutcome) -> Dict[str, float]:
    closed = outcome.closed_form
    ledger = outcome.ledger
    res: Dict[str, float] = {}
    if outcome.closed_form_W is not None:
        res["work"] = abs(outcome.simulated_W - outcome.closed_form_W)
    if name in (TemplateName.SWAP, TemplateName.BASIC):
        res["swap_work"] = abs(math.fsum(e.work_on_field for e in ledger.steps[:3]) - closed["swap_work"])
        for i, key in enumerate(("step1", "step2", "step3")):
            res[key] = abs(ledger.steps[i].work_on_field - closed[key])
        if name == TemplateName.BASIC and outcome.efficiency is not None:
            res["efficiency"] = abs(outcome.efficiency - closed["basic_efficiency"])
    elif name == TemplateName.CARNOT and outcome.efficiency is not None:
        res["efficiency"] = abs(outcome.efficiency - closed["carnot_efficiency"])
    elif name == TemplateName.ERASE:
        p_up = float(partial_trace(outcome.final_state, 2).populations()[1])
        res["heat_dumped"] = abs(ledger.Q_out - closed["heat_dumped"])
        res["p_up"] = abs(p_up - closed["p_up"])
    elif name == TemplateName.TIPPED and outcome.efficiency is not None:
        res["efficiency"] = abs(outcome.efficiency - closed["quantum_efficiency"])
        if outcome.efficiency > closed["carnot_efficiency"] + tolerance(Tolerance.ALGEBRAIC):
            raise InvariantViolationError(f"tipped program beat the Carnot bound: {outcome.efficiency!r}")
    return res


def run_template(name: TemplateName, params: SpinParams,
                 knobs: Optional[TemplateKnobs] = None) -> CycleOutcome:
    """Build, execute and check a built-in protocol."""
    name = TemplateName(name)
    program = build_template(name, params, knobs)
    closed, closed_w, tol = template_expectations(name, params, knobs)
    outcome = run_program(
        program,
        protocol=name.value,
        closed_form_W=closed_w,
        work_tolerance=tol,
        closed_form=closed,
        efficiency_bound=None if name == TemplateName.ERASE else 1.0 - params.T2 / params.T1,
    )
    return outcome.model_copy(update={"residuals": {**_residuals(name, outcome), **outcome.residuals}})
