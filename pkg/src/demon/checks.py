"""Property suite run by ``demon check``: closed forms against simulation, conservation laws, parser."""
import logging
import math
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional

import numpy as np

from demon.configuration import CONFIG, Tolerance, tolerance
from demon.emit import emit
from demon.engine import (
    run_basic_cycle,
    run_carnot_cycle,
    run_erasure,
    run_swap_stage,
    swap_work_closed,
    tipped_measured_route,
    work_positive_region,
)
from demon.exceptions import DemonError, ParseError
from demon.graph import run_program
from demon.models import (
    Cnot,
    CnotMode,
    Contact,
    CycleOutcome,
    Dephase,
    Instruction,
    Measure,
    Pulse,
    PulseProgram,
    Ramp,
    RampMode,
    SpinParams,
    TemplateKnobs,
    TemplateName,
    Thermalize,
    TippedSpec,
    Wait,
)
from demon.program import parse_program, serialize_program
from demon.qmatrix import DensityMatrix, random_density_matrix
from demon.spins import cnot_fidelity
from demon.templates import DEFAULT_PARAMS, build_template, run_template
from demon.thermo import LN2, delta_S_Q, z_channel

logger = logging.getLogger(__name__)

SEED = 20240611

CARNOT_PARAMS = DEFAULT_PARAMS[TemplateName.CARNOT]
SWAP_PARAMS = DEFAULT_PARAMS[TemplateName.SWAP]
ERASURE_PARAMS = DEFAULT_PARAMS[TemplateName.ERASE]


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


class CheckFailed(AssertionError):
    """A property did not hold."""


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise CheckFailed(message)


def swap_grid() -> Iterable[SpinParams]:
    """10×10×10 grid over μ₂/μ₁, T₂/T₁ and μ₁B/T₁ with μ₁ = T₁ = 1."""
    for ratio_mu in np.linspace(0.1, 2.0, 10):
        for ratio_t in np.linspace(0.1, 2.0, 10):
            for x1 in np.linspace(0.05, 5.0, 10):
                yield SpinParams(mu1=1.0, mu2=float(ratio_mu), B=float(x1), T1=1.0, T2=float(ratio_t))


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

def check_swap_work() -> str:
    worst = max(abs(run_swap_stage(p).simulated_W - swap_work_closed(p)) for p in swap_grid())
    _expect(worst <= 1e-10, f"max |W - closed| = {worst:.3e}")
    return f"max |W - closed| = {worst:.3e} over 1000 points"


def check_basic_efficiency() -> str:
    worst, count = 0.0, 0
    for p in swap_grid():
        if not work_positive_region(p) or p.mu1 <= p.mu2:
            continue
        outcome = run_basic_cycle(p)
        worst = max(worst, abs(outcome.simulated_W / outcome.ledger.Q_in - (1.0 - p.mu2 / p.mu1)))
        count += 1
    _expect(count > 0, "no engine-region points")
    _expect(worst <= 1e-10, f"max efficiency error {worst:.3e}")
    return f"max efficiency error {worst:.3e} over {count} points"


def check_carnot_convergence() -> str:
    target_w = None
    errors = []
    for n in (10_000, 20_000):
        outcome = run_carnot_cycle(CARNOT_PARAMS, n)
        target_w = outcome.closed_form_W
        errors.append(abs(outcome.simulated_W - target_w))
        if n == 10_000:
            _expect(abs(outcome.efficiency - 0.5) <= 1e-3, f"efficiency {outcome.efficiency!r}")
            _expect(errors[0] <= 1e-3 * abs(target_w), f"work error {errors[0]:.3e}")
    ratio = errors[0] / errors[1]
    _expect(1.6 <= ratio <= 2.4, f"error ratio on doubling n = {ratio:.3f}")
    return f"error {errors[0]:.3e} at n=1e4, ratio {ratio:.3f} on doubling"


def check_equilibrium_null() -> str:
    rng = np.random.default_rng(SEED)
    for _ in range(1000):
        T = float(rng.uniform(0.1, 10.0))
        p = SpinParams(mu1=float(rng.uniform(0.1, 3.0)), mu2=float(rng.uniform(0.1, 3.0)),
                       B=float(rng.uniform(0.01, 5.0)), T1=T, T2=T)
        w = run_swap_stage(p).simulated_W
        _expect(w <= 1e-12, f"W = {w!r} at equal temperatures for {p}")
    mismatches = 0
    for _ in range(1000):
        p = SpinParams(mu1=float(rng.uniform(0.1, 3.0)), mu2=float(rng.uniform(0.1, 3.0)),
                       B=float(rng.uniform(0.01, 5.0)), T1=float(rng.uniform(0.1, 10.0)),
                       T2=float(rng.uniform(0.1, 10.0)))
        if abs(swap_work_closed(p)) < 1e-12:
            continue
        mismatches += (run_swap_stage(p).simulated_W > 0) != work_positive_region(p)
    _expect(mismatches == 0, f"{mismatches} sign mismatches")
    return "no work at equal temperatures; sign predicate exact"


def check_pulse_cnot() -> str:
    worst = 1.0
    for gamma in (0.1, 1.0, 10.0):
        for control, target in ((1, 2), (2, 1)):
            worst = min(worst, cnot_fidelity(SWAP_PARAMS.replace(gamma=gamma), control, target))
    _expect(worst >= 1.0 - tolerance(Tolerance.FIDELITY), f"fidelity {worst!r}")
    return f"min fidelity {worst:.15f}"


def check_measurement_cost() -> str:
    plus = DensityMatrix.from_ket(np.array([1.0, 1.0]) / math.sqrt(2.0))
    gain = delta_S_Q(plus, z_channel(None, 2))
    _expect(abs(gain - LN2) <= 1e-12, f"ΔS_Q(|→⟩) = {gain!r}")
    rng = np.random.default_rng(SEED)
    lowest = math.inf
    for i in range(1000):
        rho = random_density_matrix(rng, 4)
        lowest = min(lowest, delta_S_Q(rho, z_channel(1 + i % 2, 4)))
    _expect(lowest >= -1e-12, f"ΔS_Q = {lowest!r}")
    return f"ΔS_Q(|→⟩) = ln 2; min over random states {lowest:.3e}"


def check_quantum_efficiency() -> str:
    n = CONFIG["engine"]["default_n_steps"]
    worst_eff = worst_gap = worst_raw = 0.0
    for theta in np.linspace(0.0, math.pi / 2, 17):
        outcome = tipped_measured_route(CARNOT_PARAMS, TippedSpec(theta=float(theta)), n)
        eff, bound = outcome.efficiency, outcome.efficiency_bound
        _expect(eff <= bound + tolerance(Tolerance.ALGEBRAIC), f"θ={theta}: {eff!r} > {bound!r}")
        worst_eff = max(worst_eff, outcome.residuals["efficiency"])
        worst_gap = max(worst_gap, outcome.residuals["route_gap_lossless"])
        worst_raw = max(worst_raw, outcome.residuals["route_gap"])
        if theta == 0.0:
            _expect(abs(eff - bound) <= 1e-3, f"θ=0 efficiency {eff!r} vs Carnot {bound!r}")
    _expect(worst_eff <= 1e-3, f"efficiency error {worst_eff:.3e}")
    _expect(worst_gap <= 1e-6, f"lossless route gap error {worst_gap:.3e}")
    _expect(worst_raw <= 1e-4, f"route gap error {worst_raw:.3e}")
    return f"efficiency error {worst_eff:.3e}, route gap error {worst_raw:.3e} ({worst_gap:.3e} lossless)"


def check_landauer() -> str:
    mixed = DensityMatrix.from_populations([0.5, 0.5])
    outcome = run_erasure(ERASURE_PARAMS, B_prime=10.0, n_steps=10_000, initial=mixed)
    heat = outcome.ledger.Q_out
    target = ERASURE_PARAMS.T2 * LN2
    p_up = float(outcome.final_state.populations()[1])
    _expect(abs(heat - target) <= 1e-3, f"heat {heat!r} vs T2 ln 2 = {target!r}")
    _expect(p_up <= 1e-15, f"p_up = {p_up!r}")
    return f"heat error {abs(heat - target):.3e}, p_up {p_up:.3e}"


def random_program(rng: np.random.Generator, length: int = 12, n_steps: int = 50) -> PulseProgram:
    """Random instruction sequence that respects the reservoir-contact rules."""
    params = SpinParams(mu1=float(rng.uniform(0.2, 3.0)), mu2=float(rng.uniform(0.2, 3.0)),
                        B=float(rng.uniform(0.2, 3.0)), T1=float(rng.uniform(0.2, 5.0)),
                        T2=float(rng.uniform(0.2, 5.0)), gamma=float(rng.uniform(0.1, 2.0)))
    contact = [False, False]
    ops: List[Instruction] = []
    for _ in range(length):
        spin = int(rng.integers(1, 3))
        kind = int(rng.integers(0, 8))
        if kind == 0:
            ops.append(Pulse(spin=spin, angle=float(rng.uniform(0, 2 * math.pi)),
                             phase=float(rng.uniform(0, 2 * math.pi))))
        elif kind == 1:
            ops.append(Wait(duration=float(rng.uniform(0, 3))))
        elif kind == 2:
            mode = CnotMode.PULSED if rng.random() < 0.5 else CnotMode.IDEAL
            ops.append(Cnot(control=spin, target=3 - spin, mode=mode))
        elif kind == 3:
            ops.append(Measure(spin=spin) if rng.random() < 0.5 else Dephase(spin=spin))
        elif kind == 4:
            contact[spin - 1] = not contact[spin - 1]
            ops.append(Contact(spin=spin, on=contact[spin - 1]))
        elif kind == 5:
            ops.append(Thermalize(spin=spin))
        else:
            mode = RampMode.ISOTHERMAL if contact[spin - 1] else RampMode.ADIABATIC
            ops.append(Ramp(spin=spin, B_target=float(rng.uniform(0.2, 3.0)), n_steps=n_steps, mode=mode))
    return PulseProgram(params=params, instructions=tuple(ops))


def _template_runs() -> Dict[str, Callable[[], CycleOutcome]]:
    knobs = TemplateKnobs(n_steps=2_000)
    return {
        "swap": lambda: run_template(TemplateName.SWAP, SWAP_PARAMS),
        "basic": lambda: run_template(TemplateName.BASIC, SWAP_PARAMS),
        "carnot": lambda: run_template(TemplateName.CARNOT, CARNOT_PARAMS, knobs),
        "erase": lambda: run_template(TemplateName.ERASE, ERASURE_PARAMS, knobs),
        "tipped": lambda: run_template(TemplateName.TIPPED, CARNOT_PARAMS, knobs),
    }


def check_conservation() -> str:
    # run_program closes every ledger with both laws and checks ρ after every instruction
    for name, run in _template_runs().items():
        outcome = run()
        second = outcome.residuals["entropy_production"]
        _expect(second >= -tolerance(Tolerance.LEDGER), f"{name}: entropy production {second!r}")
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        run_program(random_program(rng))
    return "5 templates and 100 random programs"


def template_texts() -> Dict[str, str]:
    knobs = TemplateKnobs(n_steps=1_000)
    return {name.value: serialize_program(build_template(name, p, knobs)) for name, p in DEFAULT_PARAMS.items()}


def _mutations(text: str) -> Iterable[str]:
    """Single-line edits that must each be rejected."""
    lines = text.rstrip("\n").split("\n")
    first_instruction = next(i for i, line in enumerate(lines) if line.startswith(("CNOT", "CONTACT")))
    for i, line in enumerate(lines):
        tokens = line.split()
        keyword = tokens[0]
        mutated = []
        mutated.append(["FROB", *tokens[1:]])
        mutated.append([keyword])
        mutated.append([*tokens, "EXTRA"])
        if keyword in ("CNOT", "CONTACT", "RAMP", "PULSE", "DEPHASE"):
            mutated.append([keyword, "3", *tokens[2:]])
        if keyword in ("PARAM", "RAMP"):
            mutated.append([*tokens[:2], "1.2.3", *tokens[3:]])
        for tokens_out in mutated:
            yield "\n".join([*lines[:i], " ".join(tokens_out), *lines[i + 1:]]) + "\n"
    # instruction ahead of the parameters
    yield "\n".join([lines[first_instruction], *lines]) + "\n"


def mutated_programs(count: int = 50) -> List[str]:
    texts = []
    for text in template_texts().values():
        texts.extend(_mutations(text))
    # interleave deterministically across templates and lines
    step = max(1, len(texts) // count)
    return texts[::step][:count]


def check_parser() -> str:
    for name, text in template_texts().items():
        program = parse_program(text)
        again = serialize_program(program)
        _expect(again == text, f"{name}: canonical form is not a fixpoint")
        _expect(parse_program(again) == program, f"{name}: round trip changed the program")
    fixtures = mutated_programs()
    _expect(len(fixtures) == 50, f"only {len(fixtures)} mutated fixtures")
    for i, text in enumerate(fixtures):
        try:
            parse_program(text)
        except ParseError as err:
            _expect(err.line >= 1, f"fixture {i}: no line number")
            continue
        raise CheckFailed(f"fixture {i} was accepted:\n{text}")
    first = emit(run_template(TemplateName.SWAP, SWAP_PARAMS))
    second = emit(run_template(TemplateName.SWAP, SWAP_PARAMS))
    _expect(first == second, "JSON output differs between runs")
    return "templates round-trip; 50 mutations rejected; JSON byte-stable"


PROPERTIES: Dict[str, Callable[[], str]] = {
    "swap_work": check_swap_work,
    "basic_efficiency": check_basic_efficiency,
    "carnot_convergence": check_carnot_convergence,
    "equilibrium_null": check_equilibrium_null,
    "pulse_cnot": check_pulse_cnot,
    "measurement_cost": check_measurement_cost,
    "quantum_efficiency": check_quantum_efficiency,
    "landauer": check_landauer,
    "conservation": check_conservation,
    "parser": check_parser,
}


def run_checks(only: Optional[Iterable[str]] = None) -> List[CheckResult]:
    """Run the named properties (all by default); failures are reported, not raised."""
    names = list(only) if only else list(PROPERTIES)
    results = []
    for name in names:
        if name not in PROPERTIES:
            raise KeyError(f"unknown check {name!r}")
        try:
            detail = PROPERTIES[name]()
            results.append(CheckResult(name, True, detail))
        except (CheckFailed, DemonError) as err:
            results.append(CheckResult(name, False, str(err)))
        logger.info(f"{name}: {'PASS' if results[-1].passed else 'FAIL'}")
    return results
