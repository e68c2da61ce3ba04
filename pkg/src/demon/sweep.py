"""One-parameter sweeps over a pulse program or a built-in template."""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional

import pandas as pd
from pydantic import ValidationError

from demon.configuration import CONFIG
from demon.exceptions import EnginePreconditionError
from demon.graph import run_program
from demon.models import (
    CycleOutcome,
    InitDirective,
    InitKind,
    PulseProgram,
    Ramp,
    SweepParameter,
    SweepSpec,
    TemplateKnobs,
    TemplateName,
)
from demon.templates import run_template

logger = logging.getLogger(__name__)

SPIN_PARAMETERS = {SweepParameter.MU1, SweepParameter.MU2, SweepParameter.B,
                   SweepParameter.T1, SweepParameter.T2, SweepParameter.GAMMA}

Point = Callable[[], CycleOutcome]


def _program_point(base: PulseProgram, parameter: SweepParameter, value: float) -> Point:
    if parameter in SPIN_PARAMETERS:
        program = base.model_copy(update={"params": base.params.replace(**{parameter.value: value})})
    elif parameter == SweepParameter.THETA:
        if base.init.kind != InitKind.THERMAL:
            raise EnginePreconditionError("theta sweeps need an INIT THERMAL program")
        program = base.model_copy(update={"init": InitDirective(tipped=value)})
    else:
        ops = tuple(op.model_copy(update={"n_steps": int(value)}) if isinstance(op, Ramp) else op
                    for op in base.instructions)
        program = base.model_copy(update={"instructions": ops})
    # model_copy skips validation; rebuild so bad values fail here
    program = PulseProgram.model_validate(program.model_dump())
    return lambda: run_program(program)


def _template_point(base: PulseProgram, name: TemplateName, knobs: TemplateKnobs,
                    parameter: SweepParameter, value: float) -> Point:
    params = base.params
    if parameter in SPIN_PARAMETERS:
        params = params.replace(**{parameter.value: value})
    elif parameter == SweepParameter.THETA:
        knobs = knobs.replace(theta=value)
    else:
        knobs = knobs.replace(n_steps=int(value))
    return lambda: run_template(name, params, knobs)


def _row(parameter: SweepParameter, value: float, outcome: CycleOutcome) -> Dict[str, Any]:
    return {parameter.value: value, **outcome.summary(), **outcome.ledger.totals()}


def run_sweep(base: PulseProgram, sweep: SweepSpec, template: Optional[TemplateName] = None,
              knobs: Optional[TemplateKnobs] = None, max_workers: Optional[int] = None) -> pd.DataFrame:
    """Run ``base`` once per grid point and tabulate the outcome summaries.

    With ``template`` the program is rebuilt at every point from ``base.params``
    and ``knobs``, so derived fields follow the swept parameter.

    Returns:
        One row per grid point in grid order: the swept value, the outcome
        summary and the ledger totals.

    Raises:
        EnginePreconditionError: A grid value leaves the parameter's domain.
    """
    grid = sweep.grid()
    knobs = knobs or TemplateKnobs()
    points: List[Point] = []
    for value in grid:
        try:
            if template is None:
                points.append(_program_point(base, sweep.parameter, value))
            else:
                points.append(_template_point(base, TemplateName(template), knobs, sweep.parameter, value))
        except ValidationError as err:
            raise EnginePreconditionError(
                f"invalid range: {sweep.parameter.value}={value!r}: {err.errors()[0]['msg']}") from err

    workers = max_workers or CONFIG["sweep"]["max_workers"]
    logger.info(f"sweeping {sweep.parameter.value} over {len(grid)} point(s) with {workers} worker(s)")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map yields in submission order
        outcomes = list(pool.map(lambda point: point(), points))
    rows = [_row(sweep.parameter, value, outcome) for value, outcome in zip(grid, outcomes)]
    return pd.DataFrame(rows)
