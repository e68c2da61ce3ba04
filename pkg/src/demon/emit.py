"""JSON and CSV renderings of outcomes and sweep tables.

JSON key order is fixed: ``params``, ``steps``, ``totals``, ``closed_form``,
``residuals``, ``summary``. Floats use the shortest decimal that reads back
to the same value. CSV uses LF line endings and one row per ledger step or
sweep point.
"""
import io
import json
from typing import Any, Dict, List, Union

import pandas as pd

from demon.configuration import CONFIG
from demon.models import CycleOutcome, OutputFormat

STEP_COLUMNS = {
    "label": "label",
    "work_on_field": "work_on_field",
    "heat_from_res1": "heat_res1",
    "heat_from_res2": "heat_res2",
    "entropy_to_res1": "entropy_res1",
    "entropy_to_res2": "entropy_res2",
}


def outcome_document(outcome: CycleOutcome) -> Dict[str, Any]:
    return {
        "params": outcome.params.model_dump(),
        "steps": [step.model_dump() for step in outcome.ledger.steps],
        "totals": outcome.ledger.totals(),
        "closed_form": dict(outcome.closed_form),
        "residuals": dict(outcome.residuals),
        "summary": outcome.summary(),
    }


def steps_frame(steps: List[Dict[str, Any]]) -> pd.DataFrame:
    """One row per ledger step, columns renamed to the CSV header."""
    rows = [{"step": i, **{column: s[field] for field, column in STEP_COLUMNS.items()}}
            for i, s in enumerate(steps)]
    return pd.DataFrame(rows, columns=["step", *STEP_COLUMNS.values()])


def _json(document: Any) -> str:
    return json.dumps(document, indent=CONFIG["output"]["json_indent"], allow_nan=False) + "\n"


def _csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def emit(result: Union[CycleOutcome, pd.DataFrame, Dict[str, Any]],
         fmt: OutputFormat = OutputFormat.JSON) -> str:
    """Render an outcome, a sweep table or an already-built outcome document."""
    fmt = OutputFormat(fmt)
    if isinstance(result, pd.DataFrame):
        if fmt == OutputFormat.CSV:
            return _csv(result)
        # missing values (efficiency undefined) become null
        records = result.astype(object).where(result.notna(), None).to_dict(orient="records")
        return _json(records)
    document = outcome_document(result) if isinstance(result, CycleOutcome) else result
    if fmt == OutputFormat.CSV:
        return _csv(steps_frame(document["steps"]))
    return _json(document)
