import json

import pandas as pd

from demon.emit import emit, outcome_document, steps_frame
from demon.engine import run_swap_stage
from demon.models import OutputFormat, SpinParams

PARAMS = SpinParams(mu1=2.0, mu2=1.0, B=1.0, T1=8.0, T2=1.0, gamma=1.0)


def test_json_document_layout():
    outcome = run_swap_stage(PARAMS)
    text = emit(outcome)
    document = json.loads(text)
    assert list(document) == ["params", "steps", "totals", "closed_form", "residuals", "summary"]
    assert document["params"]["mu1"] == 2.0
    assert len(document["steps"]) == 3
    assert document["totals"]["W_out"] == outcome.ledger.W_out
    assert document["summary"]["protocol"] == "swap"
    assert text.endswith("\n")


def test_json_is_byte_stable():
    assert emit(run_swap_stage(PARAMS)) == emit(run_swap_stage(PARAMS))


def test_csv_ledger():
    text = emit(run_swap_stage(PARAMS), OutputFormat.CSV)
    lines = text.split("\n")
    assert lines[0] == "step,label,work_on_field,heat_res1,heat_res2,entropy_res1,entropy_res2"
    assert lines[1].startswith("0,flip 2 iff 1,")
    assert lines[-1] == ""
    assert "\r" not in text


def test_document_input_renders_the_same():
    outcome = run_swap_stage(PARAMS)
    assert emit(outcome_document(outcome)) == emit(outcome)


def test_empty_steps_frame_keeps_header():
    frame = steps_frame([])
    assert list(frame.columns) == ["step", "label", "work_on_field", "heat_res1", "heat_res2",
                                   "entropy_res1", "entropy_res2"]


def test_table_json_turns_missing_values_into_null():
    table = pd.DataFrame([{"T2": 0.5, "efficiency": None}, {"T2": 1.0, "efficiency": 0.25}])
    records = json.loads(emit(table, OutputFormat.JSON))
    assert records == [{"T2": 0.5, "efficiency": None}, {"T2": 1.0, "efficiency": 0.25}]
    assert emit(table, OutputFormat.CSV).splitlines()[0] == "T2,efficiency"
