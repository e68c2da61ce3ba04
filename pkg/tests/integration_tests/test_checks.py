import numpy as np
import pytest

from demon.checks import (
    PROPERTIES,
    CheckFailed,
    mutated_programs,
    random_program,
    run_checks,
    swap_grid,
    template_texts,
)
from demon.exceptions import ParseError
from demon.graph import run_program
from demon.program import parse_program


def test_every_mutated_program_is_rejected():
    fixtures = mutated_programs()
    assert len(fixtures) == 50
    for text in fixtures:
        with pytest.raises(ParseError):
            parse_program(text)


def test_template_texts_parse():
    texts = template_texts()
    assert set(texts) == {"swap", "basic", "carnot", "erase", "tipped"}
    for text in texts.values():
        parse_program(text)


def test_random_programs_respect_both_laws():
    rng = np.random.default_rng(1)
    for _ in range(10):
        outcome = run_program(random_program(rng))
        assert outcome.residuals["first_law"] <= 1e-8
        assert outcome.residuals["entropy_production"] >= -1e-10


def test_swap_grid_size():
    assert sum(1 for _ in swap_grid()) == 1000


def test_fast_properties_pass():
    results = run_checks(["pulse_cnot", "measurement_cost", "landauer", "parser"])
    assert [r.name for r in results] == ["pulse_cnot", "measurement_cost", "landauer", "parser"]
    failed = [r for r in results if not r.passed]
    assert not failed, failed


def test_failures_are_reported_not_raised(monkeypatch):
    def broken():
        raise CheckFailed("nope")

    monkeypatch.setitem(PROPERTIES, "swap_work", broken)
    (result,) = run_checks(["swap_work"])
    assert not result.passed
    assert result.detail == "nope"


def test_unknown_check():
    with pytest.raises(KeyError):
        run_checks(["missing"])
