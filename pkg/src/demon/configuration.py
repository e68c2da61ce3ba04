import logging
from enum import Enum
from typing import Any, Dict


class Tolerance(str, Enum):
    ALGEBRAIC = "algebraic"
    ITERATIVE = "iterative"
    JACOBI = "jacobi"
    FIDELITY = "fidelity"
    LEDGER = "ledger"


CONFIG: Dict[str, Any] = {
    "tolerances": {
        Tolerance.ALGEBRAIC: 1e-12,
        Tolerance.ITERATIVE: 1e-10,
        Tolerance.JACOBI:    1e-14,
        Tolerance.FIDELITY:  1e-9,
        Tolerance.LEDGER:    1e-10,
    },
    "jacobi": {
        "max_sweeps": 64,
    },
    "engine": {
        "default_n_steps": 10_000,
        # warn below this μ₂B′/T₂ when preparing |↓⟩ by erasure
        "erasure_min_ratio": 10.0,
        "min_field_fraction": 1e-9,
        "fidelity_grid": 64,
        "zero_heat": 1e-15,
    },
    "sweep": {
        "max_workers": 4,
    },
    "output": {
        "json_indent": 2,
    },
    "logging": {
        "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        "default_level": "WARNING",
    },
}


def tolerance(kind: Tolerance) -> float:
    return CONFIG["tolerances"][kind]


def configure_logging(level: str = CONFIG["logging"]["default_level"]) -> None:
    """Install the root handler used by the command line."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format=CONFIG["logging"]["format"],
    )
