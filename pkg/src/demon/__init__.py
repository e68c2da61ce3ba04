"""Two-spin quantum Maxwell-demon engine.

Exports the pulse-program executor graph and the entry points built on it.
"""

from demon.graph import graph, run_program
from demon.program import parse_program, serialize_program
from demon.templates import build_template, run_template

__all__ = [
    "graph",
    "run_program",
    "parse_program",
    "serialize_program",
    "build_template",
    "run_template",
]
