"""Invariant checks run by the executor graph after every instruction."""
import logging
import math
from typing import Any, Callable, Dict

import numpy as np
from langgraph.graph import StateGraph

from demon.configuration import Tolerance, tolerance
from demon.exceptions import InvariantViolationError
from demon.qmatrix import hermitian_eigenvalues, partial_trace

logger = logging.getLogger(__name__)


def _passed() -> Dict[str, Any]:
    return {"guardrail_triggered": False, "reason": ""}


def density_matrix_check(state: Dict[str, Any]) -> Dict[str, Any]:
    """Verify Hermiticity, unit trace and positivity of ρ and both reduced states."""
    rho = state["rho"]
    tol = tolerance(Tolerance.ALGEBRAIC)
    mats = {"rho": rho.mat}
    if rho.dim == 4:
        mats["rho_1"] = partial_trace(rho, 1).mat
        mats["rho_2"] = partial_trace(rho, 2).mat
    for name, m in mats.items():
        if np.max(np.abs(m - m.conj().T)) > tol:
            return {"guardrail_triggered": True, "reason": f"{name} is not Hermitian"}
        if abs(np.trace(m) - 1.0) > tol:
            return {"guardrail_triggered": True, "reason": f"{name} has trace {float(np.trace(m).real)!r}"}
        if hermitian_eigenvalues(m)[0] < -tol:
            return {"guardrail_triggered": True, "reason": f"{name} has a negative eigenvalue"}
    return _passed()


def ledger_check(state: Dict[str, Any]) -> Dict[str, Any]:
    """Reject non-finite flows in the entry just written."""
    entries = state.get("entries") or []
    if entries:
        last = entries[-1]
        for key, value in last.model_dump().items():
            if key != "label" and not math.isfinite(value):
                return {"guardrail_triggered": True, "reason": f"{last.label}: {key} is not finite"}
    return _passed()


def guardrail_router(state: Dict[str, Any]) -> str:
    if state.get("guardrail_triggered", False):
        return "report_violation"
    return "continue"


def report_violation(state: Dict[str, Any]) -> Dict[str, Any]:
    index = state.get("pc", 1) - 1
    reason = state.get("reason", "invariant violated")
    logger.error(f"instruction {index}: {reason}")
    raise InvariantViolationError(reason, instruction_index=index)


def add_guardrails_to_graph(graph: StateGraph, route_after: Callable[[Dict[str, Any]], str],
                            routes: Dict[str, str]) -> StateGraph:
    """Add density_matrix_check → ledger_check; once both pass, ``route_after`` picks from ``routes``."""
    graph.add_node("density_matrix_check", density_matrix_check)
    graph.add_node("ledger_check", ledger_check)
    graph.add_node("report_violation", report_violation)

    graph.add_conditional_edges(
        "density_matrix_check",
        guardrail_router,
        {
            "report_violation": "report_violation",
            "continue": "ledger_check",
        }
    )
    graph.add_conditional_edges(
        "ledger_check",
        lambda state: "report_violation" if state.get("guardrail_triggered", False) else route_after(state),
        {"report_violation": "report_violation", **routes},
    )
    return graph
