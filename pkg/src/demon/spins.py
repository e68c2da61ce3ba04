"""Two-spin physics: Hamiltonians, resonant pulses, Ising-coupled gates."""
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from demon.configuration import CONFIG
from demon.exceptions import DimensionError, EnginePreconditionError
from demon.models import (
    Frame,
    PulseSpec,
    SpinParams,
    TwoSpinHamiltonian,
    WorkRecord,
)
from demon.qmatrix import DensityMatrix, Unitary, mat_exp_diag_phase, spin_operator

logger = logging.getLogger(__name__)

Fields = Tuple[float, float]

# Pauli matrices in the (|↓⟩, |↑⟩) ordering, σz|↑⟩ = +|↑⟩
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)

# σz eigenvalue of each spin over |↓↓⟩, |↓↑⟩, |↑↓⟩, |↑↑⟩
Z1 = np.array([-1.0, -1.0, 1.0, 1.0])
Z2 = np.array([-1.0, 1.0, -1.0, 1.0])


def _check_spin(spin: int) -> None:
    if spin not in (1, 2):
        raise DimensionError(f"bad spin index {spin}")


def _fields(params: SpinParams, fields: Optional[Fields]) -> Fields:
    return (params.B, params.B) if fields is None else fields


def larmor_frequency(mu: float, B: float) -> float:
    """Return ω = 2μB (ħ = 1)."""
    return 2.0 * mu * B


def single_spin_rotation(tip_angle: float, phase: float) -> np.ndarray:
    """Return cos(θ/2)·I − i·sin(θ/2)·(cosφ·σx + sinφ·σy)."""
    axis = math.cos(phase) * SIGMA_X + math.sin(phase) * SIGMA_Y
    return math.cos(tip_angle / 2.0) * np.eye(2) - 1j * math.sin(tip_angle / 2.0) * axis


def rotation_pulse(p: PulseSpec, dim: int = 4) -> Unitary:
    """Instantaneous rotation of ``p.target``; ``dim=2`` gives the bare single-spin operator."""
    _check_spin(p.target)
    single = single_spin_rotation(p.tip_angle, p.phase)
    if dim == 2:
        return Unitary(mat=single)
    return Unitary(mat=spin_operator(single, p.target))


def uncoupled_hamiltonian(params: SpinParams, fields: Optional[Fields] = None) -> TwoSpinHamiltonian:
    """Zeeman part μ₁B₁σz¹ + μ₂B₂σz², used for all energy bookkeeping."""
    b1, b2 = _fields(params, fields)
    diag = params.mu1 * b1 * Z1 + params.mu2 * b2 * Z2
    return TwoSpinHamiltonian(diagonal=tuple(float(d) for d in diag))


def coupling_diagonal(gamma: float) -> np.ndarray:
    """Diagonal of (γ/2)·σz¹σz²; splits each spin's line by 2γ."""
    return 0.5 * gamma * Z1 * Z2


def coupled_hamiltonian(params: SpinParams, fields: Optional[Fields] = None) -> TwoSpinHamiltonian:
    diag = np.asarray(uncoupled_hamiltonian(params, fields).diagonal) + coupling_diagonal(params.gamma)
    return TwoSpinHamiltonian(diagonal=tuple(float(d) for d in diag))


def free_evolution(params: SpinParams, t: float, frame: Frame = Frame.ROTATING,
                   fields: Optional[Fields] = None) -> Unitary:
    """Propagator e^{−iHt} of a wait.

    In the doubly rotating frame the Zeeman phases are absorbed and only the
    coupling acts; the lab frame uses the full diagonal Hamiltonian.
    """
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if frame == Frame.ROTATING:
        return mat_exp_diag_phase(coupling_diagonal(params.gamma), t)
    return mat_exp_diag_phase(coupled_hamiltonian(params, fields).diagonal, t)


def cnot_ideal(control: int, target: int) -> Unitary:
    """Permutation flipping ``target`` iff ``control`` is |↑⟩."""
    _check_spin(control)
    _check_spin(target)
    if control == target:
        raise DimensionError("control and target must differ")
    perm = np.zeros((4, 4), dtype=complex)
    for s1 in (0, 1):
        for s2 in (0, 1):
            bits = [s1, s2]
            if bits[control - 1] == 1:
                bits[target - 1] ^= 1
            perm[2 * bits[0] + bits[1], 2 * s1 + s2] = 1.0
    return Unitary(mat=perm)


def cnot_pulse_sequence(params: SpinParams, control: int = 1, target: int = 2) -> Unitary:
    """Composite R(π/2, 0)·F(π/2γ)·R(π/2, 3π/2) on the target spin.

    Equal to ``cnot_ideal(control, target)`` up to single-spin z-phases.
    """
    if params.gamma <= 0:
        raise EnginePreconditionError("pulsed CNOT needs a non-zero coupling gamma")
    _check_spin(control)
    if control == target:
        raise DimensionError("control and target must differ")
    first = rotation_pulse(PulseSpec(target=target, tip_angle=math.pi / 2, phase=3 * math.pi / 2))
    wait = free_evolution(params, math.pi / (2.0 * params.gamma))
    last = rotation_pulse(PulseSpec(target=target, tip_angle=math.pi / 2, phase=0.0))
    # rightmost factor acts first
    return last @ wait @ first


def gate_fidelity_up_to_local_phases(u: Unitary, reference: Unitary) -> float:
    """max over D of |tr(D·U·R†)|/4, D ranging over products of single-spin z-phases.

    With D = diag(1, e^{ib}, e^{ia}, e^{i(a+b)}) the maximum over b is analytic,
    leaving a one-dimensional search over a.
    """
    m = u.mat @ reference.mat.conj().T
    d = np.diag(m)

    def overlap(a: float) -> float:
        w = np.exp(1j * a)
        return (abs(d[0] + w * d[2]) + abs(d[1] + w * d[3])) / 4.0

    n = CONFIG["engine"]["fidelity_grid"]
    candidates = [2 * math.pi * k / n for k in range(n)]
    for i, j in ((0, 2), (1, 3)):
        if abs(d[i]) > 0 and abs(d[j]) > 0:
            candidates.append(float(np.angle(d[i]) - np.angle(d[j])))
    best = max(candidates, key=overlap)
    step = 2 * math.pi / n
    refined = minimize_scalar(lambda a: -overlap(a), bounds=(best - step, best + step),
                              method="bounded", options={"xatol": 1e-12})
    return max(overlap(best), -float(refined.fun))


def cnot_fidelity(params: SpinParams, control: int = 1, target: int = 2) -> float:
    return gate_fidelity_up_to_local_phases(cnot_pulse_sequence(params, control, target),
                                            cnot_ideal(control, target))


def polarization(rho: DensityMatrix, spin: int) -> float:
    """⟨σz⟩ of one spin in a one- or two-spin state."""
    _check_spin(spin)
    p = rho.populations()
    if rho.dim == 2:
        return float(p[1] - p[0])
    return float(np.dot(Z1 if spin == 1 else Z2, p))


def spin_energy(rho: DensityMatrix, params: SpinParams, spin: int,
                fields: Optional[Fields] = None) -> float:
    """⟨μ_j B_j σz_j⟩ of one spin."""
    return params.mu(spin) * _fields(params, fields)[spin - 1] * polarization(rho, spin)


def apply_unitary(rho: DensityMatrix, u: Unitary, params: SpinParams, label: str,
                  fields: Optional[Fields] = None) -> Tuple[DensityMatrix, WorkRecord]:
    """Evolve coherently and book the Zeeman energy change as work on the field."""
    h = uncoupled_hamiltonian(params, fields)
    after = rho.evolve(u)
    return after, WorkRecord.coherent(label, h.energy(rho), h.energy(after))


def conditional_flip(rho: DensityMatrix, control: int, target: int, params: SpinParams,
                     fields: Optional[Fields] = None) -> Tuple[DensityMatrix, WorkRecord]:
    """Flip ``target`` iff ``control`` is |↑⟩; work is tr(Hρ_before) − tr(Hρ_after)."""
    return apply_unitary(rho, cnot_ideal(control, target), params,
                         f"flip {target} iff {control}", fields)


SWAP_ORDER = ((1, 2), (2, 1), (1, 2))


def swap_sequence(rho: DensityMatrix, params: SpinParams,
                  fields: Optional[Fields] = None) -> Tuple[DensityMatrix, List[WorkRecord]]:
    """Exchange the spins' states with three conditional flips."""
    records = []
    for control, target in SWAP_ORDER:
        rho, record = conditional_flip(rho, control, target, params, fields)
        records.append(record)
    logger.debug(f"swap works {[r.work_on_field for r in records]}")
    return rho, records
