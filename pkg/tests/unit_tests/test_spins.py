import math

import numpy as np
import pytest

from demon.engine import thermal_pair
from demon.exceptions import DimensionError, EnginePreconditionError
from demon.models import Frame, PulseSpec, SpinParams
from demon.qmatrix import DensityMatrix, partial_trace, random_density_matrix
from demon.spins import (
    SIGMA_X,
    SWAP_ORDER,
    cnot_fidelity,
    cnot_ideal,
    cnot_pulse_sequence,
    conditional_flip,
    coupled_hamiltonian,
    free_evolution,
    gate_fidelity_up_to_local_phases,
    larmor_frequency,
    polarization,
    rotation_pulse,
    single_spin_rotation,
    swap_sequence,
    uncoupled_hamiltonian,
)

PARAMS = SpinParams(mu1=2.0, mu2=1.0, B=1.0, T1=8.0, T2=1.0, gamma=1.0)


def test_pi_rotation_is_sigma_x_up_to_phase():
    assert np.allclose(single_spin_rotation(math.pi, 0.0), -1j * SIGMA_X)


def test_pulse_flips_target_spin():
    down_down = DensityMatrix.from_populations([1.0, 0.0, 0.0, 0.0])
    after = down_down.evolve(rotation_pulse(PulseSpec(target=2, tip_angle=math.pi)))
    assert after.populations() == pytest.approx([0.0, 1.0, 0.0, 0.0], abs=1e-15)


def test_cnot_ideal_truth_table():
    u = cnot_ideal(1, 2).mat
    # |↑↓⟩ → |↑↑⟩, |↓↑⟩ unchanged
    assert u[3, 2] == 1.0
    assert u[1, 1] == 1.0
    with pytest.raises(DimensionError):
        cnot_ideal(1, 1)


@pytest.mark.parametrize("gamma", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("control,target", [(1, 2), (2, 1)])
def test_pulsed_cnot_matches_ideal(gamma, control, target):
    assert cnot_fidelity(PARAMS.replace(gamma=gamma), control, target) >= 1.0 - 1e-9


def test_pulsed_cnot_needs_coupling():
    with pytest.raises(EnginePreconditionError):
        cnot_pulse_sequence(PARAMS.replace(gamma=0.0))


def test_fidelity_of_unrelated_gate_is_low():
    swap_like = cnot_ideal(1, 2) @ cnot_ideal(2, 1)
    assert gate_fidelity_up_to_local_phases(swap_like, cnot_ideal(1, 2)) < 0.9


def test_coupling_shifts_diagonal():
    bare = np.asarray(uncoupled_hamiltonian(PARAMS).diagonal)
    coupled = np.asarray(coupled_hamiltonian(PARAMS).diagonal)
    assert coupled - bare == pytest.approx([0.5, -0.5, -0.5, 0.5])


def test_free_evolution():
    rotating = free_evolution(PARAMS, 1.0)
    lab = free_evolution(PARAMS, 1.0, frame=Frame.LAB)
    assert np.allclose(np.abs(np.diag(rotating.mat)), 1.0)
    assert not np.allclose(rotating.mat, lab.mat)
    with pytest.raises(ValueError):
        free_evolution(PARAMS, -1.0)


def test_thermal_polarization():
    rho = thermal_pair(PARAMS)
    assert polarization(rho, 1) == pytest.approx(-math.tanh(PARAMS.x1))
    assert polarization(rho, 2) == pytest.approx(-math.tanh(PARAMS.x2))


def test_swap_sequence_exchanges_states():
    rho = thermal_pair(PARAMS)
    after, records = swap_sequence(rho, PARAMS)
    assert len(records) == 3
    assert np.allclose(partial_trace(after, 1).mat, partial_trace(rho, 2).mat, atol=1e-14)
    assert np.allclose(partial_trace(after, 2).mat, partial_trace(rho, 1).mat, atol=1e-14)
    for r in records:
        assert r.work_on_field == pytest.approx(-r.delta_spin_energy)


def test_larmor_frequency():
    assert larmor_frequency(2.0, 1.5) == 6.0
    assert larmor_frequency(1.0, 0.0) == 0.0


def test_swap_twice_restores_any_state():
    rng = np.random.default_rng(21)
    for _ in range(50):
        rho = random_density_matrix(rng, 4)
        once, _ = swap_sequence(rho, PARAMS)
        twice, _ = swap_sequence(once, PARAMS)
        assert twice.distance(rho) <= 1e-12


def test_reverse_flips_undo_forward_flips():
    rng = np.random.default_rng(22)
    for _ in range(50):
        rho = random_density_matrix(rng, 4)
        state = rho
        for control, target in SWAP_ORDER + SWAP_ORDER[::-1]:
            state, _ = conditional_flip(state, control, target, PARAMS)
        assert state.distance(rho) <= 1e-12
