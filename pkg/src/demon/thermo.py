"""Thermodynamic primitives for spin-½ dipoles (k_B = 1, entropies in nats)."""
import logging
import math
from typing import Optional

import numpy as np
from scipy.special import entr, expit

from demon.configuration import Tolerance, tolerance
from demon.exceptions import DimensionError, EnginePreconditionError
from demon.models import EfficiencyReport, GibbsSpec, MeasurementChannel, SpinDistribution
from demon.qmatrix import DensityMatrix, spin_operator

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)

PROJ_DOWN = np.diag([1.0, 0.0]).astype(complex)
PROJ_UP = np.diag([0.0, 1.0]).astype(complex)


def log_partition(x: float) -> float:
    """ln(2·cosh x) without overflow."""
    a = abs(x)
    return a + math.log1p(math.exp(-2.0 * a))


def entropy_of_x(x: float) -> float:
    """Gibbs entropy ln(2cosh x) − x·tanh x of a spin at x = μB/T."""
    a = abs(x)
    return math.log1p(math.exp(-2.0 * a)) + 2.0 * a * float(expit(-2.0 * a))


def binary_entropy(p: float) -> float:
    """−p ln p − (1−p) ln(1−p)."""
    return float(entr(p) + entr(1.0 - p))


def gibbs_distribution(g: GibbsSpec) -> SpinDistribution:
    """Populations e^{∓x}/2cosh x of the Zeeman levels; Z omitted once it overflows."""
    x = g.x
    z = 2.0 * math.cosh(x) if abs(x) < 700 else None
    return SpinDistribution(p_up=float(expit(-2.0 * x)), p_down=float(expit(2.0 * x)), Z=z)


def gibbs_energy(g: GibbsSpec) -> float:
    return -g.mu * g.B * math.tanh(g.x)


def gibbs_entropy(g: GibbsSpec) -> float:
    """S = E/T + ln Z, evaluated in a cancellation-free form."""
    return entropy_of_x(g.x)


def thermal_state(g: GibbsSpec) -> DensityMatrix:
    dist = gibbs_distribution(g)
    return DensityMatrix.from_populations([dist.p_down, dist.p_up])


def tipped_distribution(dist: SpinDistribution, theta: float) -> SpinDistribution:
    """Populations after dephasing a state tilted by ``theta`` back in the z-basis."""
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    return SpinDistribution.from_p_up(dist.p_up * c2 + dist.p_down * s2)


def vn_entropy(rho: DensityMatrix) -> float:
    """−Σ λ ln λ; eigenvalues in [−1e−12, 0) count as 0."""
    lam = np.clip(rho.eigenvalues(), 0.0, None)
    return float(np.sum(entr(lam)))


def vn_entropy_bits(rho: DensityMatrix) -> float:
    return vn_entropy(rho) / LN2


def z_channel(spin: Optional[int] = None, dim: int = 2) -> MeasurementChannel:
    """z-basis projectors of one spin, embedded in ``dim`` dimensions."""
    if dim == 2:
        if spin not in (None, 1):
            raise DimensionError(f"single-spin state has no spin {spin}")
        return MeasurementChannel(projectors=(PROJ_DOWN, PROJ_UP))
    if dim == 4 and spin in (1, 2):
        return MeasurementChannel(projectors=(spin_operator(PROJ_DOWN, spin), spin_operator(PROJ_UP, spin)))
    raise DimensionError(f"no z-channel for spin {spin} in dimension {dim}")


def measure(rho: DensityMatrix, ch: MeasurementChannel) -> DensityMatrix:
    """Non-selective projective measurement ρ → Σ P ρ P."""
    if ch.dim != rho.dim:
        raise DimensionError(f"channel of dim {ch.dim} on state of dim {rho.dim}")
    return DensityMatrix(mat=sum(p @ rho.mat @ p for p in ch.projectors))


def dephase(rho: DensityMatrix, spin: int = 1) -> DensityMatrix:
    """Complete z-dephasing of one spin."""
    return measure(rho, z_channel(spin, rho.dim))


def delta_S_Q(rho: DensityMatrix, ch: MeasurementChannel) -> float:
    """Information generated by the measurement, S(ρ′) − S(ρ) ≥ 0."""
    gain = vn_entropy(measure(rho, ch)) - vn_entropy(rho)
    if gain < -tolerance(Tolerance.ALGEBRAIC):
        logger.warning(f"measurement lowered the entropy by {-gain:.3e}")
    return gain


def landauer_cost(bits: float, T: float) -> float:
    """Minimum heat bits·T·ln 2 dumped when erasing ``bits``."""
    if bits < 0:
        raise ValueError("bit count must be non-negative")
    return bits * T * LN2


def efficiencies(S_in: float, S_out: float, delta_S_Q: float, T1: float, T2: float) -> EfficiencyReport:
    """Carnot bound, its measurement-degraded value and the bookkeeping efficiency."""
    if S_in == 0:
        raise EnginePreconditionError("efficiency undefined for zero entropy intake")
    if T1 <= 0 or T2 <= 0:
        raise EnginePreconditionError("temperatures must be positive")
    carnot = 1.0 - T2 / T1
    return EfficiencyReport(
        carnot=carnot,
        quantum=carnot - T2 * delta_S_Q / (T1 * S_in),
        generic=1.0 - T2 * S_out / (T1 * S_in),
        delta_S_Q=delta_S_Q,
        S_in=S_in,
        S_out=S_out,
    )
