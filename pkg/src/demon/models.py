import math
from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator,
)

from demon.configuration import Tolerance, tolerance
from demon.qmatrix import DensityMatrix, as_matrix

SpinIndex = Literal[1, 2]

TWO_PI = 2.0 * math.pi


def _wrap(angle: float) -> float:
    """Reduce ``angle`` into [0, 2π)."""
    wrapped = math.fmod(angle, TWO_PI) % TWO_PI
    # tiny negatives round up to exactly 2π
    return 0.0 if wrapped >= TWO_PI else wrapped

# ===========================
# 1) ENUMS
# ===========================

class RampMode(str, Enum):
    ADIABATIC = "adiabatic"
    ISOTHERMAL = "isothermal"


class CnotMode(str, Enum):
    IDEAL = "ideal"
    PULSED = "pulsed"
    # highly selective π pulse on the target line; same operator as IDEAL
    SELECTIVE = "selective"


class FieldRule(str, Enum):
    """Target field of the adiabatic legs of the quasi-static cycle."""
    MATCHED = "matched"   # μ₁B₁/T₁ = μ₂B/T₂
    NOMINAL = "nominal"   # B₁ = B·T₁/T₂, exact only for μ₁ = μ₂


class Frame(str, Enum):
    ROTATING = "rotating"
    LAB = "lab"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class SweepScale(str, Enum):
    LINEAR = "linear"
    LOG = "log"


class SweepParameter(str, Enum):
    MU1 = "mu1"
    MU2 = "mu2"
    B = "B"
    T1 = "T1"
    T2 = "T2"
    GAMMA = "gamma"
    THETA = "theta"
    N_STEPS = "n_steps"


class KetKind(str, Enum):
    DOWN = "DOWN"
    UP = "UP"
    PLUS = "PLUS"
    TIPPED = "TIPPED"


class InitKind(str, Enum):
    THERMAL = "THERMAL"
    STATE = "STATE"


class TemplateName(str, Enum):
    SWAP = "swap"
    BASIC = "basic"
    CARNOT = "carnot"
    ERASE = "erase"
    TIPPED = "tipped"


# ===========================
# 2) PHYSICAL PARAMETERS
# ===========================

class SpinParams(BaseModel):
    """Moments, field, coupling and reservoir temperatures of the engine."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    mu1: float = Field(..., gt=0, description="Dipole moment of spin 1")
    mu2: float = Field(..., gt=0, description="Dipole moment of spin 2")
    B: float = Field(..., ge=0, description="Static field")
    gamma: float = Field(0.0, ge=0, description="Ising coupling (angular frequency)")
    T1: float = Field(..., gt=0, description="Temperature of reservoir 1")
    T2: float = Field(..., gt=0, description="Temperature of reservoir 2")

    def mu(self, spin: int) -> float:
        return self.mu1 if spin == 1 else self.mu2

    def T(self, reservoir: int) -> float:
        return self.T1 if reservoir == 1 else self.T2

    @property
    def x1(self) -> float:
        return self.mu1 * self.B / self.T1

    @property
    def x2(self) -> float:
        return self.mu2 * self.B / self.T2

    def replace(self, **changes: float) -> "SpinParams":
        return SpinParams(**{**self.model_dump(), **changes})


class GibbsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    mu: float = Field(..., gt=0)
    B: float
    T: float = Field(..., gt=0)

    @property
    def x(self) -> float:
        return self.mu * self.B / self.T


class SpinDistribution(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    p_up: float = Field(..., ge=0, le=1)
    p_down: float = Field(..., ge=0, le=1)
    Z: Optional[float] = Field(None, gt=0, description="Partition function when Gibbs")

    @model_validator(mode="after")
    def _normalized(self):
        if abs(self.p_up + self.p_down - 1.0) > tolerance(Tolerance.ALGEBRAIC):
            raise ValueError(f"p_up + p_down = {self.p_up + self.p_down!r}")
        return self

    @classmethod
    def from_p_up(cls, p_up: float) -> "SpinDistribution":
        p_up = min(1.0, max(0.0, p_up))
        return cls(p_up=p_up, p_down=1.0 - p_up)


class PulseSpec(BaseModel):
    """Resonant rotation of one spin about an axis in the transverse plane."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    target: SpinIndex
    tip_angle: float = Field(..., ge=0, lt=TWO_PI)
    phase: float = Field(0.0, ge=0, lt=TWO_PI)

    @classmethod
    def wrapped(cls, target: int, tip_angle: float, phase: float = 0.0) -> "PulseSpec":
        """Build a pulse with both angles reduced modulo 2π."""
        return cls(target=target, tip_angle=_wrap(tip_angle), phase=_wrap(phase))


class WorkRecord(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    label: str
    delta_spin_energy: float
    work_on_field: float

    @model_validator(mode="after")
    def _energy_conserved(self):
        if abs(self.work_on_field + self.delta_spin_energy) > tolerance(Tolerance.ALGEBRAIC):
            raise ValueError(f"{self.label}: coherent step does not conserve energy")
        return self

    @classmethod
    def coherent(cls, label: str, energy_before: float, energy_after: float) -> "WorkRecord":
        delta = energy_after - energy_before
        return cls(label=label, delta_spin_energy=delta, work_on_field=-delta)


class TwoSpinHamiltonian(BaseModel):
    """Diagonal Hamiltonian in the |↓↓⟩…|↑↑⟩ basis."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    diagonal: Tuple[float, float, float, float]

    def energy(self, rho: DensityMatrix) -> float:
        return float(np.dot(self.diagonal, rho.populations()))


class MeasurementChannel(BaseModel):
    """Complete set of orthogonal projectors."""

    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid", frozen=True)

    projectors: Tuple[np.ndarray, ...]

    @field_validator("projectors", mode="before")
    @classmethod
    def _resolution_of_identity(cls, v):
        ps = tuple(as_matrix(p) for p in v)
        if not ps:
            raise ValueError("measurement needs at least one projector")
        tol = tolerance(Tolerance.ITERATIVE)
        dim = ps[0].shape[0]
        for i, p in enumerate(ps):
            if p.shape != (dim, dim):
                raise ValueError("projectors differ in dimension")
            if np.max(np.abs(p - p.conj().T)) > tol or np.max(np.abs(p @ p - p)) > tol:
                raise ValueError(f"projector {i} is not an orthogonal projector")
            for q in ps[i + 1:]:
                if np.max(np.abs(p @ q)) > tol:
                    raise ValueError("projectors are not mutually orthogonal")
        if np.max(np.abs(sum(ps) - np.eye(dim))) > tol:
            raise ValueError("projectors do not sum to the identity")
        for p in ps:
            p.setflags(write=False)
        return ps

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]


class EfficiencyReport(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    carnot: float
    quantum: float
    generic: float
    delta_S_Q: float
    S_in: float
    S_out: float

    @model_validator(mode="after")
    def _quantum_below_carnot(self):
        if self.quantum > self.carnot + tolerance(Tolerance.ALGEBRAIC):
            raise ValueError("quantum efficiency exceeds the Carnot bound")
        return self


# ===========================
# 3) LEDGER
# ===========================

class LedgerEntry(BaseModel):
    """Flows of one step; signs are from the point of view of the agent."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    label: str
    work_on_field: float = 0.0
    heat_from_res1: float = 0.0
    heat_from_res2: float = 0.0
    entropy_to_res1: float = 0.0
    entropy_to_res2: float = 0.0


class CycleLedger(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    steps: Tuple[LedgerEntry, ...] = ()

    @property
    def W_out(self) -> float:
        return math.fsum(s.work_on_field for s in self.steps)

    @property
    def Q_in(self) -> float:
        return math.fsum(s.heat_from_res1 for s in self.steps)

    @property
    def Q_out(self) -> float:
        return -math.fsum(s.heat_from_res2 for s in self.steps)

    @property
    def dS_total(self) -> float:
        return math.fsum(s.entropy_to_res1 + s.entropy_to_res2 for s in self.steps)

    def totals(self) -> Dict[str, float]:
        return {"W_out": self.W_out, "Q_in": self.Q_in, "Q_out": self.Q_out, "dS_total": self.dS_total}

    def append(self, *entries: LedgerEntry) -> "CycleLedger":
        return CycleLedger(steps=self.steps + tuple(entries))

    def extend(self, other: "CycleLedger") -> "CycleLedger":
        return CycleLedger(steps=self.steps + other.steps)

    def first_law_residual(self, delta_state_energy: float = 0.0) -> float:
        """|W_out + ΔE_state − (Q_in − Q_out)|; ΔE_state is 0 for a closed cycle."""
        return abs(self.W_out + delta_state_energy - (self.Q_in - self.Q_out))


class RampSchedule(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    B_start: float = Field(..., gt=0)
    B_end: float = Field(..., gt=0)
    n_steps: int = Field(..., ge=1)
    mode: RampMode
    reservoir: Optional[SpinIndex] = Field(None, description="Defaults to the ramped spin's own reservoir")


class TippedSpec(BaseModel):
    """Tilt of spin 1's eigenbasis; ``theta`` is the Hilbert-space angle."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    theta: float = Field(..., ge=0, le=math.pi)
    pure: bool = Field(False, description="Start from the pure tilted ground state instead of the thermal mixture")


class CycleOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid", frozen=True)

    protocol: str
    params: SpinParams
    ledger: CycleLedger
    closed_form_W: Optional[float] = None
    simulated_W: float
    efficiency: Optional[float] = None
    efficiency_bound: Optional[float] = None
    work_tolerance: Optional[float] = None
    info_generated: float = 0.0
    closed_form: Dict[str, float] = Field(default_factory=dict)
    residuals: Dict[str, float] = Field(default_factory=dict)
    initial_state: Optional[DensityMatrix] = Field(None, exclude=True)
    final_state: Optional[DensityMatrix] = Field(None, exclude=True)

    @property
    def work_residual(self) -> Optional[float]:
        if self.closed_form_W is None:
            return None
        return abs(self.simulated_W - self.closed_form_W)

    def summary(self) -> Dict[str, Optional[float]]:
        return {
            "protocol": self.protocol,
            "simulated_W": self.simulated_W,
            "closed_form_W": self.closed_form_W,
            "efficiency": self.efficiency,
            "efficiency_bound": self.efficiency_bound,
            "info_generated": self.info_generated,
        }


# ===========================
# 4) PULSE PROGRAMS
# ===========================

class _Op(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


class Pulse(_Op):
    op: Literal["PULSE"] = "PULSE"
    spin: SpinIndex
    angle: float
    phase: float = 0.0

    def spec(self) -> PulseSpec:
        return PulseSpec.wrapped(self.spin, self.angle, self.phase)


class Wait(_Op):
    op: Literal["WAIT"] = "WAIT"
    duration: float = Field(..., ge=0)


class Cnot(_Op):
    op: Literal["CNOT"] = "CNOT"
    control: SpinIndex
    target: SpinIndex
    mode: CnotMode = CnotMode.IDEAL

    @model_validator(mode="after")
    def _distinct(self):
        if self.control == self.target:
            raise ValueError("control and target must differ")
        return self


class Measure(_Op):
    op: Literal["MEASURE"] = "MEASURE"
    spin: SpinIndex


class Dephase(_Op):
    op: Literal["DEPHASE"] = "DEPHASE"
    spin: SpinIndex


class Contact(_Op):
    op: Literal["CONTACT"] = "CONTACT"
    spin: SpinIndex
    on: bool


class Thermalize(_Op):
    op: Literal["THERMALIZE"] = "THERMALIZE"
    spin: SpinIndex


class Ramp(_Op):
    op: Literal["RAMP"] = "RAMP"
    spin: SpinIndex
    B_target: float = Field(..., gt=0)
    n_steps: int = Field(..., ge=1)
    mode: RampMode


Instruction = Annotated[
    Union[Pulse, Wait, Cnot, Measure, Dephase, Contact, Thermalize, Ramp],
    Field(discriminator="op"),
]


class Ket(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    kind: KetKind
    theta: Optional[float] = None

    @model_validator(mode="after")
    def _theta_only_when_tipped(self):
        if (self.kind == KetKind.TIPPED) != (self.theta is not None):
            raise ValueError("TIPPED kets need exactly one angle")
        return self

    def amplitudes(self) -> np.ndarray:
        """Amplitudes on (|↓⟩, |↑⟩)."""
        if self.kind == KetKind.DOWN:
            return np.array([1.0, 0.0], dtype=complex)
        if self.kind == KetKind.UP:
            return np.array([0.0, 1.0], dtype=complex)
        if self.kind == KetKind.PLUS:
            return np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
        # tilted ground state |↓′⟩ = cosθ|↓⟩ − sinθ|↑⟩
        return np.array([math.cos(self.theta), -math.sin(self.theta)], dtype=complex)


class InitDirective(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    kind: InitKind = InitKind.THERMAL
    tipped: Optional[float] = Field(None, description="Tilt angle of spin 1 for THERMAL")
    kets: Optional[Tuple[Ket, Ket]] = None

    @model_validator(mode="after")
    def _shape(self):
        if self.kind == InitKind.STATE and (self.kets is None or self.tipped is not None):
            raise ValueError("INIT STATE takes two kets")
        if self.kind == InitKind.THERMAL and self.kets is not None:
            raise ValueError("INIT THERMAL takes no kets")
        return self


class PulseProgram(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    params: SpinParams
    init: InitDirective = Field(default_factory=InitDirective)
    instructions: Tuple[Instruction, ...] = ()


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    parameter: SweepParameter
    start: float
    end: float
    count: int = Field(..., ge=2)
    scale: SweepScale = SweepScale.LINEAR

    @model_validator(mode="after")
    def _positive_log(self):
        if self.scale == SweepScale.LOG and (self.start <= 0 or self.end <= 0):
            raise ValueError("log ranges need positive endpoints")
        return self

    def grid(self) -> List[float]:
        if self.scale == SweepScale.LOG:
            values = np.geomspace(self.start, self.end, self.count)
        else:
            values = np.linspace(self.start, self.end, self.count)
        if self.parameter == SweepParameter.N_STEPS:
            return [float(max(1, round(v))) for v in values]
        return [float(v) for v in values]


class TemplateKnobs(BaseModel):
    """Protocol knobs of the built-in programs that are not physical parameters."""

    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)

    theta: float = Field(math.pi / 4, ge=0, le=math.pi, description="Tilt of spin 1 (tipped)")
    n_steps: Optional[int] = Field(None, ge=1, description="Ramp discretization; CONFIG default when unset")
    field_rule: FieldRule = FieldRule.MATCHED
    B_prime: Optional[float] = Field(None, gt=0, description="Erasure field; μ₂B′/T₂ = 20 when unset")

    def replace(self, **changes) -> "TemplateKnobs":
        return TemplateKnobs(**{**self.model_dump(), **changes})
