"""One full measurement cycle of the turnstile readout protocol.

A cycle consists of: loading the central dot with a spin-polarized electron
from the left electrode (the ancilla, prepared in ``(I + u_left . sigma)/2``),
letting it interact with the two-spin gate for a time ``t_interact`` under the
joint unitary dynamics, then opening the right barrier for a short window
``tau_detect`` so that a current pulse appears in the right electrode with
probability

    Pr = c * tau_detect * t_sq * (1 + u_right . u_ancilla(t)),

and finally flushing the dot. Because the detection acts only on the ancilla,
the whole cycle induces a two-outcome quantum instrument on the gate: a pair
of positive effects summing to the identity, plus the completely positive
maps giving the conditional post-measurement gate states. Both descriptions
are exposed here and agree with each other by construction; their numerical
agreement is the central consistency check of the package.

The detection POVM on the ancilla is the minimal two-outcome model that
reproduces the pulse-probability formula: ``M_pulse = kappa (I + u_right .
sigma)/2`` with strength ``kappa = 2 c tau_detect t_sq``, and
``M_nopulse = I - M_pulse``. ``kappa`` must not exceed 1, otherwise the
"measurement" would fire with probability above one.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    IDENTITY_2,
    STRUCTURAL_TOL,
    apply_unitary,
    bloch_to_density,
    density_to_bloch,
    evolve_unitary,
    kron,
    partial_trace,
)
from .model import SpinModelParams, TunnelParams, build_total_hamiltonian, characteristic_times

__all__ = [
    "PulseSchedule",
    "MeasurementSetting",
    "QuantumInstrument",
    "CycleOutcome",
    "PulseClampWarning",
    "HierarchyWarning",
    "prepare_ancilla",
    "joint_evolve",
    "ancilla_state",
    "detection_strength",
    "detection_probability",
    "induced_instrument",
    "run_cycle",
]

_JOINT_DIMS = [2, 2, 2]
_GATE_EYE = np.eye(4, dtype=complex)

# Eigenvalue weights below this (relative) threshold contribute nothing to a
# map and are dropped from its Kraus decomposition.
_KRAUS_WEIGHT_CUTOFF = 1e-14


class PulseClampWarning(UserWarning):
    """Pulse probability formula left [0, 1] and was clamped."""


class HierarchyWarning(UserWarning):
    """Device time scales violate tau_res << tau_dyn << tau_non."""


@dataclass(frozen=True)
class PulseSchedule:
    """Timing of one measurement cycle.

    Attributes:
        t_interact: joint ancilla-gate evolution time, seconds.
        tau_detect: detection window width, seconds.
        tau_cycle: full cycle period, seconds.
        include_gate_hamiltonian: evolve under the full physical Hamiltonian
            (gate + interaction + ancilla Zeeman) when True; under the
            interaction term alone when False.
    """

    t_interact: float
    tau_detect: float = 1.0e-10
    tau_cycle: float = 1.0e-6
    include_gate_hamiltonian: bool = True

    def __post_init__(self):
        if self.t_interact < 0:
            raise ValueError("t_interact must be nonnegative")
        if self.tau_detect < 0:
            raise ValueError("tau_detect must be nonnegative")
        if self.tau_cycle <= 0:
            raise ValueError("tau_cycle must be positive")


@dataclass(frozen=True)
class MeasurementSetting:
    """One knob configuration for a cycle: lead polarizations and duration.

    ``model`` optionally overrides the baseline spin-model parameters for
    this setting only (sweeps and tomography designs may vary couplings or
    the field alongside the lead magnetizations).
    """

    u_left: tuple
    u_right: tuple
    t_interact: float
    model: SpinModelParams | None = None

    def __post_init__(self):
        object.__setattr__(self, "u_left", tuple(float(x) for x in self.u_left))
        object.__setattr__(self, "u_right", tuple(float(x) for x in self.u_right))
        for name, u in (("u_left", self.u_left), ("u_right", self.u_right)):
            if len(u) != 3:
                raise ValueError(f"{name} must have 3 components")
            if float(np.linalg.norm(u)) > 1.0 + STRUCTURAL_TOL:
                raise ValueError(f"{name} must have norm <= 1")
        if self.t_interact < 0:
            raise ValueError("t_interact must be nonnegative")


@dataclass(frozen=True)
class QuantumInstrument:
    """Two-outcome instrument induced on the gate by one readout cycle.

    ``effect_pulse``/``effect_nopulse`` are the 4x4 POVM effects (positive,
    summing to the identity): ``Pr(pulse | rho) = tr(effect_pulse rho)``.
    ``kraus_pulse``/``kraus_nopulse`` hold Kraus operators of the conditional
    (trace-nonincreasing) maps taking the pre-measurement gate state to the
    unnormalized post-measurement state for each outcome.
    """

    effect_pulse: np.ndarray
    effect_nopulse: np.ndarray
    kraus_pulse: tuple
    kraus_nopulse: tuple
    kappa: float

    def pulse_probability(self, rho_gate: np.ndarray) -> float:
        return float(np.trace(self.effect_pulse @ rho_gate).real)

    def apply(self, rho_gate: np.ndarray, pulse: bool):
        """Conditional post-measurement state and its probability.

        Returns ``(rho_post, prob)``; ``rho_post`` is None when the outcome
        has (numerically) zero probability.
        """
        kraus = self.kraus_pulse if pulse else self.kraus_nopulse
        sigma = np.zeros((4, 4), dtype=complex)
        for k in kraus:
            sigma += k @ rho_gate @ k.conj().T
        prob = float(np.trace(sigma).real)
        if prob <= 1e-14:
            return None, max(prob, 0.0)
        return sigma / prob, prob

    def kraus_stacks(self):
        """Kraus operators stacked as (k, 4, 4) arrays, pulse first."""
        return (
            np.stack(self.kraus_pulse).astype(np.complex128),
            np.stack(self.kraus_nopulse).astype(np.complex128),
        )


@dataclass(frozen=True)
class CycleOutcome:
    """Everything a single cycle produces for a given gate state.

    The conditional post-measurement states are None when the corresponding
    outcome has zero probability (e.g. the pulse branch at exactly
    antiparallel unit magnetizations).
    """

    u_ancilla: np.ndarray
    pr_pulse: float
    rho_gate_pulse: np.ndarray | None
    rho_gate_nopulse: np.ndarray | None
    effect_pulse: np.ndarray
    effect_nopulse: np.ndarray
    kappa: float
    instrument: QuantumInstrument = field(repr=False, default=None)


def prepare_ancilla(u_left) -> np.ndarray:
    """Fresh ancilla state inheriting the left-lead polarization."""
    return bloch_to_density(u_left)


def joint_evolve(rho_ancilla: np.ndarray, rho_gate: np.ndarray, h_total: np.ndarray, t: float) -> np.ndarray:
    """Evolve the product state ``rho_ancilla x rho_gate`` for time ``t``.

    ``h_total`` is the 8x8 generator on (ancilla, gate electron, nucleus).
    """
    rho_ancilla = np.asarray(rho_ancilla, dtype=complex)
    rho_gate = np.asarray(rho_gate, dtype=complex)
    if rho_ancilla.shape != (2, 2) or rho_gate.shape != (4, 4):
        raise ValueError("expected a 2x2 ancilla state and a 4x4 gate state")
    if np.asarray(h_total).shape != (8, 8):
        raise ValueError("joint Hamiltonian must be 8x8")
    u = evolve_unitary(h_total, t)
    return apply_unitary(u, kron(rho_ancilla, rho_gate))


def ancilla_state(rho_joint: np.ndarray):
    """Reduced ancilla state and its polarization vector after joint evolution."""
    rho_joint = np.asarray(rho_joint, dtype=complex)
    if rho_joint.shape != (8, 8):
        raise ValueError("joint state must be 8x8")
    rho_a = partial_trace(rho_joint, _JOINT_DIMS, keep=[0])
    return rho_a, density_to_bloch(rho_a)


def detection_strength(c: float, tau_detect: float, t_sq: float) -> float:
    """POVM strength ``kappa = 2 c tau_detect t_sq`` of the detection window."""
    return 2.0 * c * tau_detect * t_sq


def detection_probability(u_ancilla, u_right, c: float, tau_detect: float, t_sq: float) -> float:
    """Probability of a current pulse in the right electrode.

    Evaluates ``c * tau_detect * t_sq * (1 + u_right . u_ancilla)``. The
    formula is a rate-times-time product; if the detection strength allows
    values above 1 the result is clamped to [0, 1] and a
    :class:`PulseClampWarning` is emitted rather than raising.
    """
    u_ancilla = np.asarray(u_ancilla, dtype=float)
    u_right = np.asarray(u_right, dtype=float)
    for name, u in (("u_ancilla", u_ancilla), ("u_right", u_right)):
        if float(np.linalg.norm(u)) > 1.0 + STRUCTURAL_TOL:
            raise ValueError(f"{name} must have norm <= 1")
    if c < 0 or tau_detect < 0 or t_sq < 0:
        raise ValueError("c, tau_detect and t_sq must be nonnegative")
    pr = c * tau_detect * t_sq * (1.0 + float(u_right @ u_ancilla))
    if detection_strength(c, tau_detect, t_sq) > 1.0:
        warnings.warn(
            "detection strength 2*c*tau_detect*t_sq exceeds 1; pulse probability clamped",
            PulseClampWarning,
            stacklevel=2,
        )
    return float(min(max(pr, 0.0), 1.0))


def _detection_povm(u_right, kappa: float):
    """Two-outcome ancilla POVM reproducing the pulse-probability formula."""
    m_pulse = kappa * bloch_to_density(u_right)
    return m_pulse, IDENTITY_2 - m_pulse


def _kraus_from(rho_ancilla: np.ndarray, m_effect: np.ndarray, u: np.ndarray):
    """Kraus operators of ``rho -> Tr_A{(M x I) U (rho_A x rho) U^dag}``.

    Spectral-decomposes the ancilla preparation and the effect; each pair of
    eigenvectors contributes one 4x4 Kraus operator weighted by the square
    roots of the eigenvalues.
    """
    q, prep_vecs = np.linalg.eigh(rho_ancilla)
    w, eff_vecs = np.linalg.eigh(m_effect)
    q = np.clip(q, 0.0, None)
    w = np.clip(w, 0.0, None)
    kraus = []
    u_resh = u.reshape(2, 4, 2, 4)
    for n in range(2):
        for m in range(2):
            weight = q[n] * w[m]
            # weights are products of probabilities (<= 1): absolute cutoff
            if weight <= _KRAUS_WEIGHT_CUTOFF:
                continue
            # <m| U |n> on the ancilla factor: contract both 2-dim indices.
            block = np.einsum("a,abcd,c->bd", eff_vecs[:, m].conj(), u_resh, prep_vecs[:, n])
            kraus.append(np.sqrt(weight) * block)
    if not kraus:
        kraus.append(np.zeros((4, 4), dtype=complex))
    return tuple(kraus)


def induced_instrument(
    u_left,
    u_right,
    h_total: np.ndarray,
    t: float,
    c: float,
    tau_detect: float,
    t_sq: float,
) -> QuantumInstrument:
    """Build the two-outcome instrument the cycle induces on the gate.

    The effects are obtained by pulling the detection POVM back through the
    joint unitary and tracing out the ancilla preparation:
    ``E = Tr_A{(rho_A x I) U^dag (M x I) U}``. They satisfy
    ``E_pulse + E_nopulse = I`` and reproduce the pulse-probability formula
    for every gate state.

    Raises:
        ValueError: if the detection strength ``kappa`` exceeds 1 (the POVM
            would not be positive: unphysical detection).
    """
    kappa = detection_strength(c, tau_detect, t_sq)
    if kappa > 1.0 + STRUCTURAL_TOL:
        raise ValueError(f"detection strength kappa={kappa} exceeds 1; reduce c, tau_detect or t_sq")
    rho_a = prepare_ancilla(u_left)
    m_pulse, m_nopulse = _detection_povm(u_right, kappa)
    u = evolve_unitary(h_total, t)

    prep = kron(rho_a, _GATE_EYE)
    effects = []
    for m in (m_pulse, m_nopulse):
        big = prep @ u.conj().T @ kron(m, _GATE_EYE) @ u
        e = partial_trace(big, [2, 4], keep=[1])
        effects.append(0.5 * (e + e.conj().T))  # exact hermitization

    return QuantumInstrument(
        effect_pulse=effects[0],
        effect_nopulse=effects[1],
        kraus_pulse=_kraus_from(rho_a, m_pulse, u),
        kraus_nopulse=_kraus_from(rho_a, m_nopulse, u),
        kappa=kappa,
    )


def run_cycle(
    params: SpinModelParams,
    tunnel: TunnelParams,
    schedule: PulseSchedule,
    u_left,
    u_right,
    rho_gate: np.ndarray,
    c: float,
) -> CycleOutcome:
    """Execute one full measurement cycle on a given gate state.

    Composes ancilla preparation, joint evolution, detection and the induced
    instrument into a single outcome record. The detection window width comes
    from ``schedule.tau_detect`` and the escape transparency from
    ``tunnel.gamma0``. Emits a :class:`HierarchyWarning` when the device time
    scales are not properly separated (the protocol's instantaneous-switching
    assumptions are then questionable), but still computes the ideal-limit
    result.
    """
    report = characteristic_times(params, tunnel)
    if not report.satisfied:
        warnings.warn(
            "time-scale hierarchy tau_res << tau_dyn << tau_non not satisfied "
            f"(ratios {report.ratio_dyn_res:.3g}, {report.ratio_non_dyn:.3g})",
            HierarchyWarning,
            stacklevel=2,
        )

    h_total = build_total_hamiltonian(params, schedule.include_gate_hamiltonian)
    rho_joint = joint_evolve(prepare_ancilla(u_left), rho_gate, h_total, schedule.t_interact)
    _, u_a = ancilla_state(rho_joint)

    instrument = induced_instrument(
        u_left, u_right, h_total, schedule.t_interact, c, schedule.tau_detect, tunnel.gamma0
    )
    pr = instrument.pulse_probability(rho_gate)
    rho_pulse, _ = instrument.apply(rho_gate, pulse=True)
    rho_nopulse, _ = instrument.apply(rho_gate, pulse=False)

    return CycleOutcome(
        u_ancilla=u_a,
        pr_pulse=pr,
        rho_gate_pulse=rho_pulse,
        rho_gate_nopulse=rho_nopulse,
        effect_pulse=instrument.effect_pulse,
        effect_nopulse=instrument.effect_nopulse,
        kappa=instrument.kappa,
        instrument=instrument,
    )
