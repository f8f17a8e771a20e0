"""Effective spin Hamiltonians and tunneling-rate model of the readout device.

The simulated device is a row of three tunnel-coupled quantum dots between two
spin-polarized metal electrodes, with the central dot sitting above a donor
site carrying an electron spin and a nuclear spin (the two-spin "gate" being
measured). Everything dynamical happens in the 8-dimensional spin space of

    site 0: ancilla electron in the central dot,
    site 1: gate (donor) electron,
    site 2: gate nucleus.

Charge dynamics enters only through the resonant-tunneling rate formula
:func:`gamma_rate` and the time-scale hierarchy it implies; the hopping
between the donor and the central dot is folded into an isotropic Heisenberg
exchange (standard second-order superexchange, ``4 t^2 / U``), which keeps the
joint dynamics an 8x8 problem.

Unit conventions follow :mod:`spinturnstile.constants`: couplings in rad/s,
fields in tesla, times in seconds. Nuclear Zeeman terms are written with the
Bohr magneton and a freely settable dimensionless factor ``g_nuclear``, so
realistic nuclear Larmor scales are reached with ``g_nuclear ~ 1e-3``
(see ``constants.G_NUCLEAR_P31``).
"""

import math
from dataclasses import dataclass

import numpy as np

from .algebra import spin_operators
from .constants import MU_B_PER_HBAR

__all__ = [
    "SpinModelParams",
    "TunnelParams",
    "HierarchyReport",
    "build_gate_hamiltonian",
    "build_interaction_hamiltonian",
    "build_ancilla_zeeman",
    "build_total_hamiltonian",
    "effective_exchange",
    "gamma_rate",
    "characteristic_times",
]

_SITES = spin_operators(3)
_DIM = 8
_ANCILLA, _ELECTRON, _NUCLEUS = 0, 1, 2

# Default threshold for "much smaller than" in the time-scale hierarchy.
HIERARCHY_THRESHOLD = 100.0


@dataclass(frozen=True)
class SpinModelParams:
    """Couplings of the three-spin model and the external field.

    Attributes:
        b_field: external magnetic field (tesla, lab frame 3-vector).
        g_electron: dimensionless g-factor of the gate electron.
        g_nuclear: dimensionless (signed) nuclear factor; the nuclear Zeeman
            term is ``g_nuclear * mu_B/hbar * sigma_nuc . B``, i.e. written
            with the Bohr magneton, so physical nuclear scales need
            ``g_nuclear ~ 1e-3``.
        g_ancilla: dimensionless g-factor of the ancilla electron.
        hyperfine_gate: contact coupling between gate electron and nucleus,
            rad/s (coefficient of ``sigma_nuc . sigma_el``).
        hyperfine_ancilla: contact coupling between ancilla electron and the
            nucleus, rad/s.
        hopping: gate-electron <-> central-dot hopping amplitude, rad/s.
        coulomb_u: inter-site Coulomb energy penalizing double occupancy,
            rad/s; only enters through the derived exchange.
        exchange: effective Heisenberg exchange between gate and ancilla
            electrons, rad/s. ``None`` means derive it from ``hopping`` and
            ``coulomb_u`` via :func:`effective_exchange`.
        level_offset: scalar offset of the donor level, rad/s. Pure phase; it
            has no observable effect and is retained for completeness.
    """

    b_field: tuple = (0.0, 0.0, 0.0)
    g_electron: float = 0.0
    g_nuclear: float = 0.0
    g_ancilla: float = 0.0
    hyperfine_gate: float = 0.0
    hyperfine_ancilla: float = 0.0
    hopping: float = 0.0
    coulomb_u: float = 0.0
    exchange: float | None = None
    level_offset: float = 0.0

    def __post_init__(self):
        values = (*self.b_field, self.g_electron, self.g_nuclear, self.g_ancilla,
                  self.hyperfine_gate, self.hyperfine_ancilla, self.hopping,
                  self.coulomb_u, self.level_offset)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("all model parameters must be finite")
        if len(self.b_field) != 3:
            raise ValueError("b_field must have 3 components")
        if self.exchange is None and self.hopping != 0.0 and self.coulomb_u <= 0.0:
            raise ValueError("coulomb_u must be positive to derive the exchange from hopping")

    def exchange_value(self) -> float:
        """Exchange coupling in rad/s, deriving it from hopping/coulomb_u if unset."""
        if self.exchange is not None:
            return float(self.exchange)
        if self.hopping == 0.0:
            return 0.0
        return effective_exchange(self.hopping, self.coulomb_u)


@dataclass(frozen=True)
class TunnelParams:
    """Rate parameters of the dot chain and the pulse timing.

    Attributes:
        gamma0: bare barrier transparency (level width) of the dot-electrode
            and dot-dot barriers, s^-1. Sets the resonant escape rate.
        interdot_sq: squared inter-dot coupling matrix element, s^-1; equals
            ``gamma0`` when all barriers are taken identical.
        detuning: level detuning between adjacent dots in the blocking (off)
            configuration, rad/s.
        tau_detect: detection pulse width, seconds.
        tau_cycle: duration of a complete measurement cycle, seconds.
    """

    gamma0: float = 1.0e9
    interdot_sq: float = 1.0e9
    detuning: float = 1.0e12
    tau_detect: float = 1.0e-10
    tau_cycle: float = 1.0e-6

    def __post_init__(self):
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if self.interdot_sq < 0:
            raise ValueError("interdot_sq must be nonnegative")
        if self.tau_detect <= 0 or self.tau_cycle <= 0:
            raise ValueError("tau_detect and tau_cycle must be positive")


@dataclass(frozen=True)
class HierarchyReport:
    """Characteristic times of the device and whether they are well separated.

    The protocol requires resonant tunneling to be much faster than the joint
    spin dynamics, which in turn must be much faster than the off-resonant
    leakage: ``tau_res << tau_dyn << tau_non``. ``satisfied`` holds exactly
    when both ratios reach ``threshold``.
    """

    tau_res: float
    tau_dyn: float
    tau_non: float
    ratio_dyn_res: float
    ratio_non_dyn: float
    satisfied: bool
    threshold: float
    tau_dyn_finite: bool = True


def _three_vector_dot(coeff_vec, site: int) -> np.ndarray:
    """``sum_a v_a sigma_a`` embedded at ``site`` of the 3-spin space."""
    h = np.zeros((_DIM, _DIM), dtype=complex)
    for axis in range(3):
        c = float(coeff_vec[axis])
        if c != 0.0:
            h += c * _SITES.op(site, axis)
    return h


def _pauli_dot_pauli(site_a: int, site_b: int) -> np.ndarray:
    """Isotropic ``sigma . sigma`` coupling between two sites."""
    h = np.zeros((_DIM, _DIM), dtype=complex)
    for axis in range(3):
        h += _SITES.op(site_a, axis) @ _SITES.op(site_b, axis)
    return h


def build_gate_hamiltonian(p: SpinModelParams) -> np.ndarray:
    """Internal Hamiltonian of the two-spin gate, embedded in the 8-dim space.

    ``H = level_offset * I + g_el mu_B sigma_el . B + g_nuc mu_B sigma_nuc . B
    + hyperfine_gate sigma_nuc . sigma_el`` acting on sites 1 (gate electron)
    and 2 (nucleus), identity on the ancilla.
    """
    b = np.asarray(p.b_field, dtype=float)
    h = float(p.level_offset) * np.eye(_DIM, dtype=complex)
    h += _three_vector_dot(p.g_electron * MU_B_PER_HBAR * b, _ELECTRON)
    h += _three_vector_dot(p.g_nuclear * MU_B_PER_HBAR * b, _NUCLEUS)
    if p.hyperfine_gate != 0.0:
        h += p.hyperfine_gate * _pauli_dot_pauli(_NUCLEUS, _ELECTRON)
    return h


def build_interaction_hamiltonian(p: SpinModelParams) -> np.ndarray:
    """Ancilla-gate coupling on the 8-dim spin space.

    ``H = J sigma_el . sigma_anc + hyperfine_ancilla sigma_nuc . sigma_anc``
    where ``J`` is the effective exchange (hopping folded into superexchange).
    """
    h = np.zeros((_DIM, _DIM), dtype=complex)
    j = p.exchange_value()
    if j != 0.0:
        h += j * _pauli_dot_pauli(_ELECTRON, _ANCILLA)
    if p.hyperfine_ancilla != 0.0:
        h += p.hyperfine_ancilla * _pauli_dot_pauli(_NUCLEUS, _ANCILLA)
    return h


def build_ancilla_zeeman(p: SpinModelParams) -> np.ndarray:
    """Zeeman term of the ancilla electron in the external field."""
    b = np.asarray(p.b_field, dtype=float)
    return _three_vector_dot(p.g_ancilla * MU_B_PER_HBAR * b, _ANCILLA)


def build_total_hamiltonian(p: SpinModelParams, include_gate_hamiltonian: bool = True) -> np.ndarray:
    """Hamiltonian active during the interaction window.

    With ``include_gate_hamiltonian`` (the default) this is the full physical
    generator: interaction + gate internal terms + ancilla Zeeman. With it
    disabled only the ancilla-gate interaction acts, which isolates the
    information transfer from the free precession.
    """
    h = build_interaction_hamiltonian(p)
    if include_gate_hamiltonian:
        h = h + build_gate_hamiltonian(p) + build_ancilla_zeeman(p)
    return h


def effective_exchange(hopping: float, coulomb_u: float) -> float:
    """Superexchange ``J = 4 t^2 / U`` from hopping and on-site repulsion.

    Valid in the charge-blockaded regime ``t << U``; the caller may bypass the
    reduction entirely by setting ``SpinModelParams.exchange`` directly.

    Raises:
        ValueError: if ``coulomb_u <= 0`` while ``hopping != 0``.
    """
    if hopping == 0.0:
        return 0.0
    if coulomb_u <= 0.0:
        raise ValueError("coulomb_u must be positive when hopping is nonzero")
    return 4.0 * hopping * hopping / coulomb_u


def gamma_rate(delta: float, tp: TunnelParams) -> float:
    """Tunneling rate through the dot chain at level detuning ``delta``.

    Lorentzian resonance ``interdot_sq * gamma0^2 / (delta^2 + gamma0^2)``:
    equal to ``interdot_sq`` on resonance and suppressed as
    ``~ gamma0^2 / delta^2`` far from it. Even in ``delta`` and maximal at 0.
    """
    g0_sq = tp.gamma0 * tp.gamma0
    return tp.interdot_sq * g0_sq / (delta * delta + g0_sq)


def characteristic_times(
    p: SpinModelParams,
    tp: TunnelParams,
    delta_off: float | None = None,
    threshold: float = HIERARCHY_THRESHOLD,
) -> HierarchyReport:
    """Evaluate the three device time scales and check their separation.

    ``tau_res`` is the on-resonance escape time, ``tau_non`` the leakage time
    at detuning ``delta_off`` (default: ``tp.detuning``), and ``tau_dyn`` the
    joint spin-dynamics time estimated as ``2 pi / ||H||`` with the spectral
    norm of the traceless part of the gate+interaction Hamiltonian (the
    trace part is a global phase and generates no dynamics).

    A zero Hamiltonian leaves ``tau_dyn`` undefined; the report then carries
    ``tau_dyn = inf`` with ``tau_dyn_finite=False`` instead of raising.
    """
    if delta_off is None:
        delta_off = tp.detuning
    tau_res = 1.0 / gamma_rate(0.0, tp)
    tau_non = 1.0 / gamma_rate(delta_off, tp)

    h = build_gate_hamiltonian(p) + build_interaction_hamiltonian(p)
    h = h - (np.trace(h) / _DIM) * np.eye(_DIM)
    norm = float(np.abs(np.linalg.eigvalsh(h)).max())
    finite = norm > 0.0
    tau_dyn = 2.0 * math.pi / norm if finite else math.inf

    r1 = tau_dyn / tau_res
    r2 = tau_non / tau_dyn if finite else 0.0
    return HierarchyReport(
        tau_res=tau_res,
        tau_dyn=tau_dyn,
        tau_non=tau_non,
        ratio_dyn_res=r1,
        ratio_non_dyn=r2,
        satisfied=bool(r1 >= threshold and r2 >= threshold),
        threshold=float(threshold),
        tau_dyn_finite=finite,
    )
