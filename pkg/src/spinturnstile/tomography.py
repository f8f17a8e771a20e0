"""Reconstruction of the gate state from pulse probabilities.

Because quantum dynamics is linear in the initial state, the pulse
probability at any fixed setting is an affine function of the gate-state
parameters. Expanding the 4x4 gate state in the Pauli-product basis,

    rho(theta) = ( I + sum_j theta_j P_j ) / 4,

each measurement setting contributes one affine row
``Pr_i = A_i . theta + b_i`` with ``b_i`` the probability on the maximally
mixed gate. Collecting rows over a grid of settings gives a linear inverse
problem whose rank and conditioning tell whether the chosen settings
identify the state at all; the solver below reports both and returns the
minimum-norm least-squares estimate.

Two parameterizations are supported:

- ``"single_spin"``: 3 parameters, the polarization vector of the gate
  electron; the nucleus is taken maximally mixed and uncorrelated.
- ``"two_spin"``: all 15 generalized parameters (two local polarizations
  plus 9 correlators).

Shot noise propagates through the pseudoinverse into a parameter covariance
estimate. Raw estimates may leave the physical state set; a clip-based
projection back to physicality is provided as a diagnostic, never applied
silently.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import IDENTITY_2, PAULIS, kron
from .cycle import MeasurementSetting, induced_instrument
from .model import SpinModelParams, build_total_hamiltonian

__all__ = [
    "SINGLE_SPIN",
    "TWO_SPIN",
    "PAULI_PRODUCT_LABELS",
    "TomographyDesign",
    "ReconstructionResult",
    "IdentifiabilityReport",
    "RankDeficientWarning",
    "n_parameters",
    "parameter_labels",
    "theta_to_density",
    "density_to_theta",
    "is_physical",
    "project_physical",
    "build_design",
    "forward_probabilities",
    "reconstruct",
    "identifiability_report",
]

SINGLE_SPIN = "single_spin"
TWO_SPIN = "two_spin"

# Relative singular-value cutoff separating signal from numerically-zero
# directions in the design matrix.
RANK_TOL = 1e-10


def _product_basis():
    labels, mats = [], []
    axis_labels = "XYZ"
    for a, la in zip(PAULIS, axis_labels):
        labels.append(la + "I")
        mats.append(kron(a, IDENTITY_2))
    for b, lb in zip(PAULIS, axis_labels):
        labels.append("I" + lb)
        mats.append(kron(IDENTITY_2, b))
    for a, la in zip(PAULIS, axis_labels):
        for b, lb in zip(PAULIS, axis_labels):
            labels.append(la + lb)
            mats.append(kron(a, b))
    return tuple(labels), tuple(mats)


PAULI_PRODUCT_LABELS, _PRODUCT_BASIS = _product_basis()


class RankDeficientWarning(UserWarning):
    """The design matrix does not identify all state parameters."""


def _check_mode(mode: str) -> None:
    if mode not in (SINGLE_SPIN, TWO_SPIN):
        raise ValueError(f"unknown tomography mode {mode!r}")


def n_parameters(mode: str) -> int:
    _check_mode(mode)
    return 3 if mode == SINGLE_SPIN else 15


def parameter_labels(mode: str):
    """Human-readable labels of the state parameters, in column order."""
    _check_mode(mode)
    if mode == SINGLE_SPIN:
        return PAULI_PRODUCT_LABELS[:3]
    return PAULI_PRODUCT_LABELS


def theta_to_density(theta, mode: str) -> np.ndarray:
    """Gate state from its parameter vector.

    Single-spin parameters describe the electron polarization with the
    nucleus maximally mixed; two-spin parameters are the full Pauli-product
    expansion coefficients.
    """
    _check_mode(mode)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n_parameters(mode),):
        raise ValueError(f"{mode} expects {n_parameters(mode)} parameters, got shape {theta.shape}")
    rho = np.eye(4, dtype=complex) / 4.0
    basis = _PRODUCT_BASIS[:3] if mode == SINGLE_SPIN else _PRODUCT_BASIS
    for coeff, mat in zip(theta, basis):
        rho = rho + coeff * mat / 4.0
    return rho


def density_to_theta(rho: np.ndarray, mode: str) -> np.ndarray:
    """Parameter vector ``theta_j = tr(rho P_j)`` of a 4x4 gate state."""
    _check_mode(mode)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError("expected a 4x4 gate state")
    basis = _PRODUCT_BASIS[:3] if mode == SINGLE_SPIN else _PRODUCT_BASIS
    return np.array([np.trace(rho @ p).real for p in basis])


def is_physical(theta, mode: str, tol: float = 1e-10) -> bool:
    """Whether the parameter vector corresponds to a positive unit-trace state."""
    _check_mode(mode)
    theta = np.asarray(theta, dtype=float)
    if mode == SINGLE_SPIN:
        return float(np.linalg.norm(theta)) <= 1.0 + tol
    min_eig = float(np.linalg.eigvalsh(theta_to_density(theta, mode)).min())
    return min_eig >= -tol


def project_physical(theta, mode: str) -> np.ndarray:
    """Clip-based projection of a raw estimate back to the physical set.

    Single-spin: radial shrink of the polarization vector onto the unit ball.
    Two-spin: clip negative eigenvalues of the reconstructed matrix to zero
    and renormalize the trace. Idempotent; physical inputs pass through
    unchanged (up to re-expansion round-off).
    """
    _check_mode(mode)
    theta = np.asarray(theta, dtype=float)
    if mode == SINGLE_SPIN:
        norm = float(np.linalg.norm(theta))
        if norm <= 1.0:
            return theta.copy()
        return theta / norm
    rho = theta_to_density(theta, mode)
    w, v = np.linalg.eigh(rho)
    if w.min() >= 0.0:
        return theta.copy()
    w = np.clip(w, 0.0, None)
    rho_proj = (v * w) @ v.conj().T
    rho_proj /= np.trace(rho_proj).real
    return density_to_theta(rho_proj, mode)


@dataclass(frozen=True)
class TomographyDesign:
    """Affine design ``Pr = A theta + b`` over a grid of settings.

    ``matrix`` has one row per setting and one column per state parameter;
    ``offset`` holds the maximally-mixed-gate probabilities. Rank and
    conditioning are computed from the singular spectrum with relative cutoff
    ``RANK_TOL``; ``null_space`` columns span the unidentifiable directions.
    """

    settings: tuple
    mode: str
    matrix: np.ndarray
    offset: np.ndarray
    singular_values: np.ndarray
    rank: int
    condition_number: float
    null_space: np.ndarray

    @property
    def n_settings(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_params(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ReconstructionResult:
    """Least-squares gate-state estimate with diagnostics."""

    theta_hat: np.ndarray
    mode: str
    residual_norm: float
    covariance: np.ndarray | None
    physical: bool
    physical_projection: np.ndarray | None
    rank: int
    condition_number: float
    null_space: np.ndarray


@dataclass(frozen=True)
class IdentifiabilityReport:
    """Summary of which state parameters a design can resolve."""

    mode: str
    n_settings: int
    n_params: int
    rank: int
    condition_number: float
    identifiable: bool
    unidentifiable_directions: tuple

    def __str__(self):
        lines = [
            f"settings: {self.n_settings}, parameters: {self.n_params} ({self.mode})",
            f"rank: {self.rank} -> {'identifiable' if self.identifiable else 'NOT identifiable'}",
            f"condition number: {self.condition_number:.6g}",
        ]
        if self.unidentifiable_directions:
            lines.append("unidentifiable directions (dominant parameters):")
            for desc in self.unidentifiable_directions:
                lines.append(f"  - {desc}")
        return "\n".join(lines)

    def to_dict(self):
        return {
            "mode": self.mode,
            "n_settings": self.n_settings,
            "n_params": self.n_params,
            "rank": self.rank,
            "condition_number": self.condition_number,
            "identifiable": self.identifiable,
            "unidentifiable_directions": list(self.unidentifiable_directions),
        }


def _effect_for(setting: MeasurementSetting, model: SpinModelParams, c, tau_detect, t_sq,
                include_gate_hamiltonian: bool) -> np.ndarray:
    row_model = setting.model if setting.model is not None else model
    h_total = build_total_hamiltonian(row_model, include_gate_hamiltonian)
    instrument = induced_instrument(
        setting.u_left, setting.u_right, h_total, setting.t_interact, c, tau_detect, t_sq
    )
    return instrument.effect_pulse


def build_design(
    settings,
    model: SpinModelParams,
    c: float,
    tau_detect: float,
    t_sq: float,
    mode: str = SINGLE_SPIN,
    include_gate_hamiltonian: bool = True,
) -> TomographyDesign:
    """Assemble the affine design matrix for a grid of settings.

    Each row is evaluated through the forward model: the offset is the pulse
    probability on the maximally mixed gate, and the matrix entries are the
    probability responses to unit perturbations along each parameter
    direction (exact, since the forward map is affine).
    """
    _check_mode(mode)
    settings = tuple(settings)
    if not settings:
        raise ValueError("at least one setting is required")
    n_par = n_parameters(mode)
    rho_mixed = np.eye(4, dtype=complex) / 4.0
    basis = _PRODUCT_BASIS[:3] if mode == SINGLE_SPIN else _PRODUCT_BASIS

    matrix = np.empty((len(settings), n_par))
    offset = np.empty(len(settings))
    for i, setting in enumerate(settings):
        effect = _effect_for(setting, model, c, tau_detect, t_sq, include_gate_hamiltonian)
        b_i = float(np.trace(effect @ rho_mixed).real)
        offset[i] = b_i
        for j in range(n_par):
            pr_j = float(np.trace(effect @ (rho_mixed + basis[j] / 4.0)).real)
            matrix[i, j] = pr_j - b_i

    _, sv, vt = np.linalg.svd(matrix, full_matrices=True)
    cutoff = RANK_TOL * (sv[0] if sv.size and sv[0] > 0 else 1.0)
    rank = int((sv > cutoff).sum())
    cond = float(sv[0] / sv[rank - 1]) if rank > 0 else float("inf")
    null_space = vt[rank:].T.copy()
    return TomographyDesign(
        settings=settings,
        mode=mode,
        matrix=matrix,
        offset=offset,
        singular_values=sv,
        rank=rank,
        condition_number=cond,
        null_space=null_space,
    )


def forward_probabilities(design: TomographyDesign, theta) -> np.ndarray:
    """Noiseless pulse probabilities the design predicts for a state."""
    theta = np.asarray(theta, dtype=float)
    return design.matrix @ theta + design.offset


def reconstruct(design: TomographyDesign, pr_measured, shot_counts=None) -> ReconstructionResult:
    """Minimum-norm least-squares estimate of the gate state.

    Args:
        design: affine design from :func:`build_design`.
        pr_measured: measured pulse probabilities, one per design row.
        shot_counts: optional per-row cycle counts; when given, binomial
            variances are propagated through the pseudoinverse into a
            parameter covariance estimate.

    A rank-deficient design triggers a :class:`RankDeficientWarning` (the
    null-space component of the state is unobservable and is returned as 0),
    never a silent fill-in.
    """
    pr_measured = np.asarray(pr_measured, dtype=float)
    if pr_measured.shape != (design.n_settings,):
        raise ValueError(
            f"expected {design.n_settings} probabilities, got shape {pr_measured.shape}"
        )
    y = pr_measured - design.offset

    u, sv, vt = np.linalg.svd(design.matrix, full_matrices=False)
    cutoff = RANK_TOL * (sv[0] if sv.size and sv[0] > 0 else 1.0)
    rank = int((sv > cutoff).sum())
    inv_sv = np.zeros_like(sv)
    inv_sv[:rank] = 1.0 / sv[:rank]
    pinv = vt.T @ np.diag(inv_sv) @ u.T
    theta_hat = pinv @ y
    residual_norm = float(np.linalg.norm(design.matrix @ theta_hat - y))

    if rank < design.n_params:
        warnings.warn(
            f"design rank {rank} < {design.n_params} parameters; "
            "null-space components of the estimate are unconstrained (returned as 0)",
            RankDeficientWarning,
            stacklevel=2,
        )

    covariance = None
    if shot_counts is not None:
        counts = np.broadcast_to(np.asarray(shot_counts, dtype=float), pr_measured.shape)
        if np.any(counts <= 0):
            raise ValueError("shot counts must be positive")
        var = pr_measured * (1.0 - pr_measured) / counts
        covariance = pinv @ np.diag(var) @ pinv.T

    physical = is_physical(theta_hat, design.mode)
    projection = None if physical else project_physical(theta_hat, design.mode)
    return ReconstructionResult(
        theta_hat=theta_hat,
        mode=design.mode,
        residual_norm=residual_norm,
        covariance=covariance,
        physical=physical,
        physical_projection=projection,
        rank=design.rank,
        condition_number=design.condition_number,
        null_space=design.null_space,
    )


def identifiability_report(design: TomographyDesign) -> IdentifiabilityReport:
    """Describe the unidentifiable directions of a design, if any."""
    labels = parameter_labels(design.mode)
    directions = []
    for k in range(design.null_space.shape[1]):
        vec = design.null_space[:, k]
        order = np.argsort(-np.abs(vec))
        dominant = [
            f"{labels[j]} ({vec[j]:+.3f})" for j in order[:3] if abs(vec[j]) > 0.05
        ]
        directions.append(", ".join(dominant) if dominant else "(diffuse)")
    return IdentifiabilityReport(
        mode=design.mode,
        n_settings=design.n_settings,
        n_params=design.n_params,
        rank=design.rank,
        condition_number=design.condition_number,
        identifiable=design.rank == design.n_params,
        unidentifiable_directions=tuple(directions),
    )
