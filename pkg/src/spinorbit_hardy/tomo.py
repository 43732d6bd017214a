"""Two-qubit state tomography from filtered photon counts.

Settings are all products of the six Pauli eigenstates on each qubit (36 in
total). Reconstruction maximizes the independent-Poisson likelihood with the
diluted ``R rho R`` iteration, halving the step whenever a full step would
lower the likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hardy import concurrence
from .prep import prepare_hardy
from .qstate import DensityOperator, as_matrix, fidelity, is_projector, projector, tensor
from .simlab import NoiseModel, apply_crosstalk, apply_noise, label_stream

_S = 1 / math.sqrt(2)
# Pauli eigenstates in the qubit ordering [|+1>, |-1>]
PAULI_KETS = {
    "Z+": np.array([1, 0], dtype=complex),
    "Z-": np.array([0, 1], dtype=complex),
    "X+": np.array([_S, _S], dtype=complex),
    "X-": np.array([_S, -_S], dtype=complex),
    "Y+": np.array([_S, 1j * _S], dtype=complex),
    "Y-": np.array([_S, -1j * _S], dtype=complex),
}

LL_TOL = 1e-10
MAX_ITER = 5000


@dataclass(frozen=True)
class TomographySetting:
    label: str
    projector: np.ndarray

    def __post_init__(self):
        if self.projector.shape != (4, 4) or not is_projector(self.projector, tol=1e-12):
            raise ValueError(f"setting {self.label!r} is not a 4x4 projector")


@dataclass
class TomographyResult:
    rho_hat: DensityOperator
    log_likelihood: float
    iterations: int
    converged: bool
    history: list[float] | None = None


def tomography_settings() -> list[TomographySetting]:
    """Labels read ``"<polarization>|<oam>"``, e.g. ``"Z+|X-"``."""
    settings = []
    for lp, kp in PAULI_KETS.items():
        for lo, ko in PAULI_KETS.items():
            settings.append(TomographySetting(f"{lp}|{lo}", projector(tensor(kp, ko))))
    return settings


def design_matrix(settings: list[TomographySetting]) -> np.ndarray:
    """Rows map a Hermitian matrix's 16 real coordinates to setting probabilities."""
    # basis of Hermitian 4x4 matrices: generalized Pauli products
    paulis = [
        np.eye(2),
        np.array([[0, 1], [1, 0]]),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]]),
    ]
    herm = [np.kron(a, b) for a in paulis for b in paulis]
    return np.array([[np.real(np.trace(s.projector @ h)) for h in herm] for s in settings])


def _stack(settings) -> np.ndarray:
    return np.array([s.projector for s in settings])


def simulate_tomography(
    rho, counts_per_setting: float, seed: int, settings=None, crosstalk_eps: float = 0.0
) -> dict[str, int]:
    """Poisson counts with mean ``q_s * counts_per_setting`` per setting.

    ``q_s = tr(rho P_s)``, optionally blurred by crosstalk as in
    :func:`~spinorbit_hardy.simlab.apply_crosstalk`.
    """
    if not counts_per_setting > 0:
        raise ValueError(f"counts_per_setting must be positive, got {counts_per_setting!r}")
    m = DensityOperator(as_matrix(rho)).matrix
    settings = tomography_settings() if settings is None else settings
    probs = {s.label: min(max(float(np.real(np.trace(m @ s.projector))), 0.0), 1.0) for s in settings}
    probs = apply_crosstalk(probs, NoiseModel(crosstalk_eps=crosstalk_eps))
    out = {}
    for label, q in probs.items():
        mean = q * counts_per_setting
        out[label] = int(label_stream(seed, "tomo:" + label).poisson(mean)) if mean > 0 else 0
    return out


def expected_counts(rho, counts_per_setting: float, settings=None) -> dict[str, float]:
    """Noise-free means, usable as infinite-statistics data."""
    m = as_matrix(rho)
    settings = tomography_settings() if settings is None else settings
    return {s.label: float(np.real(np.trace(m @ s.projector))) * counts_per_setting for s in settings}


def _probabilities(rho: np.ndarray, ops: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ij,sji->s", rho, ops))


def _log_likelihood(probs: np.ndarray, counts: np.ndarray) -> float:
    mask = counts > 0
    if np.any(probs[mask] <= 0):
        return -math.inf
    # sum_s p_s is fixed by the settings' completeness, so the Poisson term
    # -N sum_s p_s is constant and dropped
    return float(np.sum(counts[mask] * np.log(probs[mask])))


def _improvement(new: np.ndarray, old: np.ndarray, counts: np.ndarray) -> float:
    # difference of log-likelihoods without cancellation against the large total
    mask = counts > 0
    if np.any(new[mask] <= 0):
        return -math.inf
    return float(np.sum(counts[mask] * np.log1p((new[mask] - old[mask]) / old[mask])))


def mle_reconstruct(
    counts: dict[str, float],
    settings=None,
    *,
    tol: float = LL_TOL,
    max_iter: int = MAX_ITER,
    keep_history: bool = False,
) -> TomographyResult:
    """Maximum-likelihood density operator for the given counts.

    Each step is ``rho -> K rho K^dagger / tr`` with ``K = R`` (plain
    ``R rho R``) or, when that would lower the likelihood, the diluted
    ``K = I + e R`` with ``e`` halved until the likelihood does not drop.
    ``R = G^-1 sum_s (f_s / p_s) P_s`` with ``G = sum_s P_s``, so ``R = I`` at the
    fixed point. Stops once the Poisson log-likelihood gains less than ``tol``.
    """
    settings = tomography_settings() if settings is None else settings
    ops = _stack(settings)
    n = np.array([float(counts[s.label]) for s in settings])
    if np.any(n < 0) or n.sum() <= 0:
        raise ValueError("counts must be nonnegative with a positive total")
    f = n / n.sum()
    g_inv = np.linalg.inv(ops.sum(axis=0))
    eye = np.eye(4)

    rho = eye / 4
    probs = _probabilities(rho, ops)
    history = [_log_likelihood(probs, n)] if keep_history else None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        weights = np.divide(f, probs, out=np.zeros_like(f), where=probs > 0)
        r = g_inv @ np.einsum("s,sij->ij", weights, ops)
        dilution = math.inf
        while True:
            k = r if math.isinf(dilution) else eye + dilution * r
            cand = k @ rho @ k.conj().T
            cand = (cand + cand.conj().T) / 2
            cand /= np.real(np.trace(cand))
            cand_probs = _probabilities(cand, ops)
            gain = _improvement(cand_probs, probs, n)
            if gain >= 0 or dilution < 1e-8:
                break
            dilution = 1.0 if math.isinf(dilution) else dilution / 2
        if gain < 0:
            converged = True
            break
        rho, probs = cand, cand_probs
        if keep_history:
            history.append(_log_likelihood(probs, n))
        if gain < tol:
            converged = True
            break
    return TomographyResult(DensityOperator(rho), _log_likelihood(probs, n), it, converged, history)


def concurrence_curve(
    gammas, counts_per_setting: float, noise: NoiseModel | None = None, seed: int = 0
) -> list[tuple[float, float, float]]:
    """Prepare, add noise, measure, reconstruct at each angle.

    Returns ``(gamma, reconstructed concurrence, sin 2 gamma)`` triples. Each
    angle uses its own seed ``seed + index``.
    """
    noise = NoiseModel() if noise is None else noise
    out = []
    for i, g in enumerate(gammas):
        rho = apply_noise(projector(prepare_hardy(g)), noise)
        counts = simulate_tomography(rho, counts_per_setting, seed + i, crosstalk_eps=noise.crosstalk_eps)
        result = mle_reconstruct(counts)
        out.append((float(g), concurrence(result.rho_hat), math.sin(2 * g)))
    return out


def reconstruction_fidelity(result: TomographyResult, truth) -> float:
    return fidelity(result.rho_hat, truth)
