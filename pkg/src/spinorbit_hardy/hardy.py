"""Hardy state, the four two-outcome observables, and their joint statistics.

The state is ``cos(g)|L>_p|-1>_o - sin(g)|R>_p|+1>_o``. Polarization observables
``sigma``/``sigma_prime`` use the measurement kets exactly as written in the
qubit basis ``[|+1>, |-1>]``. For the OAM observables ``lambda``/``lambda_prime``
the roles of ``|+1>_o`` and ``|-1>_o`` inside those kets are exchanged; with
that convention the three "never occurs" probabilities vanish identically and
the fourth reduces to ``[sin 4g / (4(cos^3 g + sin^3 g))]^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qstate import (
    OAM,
    POLARIZATION,
    DensityOperator,
    ProjectiveObservable,
    StateVector,
    as_matrix,
    born_probability,
    psd_factor,
    projector,
    tensor,
)

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2
PARADOX_MAX_PROBABILITY = GOLDEN_RATIO ** -5

OBSERVABLES = ("sigma", "sigma_prime", "lambda", "lambda_prime")
_SLOT = {"sigma": POLARIZATION, "sigma_prime": POLARIZATION, "lambda": OAM, "lambda_prime": OAM}

# Hardy events in property order: (polarization observable, OAM observable, a, b)
HARDY_EVENTS = {
    "P1": ("sigma", "lambda", +1, +1),
    "P2": ("sigma", "lambda_prime", -1, -1),
    "P3": ("sigma_prime", "lambda", -1, -1),
    "P4": ("sigma_prime", "lambda_prime", -1, -1),
}
HARDY_LABELS = tuple(HARDY_EVENTS)

# Spin-orbit basis states |L/R>_p |+1/-1>_o, indexed in the global ordering
BASIS_STATE_LABELS = ("L+1", "L-1", "R+1", "R-1")

_SIGMA_Y_PAIR = np.array(
    [[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex
)


class GammaRangeError(ValueError):
    pass


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class HardyAngles:
    """Entanglement angle in radians.

    In paradox mode the angle must lie in the open interval (0, pi/4);
    exploration mode accepts any real angle.
    """

    gamma: float
    paradox: bool = True

    def __post_init__(self):
        g = float(self.gamma)
        if not math.isfinite(g):
            raise GammaRangeError(f"gamma must be finite, got {self.gamma!r}")
        if self.paradox and not (0.0 < g < math.pi / 4):
            raise GammaRangeError(f"paradox mode needs 0 < gamma < pi/4, got {g!r} rad")
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class JointProbabilityTable:
    """The four probabilities entering the paradox, keyed ``P1``..``P4``."""

    P1: float
    P2: float
    P3: float
    P4: float

    def __post_init__(self):
        for label in HARDY_LABELS:
            v = getattr(self, label)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{label}={v!r} outside [0, 1]")

    def as_dict(self) -> dict[str, float]:
        return {label: getattr(self, label) for label in HARDY_LABELS}


def _gamma(gamma, paradox: bool) -> float:
    if isinstance(gamma, HardyAngles):
        return gamma.gamma
    return HardyAngles(gamma, paradox).gamma


def hardy_state(gamma: float) -> StateVector:
    g = float(gamma)
    amps = np.zeros(4, dtype=complex)
    amps[1] = math.cos(g)  # |L>_p |-1>_o
    amps[2] = -math.sin(g)  # |R>_p |+1>_o
    return StateVector(amps)


def hardy_density(gamma: float) -> DensityOperator:
    return DensityOperator.from_state(hardy_state(gamma))


def measurement_basis(
    gamma: float, primed: bool = False, subspace: str = POLARIZATION, *, paradox: bool = True
) -> tuple[StateVector, StateVector]:
    """Return the ``(|+>, |->)`` (or primed) pair for one qubit subspace.

    Amplitudes are in the qubit ordering ``[|+1>, |-1>]``. For the OAM subspace
    the two components are exchanged, see the module docstring.
    """
    g = _gamma(gamma, paradox)
    s, c = math.sin(g), math.cos(g)
    if s < 0 or c < 0:
        raise GammaRangeError(f"measurement kets need sin and cos of gamma >= 0, got gamma={g!r}")
    if primed:
        # N' = (sin^3 + cos^3)^(-1/2)
        norm = (s**3 + c**3) ** -0.5
        a, b = math.sqrt(c**3), math.sqrt(s**3)
    else:
        norm = (s + c) ** -0.5
        a, b = math.sqrt(s), math.sqrt(c)
    plus = norm * np.array([a, b])
    minus = norm * np.array([-b, a])
    if subspace == OAM:
        plus, minus = plus[::-1], minus[::-1]
    elif subspace != POLARIZATION:
        raise ValueError(f"unknown subspace {subspace!r}")
    return StateVector(plus), StateVector(minus)


def local_observable(kind: str, gamma: float, *, paradox: bool = True) -> ProjectiveObservable:
    """Qubit-level observable acting on its own subspace only."""
    if kind not in _SLOT:
        raise ValueError(f"kind must be one of {OBSERVABLES}, got {kind!r}")
    plus, minus = measurement_basis(
        gamma, primed=kind.endswith("_prime"), subspace=_SLOT[kind], paradox=paradox
    )
    return ProjectiveObservable(projector(plus), projector(minus))


def observable(kind: str, gamma: float, *, paradox: bool = True) -> ProjectiveObservable:
    """Observable embedded in the spin-orbit space (identity on the other slot)."""
    return local_observable(kind, gamma, paradox=paradox).embed(_SLOT[kind])


def outcome_state(kind: str, outcome: int, gamma: float, *, paradox: bool = True) -> StateVector:
    plus, minus = measurement_basis(
        gamma, primed=kind.endswith("_prime"), subspace=_SLOT[kind], paradox=paradox
    )
    if outcome == +1:
        return plus
    if outcome == -1:
        return minus
    raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")


def joint_projector(
    gamma: float, obs_a: str, obs_b: str, a: int, b: int, *, paradox: bool = True
) -> np.ndarray:
    """Rank-one projector onto the product ket selecting outcomes ``a`` and ``b``."""
    if _SLOT.get(obs_a) != POLARIZATION or _SLOT.get(obs_b) != OAM:
        raise ValueError(f"need a polarization then an OAM observable, got {obs_a!r}, {obs_b!r}")
    ket_a = outcome_state(obs_a, a, gamma, paradox=paradox)
    ket_b = outcome_state(obs_b, b, gamma, paradox=paradox)
    return projector(tensor(ket_a, ket_b))


def joint_probability(
    gamma: float, obs_a: str, obs_b: str, a: int, b: int, *, state=None, paradox: bool = True
) -> float:
    """Born probability of outcomes ``(a, b)`` for ``(obs_a, obs_b)``.

    ``state`` defaults to the Hardy state at ``gamma``; any pure state or
    density operator can be supplied instead.
    """
    g = _gamma(gamma, paradox)
    rho = projector(hardy_state(g)) if state is None else as_matrix(state)
    return born_probability(rho, joint_projector(g, obs_a, obs_b, a, b, paradox=paradox))


def hardy_projectors(gamma: float, *, paradox: bool = True) -> dict[str, np.ndarray]:
    """Projectors for the four paradox events, keyed ``P1``..``P4``."""
    return {
        label: joint_projector(gamma, *event, paradox=paradox)
        for label, event in HARDY_EVENTS.items()
    }


def basis_projectors() -> dict[str, np.ndarray]:
    """Projectors onto the four S_z/L_z eigenstates ``|L/R>_p|+1/-1>_o``."""
    eye = np.eye(4, dtype=complex)
    return {label: projector(eye[k]) for k, label in enumerate(BASIS_STATE_LABELS)}


def hardy_table(gamma: float, state=None, *, paradox: bool = True) -> JointProbabilityTable:
    g = _gamma(gamma, paradox)
    rho = projector(hardy_state(g)) if state is None else as_matrix(state)
    probs = {label: born_probability(rho, p) for label, p in hardy_projectors(g, paradox=paradox).items()}
    return JointProbabilityTable(**probs)


def basis_state_probabilities(gamma: float, state=None) -> dict[str, float]:
    rho = projector(hardy_state(gamma)) if state is None else as_matrix(state)
    return {label: born_probability(rho, p) for label, p in basis_projectors().items()}


def hardy_p4_closed_form(gamma: float) -> float:
    g = float(gamma)
    s, c = math.sin(g), math.cos(g)
    return (math.sin(4 * g) / (4 * (c**3 + s**3))) ** 2


_INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_maximize(f, a: float, b: float, tol: float = 1e-9, max_iter: int = 500):
    """Maximize a unimodal ``f`` on ``[a, b]`` by golden-section search.

    Returns ``(x, f(x))`` once the bracket is narrower than ``tol``.
    """
    if not b > a:
        raise ValueError(f"empty bracket [{a}, {b}]")
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    else:
        raise OptimizationError(f"bracket still {b - a:.3e} wide after {max_iter} iterations")
    x = (a + b) / 2
    return x, f(x)


def optimal_gamma(tol: float = 1e-9) -> tuple[float, float]:
    """Angle in (0, pi/4) maximizing the fourth Hardy probability, and that maximum."""
    return golden_section_maximize(hardy_p4_closed_form, 0.0, math.pi / 4, tol=tol)


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit state.

    The decreasing values ``l_k`` (square roots of the eigenvalues of
    ``rho (Y rho* Y)``, ``Y = sigma_y (x) sigma_y``) equal the singular values of
    ``W^T Y W`` for any factor ``rho = W W^dagger``. Using the factor keeps
    pure-state results exact instead of taking square roots of round-off.
    """
    m = as_matrix(rho)
    if m.shape != (4, 4):
        raise ValueError(f"concurrence needs a 4x4 operator, got {m.shape}")
    if not isinstance(rho, (DensityOperator, StateVector)):
        m = DensityOperator(m).matrix
    w = psd_factor(m)
    lam = np.zeros(4)
    svals = np.linalg.svd(w.T @ _SIGMA_Y_PAIR @ w, compute_uv=False)
    lam[: svals.size] = svals
    lam = np.sort(lam)[::-1]
    return float(min(max(0.0, lam[0] - lam[1:].sum()), 1.0))
