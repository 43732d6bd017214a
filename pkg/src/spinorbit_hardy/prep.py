"""Jones-calculus wave plates and the q = 1/2 q-plate.

Jones vectors live in the linear ``(horizontal, vertical)`` basis. The circular
states are ``|L> = (1, -i)/sqrt(2)`` and ``|R> = (1, i)/sqrt(2)``, which map to
the spin basis as ``|L> = |+1>_p`` and ``|R> = |-1>_p``. A plate of retardance
``delta`` with its fast axis at angle ``theta`` is ``R(theta) diag(1, e^{i delta}) R(-theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hardy import hardy_state
from .qstate import StateVector

HALF_WAVE = "half-wave"
QUARTER_WAVE = "quarter-wave"

JONES_L = np.array([1, -1j]) / math.sqrt(2)
JONES_R = np.array([1, 1j]) / math.sqrt(2)
HORIZONTAL = np.array([1, 0], dtype=complex)

OVERLAP_TOL = 1e-10


class UnsupportedModeError(ValueError):
    pass


class ConventionMismatchError(RuntimeError):
    def __init__(self, overlap: float, gamma: float):
        self.overlap = overlap
        self.gamma = gamma
        super().__init__(
            f"prepared state overlaps the target with |<.|.>|^2 = {overlap:.12f} at gamma={gamma!r}"
        )


@dataclass(frozen=True)
class WavePlate:
    kind: str
    axis_angle: float
    # +1 keeps the quarter-wave retardance at +pi/2; -1 flips the sign convention
    retardance_sign: int = 1

    def __post_init__(self):
        if self.kind not in (HALF_WAVE, QUARTER_WAVE):
            raise ValueError(f"unknown plate kind {self.kind!r}")
        if self.retardance_sign not in (1, -1):
            raise ValueError("retardance_sign must be +1 or -1")

    @property
    def retardance(self) -> float:
        if self.kind == HALF_WAVE:
            return math.pi
        return self.retardance_sign * math.pi / 2


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def jones_matrix(plate: WavePlate) -> np.ndarray:
    retarder = np.diag([1.0, np.exp(1j * plate.retardance)])
    return _rotation(plate.axis_angle) @ retarder @ _rotation(-plate.axis_angle)


def linear_polarization(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle)], dtype=complex)


def jones_to_spin(v: np.ndarray) -> np.ndarray:
    """Express a Jones vector as amplitudes on ``[|L>, |R>] = [|+1>_p, |-1>_p]``."""
    v = np.asarray(v, dtype=complex)
    return np.array([np.vdot(JONES_L, v), np.vdot(JONES_R, v)])


def spin_to_jones(amps: np.ndarray) -> np.ndarray:
    amps = np.asarray(amps, dtype=complex)
    return amps[0] * JONES_L + amps[1] * JONES_R


@dataclass
class PrepPipeline:
    input_polarization: np.ndarray = field(default_factory=lambda: HORIZONTAL.copy())
    plates: list[WavePlate] = field(default_factory=list)
    qplate_enabled: bool = True

    def polarization(self) -> np.ndarray:
        """Jones vector after all plates, in declared order."""
        v = np.asarray(self.input_polarization, dtype=complex)
        for plate in self.plates:
            v = jones_matrix(plate) @ v
        return v

    def run(self) -> StateVector:
        spin = jones_to_spin(self.polarization())
        if not self.qplate_enabled:
            return StateVector.from_amplitudes(spin)
        return qplate_apply(spin)


def qplate_apply(polarization: np.ndarray | StateVector, oam: int = 0) -> StateVector:
    """Ideal q = 1/2 q-plate acting on a photon in the m = 0 mode.

    ``|L>|0> -> |R>|+1>`` and ``|R>|0> -> |L>|-1>``. ``polarization`` holds the
    amplitudes on ``[|L>, |R>]``.
    """
    if oam != 0:
        raise UnsupportedModeError(f"the q-plate model accepts only the m=0 input mode, got m={oam}")
    amps = polarization.amplitudes if isinstance(polarization, StateVector) else np.asarray(polarization, dtype=complex)
    if amps.shape != (2,):
        raise ValueError(f"expected two polarization amplitudes, got shape {amps.shape}")
    out = np.zeros(4, dtype=complex)
    out[2] = amps[0]  # |L>|0> -> |R>|+1>
    out[1] = amps[1]  # |R>|0> -> |L>|-1>
    return StateVector.from_amplitudes(out)


def hardy_pipeline(gamma: float, retardance_sign: int = 1) -> PrepPipeline:
    """Half-wave at gamma/2, quarter-wave at pi/4, half-wave at -pi/8 on horizontal input."""
    return PrepPipeline(
        input_polarization=HORIZONTAL.copy(),
        plates=[
            WavePlate(HALF_WAVE, gamma / 2),
            WavePlate(QUARTER_WAVE, math.pi / 4, retardance_sign),
            WavePlate(HALF_WAVE, -math.pi / 8),
        ],
    )


def prepare_hardy(gamma: float, retardance_sign: int = 1) -> StateVector:
    """Run the wave-plate sequence and q-plate; verify against the Hardy state.

    Raises :class:`ConventionMismatchError` if the result differs from the
    target by more than a global phase.
    """
    g = float(gamma)
    if not 0.0 <= g <= math.pi / 4:
        raise ValueError(f"gamma must lie in [0, pi/4], got {g!r}")
    prepared = hardy_pipeline(g, retardance_sign).run()
    overlap = prepared.overlap(hardy_state(g))
    if overlap < 1.0 - OVERLAP_TOL:
        raise ConventionMismatchError(overlap, g)
    return prepared
