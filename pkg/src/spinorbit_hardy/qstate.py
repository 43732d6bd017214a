"""Small dense linear-algebra core for one- and two-qubit photon states.

Basis ordering is fixed for the whole package. Single qubit: ``[|+1>, |-1>]``.
Two qubits (polarization slot first, OAM slot second)::

    [|+1>_p|+1>_o, |+1>_p|-1>_o, |-1>_p|+1>_o, |-1>_p|-1>_o]

Circular polarization is identified with the spin eigenstates,
``|L>_p = |+1>_p`` and ``|R>_p = |-1>_p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
PROJECTOR_TOL = 1e-10
CLAMP_TOL = 1e-10

POLARIZATION = "polarization"
OAM = "oam"
SLOTS = (POLARIZATION, OAM)

QUBIT_BASIS_LABELS = ("|+1>", "|-1>")
PAIR_BASIS_LABELS = (
    "|+1>_p|+1>_o",
    "|+1>_p|-1>_o",
    "|-1>_p|+1>_o",
    "|-1>_p|-1>_o",
)


class InvalidDimensionError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


class NotAProjectorError(ValueError):
    pass


class NonPhysicalError(ValueError):
    """Raised when a matrix fails one of the density-operator invariants."""

    def __init__(self, check: "PhysicalityCheck"):
        self.check = check
        super().__init__("not a physical density operator: " + "; ".join(check.failures))


def _basis_labels(dim: int) -> tuple[str, ...]:
    if dim == 2:
        return QUBIT_BASIS_LABELS
    if dim == 4:
        return PAIR_BASIS_LABELS
    raise InvalidDimensionError(f"only dimensions 2 and 4 are supported, got {dim}")


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of dimension 2 or 4.

    Use :meth:`from_amplitudes` to build a state from unnormalized amplitudes.
    """

    amplitudes: np.ndarray
    basis_label: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        labels = _basis_labels(amps.size)
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise NormalizationError(f"squared norm is {norm2!r}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "basis_label", labels)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise NormalizationError("zero vector cannot be normalized")
        return cls(amps / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "StateVector") -> float:
        """Phase-insensitive overlap ``|<self|other>|^2``."""
        return float(abs(np.vdot(self.amplitudes, _amplitudes(other))) ** 2)

    def same_ray(self, other: "StateVector", tol: float = 1e-10) -> bool:
        return self.overlap(other) >= 1.0 - tol


def _amplitudes(s) -> np.ndarray:
    if isinstance(s, StateVector):
        return s.amplitudes
    return np.asarray(s, dtype=complex).reshape(-1)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive semidefinite matrix (validated on construction)."""

    matrix: np.ndarray

    def __post_init__(self):
        check = validate_physical(self.matrix)
        if not check.valid:
            raise NonPhysicalError(check)
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_state(cls, s: StateVector | np.ndarray) -> "DensityOperator":
        return cls(projector(s))

    @classmethod
    def maximally_mixed(cls, dim: int = 4) -> "DensityOperator":
        return cls(np.eye(dim, dtype=complex) / dim)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def as_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.matrix
    if isinstance(rho, StateVector):
        return projector(rho)
    return np.asarray(rho, dtype=complex)


@dataclass(frozen=True)
class ProjectiveObservable:
    """Two-outcome observable ``P_plus - P_minus`` with outcomes +1 and -1."""

    plus_projector: np.ndarray
    minus_projector: np.ndarray

    def __post_init__(self):
        plus = np.array(self.plus_projector, dtype=complex)
        minus = np.array(self.minus_projector, dtype=complex)
        if plus.shape != minus.shape or plus.ndim != 2 or plus.shape[0] != plus.shape[1]:
            raise InvalidDimensionError(f"projector shapes {plus.shape} and {minus.shape} do not match")
        for name, p in (("plus", plus), ("minus", minus)):
            if not is_projector(p, tol=NORM_TOL):
                raise NotAProjectorError(f"{name} projector is not idempotent and Hermitian")
        if np.abs(plus @ minus).max() > NORM_TOL:
            raise NotAProjectorError("projectors are not mutually orthogonal")
        if np.abs(plus + minus - np.eye(plus.shape[0])).max() > NORM_TOL:
            raise NotAProjectorError("projectors do not sum to the identity")
        plus.setflags(write=False)
        minus.setflags(write=False)
        object.__setattr__(self, "plus_projector", plus)
        object.__setattr__(self, "minus_projector", minus)

    @property
    def dim(self) -> int:
        return self.plus_projector.shape[0]

    def outcome_projector(self, outcome: int) -> np.ndarray:
        if outcome == +1:
            return self.plus_projector
        if outcome == -1:
            return self.minus_projector
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")

    @property
    def operator(self) -> np.ndarray:
        return self.plus_projector - self.minus_projector

    def embed(self, slot: str) -> "ProjectiveObservable":
        """Lift a qubit observable to the two-qubit space, identity on the other slot."""
        if self.dim != 2:
            raise InvalidDimensionError("only qubit observables can be embedded")
        return ProjectiveObservable(
            embed_operator(self.plus_projector, slot),
            embed_operator(self.minus_projector, slot),
        )


def embed_operator(op: np.ndarray, slot: str) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    if slot == POLARIZATION:
        return np.kron(op, eye)
    if slot == OAM:
        return np.kron(eye, op)
    raise ValueError(f"slot must be one of {SLOTS}, got {slot!r}")


def tensor(a: StateVector | np.ndarray, b: StateVector | np.ndarray) -> StateVector:
    """Product state ``a (x) b`` in the polarization-first ordering."""
    amps_a, amps_b = _amplitudes(a), _amplitudes(b)
    if amps_a.size != 2 or amps_b.size != 2:
        raise InvalidDimensionError(
            f"tensor expects two qubit states, got dimensions {amps_a.size} and {amps_b.size}"
        )
    return StateVector.from_amplitudes(np.kron(amps_a, amps_b))


def projector(s: StateVector | np.ndarray) -> np.ndarray:
    """Rank-one projector ``|s><s|``."""
    amps = _amplitudes(s)
    norm2 = float(np.vdot(amps, amps).real)
    if abs(norm2 - 1.0) > NORM_TOL:
        raise NormalizationError(f"squared norm is {norm2!r}, expected 1")
    return np.outer(amps, amps.conj())


def is_projector(p: np.ndarray, tol: float = PROJECTOR_TOL) -> bool:
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    return bool(np.abs(p - p.conj().T).max() <= tol and np.abs(p @ p - p).max() <= tol)


def born_probability(rho, proj: np.ndarray) -> float:
    """``tr(rho P)`` for a projector ``P``; round-off outside [0, 1] is clamped."""
    m = as_matrix(rho)
    p = np.asarray(proj, dtype=complex)
    if m.shape != p.shape:
        raise InvalidDimensionError(f"state has shape {m.shape} but projector has shape {p.shape}")
    if not is_projector(p):
        raise NotAProjectorError("measurement operator is not a projector")
    value = float(np.real(np.trace(m @ p)))
    if value < -CLAMP_TOL or value > 1.0 + CLAMP_TOL:
        raise NonPhysicalError(validate_physical(m))
    return min(max(value, 0.0), 1.0)


def psd_factor(rho, cutoff: float = 0.0) -> np.ndarray:
    """Return ``W`` with ``rho = W W^dagger``, dropping eigenvalues at or below ``cutoff``."""
    evals, evecs = np.linalg.eigh(as_matrix(rho))
    keep = evals > cutoff
    return evecs[:, keep] * np.sqrt(evals[keep])


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Computed as the squared nuclear norm of ``W_sigma^dagger W_rho`` where
    ``W W^dagger`` factorizes each operator. This avoids forming matrix square
    roots and is exact for pure arguments: ``F = <psi|rho|psi>``.
    """
    a, b = _physical(rho), _physical(sigma)
    if a.shape != b.shape:
        raise InvalidDimensionError(f"shapes {a.shape} and {b.shape} differ")
    wa, wb = psd_factor(a), psd_factor(b)
    if wa.shape[1] == 0 or wb.shape[1] == 0:
        return 0.0
    svals = np.linalg.svd(wb.conj().T @ wa, compute_uv=False)
    return float(min(max(np.sum(svals) ** 2, 0.0), 1.0))


def partial_trace(rho, keep: str) -> DensityOperator:
    """Reduce a two-qubit operator to the ``keep`` slot (``"polarization"`` or ``"oam"``)."""
    m = _physical(rho)
    if m.shape != (4, 4):
        raise InvalidDimensionError(f"partial trace needs a 4x4 operator, got {m.shape}")
    t = m.reshape(2, 2, 2, 2)
    if keep == POLARIZATION:
        reduced = np.einsum("ijkj->ik", t)
    elif keep == OAM:
        reduced = np.einsum("jijk->ik", t)
    else:
        raise ValueError(f"keep must be one of {SLOTS}, got {keep!r}")
    return DensityOperator(reduced)


@dataclass
class PhysicalityCheck:
    """Outcome of :func:`validate_physical`.

    ``operator`` is set only when every invariant holds; otherwise ``failures``
    names each violated invariant with its margin.
    """

    valid: bool
    hermiticity_error: float
    trace_error: float
    min_eigenvalue: float
    failures: list[str]
    operator: DensityOperator | None = None


def validate_physical(rho) -> PhysicalityCheck:
    m = np.asarray(rho.matrix if isinstance(rho, DensityOperator) else rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        return PhysicalityCheck(False, np.inf, np.inf, -np.inf, [f"not a square matrix: shape {m.shape}"])
    failures = []
    herm_err = float(np.abs(m - m.conj().T).max())
    if herm_err > HERMITIAN_TOL:
        failures.append(f"not Hermitian: max |rho - rho^dagger| = {herm_err:.3e} > {HERMITIAN_TOL:g}")
    trace_err = float(abs(np.trace(m) - 1.0))
    if trace_err > TRACE_TOL:
        failures.append(f"trace off by {trace_err:.3e} > {TRACE_TOL:g}")
    min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
    if min_eig < -PSD_TOL:
        failures.append(f"not positive semidefinite: min eigenvalue {min_eig:.3e} < -{PSD_TOL:g}")
    check = PhysicalityCheck(not failures, herm_err, trace_err, min_eig, failures)
    if check.valid:
        check.operator = DensityOperator.__new__(DensityOperator)
        frozen = m.copy()
        frozen.setflags(write=False)
        object.__setattr__(check.operator, "matrix", frozen)
    return check


def _physical(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.matrix
    if isinstance(rho, StateVector):
        return projector(rho)
    check = validate_physical(rho)
    if not check.valid:
        raise NonPhysicalError(check)
    return check.operator.matrix
