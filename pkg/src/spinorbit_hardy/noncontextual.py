"""Non-contextual realistic models over the four Hardy observables.

A model is a probability distribution over the 16 deterministic assignments of
``(sigma, sigma', lambda, lambda')``. Rows are ordered with ``sigma`` as the most
significant bit and -1 before +1, so row ``n`` (1-based) is the binary
expansion of ``n - 1`` with 0 -> -1 and 1 -> +1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .hardy import HARDY_LABELS

SUM_TOL = 1e-12

# (sigma, sigma_prime, lambda, lambda_prime) per row, row 1 first
ASSIGNMENTS = np.array(list(itertools.product((-1, +1), repeat=4)), dtype=int)

# 1-based row indices entering each marginal
MARGINAL_ROWS = {
    "P1": (11, 12, 15, 16),  # sigma=+1, lambda=+1
    "P2": (1, 3, 5, 7),  # sigma=-1, lambda'=-1
    "P3": (1, 2, 9, 10),  # sigma'=-1, lambda=-1
    "P4": (1, 3, 9, 11),  # sigma'=-1, lambda'=-1
}
# Column in ASSIGNMENTS and required value, for the two observables of each marginal
_MARGINAL_EVENTS = {
    "P1": ((0, +1), (2, +1)),
    "P2": ((0, -1), (3, -1)),
    "P3": ((1, -1), (2, -1)),
    "P4": ((1, -1), (3, -1)),
}


class InvalidDistributionError(ValueError):
    pass


def rows_for_event(label: str) -> tuple[int, ...]:
    """1-based rows whose assignment realizes the named event, read off the table."""
    (ia, va), (ib, vb) = _MARGINAL_EVENTS[label]
    hits = (ASSIGNMENTS[:, ia] == va) & (ASSIGNMENTS[:, ib] == vb)
    return tuple(int(n) + 1 for n in np.flatnonzero(hits))


@dataclass(frozen=True)
class NCHVDistribution:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float).reshape(-1)
        if p.size != 16:
            raise InvalidDistributionError(f"need 16 probabilities, got {p.size}")
        if not np.all(np.isfinite(p)) or p.min() < 0:
            raise InvalidDistributionError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise InvalidDistributionError(f"probabilities sum to {p.sum()!r}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def vertex(cls, row: int) -> "NCHVDistribution":
        """Deterministic model concentrated on 1-based table row ``row``."""
        if not 1 <= row <= 16:
            raise ValueError(f"row must be in 1..16, got {row}")
        p = np.zeros(16)
        p[row - 1] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls) -> "NCHVDistribution":
        return cls(np.full(16, 1 / 16))

    def __getitem__(self, row: int) -> float:
        """1-based access matching the row numbering."""
        return float(self.p[row - 1])


@dataclass(frozen=True)
class HardyMarginals:
    P1: float
    P2: float
    P3: float
    P4: float

    def __post_init__(self):
        for label in HARDY_LABELS:
            v = float(getattr(self, label))
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{label}={v!r} outside [0, 1]")
            object.__setattr__(self, label, v)

    @classmethod
    def from_mapping(cls, values) -> "HardyMarginals":
        missing = [k for k in HARDY_LABELS if k not in values]
        if missing:
            raise KeyError(f"missing marginals: {', '.join(missing)}")
        return cls(**{k: float(values[k]) for k in HARDY_LABELS})

    def as_dict(self) -> dict[str, float]:
        return {label: getattr(self, label) for label in HARDY_LABELS}


def marginals(d: NCHVDistribution) -> HardyMarginals:
    if not isinstance(d, NCHVDistribution):
        d = NCHVDistribution(d)
    sums = {label: float(sum(d[n] for n in rows)) for label, rows in MARGINAL_ROWS.items()}
    # float summation of valid inputs can exceed 1 by an ulp
    return HardyMarginals(**{k: min(v, 1.0) for k, v in sums.items()})


def inequality_gap(m) -> float:
    """``P4 - (P1 + P2 + P3)``; the inequality holds when this is <= 0."""
    if not isinstance(m, HardyMarginals):
        m = HardyMarginals.from_mapping(m)
    return m.P4 - (m.P1 + m.P2 + m.P3)


def incidence_matrix() -> np.ndarray:
    """4 x 16 0/1 matrix mapping a model vector to ``(P1, P2, P3, P4)``."""
    m = np.zeros((len(HARDY_LABELS), 16))
    for i, label in enumerate(HARDY_LABELS):
        m[i, [n - 1 for n in MARGINAL_ROWS[label]]] = 1.0
    return m


def batch_gaps(models: np.ndarray) -> np.ndarray:
    """Gaps for many models at once, one model per row of ``models``."""
    m = np.asarray(models, dtype=float) @ incidence_matrix().T
    return m[:, 3] - m[:, :3].sum(axis=1)


def vertex_gaps() -> np.ndarray:
    """Gap of every deterministic model, in row order."""
    return np.array([inequality_gap(marginals(NCHVDistribution.vertex(n))) for n in range(1, 17)])


def max_gap_over_models() -> tuple[float, int]:
    """Exact maximum of the gap over all models and a 1-based row attaining it.

    The gap is linear in the model probabilities, so its maximum over the
    simplex sits on one of the 16 deterministic vertices.
    """
    gaps = vertex_gaps()
    best = int(np.argmax(gaps))
    return float(gaps[best]), best + 1


def p123_zero_implies_p4_zero(d: NCHVDistribution, tol: float = 1e-12) -> bool:
    m = marginals(d)
    if max(m.P1, m.P2, m.P3) > tol:
        return True
    return m.P4 <= 3 * tol
