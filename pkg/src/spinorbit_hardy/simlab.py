"""Monte Carlo photon-coincidence experiment for the Hardy test.

Each projector setting is an independent filtering run: its count is Poisson
with mean ``q * total_rate * window`` where ``q`` is the (noisy) Born
probability. Random streams are PCG64 generators seeded through
``numpy.random.SeedSequence(seed, spawn_key=(label_key,))`` with ``label_key``
taken from the SHA-256 digest of the projector label, so a count depends only
on the seed and the label, never on evaluation order.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .hardy import HARDY_LABELS, basis_projectors, hardy_projectors, hardy_state
from .noncontextual import HardyMarginals, inequality_gap
from .qstate import DensityOperator, as_matrix, born_probability, projector


class NoiseParameterError(ValueError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """Imperfections applied to the ideal prediction.

    ``depolarizing_p`` mixes the state with ``I/4``; ``crosstalk_eps`` moves
    that fraction of each projector's probability to the uniform value 1/4;
    ``override_frequencies`` (keyed ``P1``..``P4``) replaces the model
    probability of those projectors outright.
    """

    depolarizing_p: float = 0.0
    crosstalk_eps: float = 0.0
    override_frequencies: dict[str, float] | None = None

    def __post_init__(self):
        for name in ("depolarizing_p", "crosstalk_eps"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise NoiseParameterError(f"{name} must lie in [0, 1], got {v!r}")
        if self.override_frequencies is not None:
            override = self.override_frequencies
            if not isinstance(override, dict):
                # a bare sequence is read in P1..P4 order
                override = list(override)
                if len(override) != len(HARDY_LABELS):
                    raise NoiseParameterError(f"override needs {len(HARDY_LABELS)} entries, got {len(override)}")
                override = dict(zip(HARDY_LABELS, override))
            for k, v in override.items():
                if not 0.0 <= float(v) <= 1.0:
                    raise NoiseParameterError(f"override frequency {k}={v!r} outside [0, 1]")
            object.__setattr__(self, "override_frequencies", {k: float(v) for k, v in override.items()})

    @property
    def is_ideal(self) -> bool:
        return self.depolarizing_p == 0 and self.crosstalk_eps == 0 and not self.override_frequencies


@dataclass(frozen=True)
class ExperimentConfig:
    gamma: float
    total_rate: float = 120.0
    window: float = 100.0
    seed: int = 0
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        if not (math.isfinite(self.gamma)):
            raise ConfigError(f"gamma must be finite, got {self.gamma!r}")
        if not self.total_rate > 0:
            raise ConfigError(f"total_rate must be positive, got {self.total_rate!r}")
        if not self.window > 0:
            raise ConfigError(f"window must be positive, got {self.window!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    @property
    def expected_total(self) -> float:
        return self.total_rate * self.window


@dataclass(frozen=True)
class CountRecord:
    projector_label: str
    counts: int
    window: float

    def __post_init__(self):
        if self.counts < 0:
            raise ValueError(f"negative counts for {self.projector_label!r}")

    @property
    def rate(self) -> float:
        return self.counts / self.window


@dataclass(frozen=True)
class FrequencyEstimate:
    value: float
    sigma: float
    counts: int
    # zero counts give sigma = 0, which understates the uncertainty
    degenerate: bool = False


@dataclass(frozen=True)
class ViolationReport:
    estimates: dict[str, FrequencyEstimate]
    gap: float
    gap_sigma: float
    n_sigmas: float
    degenerate_labels: tuple[str, ...] = ()

    @property
    def violated(self) -> bool:
        return self.gap > 0

    def to_dict(self) -> dict:
        return {
            "frequencies": {
                k: {"value": e.value, "sigma": e.sigma, "counts": e.counts, "degenerate": e.degenerate}
                for k, e in self.estimates.items()
            },
            "gap": self.gap,
            "gap_sigma": self.gap_sigma,
            "n_sigmas": self.n_sigmas if math.isfinite(self.n_sigmas) else None,
            "violated": self.violated,
            "degenerate_labels": list(self.degenerate_labels),
        }


def label_stream(seed: int, label: str) -> np.random.Generator:
    label_key = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(label_key,))))


def apply_noise(rho, noise: NoiseModel) -> DensityOperator:
    """Depolarize: ``rho -> (1 - p) rho + p I/d``."""
    m = as_matrix(rho)
    d = m.shape[0]
    p = noise.depolarizing_p
    return DensityOperator((1 - p) * m + p * np.eye(d) / d)


def apply_crosstalk(probabilities: dict[str, float], noise: NoiseModel, dim: int = 4) -> dict[str, float]:
    """``q -> (1 - eps) q + eps/dim`` per projector, then any overrides."""
    eps = noise.crosstalk_eps
    out = {k: (1 - eps) * q + eps / dim for k, q in probabilities.items()}
    if noise.override_frequencies:
        for k, v in noise.override_frequencies.items():
            if k in out:
                out[k] = v
    return out


def noisy_probabilities(rho, projectors: dict[str, np.ndarray], noise: NoiseModel) -> dict[str, float]:
    noisy = apply_noise(rho, noise)
    raw = {label: born_probability(noisy, p) for label, p in projectors.items()}
    return apply_crosstalk(raw, noise, dim=noisy.dim)


def simulate_counts(cfg: ExperimentConfig, projectors: dict[str, np.ndarray], state=None) -> list[CountRecord]:
    """Poisson counts for each labeled projector.

    ``state`` defaults to the Hardy state at ``cfg.gamma``.
    """
    rho = projector(hardy_state(cfg.gamma)) if state is None else as_matrix(state)
    probs = noisy_probabilities(rho, projectors, cfg.noise)
    records = []
    for label in projectors:
        mean = probs[label] * cfg.expected_total
        n = int(label_stream(cfg.seed, label).poisson(mean)) if mean > 0 else 0
        records.append(CountRecord(label, n, cfg.window))
    return records


def total_counts(records: list[CountRecord]) -> int:
    return sum(r.counts for r in records)


def estimate_frequencies(records: list[CountRecord], total: int) -> dict[str, FrequencyEstimate]:
    """``f = n / N_tot`` with Poisson error ``sqrt(n) / N_tot``."""
    if total <= 0:
        raise ValueError("total count must be positive")
    return {
        r.projector_label: FrequencyEstimate(
            r.counts / total, math.sqrt(r.counts) / total, r.counts, degenerate=r.counts == 0
        )
        for r in records
    }


def violation_statistic(estimates: dict[str, FrequencyEstimate]) -> ViolationReport:
    """Gap of the Hardy inequality and its significance.

    ``gap_sigma`` adds the four frequency errors in quadrature, treating them
    as independent.
    """
    missing = [k for k in HARDY_LABELS if k not in estimates]
    if missing:
        raise KeyError(f"missing estimates for {', '.join(missing)}")
    picked = {k: estimates[k] for k in HARDY_LABELS}
    gap = inequality_gap(HardyMarginals(**{k: e.value for k, e in picked.items()}))
    gap_sigma = math.sqrt(sum(e.sigma**2 for e in picked.values()))
    if gap_sigma > 0:
        n_sigmas = gap / gap_sigma
    else:
        n_sigmas = 0.0 if gap == 0 else math.copysign(math.inf, gap)
    degenerate = tuple(k for k, e in picked.items() if e.degenerate)
    return ViolationReport(picked, gap, gap_sigma, n_sigmas, degenerate)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    basis_records: list[CountRecord]
    hardy_records: list[CountRecord]
    report: ViolationReport

    @property
    def n_tot(self) -> int:
        return total_counts(self.basis_records)

    @property
    def records(self) -> list[CountRecord]:
        return self.basis_records + self.hardy_records


def run_experiment(cfg: ExperimentConfig, state=None) -> ExperimentResult:
    """Basis-state run for ``N_tot``, then the four paradox projectors."""
    basis = simulate_counts(cfg, basis_projectors(), state)
    hardy = simulate_counts(cfg, hardy_projectors(cfg.gamma, paradox=False), state)
    n_tot = total_counts(basis)
    if n_tot == 0:
        raise RuntimeError("no coincidences recorded in the basis run")
    report = violation_statistic(estimate_frequencies(hardy, n_tot))
    return ExperimentResult(cfg, basis, hardy, report)
