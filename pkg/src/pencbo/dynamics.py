"""Interacting-particle consensus dynamics.

The state is an ensemble of N particles in R^d.  Each iteration pulls every
particle toward a Gibbs-weighted average of the ensemble (the consensus
point) and adds multiplicative noise scaled by the particle's displacement
from that average:

    x' = x - lam * (x - x_c) * dt + sigma * D(x - x_c) * B * sqrt(dt)

with D either the Euclidean norm of the displacement times the identity
(isotropic) or the diagonal matrix of per-coordinate absolute displacements
(anisotropic), and B a standard-normal vector.  The consensus weights are
exp(-alpha * v_i) for per-particle values v_i; as alpha grows the consensus
point approaches the position of the best (lowest-value) particle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiffusionKind",
    "CboParams",
    "ParticleEnsemble",
    "ConsensusPoint",
    "consensus_point",
    "diffusion_scales",
    "euler_maruyama_step",
    "variance_functional",
]


class DiffusionKind(enum.Enum):
    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"


@dataclass(frozen=True)
class CboParams:
    """Dynamics constants: drift rate, noise strength, step size, weight sharpness.

    ``alpha`` is usable up to 1e6; consensus weights are computed in shifted
    form so large alpha cannot overflow.
    """

    lam: float = 1.0
    sigma: float = 1.0
    dt: float = 0.1
    alpha: float = 1e6
    diffusion: DiffusionKind = DiffusionKind.ISOTROPIC

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt}")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if not isinstance(self.diffusion, DiffusionKind):
            object.__setattr__(self, "diffusion", DiffusionKind(self.diffusion))

    def decay_condition_holds(self, d: int) -> bool:
        """Whether the ensemble-contraction condition holds in dimension d.

        2*lam > d*sigma^2 for isotropic noise, 2*lam > sigma^2 for
        anisotropic.  Purely diagnostic: runs proceed either way.
        """
        if self.diffusion is DiffusionKind.ISOTROPIC:
            return 2.0 * self.lam > d * self.sigma**2
        return 2.0 * self.lam > self.sigma**2


@dataclass(frozen=True)
class ParticleEnsemble:
    """Immutable (n, d) array of particle positions, all finite."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64, copy=True, order="C")
        if pos.ndim != 2:
            raise ValueError(f"positions must be 2-d (n, d), got shape {pos.shape}")
        if pos.shape[0] < 1 or pos.shape[1] < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape {pos.shape}")
        if not np.all(np.isfinite(pos)):
            bad = np.argwhere(~np.isfinite(pos))[0]
            raise ValueError(f"non-finite coordinate at particle {bad[0]}, dim {bad[1]}")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]


@dataclass(frozen=True)
class ConsensusPoint:
    """Weighted ensemble average plus the log of the weight normalizer."""

    point: np.ndarray
    log_normalizer: float


def _gibbs_weights(values: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    """exp(-alpha * values), computed against the running minimum.

    Returns unnormalized weights w and log(sum w) + alpha*min so the true
    normalizer log Z = sum exp(-alpha v) is recoverable at any alpha.
    """
    shift = values.min()
    w = np.exp(-alpha * (values - shift))
    log_z = float(np.log(w.sum()) - alpha * shift)
    return w, log_z


def consensus_raw(positions: np.ndarray, values: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    """Consensus computation on bare arrays; shared by the ensemble wrapper
    and by batched variants that slice positions without re-validating."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (positions.shape[0],):
        raise ValueError(
            f"values must have shape ({positions.shape[0]},), got {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("values must be finite")
    w, log_z = _gibbs_weights(values, alpha)
    total = w.sum()
    point = (positions * w[:, None]).sum(axis=0) / total
    # weighted mean must stay in the componentwise hull; clip away the
    # last-ulp rounding excursions so downstream code can rely on it
    lo = positions.min(axis=0)
    hi = positions.max(axis=0)
    slack = 1e-9 * np.maximum(1.0, np.abs(hi - lo))
    if np.any(point < lo - slack) or np.any(point > hi + slack):
        raise AssertionError("consensus point escaped the coordinate hull")
    return np.clip(point, lo, hi), log_z


def consensus_point(ensemble: ParticleEnsemble, values: np.ndarray, alpha: float) -> ConsensusPoint:
    """Gibbs-weighted average of particle positions.

    ``values`` are the per-particle scores being minimized; weight i is
    proportional to exp(-alpha * values[i]).  The result always lies in the
    componentwise hull of the positions, and with alpha=0 it is the plain
    mean.
    """
    point, log_z = consensus_raw(ensemble.positions, values, alpha)
    return ConsensusPoint(point=point, log_normalizer=log_z)


def diffusion_scales(particle: np.ndarray, consensus: np.ndarray, kind: DiffusionKind) -> np.ndarray:
    """Per-coordinate noise amplitudes for one particle.

    Isotropic: the Euclidean distance to the consensus point, replicated
    across coordinates.  Anisotropic: the absolute per-coordinate
    displacements.  The two agree in d=1.
    """
    particle = np.asarray(particle, dtype=np.float64)
    consensus = np.asarray(consensus, dtype=np.float64)
    diff = particle - consensus
    kind = DiffusionKind(kind)
    if kind is DiffusionKind.ISOTROPIC:
        return np.full_like(diff, np.linalg.norm(diff))
    return np.abs(diff)


def euler_maruyama_step(
    ensemble: ParticleEnsemble,
    consensus: ConsensusPoint | np.ndarray,
    params: CboParams,
    noise: np.ndarray,
) -> ParticleEnsemble:
    """One explicit step of the consensus SDE discretization.

    ``noise`` must be a caller-supplied (n, d) standard-normal block; the
    step itself draws nothing, so identical inputs give identical outputs.
    """
    point = consensus.point if isinstance(consensus, ConsensusPoint) else np.asarray(consensus, dtype=np.float64)
    pos = ensemble.positions
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != pos.shape:
        raise ValueError(f"noise shape {noise.shape} != positions shape {pos.shape}")
    diff = pos - point[None, :]
    if params.diffusion is DiffusionKind.ISOTROPIC:
        scales = np.linalg.norm(diff, axis=1, keepdims=True)
    else:
        scales = np.abs(diff)
    new = pos - params.lam * diff * params.dt + params.sigma * scales * noise * np.sqrt(params.dt)
    if not np.all(np.isfinite(new)):
        bad = np.argwhere(~np.isfinite(new))[0]
        raise FloatingPointError(
            f"step produced non-finite coordinate at particle {bad[0]}, dim {bad[1]}"
        )
    return ParticleEnsemble(new)


def variance_functional(ensemble: ParticleEnsemble, reference: np.ndarray) -> float:
    """Half the mean squared distance to a reference point.

    The Lyapunov quantity of the contraction analysis; decays like
    exp(-(lam - d*sigma^2/2) t) toward a fixed reference when the decay
    condition 2*lam > d*sigma^2 holds.
    """
    reference = np.asarray(reference, dtype=np.float64)
    diff = ensemble.positions - reference[None, :]
    return float(0.5 * np.mean(np.sum(diff * diff, axis=1)))
