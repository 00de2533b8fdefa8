"""Exact and sampled evaluation of the alternating-ansatz objective.

The ansatz starts from the uniform superposition and alternates, for each
level l, a diagonal phase layer driven by the tabulated modularity energies
with angle gamma_l and a transverse mixer layer with angle beta_l.  The
objective handed to the optimizers is

    f(beta, gamma) = - <psi | diag(energies) | psi>,

so minimizing f maximizes the expected modularity.  Parameter vectors are
packed as ``[beta_1 .. beta_p, gamma_1 .. gamma_p]`` over the box
``[0, pi]^p x [0, 2*pi]^p``; the mixer spectrum makes f exactly pi-periodic
in each beta, which pins that box size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .hamiltonian import CostDiagonal
from .localopt import Bounds

__all__ = [
    "QaoaParams",
    "StateVector",
    "ObjectiveValue",
    "BETA_RANGE",
    "GAMMA_RANGE",
    "default_bounds",
    "qaoa_state",
    "objective",
    "sampled_objective",
    "make_objective",
    "landscape_grid",
]

BETA_RANGE = (0.0, math.pi)
GAMMA_RANGE = (0.0, 2.0 * math.pi)


@dataclass(frozen=True)
class QaoaParams:
    """Per-level angles; ``beta`` and ``gamma`` must have equal length >= 1."""

    beta: tuple[float, ...]
    gamma: tuple[float, ...]

    def __post_init__(self):
        if len(self.beta) != len(self.gamma):
            raise ValueError("beta and gamma must have the same length")
        if len(self.beta) == 0:
            raise ValueError("need at least one level")

    @property
    def p(self) -> int:
        return len(self.beta)

    @classmethod
    def from_vector(cls, x) -> "QaoaParams":
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.size % 2 != 0 or x.size == 0:
            raise ValueError(f"expected a flat [betas, gammas] vector, "
                             f"got shape {x.shape}")
        p = x.size // 2
        return cls(beta=tuple(x[:p]), gamma=tuple(x[p:]))

    def to_vector(self) -> np.ndarray:
        return np.array(self.beta + self.gamma)


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes over the computational basis (LSB = qubit 0)."""

    amplitudes: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.shape[0]).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real * a.real + a.imag * a.imag


@dataclass(frozen=True)
class ObjectiveValue:
    """Objective value; ``shots == 0`` marks an exact expectation."""

    value: float
    shots: int = 0


def default_bounds(p: int) -> Bounds:
    """Parameter box for p levels: beta in [0, pi], gamma in [0, 2*pi]."""
    if p < 1:
        raise ValueError("need at least one level")
    lower = np.zeros(2 * p)
    upper = np.concatenate([np.full(p, BETA_RANGE[1]),
                            np.full(p, GAMMA_RANGE[1])])
    return Bounds(lower=lower, upper=upper)


def _evolved(diag: CostDiagonal, params: QaoaParams) -> np.ndarray:
    dim = diag.dim
    psi = np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
    kernels.evolve(psi, diag.energies,
                   np.asarray(params.beta), np.asarray(params.gamma),
                   diag.n_qubits)
    return psi


def qaoa_state(diag: CostDiagonal, params: QaoaParams) -> StateVector:
    """State prepared by the alternating ansatz."""
    return StateVector(amplitudes=_evolved(diag, params))


def objective(diag: CostDiagonal, params: QaoaParams) -> ObjectiveValue:
    """Exact objective: minus the expected modularity of the ansatz state."""
    psi = _evolved(diag, params)
    return ObjectiveValue(value=-kernels.expectation(psi, diag.energies))


def sampled_objective(diag: CostDiagonal, params: QaoaParams, shots: int,
                      seed: int) -> ObjectiveValue:
    """Shot-based estimate of the objective, deterministic given ``seed``."""
    if shots < 1:
        raise ValueError("shots must be >= 1 for a sampled estimate")
    psi = _evolved(diag, params)
    probs = psi.real * psi.real + psi.imag * psi.imag
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(diag.dim, size=shots, p=probs)
    return ObjectiveValue(value=-float(np.mean(diag.energies[draws])),
                          shots=shots)


def make_objective(diag: CostDiagonal, shots: int = 0, seed: int = 0):
    """Callable ``f(x) -> float`` over packed parameter vectors.

    With ``shots == 0`` evaluations are exact and reproducible bit for bit.
    With ``shots > 0`` each call draws fresh samples from a private
    generator seeded once, so a run's evaluation sequence is deterministic.
    """
    if shots == 0:
        def f(x: np.ndarray) -> float:
            psi = _evolved(diag, QaoaParams.from_vector(x))
            return -kernels.expectation(psi, diag.energies)
        return f
    if shots < 0:
        raise ValueError("shots must be >= 0")
    rng = np.random.default_rng(seed)

    def f_sampled(x: np.ndarray) -> float:
        psi = _evolved(diag, QaoaParams.from_vector(x))
        probs = psi.real * psi.real + psi.imag * psi.imag
        probs = probs / probs.sum()
        draws = rng.choice(diag.dim, size=shots, p=probs)
        return -float(np.mean(diag.energies[draws]))

    return f_sampled


def landscape_grid(diag: CostDiagonal, beta_points: int,
                   gamma_points: int) -> np.ndarray:
    """Single-level objective on a cell-centered grid over the box.

    Entry ``[i, j]`` is f at beta = (i + 1/2) * pi / beta_points,
    gamma = (j + 1/2) * 2 * pi / gamma_points.
    """
    if beta_points < 1 or gamma_points < 1:
        raise ValueError("grid must have at least one cell per axis")
    f = make_objective(diag)
    out = np.empty((beta_points, gamma_points))
    for i in range(beta_points):
        beta = (i + 0.5) * BETA_RANGE[1] / beta_points
        for j in range(gamma_points):
            gamma = (j + 0.5) * GAMMA_RANGE[1] / gamma_points
            out[i, j] = f(np.array([beta, gamma]))
    return out
