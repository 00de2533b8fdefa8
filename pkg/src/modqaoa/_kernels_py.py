"""Pure-NumPy state-evolution kernels (fallback for the compiled extension).

Both kernel backends share this interface:

    evolve(psi, energies, betas, gammas, n_qubits)  -- in place
    expectation(psi, energies) -> float

``psi`` is a contiguous complex128 state vector of length ``2**n_qubits``,
indexed so that bit q of the array index is qubit q.
"""

from __future__ import annotations

import math

import numpy as np


def evolve(psi: np.ndarray, energies: np.ndarray, betas, gammas,
           n_qubits: int) -> None:
    """Apply alternating phase and transverse-mixer layers in place.

    Level l multiplies amplitude z by exp(-1j * gammas[l] * energies[z]),
    then rotates every qubit by the 2x2 mixer
    [[cos b, -i sin b], [-i sin b, cos b]] with b = betas[l].
    """
    dim = psi.shape[0]
    for beta, gamma in zip(betas, gammas):
        psi *= np.exp(-1j * gamma * energies)
        c = math.cos(beta)
        s = math.sin(beta)
        for q in range(n_qubits):
            view = psi.reshape(dim >> (q + 1), 2, 1 << q)
            lo = view[:, 0, :].copy()
            hi = view[:, 1, :]
            view[:, 0, :] = c * lo - 1j * s * hi
            view[:, 1, :] = c * hi - 1j * s * lo


def expectation(psi: np.ndarray, energies: np.ndarray) -> float:
    """<psi| diag(energies) |psi> for a normalized state."""
    probs = psi.real * psi.real + psi.imag * psi.imag
    return float(probs @ energies)
