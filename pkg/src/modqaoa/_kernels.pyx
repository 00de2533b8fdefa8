# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled state-evolution kernels; same interface as _kernels_py."""

from libc.math cimport cos, sin


def evolve(double complex[::1] psi, const double[::1] energies,
           const double[::1] betas, const double[::1] gammas, int n_qubits):
    """Apply alternating phase and transverse-mixer layers in place."""
    cdef Py_ssize_t dim = psi.shape[0]
    cdef Py_ssize_t level, z, q, stride, block, base, lo, hi
    cdef double gamma, ang, c, s, pr, pi
    cdef double complex a, b
    for level in range(betas.shape[0]):
        gamma = gammas[level]
        for z in range(dim):
            ang = -gamma * energies[z]
            c = cos(ang)
            s = sin(ang)
            pr = psi[z].real
            pi = psi[z].imag
            psi[z].real = pr * c - pi * s
            psi[z].imag = pr * s + pi * c
        c = cos(betas[level])
        s = sin(betas[level])
        for q in range(n_qubits):
            stride = 1 << q
            block = stride << 1
            base = 0
            while base < dim:
                for lo in range(base, base + stride):
                    hi = lo + stride
                    a = psi[lo]
                    b = psi[hi]
                    # [[c, -i s], [-i s, c]] acting on (a, b)
                    psi[lo].real = c * a.real + s * b.imag
                    psi[lo].imag = c * a.imag - s * b.real
                    psi[hi].real = c * b.real + s * a.imag
                    psi[hi].imag = c * b.imag - s * a.real
                base += block
    return None


def expectation(const double complex[::1] psi,
                const double[::1] energies) -> float:
    """<psi| diag(energies) |psi> for a normalized state."""
    cdef Py_ssize_t z
    cdef double acc = 0.0, pr, pi
    for z in range(psi.shape[0]):
        pr = psi[z].real
        pi = psi[z].imag
        acc += (pr * pr + pi * pi) * energies[z]
    return acc
