"""Independent reference implementations used to check the library.

Nothing here imports the code under test except plain data containers.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kron_loop(a, b):
    """Kronecker product from the index formula."""
    a, b = np.asarray(a), np.asarray(b)
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i in range(ra):
        for j in range(ca):
            for k in range(rb):
                for l in range(cb):
                    out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def kron_all(*mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = kron_loop(out, m)
    return out


def taylor_expm(a, terms: int = 30, squarings: int = 6):
    """``exp(a)`` by a truncated Taylor series with scaling and squaring."""
    a = np.asarray(a, dtype=complex) / 2 ** squarings
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def power_iteration_norm(h, iters: int = 20000, seed: int = 0):
    """Largest ``|eigenvalue|`` of a Hermitian matrix via power iteration on ``h @ h``."""
    rng = np.random.default_rng(seed)
    h2 = h @ h
    v = rng.standard_normal(h.shape[0]) + 1j * rng.standard_normal(h.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = h2 @ v
        nrm = np.linalg.norm(w)
        v = w / nrm
        if abs(nrm - lam) < 1e-15 * max(1.0, nrm):
            break
        lam = nrm
    return math.sqrt(np.real(np.vdot(v, h2 @ v)))


def trace_loop(a, b):
    """``Tr(a^dagger b)`` by explicit summation."""
    return sum(np.conj(a[i, j]) * b[i, j] for i in range(a.shape[0]) for j in range(a.shape[1]))


# -- reservoir ----------------------------------------------------------------------

def pair_hamiltonian(J, P1, P2, E1, E2):
    return (J * (kron_loop(SX, SX) + kron_loop(SY, SY)) + P1 * kron_loop(SX, I2)
            + E1 * kron_loop(SZ, I2) + P2 * kron_loop(I2, SX) + E2 * kron_loop(I2, SZ))


def ladder(d):
    a = np.zeros((d, d), dtype=complex)
    for n in range(1, d):
        a[n - 1, n] = math.sqrt(n)
    return a


def bosonic_hamiltonian(d, J, P1, P2, E1, E2, a1, a2):
    """Pair Hamiltonian assembled entry by entry in the occupation basis."""
    D = d * d
    H = np.zeros((D, D), dtype=complex)

    def idx(n1, n2):
        return n1 * d + n2

    for n1 in range(d):
        for n2 in range(d):
            i = idx(n1, n2)
            H[i, i] += E1 * n1 + E2 * n2 + a1 * n1 * (n1 - 1) + a2 * n2 * (n2 - 1)
            if n1 + 1 < d:  # a1^dagger + a1
                j = idx(n1 + 1, n2)
                H[j, i] += P1 * math.sqrt(n1 + 1)
                H[i, j] += P1 * math.sqrt(n1 + 1)
            if n2 + 1 < d:
                j = idx(n1, n2 + 1)
                H[j, i] += P2 * math.sqrt(n2 + 1)
                H[i, j] += P2 * math.sqrt(n2 + 1)
            if n1 + 1 < d and n2 >= 1:  # a1^dagger a2 + h.c.
                j = idx(n1 + 1, n2 - 1)
                amp = J * math.sqrt(n1 + 1) * math.sqrt(n2)
                H[j, i] += amp
                H[i, j] += amp
    return H


def pair_unitary(H, t, hbar):
    """``U = exp(-i t H / hbar)``."""
    return taylor_expm(-1j * t / hbar * H, terms=40, squarings=8)


def full_reservoir_probabilities(sigma, units):
    """Brute-force readout law of ``n`` input qubits each swapped into its own pair.

    Nodes are ordered (input_1, ancilla_1, input_2, ancilla_2, ...).  The
    network starts in ``sigma`` on the input nodes and ``|0>`` on every ancilla,
    evolves as ``rho(t) = U^dagger rho(0) U`` with ``U`` the product of the
    pair unitaries, and every node is measured in its occupation basis.
    Returns probabilities indexed row-major by the pair outcomes
    ``m_i = d * (input node occupation) + (ancilla occupation)``.
    """
    n = len(units)
    d = math.isqrt(units[0].shape[0])
    anc = np.zeros((d, d), dtype=complex)
    anc[0, 0] = 1
    # build rho(0) in the node order (in_1, in_2, ..., anc_1, anc_2, ...) then permute
    rho = kron_all(np.asarray(sigma), *([anc] * n))
    order = [k for i in range(n) for k in (i, n + i)]
    rho = rho.reshape([d] * (4 * n))
    rho = rho.transpose(order + [2 * n + k for k in order]).reshape(d ** (2 * n), d ** (2 * n))
    U = kron_all(*units)
    rho_t = U.conj().T @ rho @ U
    return np.real(np.diag(rho_t)).copy()


# -- states and estimators -----------------------------------------------------------

def dephase_kraus_sum(rho, kappa_t, n):
    p = 1 - math.exp(-kappa_t)
    ks = [math.sqrt(1 - p) * I2, math.sqrt(p) / 2 * (I2 + SZ), math.sqrt(p) / 2 * (I2 - SZ)]
    out = np.asarray(rho, dtype=complex)
    for q in range(n):
        new = np.zeros_like(out)
        for K in ks:
            full = kron_all(*[K if i == q else I2 for i in range(n)])
            new += full @ out @ full.conj().T
        out = new
    return out


def partial_trace_loop(rho, dims, keep):
    """Reduced density matrix by summing over the traced-out indices."""
    dims = list(dims)
    keep = list(keep)
    traced = [i for i in range(len(dims)) if i not in keep]
    dk = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(dk)), int(np.prod(dk))), dtype=complex)
    for r in itertools.product(*[range(d) for d in dk]):
        for c in itertools.product(*[range(d) for d in dk]):
            total = 0
            for e in itertools.product(*[range(dims[i]) for i in traced]):
                ri, ci = [0] * len(dims), [0] * len(dims)
                for k, i in enumerate(keep):
                    ri[i], ci[i] = r[k], c[k]
                for k, i in enumerate(traced):
                    ri[i] = ci[i] = e[k]
                total += rho[np.ravel_multi_index(ri, dims), np.ravel_multi_index(ci, dims)]
            out[np.ravel_multi_index(r, dk), np.ravel_multi_index(c, dk)] = total
    return out


def ustat2_bruteforce(values_matrix, idx):
    """``1/(N(N-1)) sum_{i != j} G[idx_i, idx_j]``."""
    N = len(idx)
    total = 0.0
    for i in range(N):
        for j in range(N):
            if i != j:
                total += values_matrix[idx[i], idx[j]]
    return total / (N * (N - 1))


def shadow_mean_exact(obs_terms, rho, n):
    """Expectation of the Pauli-shadow estimator by enumerating bases and outcomes."""
    eig = {
        0: [np.array([1, 1]) / math.sqrt(2), np.array([1, -1]) / math.sqrt(2)],
        1: [np.array([1, 1j]) / math.sqrt(2), np.array([1, -1j]) / math.sqrt(2)],
        2: [np.array([1, 0]), np.array([0, 1])],
    }
    letter = {"X": 0, "Y": 1, "Z": 2}
    total = 0.0
    for b in itertools.product(range(3), repeat=n):
        for s in itertools.product(range(2), repeat=n):
            vec = np.ones(1, dtype=complex)
            for q in range(n):
                vec = np.kron(vec, eig[b[q]][s[q]])
            p = np.real(np.conj(vec) @ rho @ vec)
            val = 0.0
            for coef, label in obs_terms:
                v = coef
                for q, ch in enumerate(label):
                    if ch != "I":
                        v *= 3 * (1 - 2 * s[q]) if b[q] == letter[ch] else 0
                val += v
            total += p * val / 3 ** n
    return total


def gram_schmidt_rank(vectors, tol: float = 1e-10) -> int:
    """Number of linearly independent vectors by modified Gram-Schmidt."""
    basis = []
    for v in vectors:
        w = np.array(v, dtype=complex)
        for b in basis:
            w = w - np.vdot(b, w) * b
        nrm = np.linalg.norm(w)
        if nrm > tol:
            basis.append(w / nrm)
    return len(basis)
