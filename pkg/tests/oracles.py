"""Independent reference constructions used by the test-suite.

Everything here is built from first principles (bit manipulation on Fock
states, brute-force sums) without touching the package's own algebra.
"""

import itertools
from fractions import Fraction
from math import factorial, sqrt

import numpy as np
import scipy.sparse as sp


def sparse_annihilator(p: int, n: int) -> sp.csr_matrix:
    """a_p on n modes; mode p is bit n-1-p, sign counts occupied modes < p."""
    dim = 1 << n
    bit = 1 << (n - 1 - p)
    rows, cols, vals = [], [], []
    for b in range(dim):
        if b & bit:
            below = bin(b >> (n - p)).count("1")
            rows.append(b ^ bit)
            cols.append(b)
            vals.append((-1.0) ** below)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def annihilator(p: int, n: int) -> np.ndarray:
    return sparse_annihilator(p, n).toarray()


def creator(p: int, n: int) -> np.ndarray:
    return annihilator(p, n).T


def number(p: int, n: int) -> np.ndarray:
    return creator(p, n) @ annihilator(p, n)


def double_hop(p, q, r, s, n):
    op = creator(p, n) @ creator(q, n) @ annihilator(r, n) @ annihilator(s, n)
    return op + op.T


def pool_op(p, q, r, s, n):
    op = creator(p, n) @ creator(q, n) @ annihilator(r, n) @ annihilator(s, n)
    return 1j * (op - op.T)


def single_hop(p, q, n):
    op = creator(p, n) @ annihilator(q, n)
    return op + op.T


def single_excitation(p, q, n):
    op = creator(p, n) @ annihilator(q, n)
    return 1j * (op - op.T)


def cg_exact(j1, m1, j2, m2, J, M):
    """Clebsch-Gordan from the Racah sum in exact rationals; doubled args."""
    if m1 + m2 != M or abs(m1) > j1 or abs(m2) > j2 or abs(M) > J:
        return 0.0
    if J < abs(j1 - j2) or J > j1 + j2 or (j1 + j2 + J) % 2:
        return 0.0
    f = lambda x: factorial(x // 2)
    pref = Fraction(
        (J + 1) * f(J + j1 - j2) * f(J - j1 + j2) * f(j1 + j2 - J),
        f(j1 + j2 + J + 2),
    )
    pref *= Fraction(f(J + M) * f(J - M) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2), 1)
    total = Fraction(0)
    for k in range(0, j1 + j2 + J + 1):
        args = [j1 + j2 - J - 2 * k, j1 - m1 - 2 * k, j2 + m2 - 2 * k,
                J - j2 + m1 + 2 * k, J - j1 - m2 + 2 * k]
        if any(a < 0 for a in args):
            continue
        den = factorial(k) * np.prod([factorial(a // 2) for a in args], dtype=object)
        total += Fraction((-1) ** k, int(den))
    return float(total) * sqrt(float(pref))


def fock_hamiltonian(spe, vbar, n):
    """Sparse H = sum e n + 1/4 sum vbar a+a+aa over the full Fock space.

    ``vbar`` may hold any subset of orientations; missing antisymmetric
    partners are generated here so the 1/4 prefactor is exact.
    """
    full = {}
    for (i, j, k, l), v in vbar.items():
        for (x, y, s1) in ((i, j, 1), (j, i, -1)):
            for (z, w, s2) in ((k, l, 1), (l, k, -1)):
                full[(x, y, z, w)] = s1 * s2 * v
                full[(z, w, x, y)] = s1 * s2 * v
    a = [sparse_annihilator(p, n) for p in range(n)]
    h = sp.csr_matrix((1 << n, 1 << n))
    for i, e in enumerate(spe):
        h = h + e * (a[i].T @ a[i])
    for (i, j, k, l), v in full.items():
        h = h + 0.25 * v * (a[i].T @ a[j].T @ a[l] @ a[k])
    return h.tocsr()


# ---------------------------------------------------------------------------
# gates as full matrices (Kronecker products, qubit 0 leftmost)
# ---------------------------------------------------------------------------

_I2 = np.eye(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]])
_Z = np.diag([1.0 + 0j, -1.0])
_H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)
PAULI = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


def kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def pauli_string(letters: str) -> np.ndarray:
    return kron_all(PAULI[c] for c in letters)


def one_qubit_gate(mat, q, n):
    return kron_all(mat if k == q else _I2 for k in range(n))


def cnot_gate(c, t, n):
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    a = kron_all(p0 if k == c else _I2 for k in range(n))
    b = kron_all(p1 if k == c else (_X if k == t else _I2) for k in range(n))
    return a + b


def gate_unitary(kind, qubits, theta, n):
    if kind == "X":
        return one_qubit_gate(_X, qubits[0], n)
    if kind == "H":
        return one_qubit_gate(_H, qubits[0], n)
    if kind == "RX":
        return one_qubit_gate(np.cos(theta / 2) * _I2 - 1j * np.sin(theta / 2) * _X, qubits[0], n)
    if kind == "RZ":
        return one_qubit_gate(np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]), qubits[0], n)
    if kind == "CNOT":
        return cnot_gate(qubits[0], qubits[1], n)
    if kind == "FSWAP":
        i, j = qubits
        # swap = three CNOTs, then -1 on |11>
        sw = cnot_gate(i, j, n) @ cnot_gate(j, i, n) @ cnot_gate(i, j, n)
        cz = np.diag([(-1.0) ** ((b >> (n - 1 - i)) & (b >> (n - 1 - j)) & 1) for b in range(1 << n)])
        return cz @ sw
    raise ValueError(kind)


def circuit_unitary(gates, n):
    u = np.eye(1 << n, dtype=complex)
    for kind, qubits, theta in gates:
        u = gate_unitary(kind, qubits, theta, n) @ u
    return u


# ---------------------------------------------------------------------------
# brute-force enumerations
# ---------------------------------------------------------------------------


def shell_states(orbitals, both: bool):
    """(m2, tz2) per mode in the package's qubit order: neutrons first, m ascending."""
    out = []
    for tz in ([1, -1] if both else [1]):
        for j2 in orbitals:
            for m2 in range(-j2, j2 + 1, 2):
                out.append((m2, tz))
    return out


def brute_force_pool(states):
    ops = set()
    n = len(states)
    for p, q, r, s in itertools.product(range(n), repeat=4):
        if not (p < q and r < s) or {p, q} == {r, s}:
            continue
        if states[p][0] + states[q][0] != states[r][0] + states[s][0]:
            continue
        if states[p][1] + states[q][1] != states[r][1] + states[s][1]:
            continue
        ops.add(min((p, q, r, s), (r, s, p, q)))
    return ops


def brute_force_nsd(states, n_ci, z_ci, M2):
    count = 0
    n = len(states)
    for occ in itertools.combinations(range(n), n_ci + z_ci):
        if sum(states[k][1] == 1 for k in occ) != n_ci:
            continue
        if sum(states[k][0] for k in occ) == M2:
            count += 1
    return count
