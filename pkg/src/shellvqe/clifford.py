"""Propagate Pauli sums through Clifford circuits.

``conjugate(circuit, op)`` returns ``C op C^dagger``: measuring ``op`` on
``psi`` equals measuring the result on ``C psi``. Gate images are derived
once from the 2x2 / 4x4 gate matrices, so no sign table is typed by hand.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .pauli import PauliSum
from .qsim import Circuit, Gate

_P1 = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}
_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


def _gate_matrix(kind: str, theta: float | None) -> np.ndarray:
    if kind == "X":
        return _P1["X"]
    if kind == "H":
        return np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    if kind == "RX":
        return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * _P1["X"]
    if kind == "RZ":
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    if kind == "CNOT":
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    if kind == "FSWAP":
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]])
    raise ValueError(kind)


@lru_cache(maxsize=None)
def _local_images(kind: str, theta_key: float | None):
    """Map local (x, z) bit tuples to (phase, x', z') under U P U^dagger."""
    theta = theta_key
    if kind in ("RX", "RZ"):
        quarter = theta / (np.pi / 2)
        if abs(quarter - round(quarter)) > 1e-12:
            raise ValueError(f"{kind}({theta}) is not a Clifford rotation")
    u = _gate_matrix(kind, theta)
    k = 1 if u.shape == (2, 2) else 2
    words = ["".join(w) for w in itertools.product("IXYZ", repeat=k)]
    mats = {}
    for w in words:
        m = np.array([[1.0]])
        for c in w:
            m = np.kron(m, _P1[c])
        mats[w] = m
    table = {}
    for w in words:
        img = u @ mats[w] @ u.conj().T
        for w2 in words:
            c = np.trace(mats[w2].conj().T @ img) / (1 << k)
            if abs(c) > 1e-9:
                break
        phase = complex(np.round(c.real, 12) + 1j * np.round(c.imag, 12))
        key = tuple(_BITS[ch] for ch in w)
        table[key] = (phase, tuple(_BITS[ch] for ch in w2))
    return table


def conjugate_string(gate: Gate, x: int, z: int, n: int):
    """Image of one letter string: returns (phase, x', z')."""
    theta = None if gate.theta is None else round(gate.theta, 12)
    table = _local_images(gate.kind, theta)
    bits = [1 << (n - 1 - q) for q in gate.qubits]
    local = tuple((int(bool(x & b)), int(bool(z & b))) for b in bits)
    phase, new = table[local]
    for b, (bx, bz) in zip(bits, new):
        x = (x & ~b) | (b if bx else 0)
        z = (z & ~b) | (b if bz else 0)
    return phase, x, z


def conjugate(circuit: Circuit, op: PauliSum) -> PauliSum:
    """C op C^dagger for a Clifford circuit C."""
    n = circuit.n_qubits
    if op.n_qubits != n:
        raise ValueError("register mismatch")
    terms = list(op.items())
    for gate in circuit.gates:
        nxt = []
        for (x, z), c in terms:
            ph, x2, z2 = conjugate_string(gate, x, z, n)
            nxt.append(((x2, z2), c * ph))
        terms = nxt
    return PauliSum(n, terms)

