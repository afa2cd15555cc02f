"""Statevector simulator over X, H, RX, RZ, CNOT and FSWAP.

Qubit 0 is the most significant bit of a basis index, so a statevector
reshaped to ``(2,) * n`` has qubit ``q`` on axis ``q``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ResourceError
from .pauli import PauliSum

MAX_QUBITS = 24
GATE_KINDS = ("X", "H", "RX", "RZ", "CNOT", "FSWAP")
_ROTATIONS = ("RX", "RZ")
_TWO_QUBIT = ("CNOT", "FSWAP")

SV_MAGIC = b"SVQESV01"


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate {self.kind!r}")
        arity = 2 if self.kind in _TWO_QUBIT else 1
        if len(self.qubits) != arity or len(set(self.qubits)) != arity:
            raise ValueError(f"{self.kind} needs {arity} distinct qubits, got {self.qubits}")
        if (self.kind in _ROTATIONS) != (self.theta is not None):
            raise ValueError(f"angle mismatch for {self.kind}")

    def inverse(self) -> Gate:
        if self.kind in _ROTATIONS:
            return Gate(self.kind, self.qubits, -self.theta)
        return self

    def text(self) -> str:
        args = " ".join(str(q) for q in self.qubits)
        if self.theta is None:
            return f"{self.kind} {args}"
        return f"{self.kind} {args} {self.theta:.12g}"


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def append(self, gate: Gate) -> Circuit:
        for q in gate.qubits:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"{gate.kind} on qubit {q} outside register of {self.n_qubits}")
        self.gates.append(gate)
        return self

    def x(self, q):
        return self.append(Gate("X", (q,)))

    def h(self, q):
        return self.append(Gate("H", (q,)))

    def rx(self, q, theta):
        return self.append(Gate("RX", (q,), float(theta)))

    def rz(self, q, theta):
        return self.append(Gate("RZ", (q,), float(theta)))

    def cnot(self, control, target):
        return self.append(Gate("CNOT", (control, target)))

    def fswap(self, i, j):
        return self.append(Gate("FSWAP", (i, j)))

    def extend(self, other) -> Circuit:
        gates = other.gates if isinstance(other, Circuit) else other
        for g in gates:
            self.append(g)
        return self

    def inverse(self) -> Circuit:
        return Circuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    # accounting ---------------------------------------------------------
    @property
    def cnot_count(self) -> int:
        """CNOT gates present in the circuit (FSWAPs not included)."""
        return sum(g.kind == "CNOT" for g in self.gates)

    @property
    def fswap_count(self) -> int:
        return sum(g.kind == "FSWAP" for g in self.gates)

    @property
    def two_qubit_count(self) -> int:
        return self.cnot_count + self.fswap_count

    @property
    def compiled_cnot_count(self) -> int:
        """CNOTs after expanding every FSWAP into three CNOTs."""
        return self.cnot_count + 3 * self.fswap_count

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def compiled(self) -> Circuit:
        """Copy with every FSWAP expanded into CNOTs and Z rotations."""
        out = Circuit(self.n_qubits)
        for g in self.gates:
            if g.kind == "FSWAP":
                out.extend(fswap_decomposition(*g.qubits, self.n_qubits))
            else:
                out.append(g)
        return out

    # text form ----------------------------------------------------------
    def to_text(self) -> str:
        return "\n".join(g.text() for g in self.gates) + ("\n" if self.gates else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int) -> Circuit:
        circ = cls(n_qubits)
        for lineno, raw in enumerate(text.splitlines(), 1):
            tok = raw.split("#", 1)[0].split()
            if not tok:
                continue
            kind = tok[0].upper()
            try:
                if kind in _ROTATIONS:
                    circ.append(Gate(kind, (int(tok[1]),), float(tok[2])))
                else:
                    circ.append(Gate(kind, tuple(int(t) for t in tok[1:])))
            except (IndexError, ValueError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return circ


def fswap_decomposition(i: int, j: int, n_qubits: int) -> Circuit:
    """Three CNOTs and Z rotations equal to FSWAP up to a global phase e^{i pi/4}."""
    c = Circuit(n_qubits)
    c.cnot(i, j).cnot(j, i).rz(j, np.pi / 2).cnot(i, j).rz(i, -np.pi / 2).rz(j, -np.pi / 2)
    return c


# ---------------------------------------------------------------------------
# state handling
# ---------------------------------------------------------------------------


def check_size(n_qubits: int) -> None:
    if n_qubits > MAX_QUBITS:
        raise ResourceError(
            f"{n_qubits}-qubit statevector exceeds the {MAX_QUBITS}-qubit ceiling "
            f"({(16 << n_qubits) / 2**30:.0f} GiB)"
        )


def zero_state(n_qubits: int) -> np.ndarray:
    check_size(n_qubits)
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(occupation: int, n_qubits: int) -> np.ndarray:
    check_size(n_qubits)
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[occupation] = 1.0
    return psi


_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def _one_qubit(psi: np.ndarray, n: int, q: int, mat: np.ndarray) -> np.ndarray:
    v = psi.reshape(1 << q, 2, 1 << (n - q - 1))
    return np.einsum("ab,lbr->lar", mat, v).reshape(-1)


def apply_gate(gate: Gate, psi: np.ndarray, n: int) -> np.ndarray:
    k = gate.kind
    if k == "X":
        q = gate.qubits[0]
        v = psi.reshape(1 << q, 2, -1)
        return v[:, ::-1, :].reshape(-1).copy()
    if k == "H":
        return _one_qubit(psi, n, gate.qubits[0], _H)
    if k == "RX":
        c, s = np.cos(gate.theta / 2), np.sin(gate.theta / 2)
        return _one_qubit(psi, n, gate.qubits[0], np.array([[c, -1j * s], [-1j * s, c]]))
    if k == "RZ":
        q = gate.qubits[0]
        v = psi.reshape(1 << q, 2, -1).copy()
        v[:, 0, :] *= np.exp(-0.5j * gate.theta)
        v[:, 1, :] *= np.exp(0.5j * gate.theta)
        return v.reshape(-1)
    t = psi.reshape((2,) * n).copy()
    i, j = gate.qubits
    if k == "CNOT":
        sel = [slice(None)] * n
        sel[i] = 1
        axis = j - (j > i)
        t[tuple(sel)] = np.flip(t[tuple(sel)], axis=axis).copy()
        return t.reshape(-1)
    # FSWAP: exchange the two modes, -1 on double occupancy
    t = np.ascontiguousarray(np.swapaxes(t, i, j))
    sel = [slice(None)] * n
    sel[i] = 1
    sel[j] = 1
    t[tuple(sel)] *= -1
    return t.reshape(-1)


def apply(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """Run ``circuit`` on a copy of ``state``."""
    n = circuit.n_qubits
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (1 << n,):
        raise ValueError(f"state of length {psi.shape} does not match {n} qubits")
    check_size(n)
    psi = psi.copy()
    for g in circuit.gates:
        psi = apply_gate(g, psi, n)
    return psi


def expectation(state: np.ndarray, op: PauliSum) -> float:
    if not op.is_hermitian():
        raise ValueError("expectation needs a Hermitian operator (real coefficients)")
    val = np.vdot(state, op.apply(state))
    return float(val.real)


def probabilities(state: np.ndarray, qubits) -> dict[str, float]:
    """Marginal distribution over ``qubits`` keyed by bit pattern in listed order."""
    qubits = list(qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError("qubits must be distinct")
    n = int(np.log2(len(state)))
    p = np.abs(np.asarray(state).reshape((2,) * n)) ** 2
    rest = tuple(a for a in range(n) if a not in qubits)
    marg = p.sum(axis=rest) if rest else p
    # axes left in ascending qubit order; reorder to the requested order
    order = sorted(qubits)
    marg = np.transpose(marg, [order.index(q) for q in qubits]) if qubits else marg
    out = {}
    for idx in np.ndindex(marg.shape):
        val = float(marg[idx])
        if val > 0:
            out["".join(map(str, idx))] = val
    return out


def occupation(state: np.ndarray, q: int) -> float:
    """<n_q>, the probability of reading 1 on qubit ``q``."""
    n = int(np.log2(len(state)))
    v = np.asarray(state).reshape(1 << q, 2, 1 << (n - q - 1))
    return float(np.sum(np.abs(v[:, 1, :]) ** 2))


def binary_entropy(gamma: float) -> float:
    gamma = min(max(gamma, 0.0), 1.0)
    s = 0.0
    for p in (gamma, 1.0 - gamma):
        if p > 0:
            s -= p * np.log2(p)
    return s


def orbital_entropy(state: np.ndarray, i: int) -> float:
    """Single-orbital entropy from gamma_i = <a+_i a_i>."""
    return binary_entropy(occupation(state, i))


def dump_statevector(path, state: np.ndarray) -> None:
    """Binary dump: magic, uint32 n_qubits, uint64 length, then (re, im) float64 pairs, little-endian."""
    state = np.asarray(state, dtype="<c16")
    n = int(np.log2(len(state)))
    with open(path, "wb") as fh:
        fh.write(SV_MAGIC + struct.pack("<IQ", n, len(state)))
        fh.write(state.tobytes())


def load_statevector(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:8] != SV_MAGIC:
        raise ValueError("not a statevector dump")
    n, length = struct.unpack("<IQ", data[8:20])
    if length != 1 << n:
        raise ValueError("corrupt statevector header")
    return np.frombuffer(data[20:], dtype="<c16", count=length).astype(complex)
