"""ADAPT-VQE: grow exp(i theta_k A_k) layers picked by the largest energy gradient.

The ansatz is ``|psi> = U_n ... U_1 |ref>`` with ``U_k = exp(i theta_k A_k)``
and ``A_k = T^{pq}_{rs}``. Two interchangeable backends evaluate it: sparse
matrices in the m-scheme basis ("matrix") and gate-level statevector
simulation of the synthesized circuits ("circuit").
"""

from __future__ import annotations

import itertools
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from . import fock, qsim
from .circuits import prepare_reference, synthesize_exponential
from .errors import ConfigurationError, OptimizerError, ResourceError
from .hamiltonian import MSchemeHamiltonian, diagonal_energy, lowest_reference
from .pauli import jw_hamiltonian, jw_pool_op
from .valence import SlaterDet, ValenceSpace, enumerate_m_basis

log = logging.getLogger(__name__)

BACKENDS = ("matrix", "circuit")
GRAD_TOL = 1e-6
TIE_TOL = 1e-9

Op = tuple[int, int, int, int]


# ---------------------------------------------------------------------------
# pool
# ---------------------------------------------------------------------------


def build_pool(space: ValenceSpace, n_ci: int | None = None, z_ci: int | None = None) -> list[Op]:
    """All (p, q, r, s) with p<q, r<s, (p, q) < (r, s) conserving M and T_z.

    ``T^{rs}_{pq} = -T^{pq}_{rs}``, so only one orientation is kept. The
    particle numbers are accepted for interface symmetry; operators acting
    on an empty species simply produce zero gradients.
    """
    st = space.states
    pairs = list(itertools.combinations(range(len(st)), 2))
    by_sym: dict[tuple[int, int], list] = {}
    for p, q in pairs:
        by_sym.setdefault((st[p].m2 + st[q].m2, st[p].tz2 + st[q].tz2), []).append((p, q))
    pool = []
    for group in by_sym.values():
        for a, b in itertools.combinations(sorted(group), 2):
            pool.append((*a, *b))
    return sorted(pool)


class OperatorPool:
    """Pool operators with lazily built matrix and Pauli forms."""

    def __init__(self, ops, basis, n_qubits: int):
        self.ops: list[Op] = list(ops)
        self.basis = basis
        self.n_qubits = n_qubits
        self._sparse: dict[Op, fock.SparseOperator] = {}
        self._pauli = {}

    def __len__(self) -> int:
        return len(self.ops)

    def sparse(self, op: Op) -> fock.SparseOperator:
        if op not in self._sparse:
            self._sparse[op] = fock.build_sparse_pool(op, self.basis)
        return self._sparse[op]

    def pauli(self, op: Op):
        if op not in self._pauli:
            self._pauli[op] = jw_pool_op(*op, self.n_qubits)
        return self._pauli[op]


# ---------------------------------------------------------------------------
# gradients and selection
# ---------------------------------------------------------------------------


def commutator_gradient(h_psi: np.ndarray, a_psi: np.ndarray) -> float:
    """i <psi|[H, A]|psi> = -2 Im <H psi | A psi>."""
    return float(-2.0 * np.vdot(h_psi, a_psi).imag)


def screen_gradients(state: np.ndarray, pool: OperatorPool, h_op: fock.SparseOperator) -> list[tuple[Op, float]]:
    """Energy gradient at theta = 0 for appending each pool operator."""
    h_psi = h_op.matrix @ state
    return [(op, commutator_gradient(h_psi, pool.sparse(op).matrix @ state)) for op in pool.ops]


def pauli_gradient(psi_full: np.ndarray, h_pauli, a_pauli) -> float:
    """i <psi|[H, A]|psi> through the qubit operators (independent of the Fock route)."""
    comm = 1j * (h_pauli @ a_pauli - a_pauli @ h_pauli)
    return float(np.vdot(psi_full, comm.apply(psi_full)).real)


def select_operator(gradients, last_op: Op | None = None, tol: float = GRAD_TOL) -> Op | None:
    """Largest |gradient|, never repeating ``last_op``.

    Returns ``None`` (converged) when every |gradient| is below ``tol``.
    Gradients within ``TIE_TOL`` of the maximum count as ties and the
    lexicographically smallest operator wins.
    """
    if not gradients:
        raise ValueError("no gradients to select from")
    if max(abs(g) for _, g in gradients) < tol:
        return None
    candidates = [(op, abs(g)) for op, g in gradients if op != last_op]
    if not candidates:
        return None
    best = max(g for _, g in candidates)
    if best < tol:
        return None
    return min(op for op, g in candidates if g >= best - TIE_TOL)


# ---------------------------------------------------------------------------
# ansatz evaluation
# ---------------------------------------------------------------------------


@dataclass
class AdaptState:
    reference: SlaterDet
    ops: list[Op] = field(default_factory=list)
    thetas: list[float] = field(default_factory=list)
    backend: str = "matrix"

    def __post_init__(self):
        if len(self.ops) != len(self.thetas):
            raise ValueError("one angle per layer")


class MatrixAnsatz:
    """Ansatz states as coefficient vectors over the m-scheme basis."""

    def __init__(self, reference: SlaterDet, basis, pool: OperatorPool, h_op: fock.SparseOperator):
        self.basis = basis
        self.pool = pool
        self.h_op = h_op
        idx = {d.occupation: k for k, d in enumerate(basis)}
        if reference.occupation not in idx:
            raise ConfigurationError(f"reference {reference} is not in the m-scheme basis")
        self.ref = np.zeros(len(basis), dtype=complex)
        self.ref[idx[reference.occupation]] = 1.0

    def state(self, ops, thetas) -> np.ndarray:
        psi = self.ref
        for op, th in zip(ops, thetas):
            psi = fock.apply_exp_pool(self.pool.sparse(op), th, psi)
        return psi

    def energy(self, ops, thetas) -> float:
        psi = self.state(ops, thetas)
        return float(np.vdot(psi, self.h_op.matrix @ psi).real)

    def energy_and_grad(self, ops, thetas):
        psi = self.state(ops, thetas)
        sigma = self.h_op.matrix @ psi
        energy = float(np.vdot(psi, sigma).real)
        grad = np.zeros(len(ops))
        phi = psi
        for k in range(len(ops) - 1, -1, -1):
            a = self.pool.sparse(ops[k])
            grad[k] = commutator_gradient(sigma, a.matrix @ phi)
            phi = fock.apply_exp_pool(a, -thetas[k], phi)
            sigma = fock.apply_exp_pool(a, -thetas[k], sigma)
        return energy, grad

    def coefficients(self, ops, thetas) -> np.ndarray:
        return self.state(ops, thetas)


class CircuitAnsatz:
    """Ansatz states from gate-level simulation of the synthesized circuits.

    H is applied through its m-scheme matrix on the amplitudes of the basis
    determinants, which is exact because the circuits conserve M and T_z.
    """

    def __init__(self, reference: SlaterDet, basis, pool: OperatorPool, h_op: fock.SparseOperator, connectivity="all"):
        qsim.check_size(reference.n_qubits)
        self.reference = reference
        self.basis = basis
        self.pool = pool
        self.h_op = h_op
        self.n = reference.n_qubits
        self.connectivity = connectivity
        self._layers: dict[tuple[Op, float], qsim.Circuit] = {}
        self.psi0 = qsim.apply(prepare_reference(reference), qsim.zero_state(self.n))

    def layer(self, op, theta) -> qsim.Circuit:
        key = (op, float(theta))
        if key not in self._layers:
            if len(self._layers) > 4096:
                self._layers.clear()
            self._layers[key] = synthesize_exponential(op, theta, self.n, self.connectivity).circuit
        return self._layers[key]

    def full_state(self, ops, thetas) -> np.ndarray:
        psi = self.psi0
        for op, th in zip(ops, thetas):
            psi = qsim.apply(self.layer(op, th), psi)
        return psi

    def _h(self, psi_full):
        return fock.embed(self.h_op.matrix @ fock.restrict(psi_full, self.basis), self.basis, self.n)

    def energy(self, ops, thetas) -> float:
        psi = self.full_state(ops, thetas)
        return float(np.vdot(psi, self._h(psi)).real)

    def energy_and_grad(self, ops, thetas):
        psi = self.full_state(ops, thetas)
        sigma = self._h(psi)
        energy = float(np.vdot(psi, sigma).real)
        grad = np.zeros(len(ops))
        phi = psi
        for k in range(len(ops) - 1, -1, -1):
            grad[k] = commutator_gradient(sigma, self.pool.pauli(ops[k]).apply(phi))
            inv = self.layer(ops[k], -thetas[k])
            phi = qsim.apply(inv, phi)
            sigma = qsim.apply(inv, sigma)
        return energy, grad

    def coefficients(self, ops, thetas) -> np.ndarray:
        return fock.restrict(self.full_state(ops, thetas), self.basis)


def optimize_parameters(ansatz, ops, thetas0, gtol: float = GRAD_TOL):
    """BFGS over all angles at once, warm-started from ``thetas0``.

    Returns ``(thetas, energy, n_fc)``.
    """
    if not ops:
        return [], ansatz.energy([], []), 0
    ops = list(ops)
    x0 = np.asarray(thetas0, dtype=float)
    e0 = ansatz.energy(ops, x0)
    res = minimize(
        lambda x: ansatz.energy_and_grad(ops, x),
        x0,
        jac=True,
        method="BFGS",
        options={"gtol": gtol, "maxiter": 2000},
    )
    if res.fun > e0 + 1e-10:
        raise OptimizerError(f"optimizer raised the energy from {e0!r} to {res.fun!r} ({res.message})")
    return [float(t) for t in res.x], float(res.fun), int(res.nfev)


# ---------------------------------------------------------------------------
# metrics and the driver
# ---------------------------------------------------------------------------


def occupations(coeffs: np.ndarray, basis, n_qubits: int) -> np.ndarray:
    probs = np.abs(coeffs) ** 2
    occ = np.array([[(d.occupation >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)] for d in basis], dtype=float)
    return probs @ occ


def entropies(coeffs: np.ndarray, basis, n_qubits: int) -> list[float]:
    return [qsim.binary_entropy(g) for g in occupations(coeffs, basis, n_qubits)]


def mean_entropy_error(s: list[float], s_exact: list[float]) -> float:
    errs = [abs(a - b) / b if b > 1e-12 else abs(a - b) for a, b in zip(s, s_exact)]
    return float(np.mean(errs)) if errs else 0.0


@dataclass
class LayerTrace:
    layer: int
    selected_op: Op | None
    max_gradient: float
    energy: float
    eps_E: float
    infidelity: float
    entropies: list[float]
    mean_entropy_error: float
    n_cnot_total: int
    n_fc: int
    theta: list[float] = field(default_factory=list)
    fd_error: float | None = None
    pauli_error: float | None = None

    def as_dict(self) -> dict:
        return {
            "layer": self.layer,
            "selected_op": list(self.selected_op) if self.selected_op else None,
            "max_gradient": self.max_gradient,
            "energy": self.energy,
            "eps_E": self.eps_E,
            "infidelity": self.infidelity,
            "entropies": self.entropies,
            "mean_entropy_error": self.mean_entropy_error,
            "n_cnot_total": self.n_cnot_total,
            "n_fc": self.n_fc,
            "theta": self.theta,
            "fd_error": self.fd_error,
            "pauli_error": self.pauli_error,
        }


@dataclass
class AdaptConfig:
    space: ValenceSpace
    n_ci: int
    z_ci: int
    M2: int
    hamiltonian: MSchemeHamiltonian
    backend: str = "matrix"
    connectivity: str = "all"
    max_layers: int = 100
    eps_target: float | None = None
    grad_tol: float = GRAD_TOL
    reference: SlaterDet | None = None
    fd_check: bool = False
    pauli_check: bool = False

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"backend must be one of {BACKENDS}")
        if self.eps_target is not None and self.eps_target <= 0:
            raise ConfigurationError("eps_target must be positive")
        if self.max_layers < 0:
            raise ConfigurationError("max_layers must be non-negative")


@dataclass
class AdaptResult:
    traces: list[LayerTrace]
    state: AdaptState
    exact_energy: float
    basis: list[SlaterDet]
    coefficients: np.ndarray
    stop_reason: str

    @property
    def energy(self) -> float:
        return self.traces[-1].energy

    @property
    def n_layers(self) -> int:
        return len(self.state.ops)


def layer_cnots(op: Op, n_qubits: int, connectivity: str) -> int:
    layer = synthesize_exponential(op, 0.1, n_qubits, connectivity)
    return layer.circuit.compiled_cnot_count


def run_adapt(config: AdaptConfig, resume: AdaptState | None = None, callback=None) -> AdaptResult:
    """Screen, select, append, re-optimize, record; until converged.

    ``callback(state, trace)`` runs after every recorded layer (checkpointing).
    """
    space, h = config.space, config.hamiltonian
    n = space.n_qubits
    if config.backend == "circuit" and n > qsim.MAX_QUBITS:
        raise ResourceError(f"circuit backend limited to {qsim.MAX_QUBITS} qubits, space has {n}")
    basis = enumerate_m_basis(space, config.n_ci, config.z_ci, config.M2)
    if not basis:
        raise ConfigurationError("empty m-scheme basis")
    h_op = fock.build_sparse_h(h, basis)
    exact = fock.ground_state(h_op)
    s_exact = entropies(exact.coefficients, basis, n)

    reference = config.reference or (resume.reference if resume else lowest_reference(h, basis))
    pool = OperatorPool(build_pool(space, config.n_ci, config.z_ci), basis, n)
    matrix = MatrixAnsatz(reference, basis, pool, h_op)
    if config.backend == "circuit":
        ansatz = CircuitAnsatz(reference, basis, pool, h_op, config.connectivity)
    else:
        ansatz = matrix

    state = AdaptState(reference, list(resume.ops) if resume else [], list(resume.thetas) if resume else [], config.backend)
    cnot_cache: dict[Op, int] = {}
    h_pauli = None

    def cnots_of(ops):
        total = 0
        for op in ops:
            if op not in cnot_cache:
                cnot_cache[op] = layer_cnots(op, n, config.connectivity)
            total += cnot_cache[op]
        return total

    def record(layer, op, gmax, energy, n_fc, fd_error=None):
        coeffs = ansatz.coefficients(state.ops, state.thetas)
        ent = entropies(coeffs, basis, n)
        eps = abs(energy - exact.energy) / abs(exact.energy) if exact.energy else abs(energy - exact.energy)
        fid = abs(np.vdot(exact.coefficients, coeffs)) ** 2
        return LayerTrace(
            layer, op, gmax, energy, eps, float(min(max(1.0 - fid, 0.0), 1.0)), ent,
            mean_entropy_error(ent, s_exact), cnots_of(state.ops), n_fc, list(state.thetas), fd_error,
        )

    if state.ops:
        state.thetas, energy, n_fc = optimize_parameters(ansatz, state.ops, state.thetas, config.grad_tol)
    else:
        energy, n_fc = ansatz.energy([], []), 0
    traces = [record(len(state.ops), state.ops[-1] if state.ops else None, 0.0, energy, n_fc)]
    if callback:
        callback(state, traces[-1])
    stop = "max_layers"
    while True:
        if config.eps_target is not None and traces[-1].eps_E <= config.eps_target:
            stop = "eps_target"
            break
        if len(state.ops) >= config.max_layers:
            stop = "max_layers"
            break
        psi = matrix.state(state.ops, state.thetas) if ansatz is matrix else ansatz.coefficients(state.ops, state.thetas)
        grads = screen_gradients(psi, pool, h_op)
        gmax = max(abs(g) for _, g in grads)
        op = select_operator(grads, state.ops[-1] if state.ops else None, config.grad_tol)
        if op is None:
            stop = "gradient"
            traces[-1].max_gradient = gmax
            break
        fd_error = None
        if config.fd_check:
            g = dict(grads)[op]
            step = 1e-5
            ep = ansatz.energy(state.ops + [op], state.thetas + [step])
            em = ansatz.energy(state.ops + [op], state.thetas + [-step])
            fd_error = abs((ep - em) / (2 * step) - g)
        pauli_error = None
        if config.pauli_check:
            if h_pauli is None:
                h_pauli = jw_hamiltonian(h)
            g_q = pauli_gradient(fock.embed(psi, basis, n), h_pauli, pool.pauli(op))
            pauli_error = abs(g_q - dict(grads)[op])
        prev = traces[-1].energy
        state.ops.append(op)
        state.thetas, energy, n_fc = optimize_parameters(ansatz, state.ops, state.thetas + [0.0], config.grad_tol)
        if energy > prev + 1e-10:
            raise OptimizerError(f"energy rose from {prev} to {energy} at layer {len(state.ops)}")
        traces.append(record(len(state.ops), op, gmax, energy, n_fc, fd_error))
        traces[-1].pauli_error = pauli_error
        if callback:
            callback(state, traces[-1])
        log.info("layer %d op %s |g|=%.3e E=%.10f eps=%.2e", len(state.ops), op, gmax, energy, traces[-1].eps_E)
    coeffs = ansatz.coefficients(state.ops, state.thetas)
    return AdaptResult(traces, state, exact.energy, basis, coeffs, stop)


CHECKPOINT_MAGIC = b"SVQECKP1"


def save_checkpoint(path, state: AdaptState) -> None:
    """Binary: magic, <Q reference occupation, <I n_qubits, <I layers, then <4iD per layer."""
    ref = state.reference
    buf = bytearray(CHECKPOINT_MAGIC)
    buf += struct.pack("<QII", ref.occupation, ref.n_qubits, len(state.ops))
    for op, th in zip(state.ops, state.thetas):
        buf += struct.pack("<4id", *op, th)
    Path(path).write_bytes(bytes(buf))


def load_checkpoint(path) -> AdaptState:
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ConfigurationError(f"{path}: not a checkpoint file")
    off = len(CHECKPOINT_MAGIC)
    occ, n, count = struct.unpack_from("<QII", data, off)
    off += struct.calcsize("<QII")
    rec = struct.calcsize("<4id")
    if len(data) != off + count * rec:
        raise ConfigurationError(f"{path}: truncated checkpoint")
    ops, thetas = [], []
    for k in range(count):
        *op, th = struct.unpack_from("<4id", data, off + k * rec)
        ops.append(tuple(op))
        thetas.append(th)
    return AdaptState(SlaterDet(occ, n), ops, thetas)


def reference_energy(h: MSchemeHamiltonian, reference: SlaterDet) -> float:
    return diagonal_energy(h, reference)
