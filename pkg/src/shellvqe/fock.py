"""Circuit-free backend: sparse operators in the m-scheme determinant basis.

Fermionic signs come from applying ladder operators bit by bit; mode ``p``
picks up ``(-1)`` per occupied mode with a smaller index (the same ordering
the Jordan-Wigner strings encode).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from .errors import SolverError
from .hamiltonian import MSchemeHamiltonian
from .valence import SlaterDet

DENSE_LIMIT = 2000


def apply_ladder(occ: int, n_qubits: int, ops) -> tuple[int, int] | None:
    """Apply ``ops`` (rightmost first) to determinant ``occ``.

    ``ops`` is a sequence of ``(mode, create)`` pairs written left to right
    as in the operator product. Returns ``(sign, new_occ)`` or ``None`` when
    the state is annihilated.
    """
    sign = 1
    for p, create in reversed(ops):
        bit = 1 << (n_qubits - 1 - p)
        if bool(occ & bit) == create:
            return None
        if (occ >> (n_qubits - p)).bit_count() & 1:
            sign = -sign
        occ ^= bit
    return sign, occ


@dataclass
class SparseOperator:
    """Operator restricted to a determinant basis (CSR storage)."""

    matrix: sp.csr_matrix
    basis: list[SlaterDet]
    _cubic: bool | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def entries(self) -> dict[tuple[int, int], complex]:
        coo = self.matrix.tocoo()
        return {(int(r), int(c)): v for r, c, v in zip(coo.row, coo.col, coo.data)}

    def __matmul__(self, vec):
        return self.matrix @ vec

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_hermitian(self, tol: float = 0.0) -> bool:
        diff = self.matrix - self.matrix.conj().T
        return diff.count_nonzero() == 0 if tol == 0 else abs(diff).max() <= tol

    def dump(self, path) -> None:
        """Coordinate text: header ``dim nnz`` then ``row col re im`` lines."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{self.dim} {coo.nnz}"]
        for k in order:
            v = complex(coo.data[k])
            lines.append(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _index(basis) -> dict[int, int]:
    return {d.occupation: k for k, d in enumerate(basis)}


def build_sparse_h(h: MSchemeHamiltonian, basis) -> SparseOperator:
    """H = sum e_i n_i + sum_{i<j, k<l} vbar_ijkl a+_i a+_j a_l a_k on ``basis``."""
    basis = list(basis)
    n = h.n_qubits
    index = _index(basis)
    rows, cols, vals = [], [], []
    for col, det in enumerate(basis):
        occ = det.occupation
        occupied = det.occupied
        diag = float(sum(h.spe[i] for i in occupied))
        for a, k in enumerate(occupied):
            for l in occupied[a + 1:]:
                for i, j, v in h.transitions_from(k, l):
                    if (i, j) == (k, l):
                        diag += v
                        continue
                    res = apply_ladder(occ, n, ((i, True), (j, True), (l, False), (k, False)))
                    if res is None:
                        continue
                    row = index.get(res[1])
                    if row is not None:
                        rows.append(row)
                        cols.append(col)
                        vals.append(res[0] * v)
        rows.append(col)
        cols.append(col)
        vals.append(diag)
    dim = len(basis)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    return SparseOperator(mat, basis)


def build_sparse_pool(op: tuple[int, int, int, int], basis) -> SparseOperator:
    """T^{pq}_{rs} = i(a+_p a+_q a_r a_s - h.c.) on ``basis``."""
    basis = list(basis)
    p, q, r, s = op
    n = basis[0].n_qubits if basis else 0
    index = _index(basis)
    rows, cols, vals = [], [], []
    for col, det in enumerate(basis):
        res = apply_ladder(det.occupation, n, ((p, True), (q, True), (r, False), (s, False)))
        if res is None:
            continue
        row = index.get(res[1])
        if row is None:
            continue
        rows += [row, col]
        cols += [col, row]
        vals += [1j * res[0], -1j * res[0]]
    dim = len(basis)
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    return SparseOperator(mat, basis)


@dataclass(frozen=True)
class EigenSolution:
    energy: float
    coefficients: np.ndarray


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def lanczos(matrix, k_max: int = 200, tol: float = 1e-10, max_restarts: int = 50, v0=None) -> EigenSolution:
    """Lowest eigenpair by Lanczos with full reorthogonalization.

    Restarts from the current Ritz vector when the Krylov space hits
    ``k_max`` or breaks down.
    """
    dim = matrix.shape[0]
    dtype = np.result_type(matrix.dtype, np.float64)
    if v0 is None:
        v0 = np.random.default_rng(0).standard_normal(dim)
    v = np.asarray(v0, dtype=dtype)
    v = v / np.linalg.norm(v)
    k_max = min(k_max, dim)
    energy = np.inf
    for _ in range(max_restarts):
        basis = np.zeros((k_max, dim), dtype=dtype)
        alpha, beta = [], []
        basis[0] = v
        w_prev = None
        m = 0
        for m in range(k_max):
            w = matrix @ basis[m]
            a = np.vdot(basis[m], w).real
            alpha.append(a)
            w = w - a * basis[m]
            if w_prev is not None:
                w = w - beta[-1] * w_prev
            # full reorthogonalization, twice for stability
            for _ in range(2):
                w -= basis[: m + 1].T @ (basis[: m + 1].conj() @ w)
            b = np.linalg.norm(w)
            if m + 1 == k_max or b < 1e-14:
                break
            beta.append(b)
            w_prev = basis[m]
            basis[m + 1] = w / b
        size = len(alpha)
        evals, evecs = sla.eigh_tridiagonal(np.array(alpha), np.array(beta[: size - 1]))
        energy = evals[0]
        ritz = basis[:size].T @ evecs[:, 0]
        ritz /= np.linalg.norm(ritz)
        resid = np.linalg.norm(matrix @ ritz - energy * ritz)
        if resid <= tol * max(1.0, abs(energy)):
            return EigenSolution(float(energy), _fix_phase(ritz))
        v = ritz
    raise SolverError(f"Lanczos did not converge after {max_restarts} restarts (E={energy})")


def ground_state(opr, dense_limit: int = DENSE_LIMIT) -> EigenSolution:
    """Lowest eigenpair: dense ``eigh`` up to ``dense_limit``, Lanczos above."""
    mat = opr.matrix if isinstance(opr, SparseOperator) else opr
    dim = mat.shape[0]
    if dim == 0:
        raise ValueError("empty operator")
    if dim <= dense_limit:
        dense = mat.toarray() if sp.issparse(mat) else np.asarray(mat)
        evals, evecs = np.linalg.eigh(dense)
        return EigenSolution(float(evals[0]), _fix_phase(evecs[:, 0]))
    return lanczos(sp.csr_matrix(mat))


def _is_cubic(opr: SparseOperator) -> bool:
    if opr._cubic is None:
        a = opr.matrix
        diff = a @ (a @ a) - a
        opr._cubic = diff.nnz == 0 or abs(diff).max() < 1e-12
    return opr._cubic


def apply_exp_pool(opr: SparseOperator, theta: float, state: np.ndarray) -> np.ndarray:
    """exp(i theta A) state.

    Uses 1 + iA sin(theta) + A^2 (cos(theta) - 1) when A^3 = A, which holds
    for every two-body excitation in a determinant basis; falls back to
    ``expm_multiply`` otherwise.
    """
    state = np.asarray(state, dtype=complex)
    if theta == 0:
        return state.copy()
    a = opr.matrix
    if _is_cubic(opr):
        av = a @ state
        return state + 1j * np.sin(theta) * av + (np.cos(theta) - 1) * (a @ av)
    return expm_multiply(1j * theta * a, state)


def embed(vec: np.ndarray, basis, n_qubits: int) -> np.ndarray:
    """Coefficient vector over ``basis`` as a full ``2**n`` statevector."""
    out = np.zeros(1 << n_qubits, dtype=complex)
    out[[d.occupation for d in basis]] = vec
    return out


def restrict(state: np.ndarray, basis) -> np.ndarray:
    """Amplitudes of a full statevector on the determinants of ``basis``."""
    return np.asarray(state)[[d.occupation for d in basis]]
