"""Pauli-string algebra and Jordan-Wigner images of fermionic operators.

A Pauli string is stored as a pair of bitmasks ``(x, z)`` in the package
qubit convention (qubit ``q`` is bit ``n - 1 - q``). Letter per qubit:
``I=(0,0)``, ``X=(1,0)``, ``Z=(0,1)``, ``Y=(1,1)``. The coefficient
multiplies the literal letter product, so a real-coefficient sum is
Hermitian.

Jordan-Wigner convention: ``a+_i = (prod_{k<i} Z_k) sigma^-_i`` with
``sigma^- = |1><0| = (X - iY)/2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

PRUNE_TOL = 1e-14

_I_POW = (1, 1j, -1, -1j)
_LETTERS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


def _popcount(v: int) -> int:
    return v.bit_count()


def string_product(x1: int, z1: int, x2: int, z2: int):
    """Product of two letter strings: returns (phase, x, z)."""
    x3, z3 = x1 ^ x2, z1 ^ z2
    k = _popcount(x1 & z1) + _popcount(x2 & z2) - _popcount(x3 & z3) + 2 * _popcount(z1 & x2)
    return _I_POW[k % 4], x3, z3


def anticommute(x1: int, z1: int, x2: int, z2: int) -> bool:
    return bool((_popcount(x1 & z2) + _popcount(z1 & x2)) & 1)


@dataclass(frozen=True)
class PauliTerm:
    coeff: complex
    x: int
    z: int
    n_qubits: int

    @property
    def axes(self) -> str:
        n = self.n_qubits
        out = []
        for q in range(n):
            bit = n - 1 - q
            out.append("IXZY"[(self.x >> bit & 1) | (self.z >> bit & 1) << 1])
        return "".join(out)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)


class PauliSum:
    """Canonical sum of weighted Pauli strings on ``n_qubits`` qubits.

    Terms are merged on construction, tiny coefficients pruned, and iteration
    order is lexicographic on ``(z, x)``.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(self, n_qubits: int, terms=None):
        self.n_qubits = n_qubits
        acc: dict[tuple[int, int], complex] = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for key, c in items:
                acc[key] = acc.get(key, 0) + c
        self._terms = {
            k: complex(c) for k, c in sorted(acc.items(), key=lambda kc: (kc[0][1], kc[0][0])) if abs(c) > PRUNE_TOL
        }

    # construction -------------------------------------------------------
    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> PauliSum:
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def from_letters(cls, n_qubits: int, letters: dict[int, str], coeff: complex = 1.0) -> PauliSum:
        x = z = 0
        for q, letter in letters.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} outside register of {n_qubits}")
            bx, bz = _LETTERS[letter.upper()]
            bit = 1 << (n_qubits - 1 - q)
            x |= bit * bx
            z |= bit * bz
        return cls(n_qubits, {(x, z): coeff})

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> PauliSum:
        """From a dense label such as ``"XIZY"`` (qubit 0 first)."""
        return cls.from_letters(len(label), {q: c for q, c in enumerate(label) if c != "I"}, coeff)

    # container protocol -------------------------------------------------
    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        for (x, z), c in self._terms.items():
            yield PauliTerm(c, x, z, self.n_qubits)

    def items(self):
        return self._terms.items()

    def coeff(self, x: int, z: int) -> complex:
        return self._terms.get((x, z), 0.0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum) or other.n_qubits != self.n_qubits:
            return NotImplemented
        return (self - other).is_zero()

    def is_zero(self, tol: float = 1e-12) -> bool:
        return all(abs(c) <= tol for c in self._terms.values())

    def allclose(self, other: PauliSum, tol: float = 1e-12) -> bool:
        return (self - other).is_zero(tol)

    # arithmetic ---------------------------------------------------------
    def _check(self, other: PauliSum):
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"register mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        self._check(other)
        return PauliSum(self.n_qubits, itertools.chain(self._terms.items(), other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return PauliSum(self.n_qubits, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum(self.n_qubits, {k: c * other for k, c in self._terms.items()})
        if not isinstance(other, PauliSum):
            return NotImplemented
        self._check(other)
        out: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            for (x2, z2), c2 in other._terms.items():
                ph, x3, z3 = string_product(x1, z1, x2, z2)
                out[(x3, z3)] = out.get((x3, z3), 0) + ph * c1 * c2
        return PauliSum(self.n_qubits, out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __matmul__(self, other):
        return self * other

    def dagger(self) -> PauliSum:
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()})

    def simplify(self, tol: float = PRUNE_TOL) -> PauliSum:
        return PauliSum(self.n_qubits, {k: c for k, c in self._terms.items() if abs(c) > tol})

    def real(self) -> PauliSum:
        return PauliSum(self.n_qubits, {k: c.real for k, c in self._terms.items()})

    # predicates ---------------------------------------------------------
    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_diagonal(self) -> bool:
        return all(x == 0 for x, _ in self._terms)

    def support(self) -> int:
        mask = 0
        for x, z in self._terms:
            mask |= x | z
        return mask

    def support_qubits(self) -> tuple[int, ...]:
        mask, n = self.support(), self.n_qubits
        return tuple(q for q in range(n) if mask >> (n - 1 - q) & 1)

    # dense / sparse forms ----------------------------------------------
    def to_sparse(self) -> sp.csr_matrix:
        n = self.n_qubits
        dim = 1 << n
        cols = np.arange(dim, dtype=np.int64)
        by_x: dict[int, np.ndarray] = {}
        for (x, z), c in self._terms.items():
            phase = c * _I_POW[_popcount(x & z) % 4]
            signs = 1 - 2 * (np.bitwise_count(cols & z) & 1).astype(np.int8)
            if x in by_x:
                by_x[x] += phase * signs
            else:
                by_x[x] = phase * signs.astype(complex)
        if not by_x:
            return sp.csr_matrix((dim, dim), dtype=complex)
        rows = np.concatenate([cols ^ x for x in by_x])
        data = np.concatenate(list(by_x.values()))
        col_all = np.tile(cols, len(by_x))
        return sp.csr_matrix((data, (rows, col_all)), shape=(dim, dim))

    def to_dense(self) -> np.ndarray:
        if self.n_qubits > 14:
            raise ValueError("dense matrices limited to 14 qubits")
        return self.to_sparse().toarray()

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Act on a statevector (length ``2**n_qubits``)."""
        state = np.asarray(state)
        idx = np.arange(state.shape[0], dtype=np.int64)
        out = np.zeros_like(state, dtype=complex)
        for (x, z), c in self._terms.items():
            src = idx ^ x
            signs = 1 - 2 * (np.bitwise_count(src & z) & 1).astype(np.int8)
            out += (c * _I_POW[_popcount(x & z) % 4]) * signs * state[src]
        return out

    # rendering ----------------------------------------------------------
    def __str__(self) -> str:
        if not self._terms:
            return "0"
        return "\n".join(render_term(t) for t in self)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, terms={len(self)})"


def render_term(term: PauliTerm) -> str:
    """``+0.125 · X0 Z1 Y3`` style rendering."""
    c = term.coeff
    if abs(c.imag) <= 1e-15:
        num = f"{'-' if c.real < 0 else '+'}{abs(c.real):.6g}"
    elif abs(c.real) <= 1e-15:
        num = f"{'-' if c.imag < 0 else '+'}{abs(c.imag):.6g}j"
    else:
        num = f"+({c.real:.6g}{c.imag:+.6g}j)"
    ops = " ".join(f"{a}{q}" for q, a in enumerate(term.axes) if a != "I")
    return f"{num} · {ops or 'I'}"


def commutes(a: PauliSum, b: PauliSum, tol: float = 1e-12) -> bool:
    """True iff [a, b] = 0, from the anticommuting string pairs only."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("register mismatch")
    acc: dict[tuple[int, int], complex] = {}
    for (x1, z1), c1 in a.items():
        for (x2, z2), c2 in b.items():
            if anticommute(x1, z1, x2, z2):
                ph, x3, z3 = string_product(x1, z1, x2, z2)
                acc[(x3, z3)] = acc.get((x3, z3), 0) + 2 * ph * c1 * c2
    return all(abs(c) <= tol for c in acc.values())


# ---------------------------------------------------------------------------
# Jordan-Wigner images
# ---------------------------------------------------------------------------


def _check_qubits(n_qubits: int, *qubits: int):
    for q in qubits:
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit {q} outside register of {n_qubits}")


def z_string(n_qubits: int, qubits) -> PauliSum:
    return PauliSum.from_letters(n_qubits, {q: "Z" for q in qubits})


def parity_qubits(p: int, q: int, r: int, s: int) -> list[int]:
    """Qubits carrying Z in the auxiliary parity string of a double excitation."""
    lo_pq, hi_pq = sorted((p, q))
    lo_rs, hi_rs = sorted((r, s))
    first = {m for m in range(lo_pq + 1, hi_pq) if not lo_rs <= m <= hi_rs}
    second = {m for m in range(lo_rs + 1, hi_rs) if not lo_pq <= m <= hi_pq}
    return sorted(first ^ second)


def jw_creation(p: int, n_qubits: int) -> PauliSum:
    _check_qubits(n_qubits, p)
    zs = {k: "Z" for k in range(p)}
    return PauliSum.from_letters(n_qubits, {**zs, p: "X"}, 0.5) + PauliSum.from_letters(
        n_qubits, {**zs, p: "Y"}, -0.5j
    )


def jw_annihilation(p: int, n_qubits: int) -> PauliSum:
    return jw_creation(p, n_qubits).dagger()


def jw_number(p: int, n_qubits: int) -> PauliSum:
    """n_p = (1 - Z_p) / 2."""
    _check_qubits(n_qubits, p)
    return PauliSum.identity(n_qubits, 0.5) - PauliSum.from_letters(n_qubits, {p: "Z"}, 0.5)


def jw_single_hop(p: int, q: int, n_qubits: int) -> PauliSum:
    """a+_p a_q + a+_q a_p = 1/2 Z..Z (X_p X_q + Y_p Y_q)."""
    _check_qubits(n_qubits, p, q)
    if p == q:
        return 2 * jw_number(p, n_qubits)
    p, q = sorted((p, q))
    zs = {k: "Z" for k in range(p + 1, q)}
    return PauliSum.from_letters(n_qubits, {**zs, p: "X", q: "X"}, 0.5) + PauliSum.from_letters(
        n_qubits, {**zs, p: "Y", q: "Y"}, 0.5
    )


def jw_single_excitation(p: int, q: int, n_qubits: int) -> PauliSum:
    """i(a+_p a_q - a+_q a_p) = 1/2 Z..Z (Y_p X_q - X_p Y_q) for p < q."""
    _check_qubits(n_qubits, p, q)
    if p == q:
        return PauliSum(n_qubits)
    sign = 1.0
    if p > q:
        p, q, sign = q, p, -1.0
    zs = {k: "Z" for k in range(p + 1, q)}
    return PauliSum.from_letters(n_qubits, {**zs, p: "Y", q: "X"}, 0.5 * sign) + PauliSum.from_letters(
        n_qubits, {**zs, p: "X", q: "Y"}, -0.5 * sign
    )


# Letter patterns over (p, q, r, s) with the sign of each 1/8 coefficient.
_DOUBLE_HOP = (
    ("XXXX", -1), ("XXYY", 1), ("XYXY", -1), ("XYYX", -1),
    ("YYYY", -1), ("YYXX", 1), ("YXYX", -1), ("YXXY", -1),
)
# Signs follow i(a+_p a+_q a_r a_s - h.c.) under the convention above; the
# often-quoted table with -XYYY leading is the negative of this operator.
_POOL = (
    ("XYYY", 1), ("YXYY", 1), ("YYXY", -1), ("YYYX", -1),
    ("YXXX", -1), ("XYXX", -1), ("XXYX", 1), ("XXXY", 1),
)


def _eight_strings(table, p, q, r, s, n_qubits) -> PauliSum:
    zs = {m: "Z" for m in parity_qubits(p, q, r, s)}
    terms = []
    for letters, sign in table:
        lt = dict(zs)
        lt.update(zip((p, q, r, s), letters))
        (key, c), = PauliSum.from_letters(n_qubits, lt, sign / 8).items()
        terms.append((key, c))
    return PauliSum(n_qubits, terms)


def _shared_index_form(p, q, r, s):
    """Rewrite a+_p a+_q a_r a_s with one shared index as sign * a+_x a+_u a_x a_w."""
    x = ({p, q} & {r, s}).pop()
    sign = 1
    if q == x:
        u = p
        sign = -sign
    else:
        u = q
    if s == x:
        w = r
        sign = -sign
    else:
        w = s
    return sign, x, u, w


def _pair_order(p, q, r, s):
    if p == q or r == s:
        raise ValueError("creation or annihilation pair repeats an index")
    sign = 1
    if p > q:
        p, q, sign = q, p, -sign
    if r > s:
        r, s, sign = s, r, -sign
    return sign, p, q, r, s


def jw_double_hop(p: int, q: int, r: int, s: int, n_qubits: int) -> PauliSum:
    """h_pqrs = a+_p a+_q a_r a_s + h.c. as a Pauli sum.

    Repeated indices use the reduced forms h_pqpr = -n_p h_qr and
    h_pqpq = -2 n_p n_q.
    """
    _check_qubits(n_qubits, p, q, r, s)
    sign, p, q, r, s = _pair_order(p, q, r, s)
    shared = {p, q} & {r, s}
    if not shared:
        return sign * _eight_strings(_DOUBLE_HOP, p, q, r, s, n_qubits)
    if len(shared) == 2:
        return (-2 * sign) * (jw_number(p, n_qubits) * jw_number(q, n_qubits))
    s2, x, u, w = _shared_index_form(p, q, r, s)
    return (-sign * s2) * (jw_number(x, n_qubits) * jw_single_hop(u, w, n_qubits))


def jw_pool_op(p: int, q: int, r: int, s: int, n_qubits: int) -> PauliSum:
    """T^{pq}_{rs} = i(a+_p a+_q a_r a_s - h.c.) as a Pauli sum.

    Reduced forms: T^{pr}_{pq} = n_p T_qr (upper indices created) and
    T^{pq}_{pq} = 0.
    """
    _check_qubits(n_qubits, p, q, r, s)
    sign, p, q, r, s = _pair_order(p, q, r, s)
    shared = {p, q} & {r, s}
    if not shared:
        return sign * _eight_strings(_POOL, p, q, r, s, n_qubits)
    if len(shared) == 2:
        return PauliSum(n_qubits)
    s2, x, u, w = _shared_index_form(p, q, r, s)
    return (-sign * s2) * (jw_number(x, n_qubits) * jw_single_excitation(u, w, n_qubits))


def string_length(p: int, q: int, r: int, s: int) -> int:
    """Pauli-string length L = n2 + n4 - n1 - n3 + 2 over sorted indices."""
    idx = sorted((p, q, r, s))
    if len(set(idx)) != 4:
        raise ValueError("string length defined for four distinct indices")
    n1, n2, n3, n4 = idx
    return n2 + n4 - n1 - n3 + 2


def jw_hamiltonian(h) -> PauliSum:
    """Qubit image of an :class:`~shellvqe.hamiltonian.MSchemeHamiltonian`."""
    n = h.n_qubits
    terms: dict[tuple[int, int], complex] = {}

    def add(ps: PauliSum, c: float):
        for key, v in ps.items():
            terms[key] = terms.get(key, 0) + c * v

    for i, e in enumerate(h.spe):
        if e:
            add(jw_number(i, n), e)
    for (i, j, k, l), v in h.tbme.items():
        if (i, j) == (k, l):
            add(jw_number(i, n) * jw_number(j, n), v)
        elif (i, j) < (k, l):
            # a+_i a+_j a_l a_k + h.c. = -h_ijkl
            add(jw_double_hop(i, j, k, l, n), -v)
    return PauliSum(n, terms)
