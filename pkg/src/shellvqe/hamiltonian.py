"""Shell-model interactions: file parsing, J-coupled to m-scheme decoupling.

The effective Hamiltonian is

    H = sum_i e_i n_i + 1/4 sum_{ijkl} vbar_ijkl a+_i a+_j a_l a_k

with antisymmetrized m-scheme matrix elements ``vbar``. The m-scheme
elements are stored canonically as ``(i, j, k, l)`` with ``i < j`` and
``k < l``, both orientations ``(ij, kl)`` and ``(kl, ij)`` present.

Interaction file format (UTF-8, ``#`` starts a comment)::

    ORB n l 2j            # file-local orbital numbering 1, 2, ... in order
    SPE orb e             # single-particle energy (MeV) of orbital ``orb``
    TBME a b c d J T V    # <ab; JT | V | cd; JT> in MeV

Two-body elements are normalized and antisymmetrized by default; pass
``normalized=False`` for files listing elements between unnormalized
pair states (those differ by sqrt((1+d_ab)(1+d_cd))).
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, sqrt
from pathlib import Path

import numpy as np

from .errors import InteractionParseError, InteractionValidationError
from .valence import Orbital, SlaterDet, ValenceSpace

DROP_TOL = 1e-12


@lru_cache(maxsize=None)
def clebsch_gordan(j1_2: int, m1_2: int, j2_2: int, m2_2: int, J2: int, M2: int) -> float:
    """Condon-Shortley Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M>.

    All arguments are doubled so half-integers stay integral.
    """
    for j, m in ((j1_2, m1_2), (j2_2, m2_2), (J2, M2)):
        if j < 0 or (j - m) % 2:
            raise ValueError(f"2j={j} and 2m={m} must be non-negative with equal parity")
    for j, m in ((j1_2, m1_2), (j2_2, m2_2)):
        if abs(m) > j:
            raise ValueError(f"|2m|={abs(m)} exceeds 2j={j}")
    if (j1_2 + j2_2 + J2) % 2:
        raise ValueError("2j1 + 2j2 + 2J must be even")
    if m1_2 + m2_2 != M2 or abs(M2) > J2 or not abs(j1_2 - j2_2) <= J2 <= j1_2 + j2_2:
        return 0.0

    f = factorial
    a = (J2 + j1_2 - j2_2) // 2
    b = (J2 - j1_2 + j2_2) // 2
    c = (j1_2 + j2_2 - J2) // 2
    pref = (J2 + 1) * f(a) * f(b) * f(c) / f((j1_2 + j2_2 + J2) // 2 + 1)
    pref *= (
        f((J2 + M2) // 2) * f((J2 - M2) // 2)
        * f((j1_2 - m1_2) // 2) * f((j1_2 + m1_2) // 2)
        * f((j2_2 - m2_2) // 2) * f((j2_2 + m2_2) // 2)
    )
    total = 0.0
    for k in range(0, c + 1):
        d = (
            c - k,
            (j1_2 - m1_2) // 2 - k,
            (j2_2 + m2_2) // 2 - k,
            (J2 - j2_2 + m1_2) // 2 + k,
            (J2 - j1_2 - m2_2) // 2 + k,
        )
        if min(d) < 0:
            continue
        denom = f(k)
        for x in d:
            denom *= f(x)
        total += (-1) ** k / denom
    return sqrt(pref) * total


@dataclass(frozen=True)
class CoupledTBME:
    """J-coupled two-body element; a..d index ``space.orbitals``."""

    a: int
    b: int
    c: int
    d: int
    J: int
    T: int
    V: float


@dataclass
class MSchemeHamiltonian:
    space: ValenceSpace
    spe: np.ndarray
    tbme: dict[tuple[int, int, int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        self.spe = np.asarray(self.spe, dtype=float)
        by_kl = defaultdict(list)
        for (i, j, k, l), v in self.tbme.items():
            by_kl[(k, l)].append((i, j, v))
        self._by_kl = dict(by_kl)

    @property
    def n_qubits(self) -> int:
        return self.space.n_qubits

    def v(self, i: int, j: int, k: int, l: int) -> float:
        """Antisymmetrized element for any index order."""
        if i == j or k == l:
            return 0.0
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -sign
        if k > l:
            k, l, sign = l, k, -sign
        return sign * self.tbme.get((i, j, k, l), 0.0)

    def transitions_from(self, k: int, l: int):
        """(i, j, vbar) for every stored element annihilating the pair k < l."""
        return self._by_kl.get((k, l), ())


def _pair_phase(ja2: int, jb2: int, J: int, T: int) -> int:
    # |ba; JT> = (-1)^(ja + jb - J - T) |ab; JT>
    return -1 if ((ja2 + jb2) // 2 - J - T) % 2 else 1


def allowed_channels(oa: Orbital, ob: Orbital, same: bool):
    """(J, T) channels of a normalized antisymmetric two-nucleon pair state."""
    for J in range(abs(oa.j2 - ob.j2) // 2, (oa.j2 + ob.j2) // 2 + 1):
        for T in (0, 1):
            if same and (J + T) % 2 == 0:
                continue
            yield J, T


def pair_channels(space: ValenceSpace):
    """Coupled-channel overlaps <ab; JT | a+_i a+_j |0> for every pair i < j.

    Returns ``{(i, j): {(a, b, J, T): amplitude}}`` with ``a <= b`` orbital
    indices of the canonical coupled state.
    """
    st = space.states
    idx = {o: n for n, o in enumerate(space.orbitals)}
    out = {}
    for i, j in itertools.combinations(range(len(st)), 2):
        si, sj = st[i], st[j]
        oi, oj = idx[si.orbital], idx[sj.orbital]
        a, b = min(oi, oj), max(oi, oj)
        oa, ob = space.orbitals[a], space.orbitals[b]
        M2 = si.m2 + sj.m2
        Tz2 = si.tz2 + sj.tz2
        norm = 1 / sqrt(2) if a == b else 1.0
        chans = {}
        for J, T in allowed_channels(oa, ob, a == b):
            if abs(M2) > 2 * J or abs(Tz2) > 2 * T:
                continue
            amp = 0.0
            # <ab; JT| a+_x a+_y |0> picks x in a, y in b; the swapped
            # assignment enters with the fermionic sign.
            for x, y, sign in ((si, sj, 1.0), (sj, si, -1.0)):
                if idx[x.orbital] == a and idx[y.orbital] == b:
                    amp += sign * (
                        clebsch_gordan(oa.j2, x.m2, ob.j2, y.m2, 2 * J, M2)
                        * clebsch_gordan(1, x.tz2, 1, y.tz2, 2 * T, Tz2)
                    )
            amp *= norm
            if abs(amp) > DROP_TOL:
                chans[(a, b, J, T)] = amp
        out[(i, j)] = chans
    return out


def parse_interaction(path, space: ValenceSpace):
    """Read an interaction file.

    Returns ``(spe, elements)``: a list of single-particle energies aligned
    with ``space.orbitals`` (unlisted orbitals get 0) and the list of
    :class:`CoupledTBME` with indices into ``space.orbitals``.
    """
    path = Path(path)
    local: list[int] = []
    spe = [0.0] * len(space.orbitals)
    elements = []

    def orb(token: str, lineno: int) -> int:
        try:
            k = int(token)
        except ValueError:
            raise InteractionParseError(f"orbital index {token!r} is not an integer", lineno)
        if not 1 <= k <= len(local):
            raise InteractionValidationError(f"line {lineno}: orbital {k} was not declared by an ORB line")
        return local[k - 1]

    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *tok = line.split()
        key = key.upper()
        try:
            if key == "ORB":
                if len(tok) != 3:
                    raise InteractionParseError("ORB needs 'n l 2j'", lineno)
                try:
                    o = Orbital(*(int(t) for t in tok))
                except ValueError as exc:
                    raise InteractionParseError(str(exc), lineno)
                if o not in space.orbitals:
                    raise InteractionValidationError(
                        f"line {lineno}: orbital {o.label} is not in the {space.name} space"
                    )
                local.append(space.orbitals.index(o))
            elif key == "SPE":
                if len(tok) != 2:
                    raise InteractionParseError("SPE needs 'orb e'", lineno)
                spe[orb(tok[0], lineno)] = float(tok[1])
            elif key == "TBME":
                if len(tok) != 7:
                    raise InteractionParseError("TBME needs 'a b c d J T V'", lineno)
                a, b, c, d = (orb(t, lineno) for t in tok[:4])
                J, T = int(tok[4]), int(tok[5])
                elements.append(CoupledTBME(a, b, c, d, J, T, float(tok[6])))
            else:
                raise InteractionParseError(f"unknown record {key!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, (InteractionParseError, InteractionValidationError)):
                raise
            raise InteractionParseError(str(exc), lineno) from None
    return spe, elements


def _canonical_elements(coupled, space: ValenceSpace, normalized: bool):
    orbs = space.orbitals
    table: dict[tuple, float] = {}
    for e in coupled:
        a, b, c, d = e.a, e.b, e.c, e.d
        for x, y in ((a, b), (c, d)):
            ox, oy = orbs[x], orbs[y]
            if not abs(ox.j2 - oy.j2) <= 2 * e.J <= ox.j2 + oy.j2:
                raise InteractionValidationError(f"J={e.J} violates the triangle rule for {e}")
        if e.T not in (0, 1):
            raise InteractionValidationError(f"isospin T={e.T} must be 0 or 1")
        v = e.V
        if (a == b or c == d) and (e.J + e.T) % 2 == 0:
            if abs(v) > DROP_TOL:
                raise InteractionValidationError(f"{e}: identical-orbital pair needs J+T odd")
            continue
        if not normalized:
            v /= sqrt((1 + (a == b)) * (1 + (c == d)))
        if a > b:
            a, b = b, a
            v *= _pair_phase(orbs[a].j2, orbs[b].j2, e.J, e.T)
        if c > d:
            c, d = d, c
            v *= _pair_phase(orbs[c].j2, orbs[d].j2, e.J, e.T)
        if (a, b) > (c, d):
            a, b, c, d = c, d, a, b
        key = (a, b, c, d, e.J, e.T)
        if key in table and abs(table[key] - v) > 1e-9:
            raise InteractionValidationError(f"conflicting duplicate element {key}")
        table[key] = v
    return table


def decouple_to_mscheme(spe, coupled, space: ValenceSpace, normalized: bool = True) -> MSchemeHamiltonian:
    """Expand J-coupled elements into antisymmetrized m-scheme ``vbar``."""
    spe = list(spe)
    if len(spe) != len(space.orbitals):
        raise InteractionValidationError("need one single-particle energy per orbital")
    orb_idx = {o: n for n, o in enumerate(space.orbitals)}
    eps = np.array([spe[orb_idx[s.orbital]] for s in space.states], dtype=float)

    table = _canonical_elements(coupled, space, normalized)
    if not table:
        return MSchemeHamiltonian(space, eps, {})

    def V(ab, cd, J, T):
        if ab <= cd:
            return table.get((*ab, *cd, J, T), 0.0)
        return table.get((*cd, *ab, J, T), 0.0)

    channels = pair_channels(space)
    blocks = defaultdict(list)
    st = space.states
    for (i, j), ch in channels.items():
        if ch:
            blocks[(st[i].m2 + st[j].m2, st[i].tz2 + st[j].tz2)].append((i, j))

    tbme = {}
    for pairs in blocks.values():
        for p1, p2 in itertools.combinations_with_replacement(pairs, 2):
            c1, c2 = channels[p1], channels[p2]
            total = 0.0
            for (a, b, J, T), amp1 in c1.items():
                for (c, d, J2, T2), amp2 in c2.items():
                    if J2 == J and T2 == T:
                        total += amp1 * amp2 * V((a, b), (c, d), J, T)
            if abs(total) >= DROP_TOL:
                tbme[(*p1, *p2)] = total
                tbme[(*p2, *p1)] = total
    return MSchemeHamiltonian(space, eps, tbme)


def load_hamiltonian(path, space: ValenceSpace, normalized: bool = True) -> MSchemeHamiltonian:
    spe, coupled = parse_interaction(path, space)
    return decouple_to_mscheme(spe, coupled, space, normalized=normalized)


def diagonal_energy(h: MSchemeHamiltonian, det: SlaterDet) -> float:
    """<det|H|det> = sum of occupied e_i plus vbar_ijij over occupied pairs."""
    if det.n_qubits != h.n_qubits:
        raise ValueError("determinant and Hamiltonian live on different registers")
    occ = det.occupied
    energy = float(sum(h.spe[i] for i in occ))
    for i, j in itertools.combinations(occ, 2):
        energy += h.tbme.get((i, j, i, j), 0.0)
    return energy


def lowest_reference(h: MSchemeHamiltonian, basis) -> SlaterDet:
    """Lowest diagonal-energy determinant; ties go to the smallest bitstring."""
    basis = list(basis)
    if not basis:
        raise ValueError("empty basis")
    return min(basis, key=lambda d: (round(diagonal_energy(h, d), 10), d.occupation))


def pairing_interaction(space: ValenceSpace, strength: float = 1.0, spe=None):
    """Constant-strength J=0, T=1 pairing force between all orbital pairs.

    Matrix elements <aa; 0 1|V|bb; 0 1> = -G sqrt((2ja+1)(2jb+1)) / 2.
    """
    orbs = space.orbitals
    spe = [0.0] * len(orbs) if spe is None else list(spe)
    out = []
    for a, b in itertools.combinations_with_replacement(range(len(orbs)), 2):
        v = -strength * sqrt((orbs[a].j2 + 1) * (orbs[b].j2 + 1)) / 2
        out.append(CoupledTBME(a, a, b, b, 0, 1, v))
    return spe, out


def random_interaction(space: ValenceSpace, rng, scale: float = 1.0, spe_spread: float = 1.0):
    """Random rotationally invariant, isospin-conserving interaction.

    Every allowed (ab, cd, J, T) channel gets a normal(0, scale) value.
    Negative-mean shift on diagonal channels keeps the spectrum bound-like.
    """
    orbs = space.orbitals
    spe = list(np.sort(rng.uniform(0.0, spe_spread, len(orbs))))
    pairs = list(itertools.combinations_with_replacement(range(len(orbs)), 2))
    out = []
    for n1, (a, b) in enumerate(pairs):
        for c, d in pairs[n1:]:
            for J, T in allowed_channels(orbs[a], orbs[b], a == b):
                if (J, T) not in set(allowed_channels(orbs[c], orbs[d], c == d)):
                    continue
                v = rng.normal(0.0, scale)
                if (a, b) == (c, d):
                    v -= scale
                out.append(CoupledTBME(a, b, c, d, J, T, float(v)))
    return spe, out


def write_interaction(path, space: ValenceSpace, spe, coupled, header: str = "") -> None:
    """Write ``spe`` and ``coupled`` in the plain-text interaction format."""
    lines = [f"# {row}" for row in header.splitlines()]
    for o in space.orbitals:
        lines.append(f"ORB {o.n} {o.l} {o.j2}")
    for k, e in enumerate(spe, 1):
        lines.append(f"SPE {k} {e:.6f}")
    for e in coupled:
        lines.append(f"TBME {e.a + 1} {e.b + 1} {e.c + 1} {e.d + 1} {e.J} {e.T} {e.V:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
