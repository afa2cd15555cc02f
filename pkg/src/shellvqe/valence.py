"""Valence spaces, single-particle states and m-scheme Slater determinant bases.

Qubit convention used across the package: qubit ``q`` of an ``n``-qubit
register is bit ``n - 1 - q`` of an integer occupation/basis index, so a
bitstring printed with :func:`format` reads qubit 0 first (``|100100>`` is
qubits 0 and 3 occupied).
"""

from __future__ import annotations

import itertools
import re
from collections import defaultdict
from dataclasses import dataclass
from math import comb
from pathlib import Path

from .errors import ConfigurationError

NEUTRON = 1
PROTON = -1

SPECIES = ("neutrons", "protons", "both")

_L_LETTERS = "spdfghijk"

# Orbitals ordered lowest-energy first, as laid out for the qubit labels.
SHELLS: dict[str, tuple[tuple[int, int, int], ...]] = {
    "p": ((0, 1, 3), (0, 1, 1)),
    "sd": ((0, 2, 5), (1, 0, 1), (0, 2, 3)),
    "pf": ((0, 3, 7), (1, 1, 3), (0, 3, 5), (1, 1, 1)),
}


@dataclass(frozen=True, order=True)
class Orbital:
    n: int
    l: int
    j2: int

    def __post_init__(self):
        if self.n < 0 or self.l < 0:
            raise ValueError(f"invalid orbital quantum numbers n={self.n}, l={self.l}")
        if self.j2 < 1 or self.j2 not in (2 * self.l - 1, 2 * self.l + 1):
            raise ValueError(f"2j={self.j2} incompatible with l={self.l}")

    @property
    def degeneracy(self) -> int:
        return self.j2 + 1

    @property
    def label(self) -> str:
        return f"{self.n}{_L_LETTERS[self.l]}{self.j2}/2"


@dataclass(frozen=True)
class SpState:
    orbital: Orbital
    m2: int
    tz2: int
    qubit: int

    @property
    def species(self) -> str:
        return "n" if self.tz2 == NEUTRON else "p"


@dataclass(frozen=True)
class ValenceSpace:
    name: str
    species: str
    orbitals: tuple[Orbital, ...]
    states: tuple[SpState, ...]

    @property
    def n_qubits(self) -> int:
        return len(self.states)

    @property
    def dim_sp(self) -> int:
        """Single-particle dimension per species, sum of 2j+1."""
        return sum(o.degeneracy for o in self.orbitals)

    def orbital_index(self, orbital: Orbital) -> int:
        return self.orbitals.index(orbital)

    def qubits_of(self, species: int) -> tuple[int, ...]:
        return tuple(s.qubit for s in self.states if s.tz2 == species)

    def m2_of(self, occupation: int) -> int:
        return sum(s.m2 for s in self.states if occupation >> (self.n_qubits - 1 - s.qubit) & 1)

    def tz2_of(self, occupation: int) -> int:
        return sum(s.tz2 for s in self.states if occupation >> (self.n_qubits - 1 - s.qubit) & 1)

    def qubit_map(self) -> list[dict]:
        """Qubit labels as plain records, for output metadata."""
        return [
            {"qubit": s.qubit, "orbital": s.orbital.label, "m2": s.m2, "tz2": s.tz2}
            for s in self.states
        ]


@dataclass(frozen=True, order=True)
class SlaterDet:
    """Occupation bitstring over ``n_qubits`` modes (qubit 0 is the MSB)."""

    occupation: int
    n_qubits: int

    @classmethod
    def from_occupied(cls, qubits, n_qubits: int) -> SlaterDet:
        occ = 0
        for q in qubits:
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} outside register of {n_qubits}")
            occ |= 1 << (n_qubits - 1 - q)
        return cls(occ, n_qubits)

    @classmethod
    def from_bitstring(cls, bits: str) -> SlaterDet:
        bits = bits.strip()
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"not a bitstring: {bits!r}")
        return cls(int(bits, 2), len(bits))

    @property
    def occupied(self) -> tuple[int, ...]:
        n = self.n_qubits
        return tuple(q for q in range(n) if self.occupation >> (n - 1 - q) & 1)

    @property
    def n_particles(self) -> int:
        return self.occupation.bit_count()

    @property
    def bitstring(self) -> str:
        return format(self.occupation, f"0{self.n_qubits}b")

    def __str__(self) -> str:
        return f"|{self.bitstring}>"


def _species_list(species: str) -> list[int]:
    if species == "neutrons":
        return [NEUTRON]
    if species == "protons":
        return [PROTON]
    if species == "both":
        return [NEUTRON, PROTON]
    raise ConfigurationError(f"unknown species flag {species!r}; expected one of {SPECIES}")


def _assemble(name: str, orbitals: list[Orbital], species: str) -> ValenceSpace:
    states = []
    for tz2 in _species_list(species):
        for orb in orbitals:
            for m2 in range(-orb.j2, orb.j2 + 1, 2):
                states.append(SpState(orb, m2, tz2, len(states)))
    return ValenceSpace(name, species, tuple(orbitals), tuple(states))


def build_valence_space(name: str, species: str = "both") -> ValenceSpace:
    """Build one of the built-in p, sd or pf valence spaces.

    Neutron states take the low qubit indices, protons follow. Inside a
    species, orbitals keep the lowest-energy-first order of :data:`SHELLS`
    and projections run in ascending ``m``.
    """
    if name not in SHELLS:
        raise ConfigurationError(f"unknown shell {name!r}; expected one of {sorted(SHELLS)}")
    orbitals = [Orbital(*nlj) for nlj in SHELLS[name]]
    return _assemble(name, orbitals, species)


def load_orbital_file(path, species: str = "both", name: str | None = None) -> ValenceSpace:
    """Read a custom space: one ``n l 2j`` line per orbital, ``#`` comments."""
    path = Path(path)
    orbitals = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            n, l, j2 = (int(tok) for tok in line.split())
            orbitals.append(Orbital(n, l, j2))
        except ValueError as exc:
            raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
    if not orbitals:
        raise ConfigurationError(f"{path}: no orbitals defined")
    if len(set(orbitals)) != len(orbitals):
        raise ConfigurationError(f"{path}: duplicate orbital")
    return _assemble(name or path.stem, orbitals, species)


def dim_mb(space: ValenceSpace, n_ci: int, z_ci: int) -> int:
    """Number of Slater determinants, C(dim_sp, N) * C(dim_sp, Z)."""
    d = space.dim_sp
    if not (0 <= n_ci <= d and 0 <= z_ci <= d):
        raise ValueError(f"particle numbers ({n_ci}, {z_ci}) outside 0..{d}")
    return comb(d, n_ci) * comb(d, z_ci)


def _species_counts(space: ValenceSpace, n_ci: int, z_ci: int) -> dict[int, int]:
    d = space.dim_sp
    if not (0 <= n_ci <= d and 0 <= z_ci <= d):
        raise ValueError(f"particle numbers ({n_ci}, {z_ci}) outside 0..{d}")
    counts = {NEUTRON: n_ci, PROTON: z_ci}
    present = _species_list(space.species)
    for tz2, count in counts.items():
        if tz2 not in present and count:
            raise ConfigurationError(
                f"space {space.name!r} ({space.species}) has no room for "
                f"{'neutrons' if tz2 == NEUTRON else 'protons'}"
            )
    return counts


def enumerate_m_basis(space: ValenceSpace, n_ci: int, z_ci: int, M2: int) -> list[SlaterDet]:
    """All determinants with the given particle numbers and total 2M.

    Returned in ascending order of the occupation integer.
    """
    counts = _species_counts(space, n_ci, z_ci)
    n = space.n_qubits
    per_species = []
    for tz2 in _species_list(space.species):
        states = [s for s in space.states if s.tz2 == tz2]
        by_m = defaultdict(list)
        for combo in itertools.combinations(states, counts[tz2]):
            occ = 0
            for s in combo:
                occ |= 1 << (n - 1 - s.qubit)
            by_m[sum(s.m2 for s in combo)].append(occ)
        per_species.append(by_m)

    max_m2 = sum(max(by_m) for by_m in per_species)
    if abs(M2) > max_m2:
        raise ValueError(f"|M2|={abs(M2)} exceeds the attainable maximum {max_m2}")

    if len(per_species) == 1:
        occs = per_species[0].get(M2, [])
    else:
        first, second = per_species
        occs = [
            a | b
            for m_a, list_a in first.items()
            for a in list_a
            for b in second.get(M2 - m_a, [])
        ]
    return [SlaterDet(o, n) for o in sorted(occs)]


_ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn Ga Ge"
).split()

# (core Z, core N) below each shell
CORES = {"p": (2, 2), "sd": (8, 8), "pf": (20, 20)}


def parse_nucleus(label: str, shell: str | None = None) -> tuple[str, int, int]:
    """``"18O"`` or ``"O18"`` -> (shell, valence neutrons, valence protons)."""
    m = re.fullmatch(r"\s*(?:(\d+)([A-Za-z]{1,2})|([A-Za-z]{1,2})-?(\d+))\s*", label)
    if not m:
        raise ConfigurationError(f"cannot parse nucleus {label!r}")
    a_txt, sym = (m.group(1), m.group(2)) if m.group(1) else (m.group(4), m.group(3))
    sym = sym.capitalize()
    if sym not in _ELEMENTS:
        raise ConfigurationError(f"unknown element {sym!r}")
    z, a = _ELEMENTS.index(sym) + 1, int(a_txt)
    n = a - z
    candidates = [shell] if shell else list(CORES)
    for name in candidates:
        if name not in CORES:
            raise ConfigurationError(f"unknown shell {name!r}")
        cz, cn = CORES[name]
        dim = sum(j2 + 1 for _, _, j2 in SHELLS[name])
        if 0 <= z - cz <= dim and 0 <= n - cn <= dim:
            return name, n - cn, z - cz
    raise ConfigurationError(f"{label} does not fit a {shell or 'p, sd or pf'} valence space")


def default_species(n_ci: int, z_ci: int) -> str:
    """Only the species that has valence particles, both if both do."""
    if z_ci == 0 and n_ci > 0:
        return "neutrons"
    if n_ci == 0 and z_ci > 0:
        return "protons"
    return "both"
