import itertools
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import space
from oracles import brute_force_nsd, shell_states
from shellvqe.errors import ConfigurationError
from shellvqe.valence import (
    NEUTRON,
    PROTON,
    SlaterDet,
    build_valence_space,
    default_species,
    dim_mb,
    enumerate_m_basis,
    load_orbital_file,
    parse_nucleus,
)

J2S = {"p": [3, 1], "sd": [5, 1, 3], "pf": [7, 3, 5, 1]}


@pytest.mark.parametrize("shell,species,n", [("p", "neutrons", 6), ("p", "both", 12), ("sd", "both", 24), ("pf", "protons", 20)])
def test_qubit_counts(shell, species, n):
    assert build_valence_space(shell, species).n_qubits == n


def test_qubit_layout_neutrons_first_m_ascending():
    s = space("p")
    assert [(st.m2, st.tz2) for st in s.states] == shell_states(J2S["p"], True)
    assert s.qubits_of(NEUTRON) == tuple(range(6))
    assert s.qubits_of(PROTON) == tuple(range(6, 12))
    assert [st.qubit for st in s.states] == list(range(12))


def test_slater_det_bitstring_roundtrip():
    d = SlaterDet.from_bitstring("100100")
    assert d.occupied == (0, 3)
    assert d.bitstring == "100100"
    assert SlaterDet.from_occupied([0, 3], 6) == d
    assert d.n_particles == 2


def test_m2_and_tz2_of_occupation():
    s = space("p", "protons")
    d = SlaterDet.from_bitstring("100100")
    assert s.m2_of(d.occupation) == 0
    assert s.tz2_of(d.occupation) == -2


@pytest.mark.parametrize("shell,n,z,M2,expected", [("sd", 2, 0, 0, 14), ("pf", 2, 0, 0, 30), ("p", 0, 2, 0, 5), ("p", 1, 1, 0, 10)])
def test_n_sd_table_values(shell, n, z, M2, expected):
    # published N_SD values
    s = build_valence_space(shell, "both")
    assert len(enumerate_m_basis(s, n, z, M2)) == expected


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["p", "sd"]), st.integers(0, 4), st.integers(0, 3), st.integers(-4, 4))
def test_n_sd_brute_force(shell, n, z, M2):
    s = space(shell)
    if (M2 - n - z) % 2:
        M2 += 1
    want = brute_force_nsd(shell_states(J2S[shell], True), n, z, M2)
    try:
        got = len(enumerate_m_basis(s, n, z, M2))
    except ValueError:
        assert want == 0
        return
    assert got == want


@settings(max_examples=20, deadline=None)
@given(st.sampled_from(["p", "sd", "pf"]), st.integers(0, 20), st.integers(0, 20))
def test_dim_mb_counts_determinants(shell, n, z):
    s = space(shell)
    d = s.dim_sp
    if n > d or z > d:
        with pytest.raises(ValueError):
            dim_mb(s, n, z)
        return
    assert dim_mb(s, n, z) == comb(d, n) * comb(d, z)


def test_dim_mb_small_exhaustive():
    s = space("p")
    for n, z in itertools.product(range(7), repeat=2):
        brute = sum(1 for occ in itertools.combinations(range(12), n + z) if sum(q < 6 for q in occ) == n)
        assert dim_mb(s, n, z) == brute


def test_empty_nucleus_has_one_determinant():
    assert dim_mb(space("sd"), 0, 0) == 1
    assert len(enumerate_m_basis(space("sd"), 0, 0, 0)) == 1


def test_basis_is_sorted_and_conserves_m():
    s = space("p")
    basis = enumerate_m_basis(s, 2, 1, 1)
    occs = [d.occupation for d in basis]
    assert occs == sorted(occs)
    assert all(s.m2_of(o) == 1 for o in occs)


def test_errors():
    with pytest.raises(ConfigurationError):
        build_valence_space("fp")
    with pytest.raises(ValueError):
        dim_mb(space("p"), 7, 0)
    with pytest.raises(ConfigurationError):
        enumerate_m_basis(space("p", "neutrons"), 1, 1, 0)
    with pytest.raises(ValueError):
        enumerate_m_basis(space("p", "neutrons"), 2, 0, 10)


def test_custom_orbital_file(tmp_path):
    f = tmp_path / "f7.orb"
    f.write_text("# single j shell\n0 3 7\n")
    s = load_orbital_file(f, "neutrons")
    assert s.n_qubits == 8
    bad = tmp_path / "bad.orb"
    bad.write_text("0 3 9\n")
    with pytest.raises(ConfigurationError):
        load_orbital_file(bad)


@pytest.mark.parametrize("label,expected", [("18O", ("sd", 2, 0)), ("Be6", ("p", 0, 2)), ("42Ca", ("pf", 2, 0)), ("20Ne", ("sd", 2, 2))])
def test_parse_nucleus(label, expected):
    assert parse_nucleus(label) == expected


def test_parse_nucleus_rejects():
    with pytest.raises(ConfigurationError):
        parse_nucleus("Xx12")
    with pytest.raises(ConfigurationError):
        parse_nucleus("24Mg", "pf")


def test_default_species():
    assert default_species(2, 0) == "neutrons"
    assert default_species(0, 2) == "protons"
    assert default_species(1, 1) == "both"


# published N_SD values, at the lowest |M| (M2 = A mod 2)
PUBLISHED_NSD = [
    ("p", 0, 2, 5), ("p", 1, 1, 10), ("p", 4, 2, 51), ("p", 1, 4, 21),
    ("sd", 2, 0, 14), ("sd", 3, 0, 37), ("sd", 4, 0, 81), ("sd", 6, 0, 142), ("sd", 2, 2, 640),
    ("pf", 2, 0, 30), ("pf", 4, 0, 565),
]


@pytest.mark.parametrize("shell,n,z,expected", PUBLISHED_NSD)
def test_published_basis_sizes(shell, n, z, expected):
    assert len(enumerate_m_basis(build_valence_space(shell), n, z, (n + z) % 2)) == expected


def test_particle_hole_symmetry_of_basis_size():
    # 4 neutrons in 6 p-shell states are 2 holes, so (4, 2) and (2, 2) have equal N_SD
    p = build_valence_space("p")
    assert len(enumerate_m_basis(p, 2, 2, 0)) == len(enumerate_m_basis(p, 4, 2, 0)) == 51
