import itertools

import numpy as np
import pytest
import scipy.sparse.linalg as sla

from conftest import pairing_h, random_h, space
from oracles import cg_exact, fock_hamiltonian
from shellvqe.errors import InteractionParseError, InteractionValidationError
from shellvqe.fock import build_sparse_h
from shellvqe.hamiltonian import (
    CoupledTBME,
    clebsch_gordan,
    decouple_to_mscheme,
    diagonal_energy,
    load_hamiltonian,
    lowest_reference,
    pairing_interaction,
    parse_interaction,
    random_interaction,
    write_interaction,
)
from shellvqe.valence import enumerate_m_basis, load_orbital_file


def test_clebsch_gordan_matches_exact_racah():
    for j1, j2 in itertools.product(range(0, 8), range(0, 8)):
        for J in range(abs(j1 - j2), j1 + j2 + 1, 2):
            for m1 in range(-j1, j1 + 1, 2):
                for m2 in range(-j2, j2 + 1, 2):
                    for M in range(-J, J + 1, 2):
                        assert abs(clebsch_gordan(j1, m1, j2, m2, J, M) - cg_exact(j1, m1, j2, m2, J, M)) < 1e-12


def test_clebsch_gordan_known_values():
    # <1/2 1/2; 1/2 -1/2 | 0 0> = 1/sqrt(2)
    assert clebsch_gordan(1, 1, 1, -1, 0, 0) == pytest.approx(1 / np.sqrt(2))
    assert clebsch_gordan(1, -1, 1, 1, 0, 0) == pytest.approx(-1 / np.sqrt(2))
    assert clebsch_gordan(2, 2, 2, 2, 4, 4) == pytest.approx(1.0)


def test_clebsch_gordan_selection_rules():
    assert clebsch_gordan(3, 3, 3, 3, 2, 6) == 0.0  # |M| > J
    assert clebsch_gordan(3, 3, 1, 1, 0, 4) == 0.0  # triangle
    with pytest.raises(ValueError):
        clebsch_gordan(3, 5, 1, 1, 4, 6)
    with pytest.raises(ValueError):
        clebsch_gordan(3, 2, 1, 1, 4, 3)


@pytest.mark.parametrize("shell,species", [("p", "both"), ("sd", "neutrons")])
def test_mscheme_elements_are_antisymmetric_and_conserving(shell, species):
    h = random_h(shell, species, 1)
    st = h.space.states
    for (i, j, k, l), v in h.tbme.items():
        assert i < j and k < l
        assert h.v(j, i, k, l) == -v and h.v(i, j, l, k) == -v and h.v(j, i, l, k) == v
        assert h.tbme[(k, l, i, j)] == pytest.approx(v, abs=1e-12)
        assert st[i].m2 + st[j].m2 == st[k].m2 + st[l].m2
        assert st[i].tz2 + st[j].tz2 == st[k].tz2 + st[l].tz2


def _spectrum(h, n, z, M2, k=6):
    basis = enumerate_m_basis(h.space, n, z, M2)
    m = build_sparse_h(h, basis).toarray()
    return np.sort(np.linalg.eigvalsh(m))


def test_rotational_invariance_multiplets():
    # every level of the M=1 sector (J >= 1) must reappear in the M=0 sector
    h = random_h("sd", "neutrons", 2)
    e0 = _spectrum(h, 2, 0, 0)
    e2 = _spectrum(h, 2, 0, 2)
    for e in e2:
        assert np.min(np.abs(e0 - e)) < 1e-9
    assert len(e0) - len(e2) == 3  # three J=0 states of (d5/2, s1/2, d3/2)^2


def test_isospin_invariance_mirror():
    h = random_h("p", "both", 3)
    assert np.allclose(_spectrum(h, 2, 1, 1), _spectrum(h, 1, 2, 1), atol=1e-9)


def test_single_j_pairing_seniority(tmp_path):
    # two particles in j=7/2 under pairing G: J=0 at -G (2j+1)/2, the rest at 0
    f = tmp_path / "f7.orb"
    f.write_text("0 3 7\n")
    s = load_orbital_file(f, "neutrons")
    h = decouple_to_mscheme(*pairing_interaction(s, 0.5), s)
    e = _spectrum(h, 2, 0, 0)
    assert e[0] == pytest.approx(-0.5 * 4)
    assert np.allclose(e[1:], 0.0, atol=1e-12)


def test_fock_oracle_agreement():
    h = random_h("p", "neutrons", 4)
    n = h.n_qubits
    full = fock_hamiltonian(h.spe, h.tbme, n)
    basis = enumerate_m_basis(h.space, 3, 0, 1)
    idx = [d.occupation for d in basis]
    ref = full[idx][:, idx].toarray()
    assert np.abs(build_sparse_h(h, basis).toarray() - ref).max() < 1e-12


def test_diagonal_energy_is_matrix_diagonal():
    h = random_h("p", "both", 5)
    basis = enumerate_m_basis(h.space, 1, 2, 1)
    m = build_sparse_h(h, basis).toarray()
    for k, d in enumerate(basis):
        assert diagonal_energy(h, d) == pytest.approx(m[k, k].real, abs=1e-12)


def test_lowest_reference_is_minimum_diagonal():
    h = random_h("p", "both", 6)
    basis = enumerate_m_basis(h.space, 2, 2, 0)
    ref = lowest_reference(h, basis)
    assert diagonal_energy(h, ref) == pytest.approx(min(diagonal_energy(h, d) for d in basis))


def test_lowest_reference_ties_to_smallest_bitstring():
    h = pairing_h("p", "protons")
    ref = lowest_reference(h, enumerate_m_basis(h.space, 0, 2, 0))
    assert ref.bitstring == "011000"


def test_write_parse_roundtrip(tmp_path):
    s = space("sd")
    spe, co = random_interaction(s, np.random.default_rng(0))
    path = tmp_path / "x.int"
    write_interaction(path, s, spe, co, "round trip")
    spe2, co2 = parse_interaction(path, s)
    assert np.allclose(spe, spe2, atol=1e-6)
    assert len(co2) == len(co)
    for a, b in zip(co, co2):
        assert (a.a, a.b, a.c, a.d, a.J, a.T) == (b.a, b.b, b.c, b.d, b.J, b.T)
        assert a.V == pytest.approx(b.V, abs=1e-6)
    h = load_hamiltonian(path, s)
    assert h.n_qubits == 24


@pytest.mark.parametrize(
    "body,exc,line",
    [
        ("ORB 0 1 3\nSPE 1\n", InteractionParseError, 2),
        ("ORB 0 1 3\nTBME 1 1 1 x 0 1 1.0\n", InteractionParseError, 2),
        ("ORB 0 1 3\nFOO 1 2\n", InteractionParseError, 2),
        ("ORB 0 2 5\n", InteractionValidationError, None),
        ("ORB 0 1 3\nSPE 2 1.0\n", InteractionValidationError, None),
    ],
)
def test_parse_errors(tmp_path, body, exc, line):
    path = tmp_path / "bad.int"
    path.write_text(body)
    with pytest.raises(exc) as info:
        parse_interaction(path, space("p"))
    if line is not None:
        assert info.value.line == line


def test_pairing_elements():
    s = space("p")
    _, co = pairing_interaction(s, 2.0)
    assert all(e.J == 0 and e.T == 1 for e in co)
    v = {(e.a, e.c): e.V for e in co}
    assert v[(0, 0)] == pytest.approx(-2.0 * 4 / 2)
    assert v[(0, 1)] == pytest.approx(-2.0 * np.sqrt(8) / 2)


def test_ground_energy_against_scipy():
    h = random_h("p", "both", 7)
    basis = enumerate_m_basis(h.space, 2, 2, 0)
    m = build_sparse_h(h, basis).matrix
    e = sla.eigsh(m, k=1, which="SA")[0][0]
    assert e == pytest.approx(np.linalg.eigvalsh(m.toarray())[0], abs=1e-9)
