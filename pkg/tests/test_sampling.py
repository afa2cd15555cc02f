import csv

import numpy as np
import pytest

from conftest import random_h, random_state, space
from shellvqe.errors import EstimatorError
from shellvqe.fock import build_sparse_h, embed, ground_state
from shellvqe.measurement import measurement_plan
from shellvqe.pauli import jw_hamiltonian
from shellvqe.qsim import expectation
from shellvqe.sampling import (
    MitigationPolicy,
    ShotPlan,
    SymmetryTargets,
    circuit_rng,
    flip_one_bit,
    inject_bitflips,
    required_circuit_budget,
    sample_energy,
    sample_outcomes,
    shots_for_precision,
    symmetry_filter,
)
from shellvqe.valence import enumerate_m_basis

N, Z, M2 = 1, 1, 0


@pytest.fixture(scope="module")
def setup():
    h = random_h("p", "both", 8)
    basis = enumerate_m_basis(h.space, N, Z, M2)
    gs = ground_state(build_sparse_h(h, basis))
    psi = embed(gs.coefficients, basis, h.n_qubits)
    return h, psi, measurement_plan(h), SymmetryTargets(h.space, N, Z, M2)


def test_analytic_limit_is_exact(setup):
    h, psi, plan, targets = setup
    exact = expectation(psi, jw_hamiltonian(h))
    for mode in ("off", "number", "number+mtz"):
        r = sample_energy(psi, ShotPlan(None, plan), MitigationPolicy.from_mode(mode), targets)
        assert r.energy == pytest.approx(exact, abs=1e-12)
        assert r.std_error == 0.0


def test_diagonal_eigenstate_has_zero_variance():
    h = random_h("p", "neutrons", 0)
    plan = measurement_plan(h)[:1]
    psi = np.zeros(64, dtype=complex)
    psi[0b110000] = 1.0
    r = sample_energy(psi, ShotPlan(50, plan, seed=3))
    assert r.std_error == 0.0
    assert r.energy == pytest.approx(plan[0].value_from_probs(np.abs(psi) ** 2))


def test_unbiased(setup):
    h, psi, plan, _ = setup
    exact = expectation(psi, jw_hamiltonian(h))
    runs = [sample_energy(psi, ShotPlan(200, plan, seed=s)) for s in range(200)]
    mean = np.mean([r.energy for r in runs])
    se = np.sqrt(np.mean([r.std_error**2 for r in runs]) / len(runs))
    assert abs(mean - exact) < 3 * se


def test_shot_noise_slope(setup):
    _, psi, plan, _ = setup
    shots = [100, 1000, 10000, 100000]
    spread = [np.std([sample_energy(psi, ShotPlan(ns, plan, seed=s)).energy for s in range(40)]) for ns in shots]
    slope = np.polyfit(np.log(shots), np.log(spread), 1)[0]
    assert abs(slope + 0.5) <= 0.1


def test_seeded_streams_are_order_independent(setup):
    _, psi, plan, _ = setup
    a = sample_energy(psi, ShotPlan(500, plan, seed=9))
    b = sample_energy(psi, ShotPlan(500, list(reversed(plan)), seed=9))
    assert a.energy == pytest.approx(b.energy, abs=1e-12)
    x = circuit_rng(9, 4).random(3)
    assert np.array_equal(x, circuit_rng(9, 4).random(3))
    assert not np.array_equal(x, circuit_rng(9, 5).random(3))


def test_inject_bitflips_limits():
    s = np.array([0b101, 0b000, 0b111])
    assert np.array_equal(inject_bitflips(s, 3, 0.0, 1), s)
    assert np.array_equal(inject_bitflips(np.array([0, 1, 1]), 1, 1.0, 1), np.array([1, 0, 0]))
    with pytest.raises(ValueError):
        inject_bitflips(s, 3, 1.5, 1)


def test_single_flips_always_discarded_on_diagonal_circuit(setup):
    h, psi, plan, targets = setup
    diag = plan[0]
    keep = symmetry_filter(diag, targets, MitigationPolicy.from_mode("number"))
    clean = sample_outcomes(psi, diag, 5000, seed=1)
    assert keep(clean).all()
    corrupted = flip_one_bit(clean, h.n_qubits, np.random.default_rng(2))
    assert not keep(corrupted).any()


def test_no_noise_no_discards(setup):
    _, psi, plan, targets = setup
    for mode in ("off", "number", "number+mtz"):
        r = sample_energy(psi, ShotPlan(300, plan, seed=4), MitigationPolicy.from_mode(mode), targets)
        assert r.discard_fraction == 0.0


def test_filter_on_rotated_circuits_is_unbiased(setup):
    # parity checks on basis-changed circuits keep every noiseless outcome
    _, psi, plan, targets = setup
    pol = MitigationPolicy.from_mode("number+mtz")
    for mc in plan[1:]:
        out = sample_outcomes(psi, mc, 400, seed=mc.circuit_id)
        assert symmetry_filter(mc, targets, pol)(out).all()


def test_noise_is_partly_removed(setup):
    h, psi, plan, targets = setup
    r = sample_energy(psi, ShotPlan(4000, plan, seed=5), MitigationPolicy.from_mode("number"), targets, bitflip_rate=0.02)
    assert 0.05 < r.discard_fraction < 0.5


def test_all_shots_discarded_raises(setup):
    h, psi, plan, _ = setup
    wrong = SymmetryTargets(h.space, 2, 0, 0)
    with pytest.raises(EstimatorError) as info:
        sample_energy(psi, ShotPlan(100, plan, seed=1), MitigationPolicy.from_mode("number"), wrong)
    assert info.value.circuit_id == 0


def test_tallies_csv(setup, tmp_path):
    h, psi, plan, targets = setup
    r = sample_energy(psi, ShotPlan(100, plan[:2], seed=1), MitigationPolicy.from_mode("number"), targets, record_tallies=True)
    path = tmp_path / "t.csv"
    r.write_tallies(path, h.n_qubits)
    rows = list(csv.DictReader(open(path)))
    assert {"circuit", "bitstring", "count", "kept"} <= set(rows[0])
    assert sum(int(x["count"]) for x in rows if x["circuit"] == "0") == 100
    assert all(len(x["bitstring"]) == 12 for x in rows)


def test_budget():
    # p shell, one species: N_tot = 13
    assert required_circuit_budget(space("p", "neutrons"), [50], 1000) == 1000 * 13 * 50
    assert required_circuit_budget(1406, [10, 20], 100) == 100 * 1406 * 30
    assert required_circuit_budget(13, [], 1000) == 13 * 1000
    with pytest.raises(ValueError):
        required_circuit_budget(0, [1], 1)


def test_shots_for_precision():
    assert shots_for_precision(0.01, 1.0) == 10000
    with pytest.raises(ValueError):
        shots_for_precision(0.0, 1.0)


def test_policy_modes():
    assert not MitigationPolicy.from_mode("off").active
    assert MitigationPolicy.from_mode("number+mtz") == MitigationPolicy(True, True, True)
    with pytest.raises(ValueError):
        MitigationPolicy.from_mode("all")
    with pytest.raises(ValueError):
        ShotPlan(0, [])
