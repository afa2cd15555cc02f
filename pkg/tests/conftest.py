import sys
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shellvqe.hamiltonian import decouple_to_mscheme, pairing_interaction, random_interaction
from shellvqe.valence import build_valence_space


@lru_cache(maxsize=None)
def space(shell: str, species: str = "both"):
    return build_valence_space(shell, species)


@lru_cache(maxsize=None)
def random_h(shell: str, species: str, seed: int):
    s = space(shell, species)
    return decouple_to_mscheme(*random_interaction(s, np.random.default_rng(seed)), s)


@lru_cache(maxsize=None)
def pairing_h(shell: str, species: str):
    s = space(shell, species)
    spe = [float(k) for k in range(len(s.orbitals))]
    return decouple_to_mscheme(*pairing_interaction(s, 1.0, spe), s)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; call with (number, ok, detail); ok=None means skipped."""

    def report(number: int, ok: bool | None, detail: str):
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        line = f"criterion {number:>2}: {status}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])
