import math

import numpy as np
import pytest

from groverns.core import (
    DensityMatrix,
    GroverInstance,
    Statevector,
    apply_grover,
    apply_grover_dm,
    apply_local_unitary,
    basis_state,
    check_qubits,
    fidelity_with_basis,
    grover_conj,
    grover_left,
    grover_vec,
    max_qubits,
    overlap,
    uniform_state,
)
from groverns.errors import ShapeError, SiteIndexError, SizeError, UnitaryError
from groverns.noise import HADAMARD, SIGMA_X, SIGMA_Y
from oracles import chi_matrix, grover_matrix


def random_state(rng, N):
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    return v / np.linalg.norm(v)


def random_density(rng, N):
    a = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_grover_vec_matches_dense(rng, n):
    for w in range(2 ** n):
        v = random_state(rng, 2 ** n)
        assert np.abs(grover_vec(v, w) - grover_matrix(n, w) @ v).max() < 1e-12


@pytest.mark.parametrize("n", [2, 4])
def test_grover_conj_matches_dense(rng, n):
    w = int(rng.integers(2 ** n))
    rho = random_density(rng, 2 ** n)
    G = grover_matrix(n, w)
    assert np.abs(grover_conj(rho, w) - G @ rho @ G.T).max() < 1e-12


def test_grover_is_unitary_and_preserves_norm(rng):
    v = Statevector(6, random_state(rng, 64))
    out = apply_grover(v, GroverInstance(6, 17))
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


def test_one_grover_step_solves_n2():
    out = apply_grover(uniform_state(2), GroverInstance(2, 3))
    assert abs(abs(out.amplitudes[3]) ** 2 - 1) < 1e-12


def test_noiseless_peak_n5():
    v = uniform_state(5)
    inst = GroverInstance(5, 0)
    probs = [abs(v.amplitudes[0]) ** 2]
    for _ in range(10):
        v = apply_grover(v, inst)
        probs.append(abs(v.amplitudes[0]) ** 2)
    assert int(np.argmax(probs)) == 4
    assert abs(probs[4] - math.sin(9 * math.asin(1 / math.sqrt(32))) ** 2) < 1e-12


@pytest.mark.parametrize("sites", [(0,), (2,), (0, 3), (1, 2, 3), (0, 1, 2, 3)])
@pytest.mark.parametrize("u", [SIGMA_X, SIGMA_Y, HADAMARD])
def test_local_unitary_matches_kron(rng, sites, u):
    n = 4
    v = random_state(rng, 16)
    out = apply_local_unitary(Statevector(n, v), u, sites).amplitudes
    assert np.abs(out - chi_matrix(n, u, sites) @ v).max() < 1e-12

    rho = random_density(rng, 16)
    C = chi_matrix(n, u, sites)
    got = apply_local_unitary(DensityMatrix(n, rho), u, sites).entries
    assert np.abs(got - C @ rho @ C.conj().T).max() < 1e-12


def test_sigma_x_on_qubit_zero_flips_msb():
    out = apply_local_unitary(basis_state(3, 0), SIGMA_X, [0])
    assert out.amplitudes[4] == 1


def test_density_path_agrees_with_vector_path(rng):
    v = Statevector(4, random_state(rng, 16))
    inst = GroverInstance(4, 9)
    rho = apply_grover_dm(v.to_density(), inst)
    g = apply_grover(v, inst)
    assert abs(fidelity_with_basis(rho, 9) - abs(g.amplitudes[9]) ** 2) < 1e-12
    assert abs(rho.trace - 1) < 1e-12


def test_overlap_and_fidelity():
    assert overlap(basis_state(2, 1), basis_state(2, 1)) == 1
    assert overlap(uniform_state(2), basis_state(2, 0)) == pytest.approx(0.5)
    assert fidelity_with_basis(uniform_state(3).to_density(), 5) == pytest.approx(1 / 8)


def test_validation_errors():
    with pytest.raises(ShapeError):
        Statevector(2, np.ones(4))
    with pytest.raises(ShapeError):
        Statevector(2, np.ones(3) / math.sqrt(3))
    with pytest.raises(ShapeError):
        DensityMatrix(1, np.array([[1, 1], [0, 0]]))
    with pytest.raises(SiteIndexError):
        GroverInstance(3, 8)
    with pytest.raises(SiteIndexError):
        apply_local_unitary(uniform_state(3), SIGMA_X, [3])
    with pytest.raises(SiteIndexError):
        apply_local_unitary(uniform_state(3), SIGMA_X, [1, 1])
    with pytest.raises(UnitaryError):
        apply_local_unitary(uniform_state(3), np.ones((2, 2)), [0])
    with pytest.raises(ShapeError):
        apply_grover(uniform_state(3), GroverInstance(4))


def test_qubit_cap(monkeypatch):
    monkeypatch.setenv("GROVERNS_MAX_QUBITS", "6")
    assert max_qubits() == 6
    with pytest.raises(SizeError):
        check_qubits(7, max_qubits())
    monkeypatch.delenv("GROVERNS_MAX_QUBITS")
    assert max_qubits() == 14


def test_states_are_read_only():
    v = uniform_state(2)
    with pytest.raises(ValueError):
        v.amplitudes[0] = 1


@pytest.mark.parametrize("n", range(2, 11))
def test_grover_unitarity_many_vectors(rng, n):
    N = 2 ** n
    V = rng.standard_normal((N, 1000)) + 1j * rng.standard_normal((N, 1000))
    V /= np.linalg.norm(V, axis=0)
    out = grover_left(V, int(rng.integers(N)))
    assert np.abs(np.linalg.norm(out, axis=0) - 1).max() < 1e-12


@pytest.mark.parametrize("n", [5, 6])
def test_grover_matches_dense_all_marked(rng, n):
    V = rng.standard_normal((2 ** n, 3)) + 0j
    for w in range(2 ** n):
        assert np.abs(grover_left(V, w) - grover_matrix(n, w) @ V).max() < 1e-12


def test_disjoint_local_actions_compose(rng):
    n = 6
    v = Statevector(n, random_state(rng, 64))
    both = apply_local_unitary(v, HADAMARD, [0, 2, 5])
    split = apply_local_unitary(apply_local_unitary(v, HADAMARD, [2]), HADAMARD, [0, 5])
    assert np.abs(both.amplitudes - split.amplitudes).max() < 1e-12


@pytest.mark.parametrize("n", range(2, 11))
def test_grover_rotation_to_t100(n):
    v = uniform_state(n).amplitudes
    N = 2 ** n
    w = N - 1
    t = np.arange(101)
    ref = np.sin((2 * t + 1) * np.arcsin(1 / math.sqrt(N))) ** 2
    probs = [abs(v[w]) ** 2]
    for _ in range(100):
        v = grover_vec(v, w)
        probs.append(abs(v[w]) ** 2)
    assert np.abs(np.array(probs) - ref).max() < 1e-10
