import cmath
import math

import numpy as np
import pytest

from groverns.core import GroverInstance
from groverns.errors import ConsistencyError, DomainError, UnitaryError, UnsupportedClassification
from groverns.noise import (
    HADAMARD,
    IDENTITY,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Classification,
    NoiseLayout,
    NoiseUnitary,
    chi_permutation,
    chi_row_sum_check,
    classify_good_noise,
    flipped_index,
    materialize_chi,
    overlap_elements,
    overlap_elements_direct,
    psi_multiplicity,
    psi_q,
    random_unitary,
    two_step_probabilities,
)
from oracles import chi_matrix, grover_matrix, uniform

NAMED = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z, "i": IDENTITY, "h": HADAMARD}


@pytest.mark.parametrize("name", sorted(NAMED))
def test_named_unitaries(name):
    assert np.abs(NoiseUnitary.from_name(name).matrix - NAMED[name]).max() < 1e-15


def test_parameterization_round_trip(rng):
    for _ in range(20):
        u = random_unitary(rng)
        back = NoiseUnitary.from_matrix(u.matrix)
        assert np.abs(back.matrix - u.matrix).max() < 1e-12


def test_from_params_with_phase():
    u = NoiseUnitary.from_params({"a_re": 0, "a_im": 0, "b_re": 1, "b_im": 0, "theta": math.pi, "phi": 0.3})
    assert np.abs(u.matrix - cmath.exp(0.3j) * SIGMA_X).max() < 1e-15


def test_non_unitary_rejected():
    with pytest.raises(UnitaryError):
        NoiseUnitary(1, 1, 0.0)
    with pytest.raises(UnitaryError):
        NoiseUnitary.from_matrix(np.ones((2, 2)))


def test_layout_rules_and_mask():
    assert NoiseLayout.prefix(5, 2).sites == (0, 1)
    assert NoiseLayout.suffix(5, 2).sites == (3, 4)
    assert NoiseLayout.first_and_last(5, 3).sites == (0, 3, 4)
    assert NoiseLayout(3, (1,)).mask == 0b010
    assert NoiseLayout(4, (0, 3)).mask == 0b1001
    with pytest.raises(DomainError):
        NoiseLayout.from_rule(4, 2, "middle")
    with pytest.raises(DomainError):
        NoiseLayout.prefix(4, 5)


@pytest.mark.parametrize("name", ["x", "y", "z", "h"])
def test_materialized_chi_matches_kron(name):
    u = NoiseUnitary.from_name(name)
    lay = NoiseLayout(4, (0, 2, 3))
    assert np.abs(materialize_chi(u, lay) - chi_matrix(4, NAMED[name], lay.sites)).max() < 1e-15


@pytest.mark.parametrize("name", ["x", "y", "z", "i"])
def test_chi_permutation_fast_path(rng, name):
    u = NoiseUnitary.from_name(name)
    lay = NoiseLayout(5, (1, 4))
    perm, phases = chi_permutation(u, lay)
    v = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    assert np.abs(phases * v[perm] - chi_matrix(5, NAMED[name], lay.sites) @ v).max() < 1e-15


def test_chi_permutation_absent_for_hadamard():
    assert chi_permutation(NoiseUnitary.from_name("h"), NoiseLayout(3, (0,))) is None


@pytest.mark.parametrize("name", ["x", "y", "z", "h", "i"])
@pytest.mark.parametrize("m", [0, 1, 2, 4])
def test_row_sums(name, m):
    report = chi_row_sum_check(NoiseUnitary.from_name(name), NoiseLayout.prefix(5, m))
    assert report.ok
    assert sum(count for _, count, _ in report.by_q.values()) == 32


def test_row_sums_random(rng):
    for _ in range(5):
        assert chi_row_sum_check(random_unitary(rng), NoiseLayout(4, (0, 2))).ok


def test_psi_values():
    x = NoiseUnitary.from_name("x")
    # sigma_x rows each hold a single 1
    assert all(abs(psi_q(x, 3, q) - 1) < 1e-15 for q in range(4))
    z = NoiseUnitary.from_name("z")
    assert abs(psi_q(z, 3, 1) + 1) < 1e-15
    assert psi_multiplicity(6, 3, 1) == 24


@pytest.mark.parametrize("name,expected,invariance", [
    ("x", Classification.X_LIKE, "invariant for all m"),
    ("z", Classification.Z_LIKE, "invariant for all m"),
    ("y", Classification.Y_LIKE, "invariant for fixed parity of m"),
    ("i", Classification.IDENTITY_LIKE, "invariant for all m"),
    ("h", Classification.NOT_GOOD, "none"),
])
def test_classification(name, expected, invariance):
    res = classify_good_noise(NoiseUnitary.from_name(name))
    assert res.classification is expected
    assert res.classification.invariance == invariance


def test_classification_coefficients_x():
    res = classify_good_noise(NoiseUnitary.from_name("x"), n=3)
    assert res.M == 1
    assert res.block_dimensions == (6,)
    assert abs(res.alpha - 1) < 1e-15 and abs(res.beta - 1) < 1e-15


def test_classification_ignores_global_phase(rng):
    for name in "xyzh":
        u = NoiseUnitary.from_name(name)
        for phi in rng.uniform(0, 2 * math.pi, 3):
            assert classify_good_noise(u.with_global_phase(phi)).classification == \
                classify_good_noise(u).classification


def test_not_good_coefficients_are_python_complex():
    res = classify_good_noise(NoiseUnitary.from_name("h"))
    assert all(type(c) is complex for c in res.coefficients)


def test_random_unitaries_are_not_good(rng):
    for _ in range(10):
        assert classify_good_noise(random_unitary(rng)).classification is Classification.NOT_GOOD


def test_flipped_index():
    x = NoiseUnitary.from_name("x")
    assert flipped_index(x, NoiseLayout(3, (1,)), 0) == 2
    assert flipped_index(x, NoiseLayout(3, (0, 2)), 0b010) == 0b111
    assert flipped_index(NoiseUnitary.from_name("z"), NoiseLayout(3, (1,)), 5) == 5
    with pytest.raises(UnsupportedClassification):
        flipped_index(NoiseUnitary.from_name("h"), NoiseLayout(3, (1,)), 0)


@pytest.mark.parametrize("name", ["x", "y", "z", "h", "i"])
def test_overlap_closed_form(rng, name):
    u = NoiseUnitary.from_name(name)
    for n in (3, 4, 5):
        for m in range(n + 1):
            lay = NoiseLayout.prefix(n, m)
            w = int(rng.integers(2 ** n))
            ov = overlap_elements(u, lay, GroverInstance(n, w))
            C = chi_matrix(n, NAMED[name], lay.sites)
            s = uniform(n)
            assert abs(ov.ss - s.conj() @ C @ s) < 1e-12
            assert abs(ov.ws - (C @ s)[w]) < 1e-12
            assert abs(ov.ww - C[w, w]) < 1e-12
            assert abs(ov.sw - s.conj() @ C[:, w]) < 1e-12


def test_overlap_closed_form_random(rng):
    for _ in range(5):
        u = random_unitary(rng).with_global_phase(rng.uniform(0, 6))
        ov = overlap_elements(u, NoiseLayout(4, (1, 3)), GroverInstance(4, 6))
        direct = overlap_elements_direct(u, NoiseLayout(4, (1, 3)), 6)
        assert np.abs(ov.as_array() - direct.as_array()).max() < 1e-12


def test_overlap_layout_mismatch():
    with pytest.raises(DomainError):
        overlap_elements(NoiseUnitary.from_name("x"), NoiseLayout(3, (0,)), GroverInstance(4))


@pytest.mark.parametrize("name", ["x", "y", "z"])
@pytest.mark.parametrize("m", [1, 2, 3])
def test_two_step_probabilities(name, m):
    n, w = 4, 0
    u = NoiseUnitary.from_name(name)
    lay = NoiseLayout.prefix(n, m)
    G = grover_matrix(n, w)
    Gp = chi_matrix(n, NAMED[name], lay.sites) @ G
    s = uniform(n)
    got = two_step_probabilities(overlap_elements(u, lay, GroverInstance(n, w)), 2 ** n)
    assert abs(got.g_gp - abs((G @ Gp @ s)[w]) ** 2) < 1e-12
    assert abs(got.gp_g - abs((Gp @ G @ s)[w]) ** 2) < 1e-12
    assert abs(got.gp_gp - abs((Gp @ Gp @ s)[w]) ** 2) < 1e-12


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_two_step_sigma_y_closed_forms(m):
    # direct expressions for sigma_y noise with the marked index at 0
    N = 32
    ov = overlap_elements(NoiseUnitary.from_name("y"), NoiseLayout.prefix(5, m), GroverInstance(5, 0))
    got = two_step_probabilities(ov, N)
    sign = (-1) ** m
    assert abs(got.g_gp - abs((1 - 4 / N) ** 2 + 4 / N * sign) ** 2 / N) < 1e-12
    assert abs(got.gp_gp - abs(4 / N * (1 - 4 / N) * sign - 8 / N + 3) ** 2 / N) < 1e-12


def _traces(n, u, p, mu, t_max=30):
    from groverns.memory import MarkovNoiseParams, simulate
    return {m: simulate(GroverInstance(n), u, NoiseLayout.prefix(n, m), MarkovNoiseParams(p, mu), t_max).P
            for m in range(1, n + 1)}


@pytest.mark.parametrize("n", [3, 5, 8])
def test_classifier_agrees_with_simulation(rng, n):
    candidates = [NoiseUnitary.from_name(k) for k in "xyzi"] + [random_unitary(rng) for _ in range(2)]
    for u in candidates:
        cls = classify_good_noise(u).classification
        for p in (0.0, 0.2, 0.9):
            for mu in (0.1, 0.4):
                tr = _traces(n, u, p, mu)
                if cls in (Classification.X_LIKE, Classification.Z_LIKE, Classification.IDENTITY_LIKE):
                    assert max(np.abs(tr[m] - tr[1]).max() for m in tr) < 1e-10
                elif cls is Classification.Y_LIKE:
                    assert max(np.abs(tr[m] - tr[m + 2]).max() for m in range(1, n - 1)) < 1e-10
        if cls is Classification.NOT_GOOD:
            tr = _traces(n, u, 0.2, 0.4)
            assert max(np.abs(a - b).max() for a in tr.values() for b in tr.values()) > 1e-3


def test_near_miss_is_not_good():
    u = NoiseUnitary(math.sqrt(1 - 1e-12), 1e-6, math.pi)
    assert classify_good_noise(u).classification is Classification.NOT_GOOD
