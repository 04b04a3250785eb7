"""Single-qubit noise unitaries, noisy-site layouts and good-noise analysis."""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping

import numpy as np

from .core import (
    GroverInstance,
    check_sites,
    check_unitary,
    local_unitary_vec,
)
from .errors import (
    ConsistencyError,
    DomainError,
    SizeError,
    UnitaryError,
    UnsupportedClassification,
)

BRANCH_TOL = 1e-10
DISTINCT_TOL = 1e-10
OVERLAP_TOL = 1e-12

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)
HADAMARD = (SIGMA_X + SIGMA_Z) / np.sqrt(2)


@dataclass(frozen=True)
class NoiseUnitary:
    """``e^{i phi} [[a, b], [-conj(b) e^{i theta}, conj(a) e^{i theta}]]``."""

    a: complex
    b: complex
    theta: float
    phi: float = 0.0
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))
        norm2 = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm2 - 1.0) > 1e-12:
            raise UnitaryError(f"|a|^2 + |b|^2 = {norm2!r}, expected 1")

    @property
    def matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        e = cmath.exp(1j * self.theta)
        m = np.array([[a, b], [-b.conjugate() * e, a.conjugate() * e]], dtype=np.complex128)
        return cmath.exp(1j * self.phi) * m

    @classmethod
    def from_matrix(cls, u, name: str | None = None) -> "NoiseUnitary":
        """Decompose an arbitrary 2x2 unitary with the convention phi = 0."""
        u = check_unitary(u, tol=1e-10)
        theta = cmath.phase(np.linalg.det(u)) % (2 * math.pi)
        return cls(complex(u[0, 0]), complex(u[0, 1]), theta, 0.0, name=name)

    @classmethod
    def from_name(cls, alias: str) -> "NoiseUnitary":
        key = alias.strip().lower()
        if key not in NAMED_UNITARIES:
            raise DomainError(f"unknown unitary alias {alias!r}; expected one of {sorted(NAMED_UNITARIES)}")
        return NAMED_UNITARIES[key]

    @classmethod
    def from_params(cls, params: Mapping[str, float]) -> "NoiseUnitary":
        """Build from ``{a_re, a_im, b_re, b_im, theta, phi}``; missing keys are 0."""
        unknown = set(params) - {"a_re", "a_im", "b_re", "b_im", "theta", "phi"}
        if unknown:
            raise DomainError(f"unknown unitary parameters {sorted(unknown)}")
        g = lambda k: float(params.get(k, 0.0))  # noqa: E731
        return cls(complex(g("a_re"), g("a_im")), complex(g("b_re"), g("b_im")), g("theta"), g("phi"))

    def with_global_phase(self, phi: float) -> "NoiseUnitary":
        return NoiseUnitary(self.a, self.b, self.theta, self.phi + phi)

    def label(self) -> str:
        if self.name is not None:
            return self.name
        return (f"a={self.a.real:.12g}{self.a.imag:+.12g}j,b={self.b.real:.12g}{self.b.imag:+.12g}j,"
                f"theta={self.theta:.12g},phi={self.phi:.12g}")


NAMED_UNITARIES: dict[str, NoiseUnitary] = {
    "i": NoiseUnitary(1, 0, 0.0, name="i"),
    "x": NoiseUnitary(0, 1, math.pi, name="x"),
    "y": NoiseUnitary(0, -1j, math.pi, name="y"),
    "z": NoiseUnitary(1, 0, math.pi, name="z"),
    "h": NoiseUnitary(1 / math.sqrt(2), 1 / math.sqrt(2), math.pi, name="h"),
}


@dataclass(frozen=True)
class NoiseLayout:
    """Positions of the noisy qubits in an ``n``-qubit register."""

    n: int
    sites: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise SizeError(f"register size n={self.n} must be positive")
        sites = check_sites(self.n, self.sites)
        object.__setattr__(self, "sites", tuple(sorted(sites)))

    @property
    def m(self) -> int:
        return len(self.sites)

    @property
    def mask(self) -> int:
        """Bitmask of noisy qubits in the basis-index convention (qubit 0 = MSB)."""
        out = 0
        for k in self.sites:
            out |= 1 << (self.n - 1 - k)
        return out

    @classmethod
    def prefix(cls, n: int, m: int) -> "NoiseLayout":
        _check_m(n, m)
        return cls(n, tuple(range(m)))

    @classmethod
    def suffix(cls, n: int, m: int) -> "NoiseLayout":
        _check_m(n, m)
        return cls(n, tuple(range(n - m, n)))

    @classmethod
    def first_and_last(cls, n: int, m: int) -> "NoiseLayout":
        """First qubit plus the last ``m - 1`` qubits."""
        _check_m(n, m)
        if m == 0:
            return cls(n, ())
        return cls(n, (0,) + tuple(range(n - m + 1, n)))

    @classmethod
    def from_rule(cls, n: int, m: int, rule: str) -> "NoiseLayout":
        rules = {"prefix": cls.prefix, "suffix": cls.suffix, "paper-eq7": cls.first_and_last}
        if rule not in rules:
            raise DomainError(f"unknown placement rule {rule!r}; expected one of {sorted(rules)}")
        return rules[rule](n, m)


def _check_m(n: int, m: int) -> None:
    if not 0 <= m <= n:
        raise DomainError(f"noise strength m={m} outside [0, {n}]")


def apply_chi(v: np.ndarray, u: NoiseUnitary, layout: NoiseLayout) -> np.ndarray:
    """``chi_m v`` (v may carry trailing axes)."""
    return local_unitary_vec(v, layout.n, u.matrix, layout.sites)


def materialize_chi(u: NoiseUnitary, layout: NoiseLayout) -> np.ndarray:
    """Dense ``chi_m``. Only for small registers; used as a cross-check."""
    if layout.n > 6:
        raise SizeError("refusing to materialize chi for n > 6")
    N = 1 << layout.n
    return apply_chi(np.eye(N, dtype=np.complex128), u, layout)


def chi_permutation(u: NoiseUnitary, layout: NoiseLayout) -> tuple[np.ndarray, np.ndarray] | None:
    """``(perm, phases)`` with ``(chi v)_i = phases[i] * v[perm[i]]`` when
    ``chi_m`` is exactly a generalized permutation matrix, else None."""
    if u.a != 0 and u.b != 0:
        return None
    N = 1 << layout.n
    idx = np.arange(N)
    perm = idx if u.b == 0 else idx ^ layout.mask
    phases = apply_chi(np.ones(N, dtype=np.complex128), u, layout)
    return perm, phases


# -- row sums ---------------------------------------------------------------

def psi_q(u: NoiseUnitary, m: int, q: int) -> complex:
    """Row sum of ``chi_m`` on a row whose index has ``q`` ones on noisy sites."""
    if m < 0 or not 0 <= q <= m:
        raise DomainError(f"q={q} outside [0, m={m}]")
    a, b = u.a, u.b
    value = (cmath.exp(1j * q * u.theta) * (a + b) ** (m - q)
             * (a.conjugate() - b.conjugate()) ** q)
    return cmath.exp(1j * m * u.phi) * value


def psi_multiplicity(n: int, m: int, q: int) -> int:
    """Number of rows of ``chi_m`` whose sum is ``psi_q``: (N / 2^m) C(m, q)."""
    if not 0 <= q <= m <= n:
        raise DomainError(f"need 0 <= q <= m <= n, got q={q}, m={m}, n={n}")
    return (1 << (n - m)) * comb(m, q)


def _count_ones(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class RowSumReport:
    ok: bool
    max_error: float
    # q -> (psi_q, number of rows matching psi_q at the expected q, expected multiplicity)
    by_q: dict[int, tuple[complex, int, int]]


def chi_row_sum_check(u: NoiseUnitary, layout: NoiseLayout, tol: float = 1e-10) -> RowSumReport:
    """Compare row sums of a materialized ``chi_m`` against ``psi_q``.

    A row's ``q`` is the number of its noisy-site bits that are set.
    """
    if layout.n > 6:
        raise SizeError("row-sum check materializes chi and is limited to n <= 6")
    chi = materialize_chi(u, layout)
    sums = chi.sum(axis=1)
    mask = layout.mask
    m = layout.m
    by_q = {}
    max_err = 0.0
    counts = {q: 0 for q in range(m + 1)}
    for k, val in enumerate(sums):
        q = _count_ones(k & mask)
        err = abs(val - psi_q(u, m, q))
        max_err = max(max_err, err)
        if err <= tol:
            counts[q] += 1
    ok = max_err <= tol
    for q in range(m + 1):
        expected = psi_multiplicity(layout.n, m, q)
        ok = ok and counts[q] == expected
        by_q[q] = (psi_q(u, m, q), counts[q], expected)
    return RowSumReport(ok=ok, max_error=max_err, by_q=by_q)


# -- classification ---------------------------------------------------------

class Classification(enum.Enum):
    IDENTITY_LIKE = "IdentityLike"
    X_LIKE = "XLike"
    Y_LIKE = "YLike"
    Z_LIKE = "ZLike"
    NOT_GOOD = "NotGood"

    @property
    def is_good(self) -> bool:
        return self is not Classification.NOT_GOOD

    @property
    def invariance(self) -> str:
        """What the classification implies for P_m(t) as m varies."""
        if self in (Classification.X_LIKE, Classification.Z_LIKE, Classification.IDENTITY_LIKE):
            return "invariant for all m"
        if self is Classification.Y_LIKE:
            return "invariant for fixed parity of m"
        return "none"


@dataclass(frozen=True)
class GoodNoiseAnalysis:
    classification: Classification
    distinct_coefficient_count: int
    coefficients: tuple[complex, ...]
    block_dimensions: tuple[int, ...]
    alpha: complex | None
    beta: complex | None
    n: int

    @property
    def M(self) -> int:
        return self.distinct_coefficient_count


def _distinct(values: Iterable[complex], tol: float = DISTINCT_TOL) -> list[complex]:
    out: list[complex] = []
    for v in values:
        if all(abs(v - o) > tol for o in out):
            out.append(v)
    return out


def _branch(u: NoiseUnitary) -> str | None:
    # tolerance on the vanishing amplitude itself, so |b| = 1e-6 is not good noise
    if abs(u.b) <= BRANCH_TOL:
        return "a"
    if abs(u.a) <= BRANCH_TOL:
        return "b"
    return None


def classify_good_noise(u: NoiseUnitary, n: int = 3) -> GoodNoiseAnalysis:
    """Classify ``u`` as a good-noise candidate.

    The decomposition of ``chi_1 |s>`` (noise on qubit 0 of an ``n``-qubit
    register, marked index 0) supplies the distinct coefficients ``c_i``,
    their block dimensions and the ``|w>`` / ``|w'>`` coefficients.
    """
    if n < 2:
        raise DomainError("classification needs a register of at least 2 qubits")
    branch = _branch(u)
    layout = NoiseLayout(n, (0,))
    N = 1 << n
    scaled = apply_chi(np.ones(N, dtype=np.complex128), u, layout)  # sqrt(N) chi|s>

    if branch is None:
        coeffs = tuple(complex(c) for c in _distinct(scaled))
        return GoodNoiseAnalysis(Classification.NOT_GOOD, len(coeffs), coeffs, (), None, None, n)

    w = 0
    special = [w] if branch == "a" else [w, w ^ layout.mask]
    rest = [k for k in range(N) if k not in special]
    coeffs = _distinct(scaled[rest])
    dims = tuple(sum(1 for k in rest if abs(scaled[k] - c) <= DISTINCT_TOL) for c in coeffs)
    alpha = complex(scaled[w])
    beta = complex(scaled[special[1]]) if branch == "b" else None

    mat = u.matrix
    if branch == "a":
        ratio = mat[1, 1] / mat[0, 0]
        if abs(ratio - 1) <= BRANCH_TOL:
            cls = Classification.IDENTITY_LIKE
        elif abs(ratio + 1) <= BRANCH_TOL:
            cls = Classification.Z_LIKE
        else:
            cls = Classification.NOT_GOOD
    else:
        ratio = mat[1, 0] / mat[0, 1]
        if abs(ratio - 1) <= BRANCH_TOL:
            cls = Classification.X_LIKE
        elif abs(ratio + 1) <= BRANCH_TOL:
            cls = Classification.Y_LIKE
        else:
            cls = Classification.NOT_GOOD
    return GoodNoiseAnalysis(cls, len(coeffs), tuple(complex(c) for c in coeffs), dims, alpha, beta, n)


def flipped_index(u: NoiseUnitary, layout: NoiseLayout, w: int) -> int:
    """Column index ``w'`` with ``chi_m |w> ~ |w'>`` for good-noise unitaries."""
    if not 0 <= w < (1 << layout.n):
        raise DomainError(f"index w={w} outside register")
    analysis = classify_good_noise(u, max(layout.n, 2))
    if not analysis.classification.is_good:
        raise UnsupportedClassification("w' is only defined for good-noise unitaries")
    if _branch(u) == "a":
        return w
    return w ^ layout.mask


# -- overlaps ---------------------------------------------------------------

@dataclass(frozen=True)
class OverlapElements:
    ss: complex  # <s|chi|s>
    ws: complex  # <w|chi|s>
    ww: complex  # <w|chi|w>
    sw: complex  # <s|chi|w>

    def as_array(self) -> np.ndarray:
        return np.array([self.ss, self.ws, self.ww, self.sw])


def overlap_elements_closed_form(u: NoiseUnitary, layout: NoiseLayout, w: int) -> OverlapElements:
    m = layout.m
    N = 1 << layout.n
    root = math.sqrt(N)
    a, b = u.a, u.b
    e = cmath.exp(1j * u.theta)
    g = cmath.exp(1j * m * u.phi)
    q = _count_ones(w & layout.mask)
    ss = g * ((a + b) + e * (a.conjugate() - b.conjugate())) ** m / 2 ** m
    ws = psi_q(u, m, q) / root
    ww = g * e ** q * a ** (m - q) * a.conjugate() ** q
    col0 = a - b.conjugate() * e
    col1 = b + a.conjugate() * e
    sw = g * col0 ** (m - q) * col1 ** q / root
    return OverlapElements(complex(ss), complex(ws), complex(ww), complex(sw))


def overlap_elements_direct(u: NoiseUnitary, layout: NoiseLayout, w: int) -> OverlapElements:
    N = 1 << layout.n
    s = np.full(N, 1 / math.sqrt(N), dtype=np.complex128)
    e_w = np.zeros(N, dtype=np.complex128)
    e_w[w] = 1
    chi_s = apply_chi(s, u, layout)
    chi_w = apply_chi(e_w, u, layout)
    return OverlapElements(
        complex(np.vdot(s, chi_s)), complex(chi_s[w]), complex(chi_w[w]), complex(np.vdot(s, chi_w))
    )


def overlap_elements(u: NoiseUnitary, layout: NoiseLayout, inst: GroverInstance) -> OverlapElements:
    """The four overlaps of ``chi_m`` with |s> and |w>, closed form checked
    against direct application."""
    if layout.n != inst.n:
        raise DomainError(f"layout n={layout.n} does not match instance n={inst.n}")
    closed = overlap_elements_closed_form(u, layout, inst.w)
    direct = overlap_elements_direct(u, layout, inst.w)
    gap = float(np.max(np.abs(closed.as_array() - direct.as_array())))
    if gap > OVERLAP_TOL:
        raise ConsistencyError(f"closed-form and direct overlaps differ by {gap:.3e}")
    return closed


@dataclass(frozen=True)
class TwoStepProbabilities:
    g_gp: float  # |<w|G G'|s>|^2
    gp_g: float  # |<w|G' G|s>|^2
    gp_gp: float  # |<w|G'^2|s>|^2


def two_step_probabilities(ov: OverlapElements, N: int) -> TwoStepProbabilities:
    """Two-iteration success amplitudes expressed through the overlaps.

    Valid when ``chi_m^2 = 1`` (Pauli noise up to phase).
    """
    r = math.sqrt(N)
    k = 1 - 4 / N
    g_gp = k ** 2 * ov.ws + k * 2 / r * (ov.ww + ov.ss) + 4 / N * ov.sw
    gp_g = ov.ws * (1 - 4 / N * (3 - 4 / N)) + 4 / r * ov.ww * (1 - 2 / N)
    gp_gp = (k * ((2 * ov.ss - 4 / r * ov.ws + 2 * ov.ww) * ov.ws - 1 / r)
             + 2 / r * (2 * ov.ws * ov.sw - 1 - 4 / r * ov.ws * ov.ww + 2 * ov.ww ** 2))
    return TwoStepProbabilities(abs(g_gp) ** 2, abs(gp_g) ** 2, abs(gp_gp) ** 2)


def random_unitary(rng: np.random.Generator) -> NoiseUnitary:
    """Haar-random single-qubit unitary."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return NoiseUnitary.from_matrix(q)
