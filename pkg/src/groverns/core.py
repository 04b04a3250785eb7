"""Register states and matrix-free application of the Grover and local operators.

Basis indices are 0-indexed and qubit 0 is the most significant bit of an
index, so ``index = sum(bit_k << (n - 1 - k))``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import ShapeError, SiteIndexError, SizeError, UnitaryError

HARD_MAX_QUBITS = 24
DEFAULT_MAX_QUBITS = 14
MAX_QUBITS_ENV = "GROVERNS_MAX_QUBITS"

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12


def max_qubits() -> int:
    """Qubit cap for simulations, read from ``GROVERNS_MAX_QUBITS``."""
    raw = os.environ.get(MAX_QUBITS_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_QUBITS
    try:
        value = int(raw)
    except ValueError as exc:
        raise SizeError(f"{MAX_QUBITS_ENV}={raw!r} is not an integer") from exc
    return max(1, min(value, HARD_MAX_QUBITS))


def check_qubits(n: int, cap: int | None = None) -> None:
    cap = HARD_MAX_QUBITS if cap is None else cap
    if not isinstance(n, (int, np.integer)) or n < 1 or n > cap:
        raise SizeError(f"qubit count n={n!r} outside [1, {cap}]")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Statevector:
    """Normalized pure state of an ``n``-qubit register."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        check_qubits(self.n)
        amps = _frozen(self.amplitudes)
        if amps.shape != (1 << self.n,):
            raise ShapeError(f"expected {1 << self.n} amplitudes, got shape {amps.shape}")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ShapeError(f"statevector is not normalized (norm^2 = {norm2!r})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def N(self) -> int:
        return 1 << self.n

    def __eq__(self, other):
        if not isinstance(other, Statevector):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.amplitudes, other.amplitudes)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.n, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Dense ``N x N`` density operator; the trace may be below one for
    conditional (unnormalized) branches."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        check_qubits(self.n)
        rho = _frozen(self.entries)
        N = 1 << self.n
        if rho.shape != (N, N):
            raise ShapeError(f"expected a {N}x{N} matrix, got shape {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T), initial=0.0) > NORM_TOL:
            raise ShapeError("density matrix is not Hermitian")
        object.__setattr__(self, "entries", rho)

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.entries, other.entries)


@dataclass(frozen=True)
class GroverInstance:
    """Search problem over ``N = 2**n`` items with marked index ``w``."""

    n: int
    w: int = 0

    def __post_init__(self):
        check_qubits(self.n)
        if not 0 <= self.w < (1 << self.n):
            raise SiteIndexError(f"marked index w={self.w} outside [0, {(1 << self.n) - 1}]")

    @property
    def N(self) -> int:
        return 1 << self.n


State = Union[Statevector, DensityMatrix]


def uniform_state(n: int) -> Statevector:
    check_qubits(n)
    N = 1 << n
    return Statevector(n, np.full(N, 1.0 / np.sqrt(N), dtype=np.complex128))


def basis_state(n: int, index: int) -> Statevector:
    check_qubits(n)
    if not 0 <= index < (1 << n):
        raise SiteIndexError(f"basis index {index} outside register of {n} qubits")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[index] = 1.0
    return Statevector(n, amps)


# Raw-array kernels. These take plain numpy arrays and are what the
# evolution loops call; the typed wrappers below add validation.

def grover_vec(v: np.ndarray, w: int) -> np.ndarray:
    """``G v`` with G = -1 + 2|s><s| - (4/sqrt N)|s><w| + 2|w><w|, in O(N)."""
    N = v.shape[0]
    root = np.sqrt(N)
    s_dot = v.sum() / root
    w_dot = v[w]
    out = -v
    out += (2.0 * s_dot - 4.0 / root * w_dot) / root
    out[w] += 2.0 * w_dot
    return out


def grover_left(rho: np.ndarray, w: int) -> np.ndarray:
    """``G rho`` for an N x N (or N x k) array."""
    N = rho.shape[0]
    root = np.sqrt(N)
    s_row = rho.sum(axis=0) / root
    w_row = rho[w]
    out = -rho
    out += ((2.0 * s_row - 4.0 / root * w_row) / root)[None, :]
    out[w] += 2.0 * w_row
    return out


def grover_conj(rho: np.ndarray, w: int) -> np.ndarray:
    """``G rho G^dagger`` in O(N^2) as ``rho`` plus a rank-4 update.

    With ``A = G rho = -rho + |s>alpha + |w>beta`` and G real,
    ``A G^T = -A + 2 (A|s>)<s| + (A|w>)(2<w| - 4/sqrt N <s|)``.
    """
    N = rho.shape[0]
    r = 1.0 / np.sqrt(N)
    alpha = rho.sum(axis=0) * (2.0 * r) - (4.0 * r) * rho[w]
    beta = 2.0 * rho[w]
    a_s = rho.sum(axis=1) * -r
    a_s += alpha.sum() * r * r
    a_s[w] += beta.sum() * r
    a_w = -rho[:, w] + r * alpha[w]
    a_w[w] += beta[w]
    left = np.zeros((N, 4), dtype=np.result_type(rho, float))
    left[:, 0] = -r
    left[w, 1] = -1.0
    left[:, 2] = a_s
    left[:, 3] = a_w
    right = np.zeros((4, N), dtype=left.dtype)
    right[0] = alpha
    right[1] = beta
    right[2] = 2.0 * r
    right[3] = -4.0 * r * r
    right[3, w] += 2.0
    out = left @ right
    out += rho
    return out


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        raise UnitaryError(f"local operator must be 2x2, got shape {u.shape}")
    if np.max(np.abs(u.conj().T @ u - np.eye(2))) > tol:
        raise UnitaryError("local operator is not unitary")
    return u


def check_sites(n: int, sites: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(k) for k in sites)
    for k in out:
        if not 0 <= k < n:
            raise SiteIndexError(f"site {k} outside register of {n} qubits")
    if len(set(out)) != len(out):
        raise SiteIndexError(f"duplicate sites in {out}")
    return out


def local_unitary_vec(v: np.ndarray, n: int, u: np.ndarray, sites: Iterable[int]) -> np.ndarray:
    """Apply ``u`` to each listed qubit of the leading axis of ``v``.

    ``v`` may carry trailing axes (e.g. the column index of a density
    matrix); they are left untouched.
    """
    trailing = v.shape[1:]
    rest = int(np.prod(trailing)) if trailing else 1
    out = v
    for k in sites:
        t = out.reshape(1 << k, 2, (1 << (n - k - 1)) * rest)
        out = u @ t
    return out.reshape(v.shape)


def local_unitary_conj(rho: np.ndarray, n: int, u: np.ndarray, sites: Iterable[int]) -> np.ndarray:
    """``chi rho chi^dagger`` where chi applies ``u`` on ``sites``.

    Row bits are hit with ``u`` and column bits with ``conj(u)``; both are
    reshapes of the same buffer, so no transposes are needed.
    """
    N = 1 << n
    uc = u.conj()
    out = rho
    for k in sites:
        out = u @ out.reshape(1 << k, 2, (1 << (n - k - 1)) * N)
        out = uc @ out.reshape(N << k, 2, 1 << (n - k - 1))
    return out.reshape(N, N)


def _check_same_n(state: State, inst: GroverInstance) -> None:
    if state.n != inst.n:
        raise ShapeError(f"state has n={state.n} but instance has n={inst.n}")


def apply_grover(state: Statevector, inst: GroverInstance) -> Statevector:
    _check_same_n(state, inst)
    return Statevector(state.n, grover_vec(state.amplitudes, inst.w))


def apply_grover_dm(rho: DensityMatrix, inst: GroverInstance) -> DensityMatrix:
    _check_same_n(rho, inst)
    return DensityMatrix(rho.n, grover_conj(rho.entries, inst.w))


def apply_local_unitary(state: State, u: np.ndarray, sites: Iterable[int]) -> State:
    """Apply the tensor-product operator with ``u`` on ``sites`` and identity
    elsewhere, without building the full matrix."""
    u = check_unitary(u)
    sites = check_sites(state.n, sites)
    if isinstance(state, Statevector):
        return Statevector(state.n, local_unitary_vec(state.amplitudes, state.n, u, sites))
    if isinstance(state, DensityMatrix):
        return DensityMatrix(state.n, local_unitary_conj(state.entries, state.n, u, sites))
    raise TypeError(f"unsupported state type {type(state).__name__}")


def overlap(a: Statevector, b: Statevector) -> complex:
    """``<a|b>``."""
    if a.n != b.n:
        raise ShapeError(f"overlap of n={a.n} and n={b.n} states")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity_with_basis(rho: DensityMatrix, w: int) -> float:
    """``<w|rho|w>``, clipped to [0, 1] after a tolerance check."""
    if not 0 <= w < rho.N:
        raise SiteIndexError(f"basis index {w} outside register")
    value = rho.entries[w, w]
    if abs(value.imag) > UNITARY_TOL:
        raise ShapeError(f"diagonal entry has imaginary part {value.imag!r}")
    return min(1.0, max(0.0, float(value.real)))
