"""Evolution of the register under Markov-correlated probabilistic noise.

The walker that decides whether an iteration is noisy is tracked through a
pair of unnormalized register density matrices, one per walker state
(``g``: noiseless, ``g'``: noisy). After every Grover step

    sigma_g(t)  = p(g|g)  G s_g G^+   + p(g|g')  G s_g' G^+
    sigma_g'(t) = p(g'|g) G' s_g G'^+ + p(g'|g') G' s_g' G'^+

with ``G' = chi G``, and the register state is ``sigma_g + sigma_g'``.

Two propagators implement the Grover and noise conjugations:

* ``DensePropagator`` works on full ``N x N`` matrices in O(N^2) per step.
* ``ReducedPropagator`` restricts everything to the smallest subspace that
  contains |s> and |w> and is invariant under ``chi``. Every trajectory
  ``chi^k G ... |s>`` stays inside it, so the restriction is exact. Its
  dimension is at most ``2 (m + 1)`` for any single-qubit ``u`` and at most
  4 when ``u^2`` is a phase (Pauli noise, Hadamard).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Protocol

import numpy as np

from .core import (
    DensityMatrix,
    GroverInstance,
    check_qubits,
    grover_conj,
    grover_left,
    local_unitary_conj,
    max_qubits,
)
from .errors import ConsistencyError, DomainError, ShapeError, SizeError
from .noise import NoiseLayout, NoiseUnitary, apply_chi, chi_permutation
from .trace import SimulationTrace

log = logging.getLogger(__name__)

TRAJECTORY_MAX_STEPS = 14
TRAJECTORY_MAX_ENTRIES = 1 << 24
KRYLOV_TOL = 1e-10
INVARIANCE_TOL = 1e-9

G_STATE, GPRIME_STATE = 0, 1


@dataclass(frozen=True)
class MarkovNoiseParams:
    """Noise probability ``p`` and memory ``mu`` of the two-state walker."""

    p: float
    mu: float = 0.0

    def __post_init__(self):
        for name in ("p", "mu"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0 or math.isnan(value):
                raise DomainError(f"{name}={value!r} outside [0, 1]")
            object.__setattr__(self, name, value)

    @property
    def stationary(self) -> np.ndarray:
        """``[p_g, p_g']``."""
        return np.array([1.0 - self.p, self.p])


def conditional_probs(params: MarkovNoiseParams) -> np.ndarray:
    """Column-stochastic matrix ``T[k, l] = p(k|l) = (1-mu) p_k + mu delta_kl``.

    Index 0 is the noiseless walker state ``g``, index 1 the noisy ``g'``.
    """
    stat = params.stationary
    return (1.0 - params.mu) * np.repeat(stat[:, None], 2, axis=1) + params.mu * np.eye(2)


# -- propagators -------------------------------------------------------------

class Propagator(Protocol):
    def initial(self) -> np.ndarray: ...
    def grover(self, rho: np.ndarray) -> np.ndarray: ...
    def noise(self, rho: np.ndarray) -> np.ndarray: ...
    def success(self, rho: np.ndarray) -> float: ...


class DensePropagator:
    """Full density matrices with low-rank Grover application."""

    def __init__(self, inst: GroverInstance, u: NoiseUnitary, layout: NoiseLayout):
        _check_layout(inst, layout)
        self.inst, self.u, self.layout = inst, u, layout
        self._u = u.matrix
        self._perm = chi_permutation(u, layout)
        if self._perm is not None:
            perm, d = self._perm
            self._perm_trivial = bool(np.array_equal(perm, np.arange(perm.size)))
            self._phase_trivial = bool(np.all(d == d[0]))

    def _flip(self, rho):
        # i -> i ^ mask flips the masked bit axes of rho seen as a 2n-index tensor
        n = self.inst.n
        axes = tuple(self.layout.sites) + tuple(n + k for k in self.layout.sites)
        t = np.flip(rho.reshape((2,) * (2 * n)), axis=axes)
        return np.ascontiguousarray(t).reshape(rho.shape)

    def initial(self) -> np.ndarray:
        N = self.inst.N
        return np.full((N, N), 1.0 / N, dtype=np.complex128)

    def grover(self, rho):
        return grover_conj(rho, self.inst.w)

    def noise(self, rho):
        if self.layout.m == 0:
            # chi is a global phase at most
            return rho.copy()
        if self._perm is not None:
            perm, d = self._perm
            out = rho if self._perm_trivial else self._flip(rho)
            if self._phase_trivial:
                return out.copy() if out is rho else out
            out = out * d[:, None]
            out *= d.conj()[None, :]
            return out
        return local_unitary_conj(rho, self.inst.n, self._u, self.layout.sites)

    def success(self, rho) -> float:
        return float(rho[self.inst.w, self.inst.w].real)


class ReducedPropagator:
    """Exact restriction to span{chi^k |s>, chi^k |w>}."""

    def __init__(self, inst: GroverInstance, u: NoiseUnitary, layout: NoiseLayout):
        _check_layout(inst, layout)
        self.inst, self.u, self.layout = inst, u, layout
        N = inst.N
        s = np.full(N, 1.0 / math.sqrt(N), dtype=np.complex128)
        e_w = np.zeros(N, dtype=np.complex128)
        e_w[inst.w] = 1.0
        Q = _invariant_basis([s, e_w], lambda v: apply_chi(v, u, layout), N)
        chi_Q = apply_chi(Q, u, layout)
        C = Q.conj().T @ chi_Q
        residual = float(np.max(np.abs(chi_Q - Q @ C), initial=0.0))
        if residual > INVARIANCE_TOL:
            raise ConsistencyError(f"reduced subspace not invariant under chi (residual {residual:.2e})")
        self.basis = Q
        self.dim = Q.shape[1]
        self._s = Q.conj().T @ s
        self._w = Q.conj().T @ e_w
        self._chi = C
        self._G = grover_left_reduced(self._s, self._w, N)

    def initial(self):
        return np.outer(self._s, self._s.conj())

    def grover(self, rho):
        return self._G @ rho @ self._G.conj().T

    def noise(self, rho):
        return self._chi @ rho @ self._chi.conj().T

    def success(self, rho) -> float:
        return float(np.vdot(self._w, rho @ self._w).real)

    def lift(self, rho: np.ndarray) -> np.ndarray:
        """Embed a reduced operator back into the full register."""
        return self.basis @ rho @ self.basis.conj().T


def grover_left_reduced(s: np.ndarray, w: np.ndarray, N: int) -> np.ndarray:
    """G = -1 + 2|s><s| - (4/sqrt N)|s><w| + 2|w><w| in coordinates where
    |s> and |w> have components ``s`` and ``w``."""
    d = s.shape[0]
    return (-np.eye(d) + 2 * np.outer(s, s.conj()) - 4 / math.sqrt(N) * np.outer(s, w.conj())
            + 2 * np.outer(w, w.conj()))


def _invariant_basis(seeds, op, N: int, tol: float = KRYLOV_TOL) -> np.ndarray:
    """Orthonormal basis of the smallest ``op``-invariant space containing ``seeds``."""
    basis: list[np.ndarray] = []
    pending = list(seeds)
    while pending:
        v = np.array(pending.pop(0), dtype=np.complex128)
        if basis:
            Q = np.stack(basis, axis=1)
            for _ in range(2):
                v = v - Q @ (Q.conj().T @ v)
        r = np.linalg.norm(v)
        if r > tol:
            q = v / r
            basis.append(q)
            if len(basis) > N:
                raise ConsistencyError("invariant basis exceeded the register dimension")
            pending.append(op(q))
    return np.stack(basis, axis=1)


class SigmaXReducedPropagator:
    """Three-level model for ``u = sigma_x`` in the basis {|s_bar>, |w>, |w'>}.

    |s_bar> is the normalized sum of all basis states other than |w>, |w'>.
    """

    def __init__(self, N: int):
        if N < 4 or N & (N - 1):
            raise DomainError(f"N={N} must be a power of two >= 4")
        self.N = N
        self.G = sigma_x_grover_matrix(N, noisy=False)
        self.Gp = sigma_x_grover_matrix(N, noisy=True)
        self._swap = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=float)

    def initial(self):
        s = sigma_x_uniform_state(self.N)
        return np.outer(s, s)

    def grover(self, rho):
        return self.G @ rho @ self.G.T

    def noise(self, rho):
        return self._swap @ rho @ self._swap.T

    def success(self, rho) -> float:
        return float(rho[1, 1])


def sigma_x_uniform_state(N: int) -> np.ndarray:
    return np.array([math.sqrt((N - 2) / N), 1 / math.sqrt(N), 1 / math.sqrt(N)])


def sigma_x_grover_matrix(N: int, noisy: bool) -> np.ndarray:
    """G (or G' = chi G) in the basis {|s_bar>, |w>, |w'>} for sigma_x noise."""
    r = math.sqrt(N - 2)
    if not noisy:
        return np.array([
            [2 * (N - 2) / N - 1, -2 * r / N, 2 * r / N],
            [2 * r / N, -2 / N + 1, 2 / N],
            [2 * r / N, -2 / N, 2 / N - 1],
        ])
    return np.array([
        [2 * (N - 2) / N - 1, -2 * r / N, 2 * r / N],
        [2 * r / N, -2 / N, 2 / N - 1],
        [2 * r / N, -2 / N + 1, 2 / N],
    ])


def reduced_sigma_x_step(state3: np.ndarray, N: int, noisy: bool) -> np.ndarray:
    """One (noisy) Grover step on a pure state in the {|s_bar>, |w>, |w'>} basis."""
    state3 = np.asarray(state3)
    if state3.shape != (3,):
        raise ShapeError(f"expected a 3-vector, got shape {state3.shape}")
    return sigma_x_grover_matrix(N, noisy) @ state3


def _check_layout(inst: GroverInstance, layout: NoiseLayout) -> None:
    if layout.n != inst.n:
        raise ShapeError(f"layout has n={layout.n} but instance has n={inst.n}")


def make_propagator(inst, u, layout, method: str = "reduced") -> Propagator:
    if method == "dense":
        return DensePropagator(inst, u, layout)
    if method == "reduced":
        try:
            return ReducedPropagator(inst, u, layout)
        except ConsistencyError as exc:
            log.warning("falling back to dense propagation: %s", exc)
            return DensePropagator(inst, u, layout)
    raise DomainError(f"unknown method {method!r}; expected 'reduced' or 'dense'")


# -- ensemble recursion ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConditionalEnsemble:
    """Register state split by walker branch after ``t`` Grover steps."""

    sigma_g: np.ndarray
    sigma_gprime: np.ndarray
    t: int

    @property
    def rho(self) -> np.ndarray:
        return self.sigma_g + self.sigma_gprime

    @property
    def total_trace(self) -> float:
        return float(np.trace(self.sigma_g).real + np.trace(self.sigma_gprime).real)

    def register_state(self, n: int) -> DensityMatrix:
        return DensityMatrix(n, self.rho)


def _first_step(prop: Propagator, params: MarkovNoiseParams) -> ConditionalEnsemble:
    A = prop.grover(prop.initial())
    p = params.p
    sg = (1.0 - p) * A if p < 1.0 else np.zeros_like(A)
    sgp = p * prop.noise(A) if p > 0.0 else np.zeros_like(A)
    return ConditionalEnsemble(sg, sgp, 1)


def _next_step(prop: Propagator, T: np.ndarray, ens: ConditionalEnsemble,
               live_g: bool, live_gp: bool) -> ConditionalEnsemble:
    zero = np.zeros_like(ens.sigma_g)
    A = prop.grover(ens.sigma_g) if live_g else zero
    B = prop.grover(ens.sigma_gprime) if live_gp else zero
    sg = T[0, 0] * A + T[0, 1] * B
    sgp = prop.noise(T[1, 0] * A + T[1, 1] * B) if live_gp else zero
    return ConditionalEnsemble(sg, sgp, ens.t + 1)


def iterate_ensemble(prop: Propagator, params: MarkovNoiseParams, t_max: int) -> Iterator[ConditionalEnsemble]:
    """Yield the ensemble after steps 1..t_max."""
    T = conditional_probs(params)
    # p = 0 keeps the noisy branch empty; p = 1 keeps the noiseless one empty
    live_g, live_gp = params.p < 1.0, params.p > 0.0
    ens = _first_step(prop, params)
    yield ens
    for _ in range(t_max - 1):
        ens = _next_step(prop, T, ens, live_g, live_gp)
        yield ens


def initialize_ensemble(inst: GroverInstance, u: NoiseUnitary, layout: NoiseLayout,
                        params: MarkovNoiseParams) -> ConditionalEnsemble:
    """Dense ensemble after the first Grover iteration."""
    return _first_step(DensePropagator(inst, u, layout), params)


def evolve_step(ens: ConditionalEnsemble, inst: GroverInstance, u: NoiseUnitary,
                layout: NoiseLayout, params: MarkovNoiseParams) -> ConditionalEnsemble:
    """Advance a dense ensemble by one noisy Grover iteration."""
    if ens.t < 1:
        raise DomainError("evolve_step needs an ensemble produced by initialize_ensemble")
    N = inst.N
    if ens.sigma_g.shape != (N, N) or ens.sigma_gprime.shape != (N, N):
        raise ShapeError(f"ensemble branches must be {N}x{N}")
    prop = DensePropagator(inst, u, layout)
    return _next_step(prop, conditional_probs(params), ens, True, True)


def _check_run(inst: GroverInstance, t_max: int) -> None:
    check_qubits(inst.n, max_qubits())
    if t_max < 1:
        raise DomainError(f"t_max={t_max} must be at least 1")


def _metadata(inst, u, layout, p, mu, t_max, method) -> dict:
    return {
        "n": inst.n, "w": inst.w, "unitary": u.label(), "sites": layout.sites,
        "p": float(p), "mu": float(mu), "t_max": t_max, "method": method,
    }


def simulate(inst: GroverInstance, u: NoiseUnitary, layout: NoiseLayout, params: MarkovNoiseParams,
             t_max: int, method: str = "reduced") -> SimulationTrace:
    """P(t) = <w|rho_t|w> for t = 0..t_max under Markov-correlated noise."""
    _check_run(inst, t_max)
    prop = make_propagator(inst, u, layout, method)
    P = [prop.success(prop.initial())]
    for ens in iterate_ensemble(prop, params, t_max):
        P.append(prop.success(ens.sigma_g) + prop.success(ens.sigma_gprime))
    return SimulationTrace(_metadata(inst, u, layout, params.p, params.mu, t_max, method), P)


def simulate_memoryless(inst: GroverInstance, u: NoiseUnitary, layout: NoiseLayout, p: float,
                        t_max: int, method: str = "dense") -> SimulationTrace:
    """Iterate the Kraus map rho -> (1-p) G rho G^+ + p chi G rho G^+ chi^+."""
    _check_run(inst, t_max)
    MarkovNoiseParams(p, 0.0)
    prop = make_propagator(inst, u, layout, method)
    rho = prop.initial()
    P = [prop.success(rho)]
    for _ in range(t_max):
        A = prop.grover(rho)
        rho = prop.noise(A)
        rho *= p
        A *= 1.0 - p
        rho += A
        P.append(prop.success(rho))
    return SimulationTrace(_metadata(inst, u, layout, p, 0.0, t_max, method), P)


# -- trajectory oracle -------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryOracleResult:
    P: np.ndarray  # index t = 0..t_max
    weight_totals: np.ndarray  # sum of path probabilities at each t >= 1
    paths: int  # number of walker paths at t_max


def enumerate_trajectories(inst: GroverInstance, u: NoiseUnitary, layout: NoiseLayout,
                           params: MarkovNoiseParams, t_max: int) -> TrajectoryOracleResult:
    """Sum over all 2^t walker paths, evolving one pure state per path.

    Path ``l_1 .. l_t`` has weight ``p_{l_1} p(l_2|l_1) ... p(l_t|l_{t-1})``;
    state ``g`` applies G, state ``g'`` applies chi G.
    """
    _check_layout(inst, layout)
    if t_max < 1 or t_max > TRAJECTORY_MAX_STEPS:
        raise SizeError(f"t_max={t_max} outside [1, {TRAJECTORY_MAX_STEPS}]")
    if (1 << t_max) * inst.N > TRAJECTORY_MAX_ENTRIES:
        raise SizeError(f"2^{t_max} paths on N={inst.N} exceeds the enumeration budget")
    T = conditional_probs(params)
    w = inst.w
    N = inst.N
    states = np.full((N, 1), 1.0 / math.sqrt(N), dtype=np.complex128)  # one column per path
    weights = np.ones(1)
    labels = None
    P = [float(abs(states[w, 0]) ** 2)]
    totals = []
    for t in range(1, t_max + 1):
        A = grover_left(states, w)
        if labels is None:
            w_g, w_gp = weights * params.stationary[0], weights * params.stationary[1]
        else:
            w_g, w_gp = weights * T[0, labels], weights * T[1, labels]
        states = np.concatenate([A, apply_chi(A, u, layout)], axis=1)
        weights = np.concatenate([w_g, w_gp])
        labels = np.concatenate([np.full(A.shape[1], G_STATE), np.full(A.shape[1], GPRIME_STATE)])
        P.append(float(np.dot(weights, np.abs(states[w]) ** 2)))
        totals.append(float(weights.sum()))
    return TrajectoryOracleResult(np.array(P), np.array(totals), states.shape[1])


# -- perfect memory ----------------------------------------------------------

@dataclass(frozen=True)
class PerfectMemoryValue:
    noiseless: float  # P(t) of the ideal algorithm
    noisy: float  # P'(t) = |<w|G'^t|s>|^2 for sigma_x noise
    combined: float  # (1-p) P(t) + p P'(t)
    first_max_estimate: float  # location of the first maximum of P'(t)


def noiseless_success(N: int, t) -> np.ndarray | float:
    return np.sin((2 * np.asarray(t) + 1) * np.arcsin(1 / np.sqrt(N))) ** 2


def perfect_memory_noisy_success(N: int, t):
    """|<w|G'^t|s>|^2 for sigma_x noise.

    Written as (tan(theta/2) sin(theta t) - cos(theta t))^2 / N, which equals
    cos^2(theta t) (tan(theta/2) tan(theta t) - 1)^2 / N but stays finite
    where cos(theta t) vanishes.
    """
    theta = math.acos(2 / N)
    t = np.asarray(t, dtype=float)
    return (math.tan(theta / 2) * np.sin(theta * t) - np.cos(theta * t)) ** 2 / N


def perfect_memory_closed_form(N: int, p: float, t: int) -> PerfectMemoryValue:
    """Closed-form success probability for sigma_x noise with mu = 1."""
    if N < 4 or N & (N - 1):
        raise DomainError(f"N={N} must be a power of two >= 4")
    MarkovNoiseParams(p, 1.0)
    theta = math.acos(2 / N)
    clean = float(noiseless_success(N, t))
    noisy = float(perfect_memory_noisy_success(N, t))
    return PerfectMemoryValue(clean, noisy, (1 - p) * clean + p * noisy, math.pi / theta - 0.5)


def simulate_reduced_sigma_x(N: int, params: MarkovNoiseParams, t_max: int) -> np.ndarray:
    """P(t), t = 0..t_max, from the three-level sigma_x model."""
    prop = SigmaXReducedPropagator(N)
    P = [prop.success(prop.initial())]
    for ens in iterate_ensemble(prop, params, t_max):
        P.append(prop.success(ens.sigma_g) + prop.success(ens.sigma_gprime))
    return np.array(P)
