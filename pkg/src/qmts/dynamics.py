"""Lindblad generators, propagator families and system-environment dilations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from qmts.operators import (
    SIGMA_Z,
    MeasurementBasis,
    Superoperator,
    compose,
)

SINGULAR_EPS = 1e-12


class SingularPropagatorError(ArithmeticError):
    """Raised when a propagator would require inverting a singular map."""


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    hamiltonian: np.ndarray
    jumps: tuple = ()

    def __post_init__(self):
        h = np.array(self.hamiltonian, dtype=complex)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got {h.shape}")
        dev = np.abs(h - h.conj().T).max() if h.size else 0.0
        if dev > 1e-10:
            raise ValueError(f"Hamiltonian is not Hermitian (deviation {dev:.3e})")
        jumps = tuple(np.array(j, dtype=complex) for j in self.jumps)
        for j in jumps:
            if j.shape != h.shape:
                raise ValueError(f"jump operator shape {j.shape} does not match Hamiltonian {h.shape}")
        h.flags.writeable = False
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]


def lindbladian_superoperator(gen: LindbladGenerator) -> Superoperator:
    """Matrix of ``rho -> -i[H, rho] + sum_k (L rho L^+ - 1/2 {L^+ L, rho})``."""
    d = gen.dim
    eye = np.eye(d)
    h = gen.hamiltonian
    m = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for lk in gen.jumps:
        lk_dag_lk = lk.conj().T @ lk
        m = m + np.kron(lk, lk.conj()) - 0.5 * (np.kron(lk_dag_lk, eye) + np.kron(eye, lk_dag_lk.T))
    return Superoperator(m)


def propagate(generator: Superoperator, t: float) -> Superoperator:
    """``exp(L t)``; scaling and squaring with Pade approximants (scipy)."""
    if t < 0:
        raise ValueError(f"propagation time must be non-negative, got {t}")
    if t == 0:
        return Superoperator.identity(generator.dim)
    return Superoperator(expm(generator.matrix * t))


def pure_dephasing_generator(p0: float, gamma: float) -> LindbladGenerator:
    """Pure dephasing whose coherence ``rho_01`` is multiplied by ``exp(2 i p0 t - 2 gamma t)``.

    Index 0 is the ``sigma_z = +1`` state, so the Hamiltonian is ``-p0 sigma_z``.
    """
    if gamma < 0:
        raise ValueError("dephasing rate must be non-negative")
    return LindbladGenerator(-p0 * SIGMA_Z, (np.sqrt(gamma) * SIGMA_Z,))


def unitary_generator(hamiltonian: np.ndarray) -> LindbladGenerator:
    return LindbladGenerator(hamiltonian, ())


# -- propagator families -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class PropagatorFamily:
    """Two-parameter propagators ``Lambda(t, s)`` with ``Lambda(t) = Lambda(t, s) Lambda(s)``."""

    evaluator: Callable[[float, float], Superoperator]
    kind: str
    dim: int

    def __call__(self, t: float, s: float = 0.0) -> Superoperator:
        if s < 0 or t < s:
            raise ValueError(f"propagator needs 0 <= s <= t, got t={t}, s={s}")
        if t == s:
            return Superoperator.identity(self.dim)
        return self.evaluator(t, s)


def semigroup_family(generator: Superoperator) -> PropagatorFamily:
    return PropagatorFamily(lambda t, s: propagate(generator, t - s), "semigroup", generator.dim)


def unitary_family(hamiltonian: np.ndarray) -> PropagatorFamily:
    h = np.asarray(hamiltonian, dtype=complex)

    def ev(t, s):
        u = expm(-1j * h * (t - s))
        return Superoperator.sandwich(u, u.conj().T)

    return PropagatorFamily(ev, "unitary", h.shape[0])


def dephasing_propagator_family(k: Callable[[float], complex], eps: float = SINGULAR_EPS) -> PropagatorFamily:
    """Qubit dephasing where ``rho_01`` picks up ``k(t) / k(s)`` between ``s`` and ``t``."""
    k0 = complex(k(0.0))
    if abs(k0 - 1.0) > 1e-12:
        raise ValueError(f"decoherence function must satisfy k(0) = 1, got {k0}")

    def ev(t, s):
        ks = complex(k(s))
        if abs(ks) < eps:
            raise SingularPropagatorError(f"|k(s)| = {abs(ks):.3e} at s = {s}: propagator undefined")
        ratio = complex(k(t)) / ks
        return Superoperator(np.diag([1.0, ratio, np.conj(ratio), 1.0]))

    return PropagatorFamily(ev, "divisible-from-k", 2)


# -- dilations ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DilationModel:
    """Closed system-environment model with ``U(t) = exp(-i H t)``.

    ``H`` is stored through its spectrum: ``energies`` (length ``d_S * d_E``,
    system index major) and, for non-diagonal Hamiltonians, the eigenvector
    matrix. The environment starts in the pure state ``env_amplitudes``.
    """

    system_dim: int
    env_dim: int
    energies: np.ndarray
    env_amplitudes: np.ndarray
    eigvecs: np.ndarray | None = None

    def __post_init__(self):
        n = self.system_dim * self.env_dim
        e = np.asarray(self.energies, dtype=float).reshape(-1)
        if e.size != n:
            raise ValueError(f"need {n} energies, got {e.size}")
        amp = np.asarray(self.env_amplitudes, dtype=complex).reshape(-1)
        if amp.size != self.env_dim:
            raise ValueError("environment amplitude vector has the wrong length")
        if abs(np.vdot(amp, amp).real - 1.0) > 1e-9:
            raise ValueError("environment state is not normalized")
        for a in (e, amp):
            a.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "env_amplitudes", amp)
        if self.eigvecs is not None:
            v = np.array(self.eigvecs, dtype=complex)
            v.flags.writeable = False
            object.__setattr__(self, "eigvecs", v)

    @property
    def env_state(self) -> np.ndarray:
        return np.outer(self.env_amplitudes, self.env_amplitudes.conj())

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        """Apply ``U(t)`` to a global state stored as a ``(d_S, d_E)`` array."""
        flat = np.asarray(psi, dtype=complex).reshape(-1)
        phase = np.exp(-1j * self.energies * t)
        if self.eigvecs is None:
            out = phase * flat
        else:
            out = self.eigvecs @ (phase * (self.eigvecs.conj().T @ flat))
        return out.reshape(self.system_dim, self.env_dim)

    def global_unitary(self, t: float) -> np.ndarray:
        phase = np.exp(-1j * self.energies * t)
        if self.eigvecs is None:
            return np.diag(phase)
        return (self.eigvecs * phase) @ self.eigvecs.conj().T

    def reduced_map(self, t: float) -> Superoperator:
        """``rho_S -> tr_E U(t) (rho_S x rho_E) U(t)^+``."""
        d = self.system_dim
        cols = []
        for i in range(d):
            psi = np.zeros((d, self.env_dim), dtype=complex)
            psi[i] = self.env_amplitudes
            cols.append(self.evolve(psi, t))
        m = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                m[:, i * d + j] = (cols[i] @ cols[j].conj().T).reshape(-1)
        return Superoperator(m)


def dilation_unitary(momenta: Sequence[float], weights: Sequence[float]) -> DilationModel:
    """Qubit coupled to a sampled momentum: ``U(t)|l, p_j> = exp(i l p_j t)|l, p_j>``.

    System index 0 carries ``l = +1`` and index 1 ``l = -1``; the environment
    starts in ``sum_j sqrt(w_j)|p_j>``. The reduced coherence ``rho_01`` is then
    multiplied by ``sum_j w_j exp(2 i p_j t)``.
    """
    p = np.asarray(momenta, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if p.size == 0:
        raise ValueError("momentum grid is empty")
    if p.shape != w.shape:
        raise ValueError("momenta and weights must have the same length")
    if np.any(w < 0):
        raise ValueError("momentum weights must be non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("momentum weights sum to zero")
    w = w / total
    ell = np.array([1.0, -1.0])
    energies = -(ell[:, None] * p[None, :])
    return DilationModel(2, p.size, energies.reshape(-1), np.sqrt(w))


def closed_system_model(hamiltonian: np.ndarray) -> DilationModel:
    """Unitary system dynamics with a trivial one-dimensional environment."""
    h = np.asarray(hamiltonian, dtype=complex)
    e, v = np.linalg.eigh(h)
    return DilationModel(h.shape[0], 1, e, np.ones(1), v)


# -- random ensemble ---------------------------------------------------------


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def random_lindblad_generator(
    dim: int,
    rng: np.random.Generator,
    kind: str = "generic",
    basis: MeasurementBasis | None = None,
    n_jumps: int | None = None,
) -> LindbladGenerator:
    """Seeded random generator.

    ``generic``: Gaussian Hermitian Hamiltonian, one or two Gaussian complex
    jump operators scaled to unit Frobenius norm.
    ``incoherent``: Hamiltonian diagonal in ``basis`` and classical jumps
    ``sqrt(rate)|psi_i><psi_j|`` plus dephasing in ``basis``; the resulting
    dynamics never turns generated coherence into populations.
    """
    if n_jumps is None:
        n_jumps = int(rng.integers(1, 3))
    if kind == "generic":
        h = random_hermitian(dim, rng)
        jumps = []
        for _ in range(n_jumps):
            a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            jumps.append(a / np.linalg.norm(a))
        return LindbladGenerator(h, tuple(jumps))
    if kind == "incoherent":
        if basis is None:
            basis = MeasurementBasis.computational(dim)
        v = basis.unitary
        h = v @ np.diag(rng.normal(size=dim)) @ v.conj().T
        jumps = []
        for i in range(dim):
            for j in range(dim):
                if i != j:
                    jumps.append(np.sqrt(rng.uniform(0.1, 1.0)) * np.outer(v[:, i], v[:, j].conj()))
        jumps.append(v @ np.diag(rng.normal(size=dim)) @ v.conj().T)
        return LindbladGenerator(0.5 * (h + h.conj().T), tuple(jumps))
    raise ValueError(f"unknown ensemble kind {kind!r}")


def check_composition(family: PropagatorFamily, t: float, s: float, r: float) -> float:
    """Max entry of ``Lambda(t, s) Lambda(s, r) - Lambda(t, r)``."""
    lhs = compose(family(t, s), family(s, r))
    return float(np.abs(lhs.matrix - family(t, r).matrix).max())
