"""Multi-time joint probabilities of repeated projective measurements.

Three hierarchies are available: the exact one, computed on a closed
system-environment dilation; the quantum-regression one built from a Lindblad
semigroup; and the general regression form built from any divisible
propagator family. All of them are evaluated lazily, one record at a time.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterator, Sequence

import numpy as np

from qmts.dynamics import DilationModel, PropagatorFamily, propagate
from qmts.operators import MeasurementBasis, Superoperator, density_matrix


class ZeroProbabilityHistory(ZeroDivisionError):
    """Conditioning on a measurement history that has probability zero."""


@dataclass(frozen=True)
class MeasurementRecord:
    times: tuple
    outcomes: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        outcomes = tuple(self.outcomes)
        if len(times) != len(outcomes):
            raise ValueError("times and outcomes must have the same length")
        if any(t < 0 for t in times):
            raise ValueError("measurement times must be non-negative")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError(f"measurement times must be non-decreasing, got {times}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "outcomes", outcomes)

    def __len__(self) -> int:
        return len(self.times)

    def drop(self, k: int) -> "MeasurementRecord":
        """Remove slot ``k`` (1-based, earliest first)."""
        if not 1 <= k <= len(self):
            raise IndexError(f"slot {k} out of range for a record of length {len(self)}")
        i = k - 1
        return MeasurementRecord(self.times[:i] + self.times[i + 1:], self.outcomes[:i] + self.outcomes[i + 1:])

    def with_outcome(self, k: int, x: Hashable) -> "MeasurementRecord":
        i = k - 1
        return MeasurementRecord(self.times, self.outcomes[:i] + (x,) + self.outcomes[i + 1:])

    def head(self, n: int) -> "MeasurementRecord":
        return MeasurementRecord(self.times[:n], self.outcomes[:n])

    def to_dict(self) -> dict:
        return {"times": list(self.times), "outcomes": list(self.outcomes)}

    @classmethod
    def from_dict(cls, data: dict) -> "MeasurementRecord":
        return cls(tuple(data["times"]), tuple(data["outcomes"]))


def _validate(basis: MeasurementBasis, record: MeasurementRecord) -> list[int]:
    return [basis.index(x) for x in record.outcomes]


@dataclass(frozen=True, eq=False)
class Hierarchy:
    """A family of joint distributions ``Q_n`` evaluated record by record."""

    basis: MeasurementBasis
    evaluator: Callable[[MeasurementRecord], float]
    name: str = ""

    def joint(self, record: MeasurementRecord) -> float:
        if len(record) == 0:
            return 1.0
        _validate(self.basis, record)
        return self.evaluator(record)

    def __call__(self, times: Sequence[float], outcomes: Sequence[Hashable]) -> float:
        return self.joint(MeasurementRecord(tuple(times), tuple(outcomes)))

    def records(self, times: Sequence[float]) -> Iterator[MeasurementRecord]:
        for xs in itertools.product(self.basis.labels, repeat=len(times)):
            yield MeasurementRecord(tuple(times), xs)

    def table(self, times: Sequence[float]) -> dict[tuple, float]:
        """All outcome sequences at fixed times (only sensible for small ``n``)."""
        return {r.outcomes: self.joint(r) for r in self.records(times)}

    def relabeled(self, basis: MeasurementBasis) -> "Hierarchy":
        """Same statistics read through ``basis``, which must hold the same vectors in the same order."""
        if basis.dim != self.basis.dim or not np.allclose(basis.vectors, self.basis.vectors):
            raise ValueError("relabeling must keep the basis vectors")
        back = dict(zip(basis.labels, self.basis.labels))
        inner = self.joint
        return Hierarchy(basis, lambda r: inner(MeasurementRecord(r.times, tuple(back[x] for x in r.outcomes))), self.name)

    def conditional(self, record: MeasurementRecord, n_condition: int) -> float:
        """``Q_{k|n}``: probability of the last ``len(record) - n`` outcomes given the first ``n``."""
        return conditional_prob(self.joint(record), self.joint(record.head(n_condition)))


# -- exact statistics on a dilation ------------------------------------------


def _pure_components(rho: np.ndarray, cutoff: float = 1e-15) -> list[tuple[float, np.ndarray]]:
    w, v = np.linalg.eigh(rho)
    return [(float(wi), v[:, i]) for i, wi in enumerate(w) if wi > cutoff]


def joint_prob_exact(
    model: DilationModel,
    rho0: np.ndarray,
    basis: MeasurementBasis,
    record: MeasurementRecord,
) -> float:
    """``Tr{P_xn U_(tn - tn-1) ... P_x1 U_t1 rho(0)}`` with ``rho(0) = rho_S x |phi_E><phi_E|``."""
    if basis.dim != model.system_dim:
        raise ValueError(f"basis dimension {basis.dim} does not match system dimension {model.system_dim}")
    rho0 = np.asarray(rho0)
    if rho0.shape != (model.system_dim, model.system_dim):
        raise ValueError(f"initial state shape {rho0.shape} does not match the system dimension")
    idx = _validate(basis, record)
    total = 0.0
    for weight, vec in _pure_components(rho0):
        psi = np.outer(vec, model.env_amplitudes)
        t_prev = 0.0
        for t, i in zip(record.times, idx):
            if t > t_prev:
                psi = model.evolve(psi, t - t_prev)
            b = basis.vectors[i]
            psi = np.outer(b, b.conj() @ psi)
            t_prev = t
        total += weight * float(np.vdot(psi, psi).real)
    return total


def exact_hierarchy(model: DilationModel, rho0: np.ndarray, basis: MeasurementBasis) -> Hierarchy:
    rho0 = density_matrix(rho0)
    return Hierarchy(basis, lambda r: joint_prob_exact(model, rho0, basis, r), "exact")


# -- regression (Markovian) statistics ---------------------------------------


def _chain(rho0: np.ndarray, basis: MeasurementBasis, record: MeasurementRecord, step) -> float:
    idx = _validate(basis, record)
    rho = np.asarray(rho0, dtype=complex)
    if rho.shape != (basis.dim, basis.dim):
        raise ValueError(f"initial state shape {rho.shape} does not match basis dimension {basis.dim}")
    t_prev = 0.0
    for t, i in zip(record.times, idx):
        if t > t_prev:
            rho = step(t, t_prev)(rho)
        b = basis.vectors[i]
        amp = b.conj() @ rho @ b
        rho = amp * np.outer(b, b.conj())
        t_prev = t
    return float(np.trace(rho).real)


def joint_prob_markov(rho0: np.ndarray, generator: Superoperator, basis: MeasurementBasis, record: MeasurementRecord) -> float:
    """``tr{P_xn e^{L(tn - tn-1)} ... P_x1 e^{L t1} rho0}``."""
    return _chain(rho0, basis, record, lambda t, s: propagate(generator, t - s))


def joint_prob_qrt_general(rho0: np.ndarray, family: PropagatorFamily, basis: MeasurementBasis, record: MeasurementRecord) -> float:
    """``tr{P_xn Lambda(tn, tn-1) ... P_x1 Lambda(t1, 0) rho0}``."""
    return _chain(rho0, basis, record, family)


def markov_hierarchy(rho0: np.ndarray, generator: Superoperator, basis: MeasurementBasis) -> Hierarchy:
    rho0 = density_matrix(rho0)
    return Hierarchy(basis, lambda r: joint_prob_markov(rho0, generator, basis, r), "markov")


def qrt_hierarchy(rho0: np.ndarray, family: PropagatorFamily, basis: MeasurementBasis) -> Hierarchy:
    rho0 = density_matrix(rho0)
    return Hierarchy(basis, lambda r: joint_prob_qrt_general(rho0, family, basis, r), "qrt")


# -- conditionals ------------------------------------------------------------


def conditional_prob(joint_hi: float, joint_lo: float) -> float:
    if joint_lo <= 0.0:
        raise ZeroProbabilityHistory("conditioning on a history of zero probability")
    return joint_hi / joint_lo


def conditional_1_1(generator: Superoperator, basis: MeasurementBasis, x: Hashable, x0: Hashable, t: float) -> float:
    """``Q_{1|1}{x, t | x0, 0} = tr{P_x Lambda(t)[|psi_x0><psi_x0|]}``."""
    rho = propagate(generator, t)(basis.projector(x0))
    return float(np.real(basis.vector(x).conj() @ rho @ basis.vector(x)))


def transition_matrix(generator: Superoperator, basis: MeasurementBasis, t: float) -> np.ndarray:
    """``T[x, x0] = Q_{1|1}{x, t | x0, 0}`` in basis order."""
    lam = propagate(generator, t).in_basis(basis)
    d = basis.dim
    diag = [i * d + i for i in range(d)]
    return lam[np.ix_(diag, diag)].real


def markov_condition_residual(hierarchy: Hierarchy, record: MeasurementRecord) -> float:
    """``|Q_{1|n}(last | history) - Q_{1|1}(last | previous)|`` for a record of ``n + 1`` points."""
    n = len(record) - 1
    if n < 1:
        raise ValueError("need at least two measurement points")
    if n == 1:
        return 0.0
    full = hierarchy.conditional(record, n)
    pair = MeasurementRecord(record.times[-2:], record.outcomes[-2:])
    return abs(full - hierarchy.conditional(pair, 1))


def chain_rule_reconstruct(rho0: np.ndarray, generator: Superoperator, basis: MeasurementBasis, record: MeasurementRecord) -> float:
    """``Q_1{x1, t1} * prod_k Q_{1|1}{x_k+1, t_k+1 | x_k, t_k}`` for a basis-diagonal ``rho0``."""
    rho0 = np.asarray(rho0)
    v = basis.unitary
    in_b = v.conj().T @ rho0 @ v
    if np.abs(in_b - np.diag(np.diag(in_b))).max() > 1e-9:
        raise ValueError("initial state is not diagonal in the measurement basis")
    idx = _validate(basis, record)
    if not idx:
        return 1.0
    p = float(np.real(basis.vectors[idx[0]].conj() @ propagate(generator, record.times[0])(rho0) @ basis.vectors[idx[0]]))
    for k in range(1, len(idx)):
        p *= conditional_1_1(
            generator, basis, record.outcomes[k], record.outcomes[k - 1], record.times[k] - record.times[k - 1]
        )
    return p


def sweep_rows(hierarchy: Hierarchy, times: Sequence[float]) -> tuple[list[str], list[list]]:
    """Header ``t1..tn, x1..xn, probability`` and one row per outcome sequence."""
    n = len(times)
    header = [f"t{i}" for i in range(1, n + 1)] + [f"x{i}" for i in range(1, n + 1)] + ["probability"]
    rows = [list(r.times) + list(r.outcomes) + [hierarchy.joint(r)] for r in hierarchy.records(times)]
    return header, rows
