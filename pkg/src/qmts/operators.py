"""Dense operator and superoperator primitives.

Operators are plain complex ``numpy`` arrays of shape ``(d, d)``. Superoperators
act on row-major vectorized operators, i.e. the elementary basis is ordered
``E_00, E_01, ..., E_0(d-1), E_10, ...`` with ``E_ij = |i><j|``. In this
convention ``vec(A X B) = (A kron B^T) vec(X)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Hashable, Sequence

import numpy as np

STRUCT_TOL = 1e-9
HERMITIAN_TOL = 1e-12
GRAM_TOL = 1e-10

NORM_CONVENTIONS = ("column-sum", "max-entry")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.flags.writeable = False
    return a


def vectorize(op: np.ndarray) -> np.ndarray:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    return op.reshape(-1).copy()


def devectorize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec)
    d = int(round(np.sqrt(vec.size)))
    if d * d != vec.size:
        raise ValueError(f"vector of length {vec.size} is not a vectorized square matrix")
    return vec.reshape(d, d).copy()


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on ``d x d`` operators stored as a ``d^2 x d^2`` matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"superoperator matrix must be square, got {m.shape}")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0] or d < 1:
            raise ValueError(f"matrix size {m.shape[0]} is not a perfect square")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim, dtype=complex))

    @classmethod
    def zero(cls, dim: int) -> "Superoperator":
        return cls(np.zeros((dim * dim, dim * dim), dtype=complex))

    @classmethod
    def from_action(cls, fn, dim: int) -> "Superoperator":
        """Build the matrix column by column from ``fn(E_ij)``."""
        cols = []
        for i in range(dim):
            for j in range(dim):
                e = np.zeros((dim, dim), dtype=complex)
                e[i, j] = 1.0
                cols.append(vectorize(np.asarray(fn(e), dtype=complex)))
        return cls(np.stack(cols, axis=1))

    @classmethod
    def sandwich(cls, left: np.ndarray, right: np.ndarray) -> "Superoperator":
        """The map ``X -> left @ X @ right``."""
        return cls(np.kron(np.asarray(left), np.asarray(right).T))

    def __call__(self, op: np.ndarray) -> np.ndarray:
        return apply(self, op)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return compose(self, other)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        _check_dims(self, other)
        return Superoperator(self.matrix + other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        _check_dims(self, other)
        return Superoperator(self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "Superoperator":
        return Superoperator(self.matrix * scalar)

    __rmul__ = __mul__

    def power(self, n: int) -> "Superoperator":
        return Superoperator(np.linalg.matrix_power(self.matrix, n))

    def in_basis(self, basis: "MeasurementBasis") -> np.ndarray:
        """Matrix of the map in the elementary basis ``|psi_i><psi_j|``."""
        v = basis.unitary
        to_b = np.kron(v.conj().T, v.T)
        from_b = np.kron(v, v.conj())
        return to_b @ self.matrix @ from_b

    def is_trace_preserving(self, tol: float = STRUCT_TOL) -> bool:
        d = self.dim
        tr = vectorize(np.eye(d)).conj()
        return bool(np.abs(tr @ self.matrix - tr).max() <= tol)

    def to_json(self) -> str:
        return json.dumps(to_json_dict(self.matrix, self.dim))


def _check_dims(a: Superoperator, b: Superoperator) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def apply(sop: Superoperator, op: np.ndarray) -> np.ndarray:
    op = np.asarray(op)
    if op.shape != (sop.dim, sop.dim):
        raise ValueError(f"dimension mismatch: superoperator on d={sop.dim}, operator {op.shape}")
    return devectorize(sop.matrix @ vectorize(op))


def compose(a: Superoperator, b: Superoperator) -> Superoperator:
    """``a o b``: apply ``b`` first, then ``a``."""
    _check_dims(a, b)
    return Superoperator(a.matrix @ b.matrix)


def column_sum_norm(sop: Superoperator | np.ndarray) -> float:
    m = sop.matrix if isinstance(sop, Superoperator) else np.asarray(sop)
    if m.size == 0:
        return 0.0
    return float(np.abs(m).sum(axis=0).max())


def max_entry_norm(sop: Superoperator | np.ndarray) -> float:
    m = sop.matrix if isinstance(sop, Superoperator) else np.asarray(sop)
    if m.size == 0:
        return 0.0
    return float(np.abs(m).max())


def matrix_norm(m: np.ndarray, convention: str = "column-sum") -> float:
    if convention == "column-sum":
        return column_sum_norm(m)
    if convention == "max-entry":
        return max_entry_norm(m)
    raise ValueError(f"unknown norm convention {convention!r}; use one of {NORM_CONVENTIONS}")


def choi_matrix(sop: Superoperator) -> np.ndarray:
    """``sum_ij E_ij kron S(E_ij)``, indexed as ``[(i, a), (j, b)]``."""
    d = sop.dim
    t = sop.matrix.reshape(d, d, d, d)  # [a, b, i, j]
    return t.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def min_choi_eigenvalue(sop: Superoperator) -> float:
    c = choi_matrix(sop)
    return float(np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min())


def is_completely_positive(sop: Superoperator, tol: float = 1e-10) -> bool:
    return min_choi_eigenvalue(sop) >= -tol


# -- states and bases --------------------------------------------------------


def density_matrix(rho: np.ndarray, tol: float = STRUCT_TOL) -> np.ndarray:
    """Validate and return a density matrix.

    Raises ``ValueError`` when ``rho`` is not Hermitian, not unit trace, or has
    an eigenvalue below ``-tol``; the message carries the offending magnitude.
    """
    rho = np.array(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERMITIAN_TOL:
        raise ValueError(f"density matrix not Hermitian (deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    lam = np.linalg.eigvalsh(rho).min()
    if lam < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam:.3e}")
    rho.flags.writeable = False
    return rho


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Eigenbasis of a non-degenerate observable, one label per vector."""

    vectors: np.ndarray  # rows are the basis vectors
    labels: tuple

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"need d vectors of length d, got shape {v.shape}")
        labels = tuple(self.labels)
        if len(labels) != v.shape[0]:
            raise ValueError("one label per basis vector is required")
        if len(set(labels)) != len(labels):
            raise ValueError("repeated labels: degenerate observables are not supported")
        gram = v.conj() @ v.T
        dev = np.abs(gram - np.eye(v.shape[0])).max()
        if dev > GRAM_TOL:
            raise ValueError(f"basis vectors are not orthonormal (Gram deviation {dev:.3e})")
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def unitary(self) -> np.ndarray:
        """Columns are the basis vectors."""
        return self.vectors.T

    def index(self, label: Hashable) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown outcome label {label!r}; basis labels are {self.labels}") from None

    def vector(self, label: Hashable) -> np.ndarray:
        return self.vectors[self.index(label)]

    def projector(self, label: Hashable) -> np.ndarray:
        v = self.vector(label)
        return np.outer(v, v.conj())

    def projectors(self) -> list[np.ndarray]:
        return [np.outer(v, v.conj()) for v in self.vectors]

    def relabel(self, labels: Sequence[Hashable]) -> "MeasurementBasis":
        return MeasurementBasis(self.vectors, tuple(labels))

    def permuted(self, order: Sequence[int]) -> "MeasurementBasis":
        order = list(order)
        return MeasurementBasis(self.vectors[order], tuple(self.labels[i] for i in order))

    def diagonal_state(self, probs: Sequence[float]) -> np.ndarray:
        probs = np.asarray(probs, dtype=float)
        return density_matrix(sum(p * P for p, P in zip(probs, self.projectors())))

    @classmethod
    def computational(cls, dim: int, labels: Sequence[Hashable] | None = None) -> "MeasurementBasis":
        return cls(np.eye(dim), tuple(range(dim)) if labels is None else tuple(labels))

    @classmethod
    def from_observable(cls, obs: np.ndarray, tol: float = 1e-8) -> "MeasurementBasis":
        obs = np.asarray(obs, dtype=complex)
        w, v = np.linalg.eigh(obs)
        if np.any(np.diff(w) < tol):
            raise ValueError("observable is degenerate")
        labels = tuple(float(x) if abs(x - round(x)) > tol else int(round(x)) for x in w)
        return cls(v.T, labels)


# Qubit conventions: index 0 is the sigma_z eigenvalue +1 (ell = +1), index 1 is ell = -1.
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def sigma_z_basis() -> MeasurementBasis:
    return MeasurementBasis(np.eye(2), (1, -1))


def sigma_x_basis() -> MeasurementBasis:
    s = 1 / np.sqrt(2)
    return MeasurementBasis(np.array([[s, s], [s, -s]]), ("+", "-"))


def random_basis(dim: int, rng: np.random.Generator, labels: Sequence[Hashable] | None = None) -> MeasurementBasis:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return MeasurementBasis(q.T, tuple(range(dim)) if labels is None else tuple(labels))


def dephasing_superoperator(basis: MeasurementBasis) -> Superoperator:
    """The complete dephasing map ``X -> sum_x P_x X P_x``."""
    m = sum(np.kron(P, P.T) for P in basis.projectors())
    return Superoperator(m)


# -- JSON --------------------------------------------------------------------


def to_json_dict(matrix: np.ndarray, dim: int) -> dict[str, Any]:
    m = np.asarray(matrix, dtype=complex)
    return {"dim": dim, "re": m.real.reshape(-1).tolist(), "im": m.imag.reshape(-1).tolist()}


def _entries(data: dict) -> tuple[int, np.ndarray]:
    try:
        dim = int(data["dim"])
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed operator JSON: {exc}") from exc
    if re.shape != im.shape or dim < 1:
        raise ValueError("malformed operator JSON: 're' and 'im' lengths differ")
    return dim, re + 1j * im


def superoperator_from_json(data: dict | str) -> Superoperator:
    if isinstance(data, str):
        data = json.loads(data)
    dim, z = _entries(data)
    n = dim * dim
    if z.size != n * n:
        raise ValueError(f"superoperator JSON for d={dim} needs {n * n} entries, got {z.size}")
    return Superoperator(z.reshape(n, n))


def operator_from_json(data: dict | str) -> np.ndarray:
    if isinstance(data, str):
        data = json.loads(data)
    dim, z = _entries(data)
    if z.size != dim * dim:
        raise ValueError(f"operator JSON for d={dim} needs {dim * dim} entries, got {z.size}")
    return z.reshape(dim, dim)


def operator_to_json(op: np.ndarray) -> str:
    op = np.asarray(op)
    return json.dumps(to_json_dict(op, op.shape[0]))
