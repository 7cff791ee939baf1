"""Kolmogorov consistency, regression-theorem Markovianity and Chapman-Kolmogorov residuals.

Verdicts are computed on finite time grids, so they can refute classicality
(or Markovianity) but only certify it relative to the grid. Residuals above
``violation_tol`` count as violations, residuals at or below ``tol`` as
satisfied, anything in between is reported as inconclusive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Hashable, Sequence

import numpy as np

from qmts.multitime import Hierarchy, MeasurementRecord, conditional_1_1, transition_matrix
from qmts.operators import MeasurementBasis, Superoperator

SATISFIED_TOL = 1e-9
VIOLATION_TOL = 1e-6
MAX_RECORDS = 200_000


class GridTooLarge(ValueError):
    pass


def _verdict(residual: float, tol: float, violation_tol: float, ok: str, bad: str) -> str:
    if residual > violation_tol:
        return bad
    if residual <= tol:
        return ok
    return "inconclusive"


@dataclass(frozen=True)
class ClassicalityReport:
    level: int
    grid: tuple
    max_residual: float
    verdict: str  # "jCL", "non-classical" or "inconclusive"
    violated_level: int | None = None
    witness: MeasurementRecord | None = None
    marginalized: int | None = None
    grid_relative: bool = True

    @property
    def classical(self) -> bool:
        return self.verdict == "jCL"

    def to_dict(self) -> dict:
        return {
            "kind": "classicality",
            "level": self.level,
            "grid": list(self.grid),
            "grid_relative": self.grid_relative,
            "max_residual": self.max_residual,
            "verdict": self.verdict if self.verdict != "jCL" else f"{self.level}CL",
            "violated_level": self.violated_level,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "marginalized_index": self.marginalized,
        }


@dataclass(frozen=True)
class MarkovianityReport:
    level: int
    grid: tuple
    max_residual: float
    verdict: str  # "jM", "NM" or "inconclusive"
    violated_level: int | None = None
    witness: MeasurementRecord | None = None
    grid_relative: bool = True

    @property
    def markovian(self) -> bool:
        return self.verdict == "jM"

    def to_dict(self) -> dict:
        return {
            "kind": "markovianity",
            "level": self.level,
            "grid": list(self.grid),
            "grid_relative": self.grid_relative,
            "max_residual": self.max_residual,
            "verdict": self.verdict if self.verdict != "jM" else f"{self.level}M",
            "violated_level": self.violated_level,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


def kolmogorov_residual(hierarchy: Hierarchy, record: MeasurementRecord, k: int) -> float:
    """``|sum_{x_k} Q_n(record) - Q_{n-1}(record without slot k)|``, ``k`` 1-based."""
    n = len(record)
    if n < 2:
        raise ValueError("Kolmogorov conditions need at least two measurement times")
    if not 1 <= k <= n:
        raise ValueError(f"marginalized index {k} outside 1..{n}")
    total = sum(hierarchy.joint(record.with_outcome(k, x)) for x in hierarchy.basis.labels)
    return abs(total - hierarchy.joint(record.drop(k)))


def _sorted_grid(grid: Sequence[float]) -> tuple:
    g = tuple(sorted(set(float(t) for t in grid)))
    if any(t < 0 for t in g):
        raise ValueError("time grid must be non-negative")
    return g


def _count(grid_len: int, d: int, j: int, per_record: int) -> int:
    return sum(comb(grid_len, n) * d**n * (n if per_record else 1) for n in range(1, j + 1))


def is_jCL(
    hierarchy: Hierarchy,
    j: int,
    grid: Sequence[float],
    tol: float = SATISFIED_TOL,
    violation_tol: float = VIOLATION_TOL,
    max_records: int = MAX_RECORDS,
) -> ClassicalityReport:
    """Check the Kolmogorov conditions for every ``n <= j`` on strictly increasing times from ``grid``.

    Enumeration order is level, then time tuple, then outcome sequence (basis
    order), then marginalized slot; ties in the maximum keep the first record.
    """
    if j < 2:
        raise ValueError("classicality level must be at least 2")
    g = _sorted_grid(grid)
    d = hierarchy.basis.dim
    if _count(len(g), d, j, 1) > max_records:
        raise GridTooLarge(f"{_count(len(g), d, j, 1)} residuals exceed the cap of {max_records}")
    best, witness, slot = -1.0, None, None
    first_bad = None
    for n in range(2, j + 1):
        for times in itertools.combinations(g, n):
            for xs in itertools.product(hierarchy.basis.labels, repeat=n):
                rec = MeasurementRecord(times, xs)
                for k in range(1, n + 1):
                    r = kolmogorov_residual(hierarchy, rec, k)
                    if r > best:
                        best, witness, slot = r, rec, k
                    if first_bad is None and r > violation_tol:
                        first_bad = n
    if witness is None:
        return ClassicalityReport(j, g, 0.0, "jCL")
    verdict = _verdict(best, tol, violation_tol, "jCL", "non-classical")
    return ClassicalityReport(j, g, best, verdict, first_bad, witness, slot)


def is_jM(
    exact: Hierarchy,
    qrt: Hierarchy,
    j: int,
    grid: Sequence[float],
    tol: float = SATISFIED_TOL,
    violation_tol: float = VIOLATION_TOL,
    max_records: int = MAX_RECORDS,
) -> MarkovianityReport:
    """Largest ``|Q_exact - Q_qrt|`` over records of length ``1..j`` on the grid."""
    if exact.basis.labels != qrt.basis.labels or exact.basis.dim != qrt.basis.dim:
        raise ValueError("both hierarchies must use the same measurement basis")
    if j < 1:
        raise ValueError("Markovianity level must be at least 1")
    g = _sorted_grid(grid)
    d = exact.basis.dim
    if _count(len(g), d, j, 0) > max_records:
        raise GridTooLarge(f"{_count(len(g), d, j, 0)} records exceed the cap of {max_records}")
    best, witness, first_bad = -1.0, None, None
    for n in range(1, j + 1):
        for times in itertools.combinations(g, n):
            for xs in itertools.product(exact.basis.labels, repeat=n):
                rec = MeasurementRecord(times, xs)
                r = abs(exact.joint(rec) - qrt.joint(rec))
                if r > best:
                    best, witness = r, rec
                if first_bad is None and r > violation_tol:
                    first_bad = n
    if witness is None:
        return MarkovianityReport(j, g, 0.0, "jM")
    verdict = _verdict(best, tol, violation_tol, "jM", "NM")
    return MarkovianityReport(j, g, best, verdict, first_bad, witness)


def chapman_kolmogorov_residual(
    generator: Superoperator, basis: MeasurementBasis, x: Hashable, x0: Hashable, t: float, s: float
) -> float:
    """``|Q_{1|1}{x,t|x0,0} - sum_y Q_{1|1}{x,t-s|y,0} Q_{1|1}{y,s|x0,0}|``."""
    if not 0 <= s <= t:
        raise ValueError(f"need 0 <= s <= t, got s={s}, t={t}")
    direct = conditional_1_1(generator, basis, x, x0, t)
    via = sum(
        conditional_1_1(generator, basis, x, y, t - s) * conditional_1_1(generator, basis, y, x0, s)
        for y in basis.labels
    )
    return abs(direct - via)


def max_chapman_kolmogorov_residual(generator: Superoperator, basis: MeasurementBasis, t: float, s: float) -> float:
    """Maximum of the residual over all ``(x, x0)`` at once, via transition matrices."""
    full = transition_matrix(generator, basis, t)
    split = transition_matrix(generator, basis, t - s) @ transition_matrix(generator, basis, s)
    return float(np.abs(full - split).max())
