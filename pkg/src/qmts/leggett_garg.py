"""Two-time correlations and the Leggett-Garg-type inequality ``|2C(t) - C(2t)| <= <X(0)>``.

The observable takes the values 0 and 1, so ``C(t, 0) = Q_2{1, t; 1, 0}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from qmts.multitime import Hierarchy
from qmts.operators import MeasurementBasis

VIOLATION_TOL = 1e-9


@dataclass(frozen=True)
class LgtiResult:
    t: float
    c_t: float
    c_2t: float
    x0_mean: float
    residual: float
    violated: bool

    def row(self) -> tuple:
        return (self.t, self.c_t, self.c_2t, self.x0_mean, self.residual, self.violated)


def dichotomic_basis(basis: MeasurementBasis, one: Hashable) -> MeasurementBasis:
    """Relabel a qubit basis so that ``one`` reads 1 and the other vector reads 0."""
    if basis.dim != 2:
        raise ValueError("a dichotomic observable needs a two-dimensional basis")
    i = basis.index(one)
    return basis.relabel([1 if j == i else 0 for j in range(2)])


def _check_dichotomic(basis: MeasurementBasis) -> None:
    if sorted(basis.labels) != [0, 1]:
        raise ValueError(f"observable must be dichotomic with values {{0, 1}}, got labels {basis.labels}")


def correlation(hierarchy: Hierarchy, t: float) -> float:
    """``C_X(t, 0) = sum Q_2{x, t; x0, 0} x x0 = Q_2{1, t; 1, 0}``."""
    _check_dichotomic(hierarchy.basis)
    return hierarchy((0.0, t), (1, 1))


def lgti_residual(hierarchy: Hierarchy, t: float, tol: float = VIOLATION_TOL) -> LgtiResult:
    """``|2C(t) - C(2t)| - <X(0)>``; positive values violate the inequality."""
    if t < 0:
        raise ValueError("time must be non-negative")
    c_t = correlation(hierarchy, t)
    c_2t = correlation(hierarchy, 2 * t)
    x0 = hierarchy((0.0,), (1,))
    res = abs(2 * c_t - c_2t) - x0
    return LgtiResult(t, c_t, c_2t, x0, res, res > tol)


def lgti_scan(hierarchy: Hierarchy, grid: Sequence[float], tol: float = VIOLATION_TOL) -> list[LgtiResult]:
    return [lgti_residual(hierarchy, float(t), tol) for t in grid]
