"""Coherence generation and detection by dynamics and by single maps.

Norms of superoperators are taken on their matrix in the elementary basis
``|psi_i><psi_j|`` of the measurement basis, so verdicts do not depend on
how the basis vectors are ordered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from qmts.dynamics import PropagatorFamily, SingularPropagatorError, propagate
from qmts.operators import (
    MeasurementBasis,
    Superoperator,
    dephasing_superoperator,
    matrix_norm,
)

VERDICT_TOL = 1e-6


def _norm(sop: Superoperator, basis: MeasurementBasis, convention: str) -> float:
    return matrix_norm(sop.in_basis(basis), convention)


def cgd_difference(lam_t: Superoperator, lam_tau: Superoperator, lam_total: Superoperator, basis: MeasurementBasis) -> Superoperator:
    """``D o A o D o B o D - D o C o D`` for ``A = lam_t``, ``B = lam_tau``, ``C = lam_total``."""
    dep = dephasing_superoperator(basis)
    return dep @ lam_t @ dep @ lam_tau @ dep - dep @ lam_total @ dep


def cgd_witness(
    generator: Superoperator, basis: MeasurementBasis, t: float, tau: float, norm: str = "column-sum"
) -> float:
    """Norm of ``D Lambda(t) D Lambda(tau) D - D Lambda(t + tau) D`` with ``Lambda(u) = exp(L u)``."""
    if t < 0 or tau < 0:
        raise ValueError("times must be non-negative")
    diff = cgd_difference(propagate(generator, t), propagate(generator, tau), propagate(generator, t + tau), basis)
    return _norm(diff, basis, norm)


def cgd_witness_divisible(
    family: PropagatorFamily, basis: MeasurementBasis, t: float, s: float, r: float, norm: str = "column-sum"
) -> float:
    """Norm of ``D Lambda(t,s) D Lambda(s,r) D - D Lambda(t,r) D``."""
    if not 0 <= r <= s <= t:
        raise ValueError(f"need 0 <= r <= s <= t, got ({t}, {s}, {r})")
    diff = cgd_difference(family(t, s), family(s, r), family(t, r), basis)
    return _norm(diff, basis, norm)


def max_cgd_witness(generator: Superoperator, basis: MeasurementBasis, grid: Iterable[tuple[float, float]], norm: str = "column-sum") -> float:
    return max((cgd_witness(generator, basis, t, tau, norm) for t, tau in grid), default=0.0)


def lemma1_residual(
    generator: Superoperator, basis: MeasurementBasis, x: Hashable, x_tilde: Hashable, t: float, tau: float
) -> float:
    """``|sum_{y != z} <x~|Lambda(t)[|y><z|]|x~> <y|Lambda(tau)[|x><x|]|z>|``."""
    lam_t = propagate(generator, t).in_basis(basis)
    lam_tau = propagate(generator, tau).in_basis(basis)
    d = basis.dim
    a, b = basis.index(x), basis.index(x_tilde)
    total = 0.0 + 0.0j
    for y in range(d):
        for z in range(d):
            if y != z:
                total += lam_t[b * d + b, y * d + z] * lam_tau[y * d + z, a * d + a]
    return abs(total)


def max_lemma1_residual(generator: Superoperator, basis: MeasurementBasis, t: float, tau: float) -> float:
    """Maximum over ``(x, x~)`` of :func:`lemma1_residual`, vectorized."""
    lam_t = propagate(generator, t).in_basis(basis)
    lam_tau = propagate(generator, tau).in_basis(basis)
    d = basis.dim
    diag = [i * d + i for i in range(d)]
    off = [y * d + z for y in range(d) for z in range(d) if y != z]
    m = lam_t[np.ix_(diag, off)] @ lam_tau[np.ix_(off, diag)]
    return float(np.abs(m).max()) if off else 0.0


# -- single maps ---------------------------------------------------------------


@dataclass(frozen=True)
class CoherenceClassification:
    residual_ncgd: float
    residual_mio: float
    residual_cna: float
    norm_convention: str
    tol: float = VERDICT_TOL

    @property
    def ncgd(self) -> bool:
        return self.residual_ncgd <= self.tol

    @property
    def mio(self) -> bool:
        """Maps incoherent states to incoherent states."""
        return self.residual_mio <= self.tol

    @property
    def cna(self) -> bool:
        """Output populations do not depend on input coherences."""
        return self.residual_cna <= self.tol

    def to_dict(self) -> dict:
        return {
            "norm_convention": self.norm_convention,
            "tol": self.tol,
            "residual_ncgd": self.residual_ncgd,
            "residual_mio": self.residual_mio,
            "residual_cna": self.residual_cna,
            "ncgd": self.ncgd,
            "mio": self.mio,
            "coherence_nonactivating": self.cna,
        }


def classify_map(
    lam: Superoperator, basis: MeasurementBasis, norm: str = "column-sum", tol: float = VERDICT_TOL, tp_tol: float | None = 1e-6
) -> CoherenceClassification:
    """Residuals of the NCGD, MIO and coherence non-activating conditions; ``tp_tol=None`` skips the trace check."""
    if lam.dim != basis.dim:
        raise ValueError(f"map acts on d={lam.dim} but the basis has d={basis.dim}")
    if tp_tol is not None and not lam.is_trace_preserving(tp_tol):
        raise ValueError("map is not trace preserving")
    dep = dephasing_superoperator(basis)
    dld = dep @ lam @ dep
    ncgd = dep @ lam @ lam @ dep - dld @ lam @ dep
    mio = lam @ dep - dld
    cna = dep @ lam - dld
    return CoherenceClassification(
        _norm(ncgd, basis, norm), _norm(mio, basis, norm), _norm(cna, basis, norm), norm, tol
    )


def iterate_map_classification(
    lam: Superoperator, basis: MeasurementBasis, n_max: int, norm: str = "column-sum", tol: float = VERDICT_TOL,
    tp_tol: float | None = 1e-6,
) -> list[CoherenceClassification]:
    """Classification of ``lam^n`` for ``n = 1..n_max`` (entry ``n - 1``)."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    out = []
    power = lam
    for n in range(1, n_max + 1):
        if n > 1:
            power = power @ lam
        out.append(classify_map(power, basis, norm, tol, tp_tol))
    return out


@dataclass(frozen=True)
class SweepRow:
    t: float
    s: float
    r: float
    witness: float
    singular: bool = False


def cgd_amount_sweep(
    family: PropagatorFamily, basis: MeasurementBasis, grid: Sequence[tuple[float, float, float]], norm: str = "column-sum"
) -> list[SweepRow]:
    """One row per ``(t, s, r)``; rows hitting a singular propagator carry ``nan`` and ``singular=True``."""
    rows = []
    for t, s, r in grid:
        try:
            rows.append(SweepRow(t, s, r, cgd_witness_divisible(family, basis, t, s, r, norm)))
        except SingularPropagatorError:
            rows.append(SweepRow(t, s, r, math.nan, True))
    return rows
