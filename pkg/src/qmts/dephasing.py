"""Qubit pure-dephasing models driven by a momentum distribution.

A qubit coupled to a continuous momentum through ``U(t)|l, p> = exp(i l p t)|l, p>``
loses coherence according to the decoherence function
``k(t) = int dp |f(p)|^2 exp(2 i p t)``. This module holds the closed forms
for the two built-in spectra (Lorentzian and a two-Gaussian mixture), the
analytic two-time probabilities for ``sigma_x`` measurements starting from
``|+>``, the Kolmogorov gap ``K_+``, the scalar coherence measure ``N`` and
the momentum grids that feed the dilation oracle.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import bisect

from qmts.dynamics import SINGULAR_EPS, SingularPropagatorError, dilation_unitary, DilationModel
from qmts.multitime import Hierarchy, MeasurementRecord
from qmts.operators import MeasurementBasis, density_matrix


# -- spectral densities ------------------------------------------------------


@dataclass(frozen=True)
class Lorentzian:
    gamma: float
    p0: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"Lorentzian width must be positive, got {self.gamma}")

    def density(self, p):
        p = np.asarray(p, dtype=float)
        return self.gamma / (np.pi * (self.gamma**2 + (p - self.p0) ** 2))

    def k(self, t):
        return k_lorentzian(self.gamma, self.p0, t)

    def momentum_grid(self, n: int = 2001) -> tuple[np.ndarray, np.ndarray]:
        return lorentzian_momentum_grid(self.gamma, self.p0, n)


@dataclass(frozen=True)
class GaussianMixture:
    """``|f(p)|^2 ~ exp(-(p - p1)^2 / 2 sigma^2) + a_theta exp(-(p - p2)^2 / 2 sigma^2)``."""

    a_theta: float
    sigma: float
    p1: float
    p2: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"Gaussian width must be positive, got {self.sigma}")
        if self.a_theta < 0:
            raise ValueError(f"mixture weight must be non-negative, got {self.a_theta}")

    def density(self, p):
        p = np.asarray(p, dtype=float)
        a1 = 1.0 / (np.sqrt(2 * np.pi) * self.sigma * (1 + self.a_theta))
        g = lambda c: np.exp(-((p - c) ** 2) / (2 * self.sigma**2))
        return a1 * (g(self.p1) + self.a_theta * g(self.p2))

    def k(self, t):
        return k_gaussian_mixture(self.a_theta, self.sigma, self.p1, self.p2, t)

    def momentum_grid(self, n: int = 2001) -> tuple[np.ndarray, np.ndarray]:
        lo = min(self.p1, self.p2) - 8 * self.sigma
        hi = max(self.p1, self.p2) + 8 * self.sigma
        return uniform_momentum_grid(self.density, lo, hi, n)


@dataclass(frozen=True, eq=False)
class NumericGrid:
    momenta: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.momenta, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if p.size == 0 or p.shape != w.shape:
            raise ValueError("numeric grid needs equally long, non-empty momentum and weight columns")
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("numeric grid weights must be non-negative with a positive sum")
        object.__setattr__(self, "momenta", p)
        object.__setattr__(self, "weights", w / w.sum())

    def k(self, t):
        t = np.asarray(t, dtype=float)
        out = np.exp(2j * np.multiply.outer(t, self.momenta)) @ self.weights
        return complex(out) if out.ndim == 0 else out

    def momentum_grid(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        return self.momenta, self.weights


SpectralDensity = Lorentzian | GaussianMixture | NumericGrid


@dataclass(frozen=True, eq=False)
class DecoherenceFunction:
    source: object
    evaluator: Callable[[float], complex]

    def __call__(self, t):
        return self.evaluator(t)


def decoherence_function(spectrum) -> DecoherenceFunction:
    return DecoherenceFunction(spectrum, spectrum.k)


def k_lorentzian(gamma: float, p0: float, t):
    """``exp(2 i p0 t - 2 gamma |t|)``; negative ``t`` gives the complex conjugate of ``k(|t|)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    t = np.asarray(t, dtype=float)
    out = np.exp(2j * p0 * t - 2 * gamma * np.abs(t))
    return complex(out) if out.ndim == 0 else out


def k_gaussian_mixture(a_theta: float, sigma: float, p1: float, p2: float, t):
    if not sigma > 0 or a_theta < 0:
        raise ValueError("need sigma > 0 and a_theta >= 0")
    t = np.asarray(t, dtype=float)
    out = np.exp(-2 * sigma**2 * t**2) * (np.exp(2j * p1 * t) + a_theta * np.exp(2j * p2 * t)) / (a_theta + 1)
    return complex(out) if out.ndim == 0 else out


# -- momentum grids ----------------------------------------------------------


def _trapezoid_weights(p: np.ndarray) -> np.ndarray:
    d = np.diff(p)
    w = np.zeros_like(p)
    w[:-1] += d / 2
    w[1:] += d / 2
    return w


def uniform_momentum_grid(density, lo: float, hi: float, n: int = 2001) -> tuple[np.ndarray, np.ndarray]:
    p = np.linspace(lo, hi, n)
    w = density(p) * _trapezoid_weights(p)
    return p, w / w.sum()


def lorentzian_momentum_grid(gamma: float, p0: float = 0.0, n: int = 2001) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric grid: uniform core of spacing ``0.4 gamma`` and geometric tails.

    Half the points cover ``|p - p0| <= 200 gamma`` uniformly; the rest grow by
    1% per step out to a few thousand widths so that the slowly decaying tails
    are represented. Trapezoid weights are renormalized to sum to one.
    """
    if n < 5 or n % 2 == 0:
        raise ValueError("grid size must be an odd integer >= 5")
    half = (n - 1) // 2
    n_core = half // 2
    h = 0.4
    side = list(np.arange(n_core + 1) * h)
    step = h
    for _ in range(half - n_core):
        step *= 1.01
        side.append(side[-1] + step)
    side = np.array(side)
    u = np.concatenate([-side[:0:-1], side])
    p = p0 + gamma * u
    w = Lorentzian(gamma, p0).density(p) * _trapezoid_weights(p)
    return p, w / w.sum()


def load_spectral_grid_csv(path) -> NumericGrid:
    """Read a CSV with columns ``p`` and ``weight``."""
    ps, ws = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"p", "weight"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected CSV columns 'p' and 'weight'")
        for row in reader:
            ps.append(float(row["p"]))
            ws.append(float(row["weight"]))
    return NumericGrid(np.array(ps), np.array(ws))


def dilation_for(spectrum, n: int = 2001) -> DilationModel:
    p, w = spectrum.momentum_grid(n)
    return dilation_unitary(p, w)


# -- closed-form two-time statistics (sigma_x, rho0 = |+><+|) ----------------


def _re(z) -> float:
    return float(np.real(z))


def q2_exact_analytic(k, t: float, s: float) -> float:
    """``Q_2{+, t; +, s}`` on the dilation."""
    return 0.25 * _re(0.5 * k(t - 2 * s) + 0.5 * k(t) + k(t - s) + k(s) + 1)


def q2_minus_analytic(k, t: float, s: float) -> float:
    """``Q_2{+, t; -, s}`` on the dilation."""
    return 0.25 * _re(0.5 * k(t - 2 * s) + 0.5 * k(t) - k(t - s) - k(s) + 1)


def q1_analytic(k, t: float) -> float:
    """``Q_1{+, t}``."""
    return _re(0.5 + 0.5 * k(t))


def _ks(k, s: float, eps: float) -> complex:
    ks = complex(k(s))
    if abs(ks) < eps:
        raise SingularPropagatorError(f"|k(s)| = {abs(ks):.3e} at s = {s}")
    return ks


def q2_markov_analytic(k, t: float, s: float, eps: float = SINGULAR_EPS) -> float:
    """Regression-theorem value of ``Q_2{+, t; +, s}``."""
    ks = _ks(k, s, eps)
    kt = complex(k(t))
    return 0.25 * _re(0.5 * kt * (np.conj(ks) / ks + 1) + kt / ks + ks + 1)


def kolmogorov_gap_K(k, t: float, s: float) -> float:
    """``K_+(t, s) = sum_y Q_2{+, t; y, s} - Q_1{+, t} = Re[k(t - 2s) - k(t)] / 4``; ``K_- = -K_+``."""
    return 0.25 * _re(k(t - 2 * s) - k(t))


def cgd_measure_N(k, t: float, s: float, eps: float = SINGULAR_EPS) -> float:
    ks = _ks(k, s, eps)
    kt = complex(k(t))
    return 2 * abs(ks.imag * (np.conj(ks) * kt).imag) / (4 * abs(ks) ** 2)


def q2_lorentzian_closed(gamma: float, t: float, s: float) -> float:
    """Hyperbolic form of ``Q_2{+, t; +, s}`` for a Lorentzian with ``p0 = 0``."""
    e = np.exp
    return 0.25 * (1 + e(-2 * gamma * s) + e(-2 * gamma * (t - s)) + 0.5 * e(-2 * gamma * t)) + 0.125 * (
        np.cosh(2 * gamma * (t - 2 * s)) - np.sinh(2 * gamma * abs(t - 2 * s))
    )


def q2_markov_lorentzian_closed(gamma: float, t: float, s: float) -> float:
    return 0.25 * (1 + np.exp(-2 * gamma * s)) * (1 + np.exp(-2 * gamma * (t - s)))


def derivative_witness(gamma: float, t: float, s: float) -> float:
    """``d/ds sum_y Q_2{+, t; y, s}`` for a Lorentzian with ``p0 = 0``; undefined at ``s = t/2``."""
    u = t - 2 * s
    if u == 0:
        raise ValueError("derivative is undefined at the kink s = t/2")
    return gamma * np.sign(u) * np.exp(-2 * gamma * abs(u))


def find_gap_roots(k, t: float, s_lo: float = 0.0, s_hi: float | None = None, step: float = 1e-3, xtol: float = 1e-12) -> list[float]:
    """Interior zeros of ``s -> K_+(t, s)``: sign changes on a grid, refined by bisection.

    ``K_+`` vanishes identically at ``s = 0`` and ``s = t``; those endpoints are not reported.
    """
    if s_hi is None:
        s_hi = t
    n = int(round((s_hi - s_lo) / step))
    grid = np.linspace(s_lo, s_hi, n + 1)
    f = lambda s: kolmogorov_gap_K(k, t, s)
    vals = np.array([f(s) for s in grid])
    roots = []
    for i, (a, b, fa, fb) in enumerate(zip(grid[:-1], grid[1:], vals[:-1], vals[1:])):
        if fa == 0.0:
            if i > 0:
                roots.append(float(a))
            continue
        if fa * fb < 0:
            roots.append(float(bisect(f, a, b, xtol=xtol)))
    return roots


# -- exact hierarchy with an analytic decoherence function -------------------


def joint_prob_dephasing(k, rho0: np.ndarray, basis: MeasurementBasis, record: MeasurementRecord) -> float:
    """Exact ``Q_n`` of the momentum dilation, written through ``k`` alone.

    Each propagation step ``u_p(dt) = sum_l exp(i l p dt)|l><l|`` is expanded
    over ``l = +-1``; the momentum integral of every pair of branches is
    ``k(sum_j (l_j - l'_j) dt_j / 2)``. Cost grows as ``4^n``.
    """
    if basis.dim != 2:
        raise ValueError("the dephasing model is a qubit model")
    idx = [basis.index(x) for x in record.outcomes]
    n = len(idx)
    if n == 0:
        return 1.0
    rho0 = np.asarray(rho0, dtype=complex)
    dts = np.diff((0.0,) + record.times)
    ell = (1, -1)
    projs = [np.outer(basis.vectors[i], basis.vectors[i].conj()) for i in idx]
    branches = []
    for ls in itertools.product((0, 1), repeat=n):
        a = np.eye(2, dtype=complex)
        for P, li in zip(projs, ls):
            a = P @ np.diag([1.0 if j == li else 0.0 for j in (0, 1)]) @ a
        phase = sum(ell[li] * dt for li, dt in zip(ls, dts))
        branches.append((a, phase))
    total = 0.0 + 0.0j
    for a, ph in branches:
        ar = a @ rho0
        for b, ph2 in branches:
            c = np.trace(ar @ b.conj().T)
            if c != 0:
                total += c * k(0.5 * (ph - ph2))
    return float(total.real)


def dephasing_exact_hierarchy(k, rho0: np.ndarray, basis: MeasurementBasis) -> Hierarchy:
    rho0 = density_matrix(rho0)
    return Hierarchy(basis, lambda r: joint_prob_dephasing(k, rho0, basis, r), "dephasing-exact")
