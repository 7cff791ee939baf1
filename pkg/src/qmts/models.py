"""Ready-made models and bundled fixtures.

The worked examples use a handful of fixed models: a qubit rotating under
``sigma_y``, the Lorentzian and Gaussian-mixture dephasing qubits, and a
rounded single-qubit channel stored as JSON. This module builds them and
reads the bundled configuration files.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from qmts.dephasing import GaussianMixture, Lorentzian, decoherence_function, dephasing_exact_hierarchy
from qmts.dynamics import (
    PropagatorFamily,
    closed_system_model,
    dephasing_propagator_family,
    unitary_family,
)
from qmts.multitime import Hierarchy, exact_hierarchy, qrt_hierarchy
from qmts.operators import (
    SIGMA_Y,
    MeasurementBasis,
    Superoperator,
    sigma_x_basis,
    sigma_z_basis,
    superoperator_from_json,
)

FIXTURES = ("rounded_channel.json", "identity_map.json")
CONFIGS = (
    "lorentzian_two_time.cfg",
    "gaussian_mix_gap.cfg",
    "sigma_y_rotation.cfg",
    "mixed_lorentzian.cfg",
)

# Gaussian-mixture parameters of the worked example
GAUSSIAN_MIX_EXAMPLE = GaussianMixture(a_theta=1.0, sigma=1.0, p1=1.0, p2=2.0)
LORENTZIAN_EXAMPLE = Lorentzian(gamma=1.0, p0=0.0)


def fixture_text(name: str) -> str:
    return resources.files("qmts.fixtures").joinpath(name).read_text()


def load_fixture_map(name: str = "rounded_channel.json") -> Superoperator:
    return superoperator_from_json(fixture_text(name))


def rounded_channel() -> Superoperator:
    """Rounded single-qubit channel: NCGD but neither MIO nor coherence non-activating."""
    return load_fixture_map("rounded_channel.json")


def parse_config(text: str) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {n}: empty key")
        out[key.replace("_", "-")] = value
    return out


def load_config(path: str | Path) -> dict[str, str]:
    return parse_config(Path(path).read_text())


def bundled_config(name: str) -> dict[str, str]:
    return parse_config(fixture_text(name))


# -- sigma_y rotation ----------------------------------------------------------


def sigma_y_basis() -> MeasurementBasis:
    """``sigma_z`` eigenbasis with labels ``1`` and ``-1``."""
    return sigma_z_basis()


def sigma_y_family() -> PropagatorFamily:
    return unitary_family(SIGMA_Y)


def sigma_y_hierarchy(initial=-1, basis: MeasurementBasis | None = None, exact: bool = True) -> Hierarchy:
    """Statistics of ``U(t) = exp(-i sigma_y t)`` started in the basis state ``initial``.

    ``exact=True`` runs the closed dilation, otherwise the regression chain;
    the two coincide for unitary dynamics.
    """
    basis = sigma_y_basis() if basis is None else basis
    rho0 = basis.projector(initial)
    if exact:
        return exact_hierarchy(closed_system_model(SIGMA_Y), rho0, basis)
    return qrt_hierarchy(rho0, sigma_y_family(), basis)


# -- dephasing qubit -----------------------------------------------------------


def initial_state(name: str) -> np.ndarray:
    """``plus``, ``minus``, ``mixed``, ``up`` or ``down`` as a qubit density matrix."""
    x = sigma_x_basis()
    z = sigma_z_basis()
    table = {
        "plus": x.projector("+"),
        "+": x.projector("+"),
        "minus": x.projector("-"),
        "-": x.projector("-"),
        "mixed": np.eye(2) / 2,
        "up": z.projector(1),
        "down": z.projector(-1),
    }
    try:
        return table[name]
    except KeyError:
        raise ValueError(f"unknown initial state {name!r}; choose from {sorted(table)}") from None


def dephasing_hierarchies(spectrum, rho0: np.ndarray, basis: MeasurementBasis | None = None) -> tuple[Hierarchy, Hierarchy]:
    """Exact and regression hierarchies of a dephasing qubit, both driven by ``k``."""
    basis = sigma_x_basis() if basis is None else basis
    k = decoherence_function(spectrum)
    return dephasing_exact_hierarchy(k, rho0, basis), qrt_hierarchy(rho0, dephasing_propagator_family(k), basis)
