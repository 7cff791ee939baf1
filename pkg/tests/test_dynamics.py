import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from qmts.dephasing import NumericGrid, decoherence_function
from qmts.dynamics import (
    DilationModel,
    LindbladGenerator,
    SingularPropagatorError,
    check_composition,
    closed_system_model,
    dephasing_propagator_family,
    dilation_unitary,
    lindbladian_superoperator,
    propagate,
    pure_dephasing_generator,
    random_lindblad_generator,
    semigroup_family,
    unitary_family,
    unitary_generator,
)
from qmts.operators import SIGMA_X, SIGMA_Y, SIGMA_Z, MeasurementBasis, is_completely_positive


def lindblad_rhs(h, jumps):
    def f(_, y):
        d = h.shape[0]
        rho = y.reshape(d, d)
        out = -1j * (h @ rho - rho @ h)
        for L in jumps:
            out += L @ rho @ L.conj().T - 0.5 * (L.conj().T @ L @ rho + rho @ L.conj().T @ L)
        return out.reshape(-1)
    return f


def test_generator_matches_ode_integration():
    rng = np.random.default_rng(11)
    gen = random_lindblad_generator(3, rng)
    L = lindbladian_superoperator(gen)
    rho0 = np.diag([0.2, 0.3, 0.5]).astype(complex)
    sol = solve_ivp(lindblad_rhs(gen.hamiltonian, gen.jumps), (0, 1.3), rho0.reshape(-1), rtol=1e-11, atol=1e-12)
    ref = sol.y[:, -1].reshape(3, 3)
    assert np.abs(propagate(L, 1.3)(rho0) - ref).max() < 1e-8


def test_propagate_identity_at_zero_and_negative_time():
    L = lindbladian_superoperator(pure_dephasing_generator(0.3, 1.0))
    assert np.abs(propagate(L, 0.0).matrix - np.eye(4)).max() == 0
    with pytest.raises(ValueError):
        propagate(L, -0.1)


def test_pure_dephasing_coherence_factor():
    p0, g, t = 0.7, 0.4, 1.1
    lam = propagate(lindbladian_superoperator(pure_dephasing_generator(p0, g)), t)
    rho = np.array([[0.5, 0.5], [0.5, 0.5]], complex)
    out = lam(rho)
    assert abs(out[0, 1] - 0.5 * np.exp(2j * p0 * t - 2 * g * t)) < 1e-12
    assert abs(out[0, 0] - 0.5) < 1e-12


def test_non_hermitian_hamiltonian_rejected():
    with pytest.raises(ValueError):
        LindbladGenerator(np.array([[0, 1], [0, 0]], complex), ())


def test_unitary_generator_matches_unitary_family():
    h = SIGMA_Y
    L = lindbladian_superoperator(unitary_generator(h))
    fam = unitary_family(h)
    assert np.abs(propagate(L, 0.8).matrix - fam(0.8).matrix).max() < 1e-12


def test_family_checks_time_order():
    fam = semigroup_family(lindbladian_superoperator(pure_dephasing_generator(0, 1)))
    with pytest.raises(ValueError):
        fam(0.5, 1.0)
    with pytest.raises(ValueError):
        fam(1.0, -0.1)
    assert np.abs(fam(0.4, 0.4).matrix - np.eye(4)).max() == 0


def test_dephasing_family_composition_and_singularity():
    k = lambda t: np.cos(t) * np.exp(-0.1 * abs(t))
    fam = dephasing_propagator_family(k)
    assert check_composition(fam, 1.2, 0.7, 0.3) < 1e-12
    with pytest.raises(SingularPropagatorError):
        fam(2.0, np.pi / 2)
    with pytest.raises(ValueError):
        dephasing_propagator_family(lambda t: 0.5 + 0 * t)


def test_dilation_reduced_map_equals_k_family():
    rng = np.random.default_rng(12)
    p = np.sort(rng.normal(size=40))
    w = rng.uniform(size=40)
    model = dilation_unitary(p, w)
    fam = dephasing_propagator_family(decoherence_function(NumericGrid(p, w)))
    for t in (0.3, 1.0, 2.5):
        assert np.abs(model.reduced_map(t).matrix - fam(t).matrix).max() < 1e-12


def test_dilation_coherence_phase_convention():
    # a single momentum p0 multiplies rho_01 by exp(2 i p0 t)
    model = dilation_unitary([0.6], [1.0])
    lam = model.reduced_map(0.9)
    assert abs(lam.matrix[1, 1] - np.exp(2j * 0.6 * 0.9)) < 1e-12


def test_dilation_reduced_map_is_cptp():
    model = dilation_unitary(np.linspace(-2, 2, 21), np.ones(21))
    lam = model.reduced_map(0.7)
    assert is_completely_positive(lam)
    assert lam.is_trace_preserving()


def test_dilation_input_validation():
    with pytest.raises(ValueError):
        dilation_unitary([0.0, 1.0], [1.0])
    with pytest.raises(ValueError):
        dilation_unitary([0.0, 1.0], [1.0, -0.5])
    with pytest.raises(ValueError):
        dilation_unitary([0.0, 1.0], [0.0, 0.0])


def test_closed_model_global_unitary():
    model = closed_system_model(SIGMA_X + 0.3 * SIGMA_Z)
    u = model.global_unitary(0.6)
    w, v = np.linalg.eigh(SIGMA_X + 0.3 * SIGMA_Z)
    ref = v @ np.diag(np.exp(-1j * w * 0.6)) @ v.conj().T
    assert np.abs(u - ref).max() < 1e-12
    assert isinstance(model, DilationModel)


def test_incoherent_generator_is_diagonal_preserving():
    rng = np.random.default_rng(13)
    b = MeasurementBasis.computational(3)
    L = lindbladian_superoperator(random_lindblad_generator(3, rng, kind="incoherent", basis=b))
    out = propagate(L, 0.9)(np.diag([1.0, 0, 0]).astype(complex))
    assert np.abs(out - np.diag(np.diag(out))).max() < 1e-12


def test_unknown_ensemble_kind():
    with pytest.raises(ValueError):
        random_lindblad_generator(2, np.random.default_rng(0), kind="weird")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_semigroup_property(seed, d, t, s):
    L = lindbladian_superoperator(random_lindblad_generator(d, np.random.default_rng(seed)))
    lhs = propagate(L, t) @ propagate(L, s)
    assert np.abs(lhs.matrix - propagate(L, t + s).matrix).max() < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.floats(0.01, 3.0))
def test_random_propagators_are_cptp(seed, d, t):
    lam = propagate(lindbladian_superoperator(random_lindblad_generator(d, np.random.default_rng(seed))), t)
    assert lam.is_trace_preserving(1e-9)
    assert is_completely_positive(lam, 1e-9)
