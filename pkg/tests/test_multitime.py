import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmts.dynamics import (
    closed_system_model,
    dilation_unitary,
    lindbladian_superoperator,
    random_lindblad_generator,
    semigroup_family,
    unitary_family,
)
from qmts.multitime import (
    Hierarchy,
    MeasurementRecord,
    ZeroProbabilityHistory,
    chain_rule_reconstruct,
    conditional_1_1,
    conditional_prob,
    exact_hierarchy,
    joint_prob_markov,
    joint_prob_qrt_general,
    markov_condition_residual,
    markov_hierarchy,
    qrt_hierarchy,
    sweep_rows,
    transition_matrix,
)
from qmts.operators import SIGMA_Y, random_basis, sigma_x_basis, sigma_z_basis


def brute_force_exact(model, rho_s, basis, times, outcomes):
    """Global density matrix, full unitaries and projectors ``P x 1_E``."""
    env = np.outer(model.env_amplitudes, model.env_amplitudes.conj())
    rho = np.kron(rho_s, env)
    t_prev = 0.0
    for t, x in zip(times, outcomes):
        u = model.global_unitary(t - t_prev)
        rho = u @ rho @ u.conj().T
        p = np.kron(basis.projector(x), np.eye(model.env_dim))
        rho = p @ rho @ p
        t_prev = t
    return float(np.trace(rho).real)


def random_state(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    r = a @ a.conj().T
    return r / np.trace(r)


def test_record_validation_and_helpers():
    r = MeasurementRecord((0.1, 0.5, 0.9), ("+", "-", "+"))
    assert r.drop(2) == MeasurementRecord((0.1, 0.9), ("+", "+"))
    assert r.with_outcome(3, "-").outcomes == ("+", "-", "-")
    assert r.head(1) == MeasurementRecord((0.1,), ("+",))
    assert MeasurementRecord.from_dict(r.to_dict()) == r
    with pytest.raises(ValueError):
        MeasurementRecord((0.5, 0.1), (1, 1))
    with pytest.raises(ValueError):
        MeasurementRecord((-0.1,), (1,))
    with pytest.raises(ValueError):
        MeasurementRecord((0.1, 0.2), (1,))
    with pytest.raises(IndexError):
        r.drop(4)


def test_exact_matches_global_brute_force():
    rng = np.random.default_rng(21)
    model = dilation_unitary(rng.normal(size=6), rng.uniform(size=6))
    basis = random_basis(2, rng, labels=("a", "b"))
    rho = random_state(rng, 2)
    h = exact_hierarchy(model, rho, basis)
    times = (0.3, 0.8, 1.9)
    for xs in itertools.product(("a", "b"), repeat=3):
        assert abs(h(times, xs) - brute_force_exact(model, rho, basis, times, xs)) < 1e-12


def test_unknown_label_rejected():
    h = markov_hierarchy(np.eye(2) / 2, lindbladian_superoperator(random_lindblad_generator(2, np.random.default_rng(0))), sigma_z_basis())
    with pytest.raises(ValueError):
        h((0.1,), (0,))


def test_empty_record_has_probability_one():
    h = markov_hierarchy(np.eye(2) / 2, lindbladian_superoperator(random_lindblad_generator(2, np.random.default_rng(0))), sigma_z_basis())
    assert h((), ()) == 1.0


def test_coincident_times_collapse():
    rng = np.random.default_rng(22)
    L = lindbladian_superoperator(random_lindblad_generator(2, rng))
    b = sigma_x_basis()
    rho = random_state(rng, 2)
    h = markov_hierarchy(rho, L, b)
    q1 = h((0.4,), ("+",))
    assert abs(h((0.4, 0.4, 0.4), ("+", "+", "+")) - q1) < 1e-14
    assert h((0.4, 0.4), ("+", "-")) < 1e-15
    assert abs(h((0.0,), ("+",)) - np.real(b.vector("+").conj() @ rho @ b.vector("+"))) < 1e-14


def test_sigma_y_single_time_probability():
    # from |-1>, U = exp(-i sigma_y t) rotates to cos t |-1> + sin t |1>
    b = sigma_z_basis()
    h = exact_hierarchy(closed_system_model(SIGMA_Y), b.projector(-1), b)
    for t in (0.2, 0.7, 1.3):
        assert abs(h((t,), (1,)) - np.sin(t) ** 2) < 1e-12


def test_sigma_y_exact_equals_qrt():
    b = sigma_z_basis()
    rho = b.projector(-1)
    ex = exact_hierarchy(closed_system_model(SIGMA_Y), rho, b)
    qr = qrt_hierarchy(rho, unitary_family(SIGMA_Y), b)
    times = (0.3, 0.9, 1.2, 2.0)
    for xs in itertools.product(b.labels, repeat=4):
        assert abs(ex(times, xs) - qr(times, xs)) < 1e-12


def test_conditionals():
    assert conditional_prob(0.2, 0.5) == pytest.approx(0.4)
    with pytest.raises(ZeroProbabilityHistory):
        conditional_prob(0.0, 0.0)
    b = sigma_z_basis()
    h = exact_hierarchy(closed_system_model(SIGMA_Y), b.projector(-1), b)
    with pytest.raises(ZeroProbabilityHistory):
        h.conditional(MeasurementRecord((0.0, 1.0), (1, 1)), 1)


def test_transition_matrix_columns_are_distributions():
    rng = np.random.default_rng(23)
    L = lindbladian_superoperator(random_lindblad_generator(3, rng))
    b = random_basis(3, rng)
    T = transition_matrix(L, b, 0.8)
    assert np.abs(T.sum(axis=0) - 1).max() < 1e-12
    assert abs(T[2, 1] - conditional_1_1(L, b, 2, 1, 0.8)) < 1e-12


def test_chain_rule_requires_diagonal_state():
    rng = np.random.default_rng(24)
    L = lindbladian_superoperator(random_lindblad_generator(2, rng))
    b = sigma_z_basis()
    with pytest.raises(ValueError):
        chain_rule_reconstruct(sigma_x_basis().projector("+"), L, b, MeasurementRecord((0.1,), (1,)))


def test_sweep_rows_layout():
    b = sigma_z_basis()
    h = exact_hierarchy(closed_system_model(SIGMA_Y), b.projector(-1), b)
    header, rows = sweep_rows(h, (0.5, 1.0))
    assert header == ["t1", "t2", "x1", "x2", "probability"]
    assert len(rows) == 4
    assert abs(sum(r[-1] for r in rows) - 1) < 1e-12


def test_relabeled_hierarchy():
    b = sigma_z_basis()
    h = exact_hierarchy(closed_system_model(SIGMA_Y), b.projector(-1), b)
    r = h.relabeled(b.relabel(("up", "down")))
    assert abs(r((0.4, 0.9), ("up", "down")) - h((0.4, 0.9), (1, -1))) < 1e-15
    with pytest.raises(ValueError):
        h.relabeled(sigma_x_basis())


def test_lazy_hierarchy_from_plain_function():
    h = Hierarchy(sigma_z_basis(), lambda r: 0.5 ** len(r), "coin")
    assert h((0.1, 0.2), (1, -1)) == 0.25


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3), st.integers(1, 4))
def test_normalization_and_positivity(seed, d, n):
    rng = np.random.default_rng(seed)
    L = lindbladian_superoperator(random_lindblad_generator(d, rng))
    b = random_basis(d, rng)
    rho = random_state(rng, d)
    times = tuple(np.sort(rng.uniform(0, 2, size=n)))
    h = markov_hierarchy(rho, L, b)
    probs = list(h.table(times).values())
    assert abs(sum(probs) - 1) < 1e-9
    assert min(probs) >= -1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_exact_normalization_on_random_dilation(seed, n):
    rng = np.random.default_rng(seed)
    model = dilation_unitary(rng.normal(size=5), rng.uniform(0.1, 1, size=5))
    b = random_basis(2, rng)
    h = exact_hierarchy(model, random_state(rng, 2), b)
    times = tuple(np.sort(rng.uniform(0, 3, size=n)))
    probs = list(h.table(times).values())
    assert abs(sum(probs) - 1) < 1e-9
    assert min(probs) >= -1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_markov_equals_general_qrt_with_semigroup(seed, d):
    rng = np.random.default_rng(seed)
    L = lindbladian_superoperator(random_lindblad_generator(d, rng))
    fam = semigroup_family(L)
    b = random_basis(d, rng)
    rho = random_state(rng, d)
    rec = MeasurementRecord(tuple(np.sort(rng.uniform(0, 2, size=3))), tuple(rng.integers(0, d, size=3).tolist()))
    assert abs(joint_prob_markov(rho, L, b, rec) - joint_prob_qrt_general(rho, fam, b, rec)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_qrt_satisfies_markov_condition(seed, d):
    rng = np.random.default_rng(seed)
    L = lindbladian_superoperator(random_lindblad_generator(d, rng))
    b = random_basis(d, rng)
    h = markov_hierarchy(random_state(rng, d), L, b)
    times = tuple(np.sort(rng.uniform(0.05, 2, size=3)))
    for xs in itertools.product(range(d), repeat=3):
        rec = MeasurementRecord(times, xs)
        if h.joint(rec.head(2)) > 1e-8:
            assert markov_condition_residual(h, rec) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_chain_rule_for_diagonal_states(seed, d):
    rng = np.random.default_rng(seed)
    L = lindbladian_superoperator(random_lindblad_generator(d, rng))
    b = random_basis(d, rng)
    rho = b.diagonal_state(rng.dirichlet(np.ones(d)))
    rec = MeasurementRecord(tuple(np.sort(rng.uniform(0, 2, size=3))), tuple(rng.integers(0, d, size=3).tolist()))
    assert abs(chain_rule_reconstruct(rho, L, b, rec) - joint_prob_markov(rho, L, b, rec)) < 1e-10
