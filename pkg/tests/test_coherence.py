import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmts.classicality import chapman_kolmogorov_residual
from qmts.coherence import (
    cgd_amount_sweep,
    cgd_witness,
    cgd_witness_divisible,
    classify_map,
    iterate_map_classification,
    lemma1_residual,
    max_cgd_witness,
    max_lemma1_residual,
)
from qmts.dephasing import GaussianMixture, Lorentzian, cgd_measure_N, decoherence_function
from qmts.dynamics import (
    dephasing_propagator_family,
    lindbladian_superoperator,
    pure_dephasing_generator,
    random_lindblad_generator,
    semigroup_family,
    unitary_generator,
)
from qmts.models import rounded_channel, load_fixture_map
from qmts.operators import (
    SIGMA_Y,
    MeasurementBasis,
    Superoperator,
    dephasing_superoperator,
    random_basis,
    sigma_x_basis,
    sigma_z_basis,
)

Z2 = MeasurementBasis.computational(2)


def test_dephasing_lindbladian_has_no_cgd_in_x_basis():
    L = lindbladian_superoperator(pure_dephasing_generator(0.0, 1.0))
    assert max_cgd_witness(L, sigma_x_basis(), [(0.3, 0.5), (1.0, 2.0)]) < 1e-12


def test_rotation_generates_and_detects_coherence():
    L = lindbladian_superoperator(unitary_generator(SIGMA_Y))
    assert cgd_witness(L, sigma_z_basis(), 0.4, 0.4) > 0.1
    with pytest.raises(ValueError):
        cgd_witness(L, sigma_z_basis(), -0.1, 0.4)


def test_divisible_witness_reduces_to_semigroup_witness():
    rng = np.random.default_rng(51)
    L = lindbladian_superoperator(random_lindblad_generator(2, rng))
    b = random_basis(2, rng)
    fam = semigroup_family(L)
    for norm in ("column-sum", "max-entry"):
        w1 = cgd_witness_divisible(fam, b, 1.5, 0.9, 0.2, norm)
        w2 = cgd_witness(L, b, 0.6, 0.7, norm)
        assert abs(w1 - w2) < 1e-12
    with pytest.raises(ValueError):
        cgd_witness_divisible(fam, b, 0.5, 0.9, 0.2)


def test_scalar_measure_matches_max_entry_witness():
    k = decoherence_function(GaussianMixture(1, 1, 1, 2))
    fam = dephasing_propagator_family(k)
    x = sigma_x_basis()
    for s in (0.21, 0.5, 0.79):
        n = cgd_measure_N(k, 1.0, s)
        assert abs(cgd_witness_divisible(fam, x, 1.0, s, 0.0, "max-entry") - n) < 1e-12
        assert abs(cgd_witness_divisible(fam, x, 1.0, s, 0.0, "column-sum") - 2 * n) < 1e-12


def test_transfer_residual_equals_chapman_kolmogorov_residual():
    rng = np.random.default_rng(52)
    L = lindbladian_superoperator(random_lindblad_generator(3, rng))
    b = random_basis(3, rng)
    t, tau = 0.7, 0.4
    for x in b.labels:
        for xt in b.labels:
            ck = chapman_kolmogorov_residual(L, b, xt, x, t + tau, tau)
            assert abs(lemma1_residual(L, b, x, xt, t, tau) - ck) < 1e-12
    worst = max(lemma1_residual(L, b, x, xt, t, tau) for x in b.labels for xt in b.labels)
    assert abs(max_lemma1_residual(L, b, t, tau) - worst) < 1e-13


def test_rounded_channel_fixture_classes():
    lam = rounded_channel()
    col = classify_map(lam, Z2)
    mx = classify_map(lam, Z2, "max-entry")
    assert col.ncgd and not col.mio and not col.cna
    assert abs(mx.residual_mio - 0.003) < 1e-12
    assert abs(mx.residual_cna - 0.003) < 1e-12
    assert abs(col.residual_mio - 0.006) < 1e-12
    assert col.to_dict()["norm_convention"] == "column-sum"


def test_rounded_channel_iteration_growth():
    seq = iterate_map_classification(rounded_channel(), Z2, 300)
    assert len(seq) == 300
    assert seq[-1].residual_mio > 0.12
    assert max(c.residual_ncgd for c in seq) < 1e-12
    with pytest.raises(ValueError):
        iterate_map_classification(rounded_channel(), Z2, 0)


def test_identity_fixture_is_in_every_class():
    c = classify_map(load_fixture_map("identity_map.json"), Z2)
    assert c.residual_ncgd == c.residual_mio == c.residual_cna == 0


def test_dephasing_map_and_unitary_rotation():
    dep = dephasing_superoperator(Z2)
    c = classify_map(dep, Z2)
    assert c.ncgd and c.mio and c.cna
    h = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]])
    r = classify_map(Superoperator.sandwich(h, h.T), Z2)
    assert not r.mio and not r.cna


def test_classify_rejects_bad_maps():
    with pytest.raises(ValueError):
        classify_map(Superoperator.identity(2) * 0.5, Z2)
    with pytest.raises(ValueError):
        classify_map(Superoperator.identity(3), Z2)
    # the trace check can be skipped explicitly
    assert classify_map(Superoperator.identity(2) * 0.5, Z2, tp_tol=None).ncgd


def test_sweep_marks_singular_rows():
    g = GaussianMixture(1.0, 0.1, 0.0, 1.0)
    fam = dephasing_propagator_family(decoherence_function(g))
    rows = cgd_amount_sweep(fam, sigma_x_basis(), [(2.0, math.pi / 2, 0.0), (2.0, 1.0, 0.0)])
    assert rows[0].singular and math.isnan(rows[0].witness)
    assert not rows[1].singular and rows[1].witness >= 0


def test_lorentzian_family_has_no_cgd():
    fam = dephasing_propagator_family(decoherence_function(Lorentzian(1.0)))
    rows = cgd_amount_sweep(fam, sigma_x_basis(), [(1.5, s, 0.0) for s in np.linspace(0, 1.5, 16)])
    assert max(r.witness for r in rows) < 1e-15


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_witness_invariant_under_relabel_and_permutation(seed, d):
    rng = np.random.default_rng(seed)
    L = lindbladian_superoperator(random_lindblad_generator(d, rng))
    b = random_basis(d, rng)
    p = b.permuted(rng.permutation(d)).relabel([f"o{i}" for i in range(d)])
    for norm in ("column-sum", "max-entry"):
        assert abs(cgd_witness(L, b, 0.5, 0.8, norm) - cgd_witness(L, p, 0.5, 0.8, norm)) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 3))
def test_incoherent_generators_are_ncgd(seed, d):
    rng = np.random.default_rng(seed)
    b = random_basis(d, rng)
    L = lindbladian_superoperator(random_lindblad_generator(d, rng, kind="incoherent", basis=b))
    assert cgd_witness(L, b, 0.5, 1.3) < 1e-10
