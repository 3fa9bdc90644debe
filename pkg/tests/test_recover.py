"""Weight discretization, the Stieltjes recursion, and chain recovery."""

import math

import mpmath as mp
import numpy as np
import pytest

from rwlab import families
from rwlab.errors import InputError
from rwlab.measures import moment
from rwlab.recover import (
    RecurrenceCoefficients,
    chain_from_recurrence,
    discretize_weight,
    grid_size_for_depth,
    make_weight,
    stieltjes_recurrence,
)


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def test_semicircle_moments_closed_form():
    # even moments of the normalized semicircle are Catalan(k)/4^k
    m = discretize_weight(families.weight_semicircle(), 1000, digits=34)
    for k in range(0, 13):
        want = catalan(k) / 4.0**k
        assert moment(m, 2 * k, digits=34) == pytest.approx(want, rel=1e-20)
        assert moment(m, 2 * k + 1, digits=34) == pytest.approx(0.0, abs=1e-25)


def test_weight_d_mean():
    m = discretize_weight(families.weight_d(), 1000, digits=15)
    assert moment(m, 1) == pytest.approx(0.25, abs=1e-13)


def test_moments_against_adaptive_oracle():
    # doubling the grid moves the first 50 moments by less than 1e-16
    spec = families.weight_e()
    m1 = discretize_weight(spec, 1000, digits=34)
    m2 = discretize_weight(spec, 2000, digits=34)
    for n in range(50):
        assert abs(moment(m1, n, 34) - moment(m2, n, 34)) < 1e-16
    # and a spot check against mpmath adaptive quadrature
    with mp.workdps(40):
        dens = lambda x: mp.sqrt(1 - x * x) * (2 + x)
        total = mp.quad(dens, [-1, 1])
        m3 = float(mp.quad(lambda x: x**3 * dens(x), [-1, 1]) / total)
    assert moment(m1, 3, 34) == pytest.approx(m3, abs=1e-15)


def test_atoms_and_normalization():
    spec = make_weight("atomic", 1, "1/2", "1/2", "1", atoms=[("1/2", "1/4")])
    m = discretize_weight(spec, 500, digits=15)
    assert m.total_mass == pytest.approx(1.0, abs=1e-13)
    k = np.argmin(np.abs(m.nodes - 0.5))
    assert m.nodes[k] == 0.5
    # atom keeps a quarter of the total mass after normalization:
    # raw masses: density integral I and atom 1/4; atom share = (1/4)/(I + 1/4)
    with mp.workdps(30):
        dens_integral = mp.quad(lambda x: mp.sqrt(1 - x * x), [-1, 1])
        want = float((mp.mpf(1) / 4) / (dens_integral + mp.mpf(1) / 4))
    assert m.weights[k] == pytest.approx(want, rel=1e-10)


def test_weight_validation():
    with pytest.raises(InputError):
        make_weight("bad", 1, "-1/2", "0", "1")
    with pytest.raises(InputError):
        make_weight("bad", 1, "1/2", "1/2", "x - 2")  # not positive
    with pytest.raises(InputError):
        make_weight("bad", 1, "1/2", "1/2", "1", atoms=[("2", "1/10")])


def test_stieltjes_arcsine(quad400):
    rc = stieltjes_recurrence(quad400["A"], 10, digits=15)
    assert rc.a[0] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert np.abs(rc.a[1:] - 0.5).max() < 1e-12
    assert np.abs(rc.b).max() < 1e-12


def test_stieltjes_semicircle_weight():
    m = discretize_weight(families.weight_semicircle(), 1000, digits=15)
    rc = stieltjes_recurrence(m, 12, digits=15)
    assert np.abs(rc.a - 0.5).max() < 1e-12
    assert np.abs(rc.b).max() < 1e-13  # symmetric weight: diagonal vanishes


def test_stieltjes_b0_is_mean():
    m = discretize_weight(families.weight_d(), 1000, digits=15)
    rc = stieltjes_recurrence(m, 5, digits=15)
    assert rc.b[0] == pytest.approx(0.25, abs=1e-12)


def test_stieltjes_mp_backend():
    m = discretize_weight(families.weight_semicircle(), 600, digits=30)
    rc = stieltjes_recurrence(m, 8, digits=30)
    assert np.abs(rc.a - 0.5).max() < 1e-25


def test_stieltjes_preconditions(quad400):
    with pytest.raises(ValueError):
        stieltjes_recurrence(quad400["A"], 400, digits=15)  # n > nodes/2


def test_chain_recovery_known_families(quad400):
    rc = stieltjes_recurrence(quad400["A"], 10, digits=15)
    rec = chain_from_recurrence(rc)
    assert rec.ok
    assert float(rec.chain.p.at(0)) == pytest.approx(1.0, abs=1e-12)
    for j in range(1, 9):
        assert float(rec.chain.p.at(j)) == pytest.approx(0.5, abs=1e-11)
        assert float(rec.chain.q.at(j)) == pytest.approx(0.5, abs=1e-11)
    m = discretize_weight(families.weight_semicircle(), 1000, digits=15)
    rec = chain_from_recurrence(stieltjes_recurrence(m, 10, digits=15))
    assert rec.ok
    for j in range(9):
        want = (j + 2) / (2 * (j + 1))
        assert float(rec.chain.p.at(j)) == pytest.approx(want, abs=1e-11)
    # symmetric weight recovers a periodic chain exactly (diagonal snapped)
    assert all(rec.chain.r.at(j) == 0 for j in range(10))


def test_recovery_failure_negative_mean():
    coeffs = RecurrenceCoefficients(a=np.array([0.5]), b=np.array([-0.2, 0.0]))
    rec = chain_from_recurrence(coeffs)
    assert not rec.ok
    assert rec.fail_index == 0
    assert "r_0" in rec.fail_reason
    m = discretize_weight(families.weight_negative_mean(), 500, digits=15)
    rec = chain_from_recurrence(stieltjes_recurrence(m, 10, digits=15))
    assert not rec.ok and rec.fail_index == 0


def test_roundtrip_all_core_families(core_chains, quad400):
    for key, chain in core_chains.items():
        rc = stieltjes_recurrence(quad400[key], 30, digits=15)
        p, q, r, _ = chain.arrays(30)
        a_true = np.sqrt(p[:29] * q[1:30])
        assert np.abs(rc.a[:29] - a_true).max() < 1e-8, key
        assert np.abs(rc.b - r[:30]).max() < 1e-8, key


def test_normalization_invariance():
    # a constant multiple of the smooth factor changes nothing
    base = families.weight_e()
    scaled = make_weight("scaled", 1, "1/2", "1/2", "(2 + x) * 5")
    m1 = discretize_weight(base, 800, digits=15)
    m2 = discretize_weight(scaled, 800, digits=15)
    r1 = stieltjes_recurrence(m1, 12, digits=15)
    r2 = stieltjes_recurrence(m2, 12, digits=15)
    assert np.abs(r1.a - r2.a).max() < 1e-12
    assert np.abs(r1.b - r2.b).max() < 1e-12


def test_rw_condition_verified_to_depth():
    # weight D's diagonal decays like 1/k^2 and stays resolvable through 200;
    # weight E's decays geometrically below any working precision around
    # k = 12, so positivity is only checked on the resolvable range there
    md = discretize_weight(families.weight_d(), grid_size_for_depth(220), digits=15)
    rec = chain_from_recurrence(stieltjes_recurrence(md, 220, digits=15))
    assert rec.ok
    assert all(rec.chain.r.at(j) > 0 for j in range(200))
    me = discretize_weight(families.weight_e(), grid_size_for_depth(220), digits=15)
    rec = chain_from_recurrence(stieltjes_recurrence(me, 220, digits=15))
    assert rec.ok and rec.depth == 220
    assert all(rec.chain.r.at(j) > 0 for j in range(10))
    assert all(rec.chain.r.at(j) >= 0 for j in range(200))
