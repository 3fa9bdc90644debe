"""Quadrature construction, moments, tail-moment ratios, the power-weighted
functional, and the three transition-probability routes."""

import math

import mpmath as mp
import numpy as np
import pytest

from rwlab import families
from rwlab.errors import ChainHasKillingError, ZeroDenominatorError
from rwlab.measures import (
    L_functional,
    cn_series,
    compute_Cn,
    matrix_transition_vector,
    moment,
    monte_carlo_transition,
    quadrature_from_chain,
    spectral_transition,
    srlp_predicted_limit,
    transition_probability,
)
from rwlab.recover import discretize_weight


def test_two_point_rule(chain_a):
    m = quadrature_from_chain(chain_a, 2, digits=15)
    assert m.nodes == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert m.weights == pytest.approx([0.5, 0.5])


def test_mass_and_moments(quad400):
    for key, m in quad400.items():
        assert m.total_mass == pytest.approx(1.0, abs=1e-13)
        assert np.all(np.diff(m.nodes) > 0)
    assert moment(quad400["A"], 1) == pytest.approx(0.0, abs=1e-14)
    assert moment(quad400["A"], 2) == pytest.approx(0.5, rel=1e-12)
    assert moment(quad400["S"], 2) == pytest.approx(0.25, rel=1e-12)


def test_killing_rejected():
    with pytest.raises(ChainHasKillingError):
        quadrature_from_chain(families.chain_k(), 16)


def test_node_range(chain_b):
    m = quadrature_from_chain(chain_b, 100, digits=15)
    assert m.nodes.min() > -1e-8
    assert m.nodes.max() < 1 + 1e-8


def test_nodes_inside_edges(quad400, edges2000):
    for key, m in quad400.items():
        e = edges2000[key]
        assert m.nodes.min() >= e.zeta_hat - 1e-4, key
        assert m.nodes.max() <= e.eta_hat + 1e-4, key


def test_high_precision_backend(chain_a):
    m = quadrature_from_chain(chain_a, 24, digits=34)
    assert m.mp_nodes is not None
    with mp.workdps(40):
        m4 = mp.fsum(w * x**4 for x, w in zip(m.mp_nodes, m.mp_weights))
        assert abs(m4 - mp.mpf(3) / 8) < mp.mpf(10) ** -30


def test_gauss_exactness_vs_matrix_powers(chain_s):
    # quadrature moments equal return probabilities for all n <= 2N-1
    N = 8
    m = quadrature_from_chain(chain_s, N, digits=15)
    for n in range(2 * N):
        v = matrix_transition_vector(chain_s, 0, n)
        assert moment(m, n) == pytest.approx(float(v[0]), abs=1e-10)


def test_cn_examples(quad400):
    assert compute_Cn(quad400["A"], 7).value == pytest.approx(1.0, rel=1e-10)
    series = cn_series(quad400["A"], 799)
    assert np.abs(series - 1).max() < 1e-10
    assert np.all(cn_series(quad400["B"], 799) == 0.0)
    assert compute_Cn(quad400["B"], 5).log10_negative == float("-inf")


def test_cn_weight_oracle():
    # independent oracle: adaptive quadrature of the weight-E density
    me = discretize_weight(families.weight_e(), 2000, digits=15)
    got = compute_Cn(me, 200).value
    with mp.workdps(40):
        dens = lambda x: mp.sqrt(1 - x * x) * (2 + x)
        num = mp.quad(lambda x: (-x) ** 200 * dens(x), [-1, 0])
        den = mp.quad(lambda x: x**200 * dens(x), [0, 1])
        want = float(num / den)
    assert got == pytest.approx(want, rel=1e-6)
    assert 0 < got < 1
    assert got == pytest.approx(1 / 3, rel=0.2)


def test_L_functional(chain_b, quad400):
    mb = quad400["B"]
    assert L_functional(mb, chain_b, [1], 37) == pytest.approx(1.0, rel=1e-12)
    # mass concentrates at the top point: L_n(Q_1) -> Q_1(1) = 1
    val = L_functional(mb, chain_b, [0, 1], 500)
    assert val == pytest.approx(1.0, abs=5e-3)
    with pytest.raises(ZeroDenominatorError):
        L_functional(quad400["A"], families.chain_arcsine(), [1], 7)


def test_transition_one_step(chain_b):
    tq = transition_probability(chain_b, 0, 0, 1, N=16, digits=15)
    assert tq.value_matrix == pytest.approx(0.5, abs=1e-14)
    assert tq.value_spectral == pytest.approx(0.5, abs=1e-12)


def test_transition_arcsine(chain_a, quad400):
    tq = transition_probability(chain_a, 0, 0, 2, N=400, digits=15, measure=quad400["A"])
    assert tq.value_spectral == pytest.approx(0.5, abs=1e-12)
    assert tq.value_matrix == pytest.approx(0.5, abs=1e-14)
    # periodic chain: P_01(n) vanishes for even n
    for n in (2, 4, 6):
        tq = transition_probability(chain_a, 0, 1, n, N=50, digits=15)
        assert abs(tq.value_matrix) == 0.0
        assert abs(tq.value_spectral) < 1e-12


def test_row_sums(core_chains):
    for chain in core_chains.values():
        v = matrix_transition_vector(chain, 3, 100)
        assert math.fsum(v) == pytest.approx(1.0, abs=1e-12)


def test_spectral_vs_matrix_sample(core_chains, quad400):
    for key, chain in core_chains.items():
        m = quad400[key]
        for i, j, n in ((0, 0, 10), (2, 5, 31), (7, 7, 100)):
            spect = spectral_transition(chain, m, i, j, n)
            v = matrix_transition_vector(chain, i, n)
            assert abs(spect - float(v[j])) < 1e-8, (key, i, j, n)


def test_monte_carlo_deterministic(chain_b):
    a = monte_carlo_transition(chain_b, 0, 0, 3, 10**4, seed=99)
    b = monte_carlo_transition(chain_b, 0, 0, 3, 10**4, seed=99)
    assert a == b
    c = monte_carlo_transition(chain_b, 0, 0, 3, 10**4, seed=100)
    assert a != c


def test_monte_carlo_matches_matrix(chain_b):
    est, se = monte_carlo_transition(chain_b, 0, 0, 1, 10**5, seed=42)
    assert abs(est - 0.5) <= 4 * se


def test_monte_carlo_killing():
    # killed trajectories never count as being at j
    chain = families.chain_constant_killing()
    est, se = monte_carlo_transition(chain, 0, 0, 2, 10**5, seed=7)
    v = matrix_transition_vector(chain, 0, 2)
    assert abs(est - float(v[0])) <= 4 * se


def test_srlp_predictions(chain_b):
    cmp_ = srlp_predicted_limit(chain_b, 0, 0, 0, 0, 1.0, horizon=32)
    assert cmp_.predicted == 1.0
    cmp_ = srlp_predicted_limit(chain_b, 0, 1, 0, 0, 1.0, horizon=200)
    assert cmp_.predicted == pytest.approx(2.0, rel=1e-12)
    assert cmp_.ratios[-1] == pytest.approx(2.0, rel=0.01)
    cmp_ = srlp_predicted_limit(chain_b, 1, 1, 0, 0, 1.0, horizon=200)
    assert cmp_.predicted == pytest.approx(2.0, rel=1e-12)
    assert cmp_.ratios[-1] == pytest.approx(2.0, rel=0.01)
