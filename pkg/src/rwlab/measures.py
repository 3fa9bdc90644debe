"""Discrete approximations of the orthogonality measure and everything
computed through it: moments, the positive/negative tail ratio C_n, the
power-weighted functional L_n, n-step transition probabilities by spectral
formula, matrix powers and Monte Carlo, and predicted strong-ratio limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np

from .chains import DEFAULT_DIGITS, ChainSpec, log_pi_mpf
from .errors import (
    ChainHasKillingError,
    DivisionSentinelError,
    ZeroDenominatorError,
)
from .numeric import NEG_INF
from .polynomials import q_values
from .tridiagonal import FLOAT_DIGITS, golub_welsch_f64, golub_welsch_mpf, jacobi_arrays_f64

ZERO_NODE_TOL = 1e-15


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Quadrature nodes/weights approximating a unit-mass measure.

    nodes are strictly increasing float64; mp_nodes/mp_weights carry the
    full-precision values when the measure was built at high precision.
    """

    nodes: np.ndarray
    weights: np.ndarray
    source: str
    total_mass: float
    mp_nodes: tuple | None = None
    mp_weights: tuple | None = None

    def __len__(self) -> int:
        return len(self.nodes)


def _measure_from_arrays(nodes, weights, source) -> DiscreteMeasure:
    nodes64 = np.asarray([float(x) for x in nodes])
    weights64 = np.asarray([float(w) for w in weights])
    order = np.argsort(nodes64)
    nodes64 = nodes64[order]
    weights64 = weights64[order]
    mp_nodes = mp_weights = None
    if not isinstance(nodes, np.ndarray):
        mp_nodes = tuple(nodes[int(k)] for k in order)
        mp_weights = tuple(weights[int(k)] for k in order)
    return DiscreteMeasure(
        nodes=nodes64,
        weights=weights64,
        source=source,
        total_mass=float(weights64.sum()),
        mp_nodes=mp_nodes,
        mp_weights=mp_weights,
    )


def quadrature_from_chain(chain: ChainSpec, N: int, digits: int = DEFAULT_DIGITS) -> DiscreteMeasure:
    """N-point Gauss rule of the chain's measure: eigenvalues of the N x N
    symmetrized Jacobi truncation and squared first eigenvector components.
    Exact for the first 2N-1 moments up to arithmetic error."""
    if N < 2:
        raise ValueError("N must be >= 2")
    if chain.has_killing(horizon=max(256, N)):
        raise ChainHasKillingError(
            f"{chain.label}: quadrature is defined for honest chains"
        )
    if digits <= FLOAT_DIGITS:
        d, e = jacobi_arrays_f64(chain, N)
        nodes, weights = golub_welsch_f64(d, e)
    else:
        nodes, weights = golub_welsch_mpf(chain, N, digits)
    return _measure_from_arrays(nodes, weights, f"from-chain({chain.label}, N={N})")


def moment(measure: DiscreteMeasure, n: int, digits: int = DEFAULT_DIGITS) -> float:
    """n-th moment with compensated summation."""
    if measure.mp_nodes is not None and digits > FLOAT_DIGITS:
        with mp.workdps(digits):
            return float(
                mp.fsum(w * x**n for x, w in zip(measure.mp_nodes, measure.mp_weights))
            )
    return float(math.fsum(measure.weights * measure.nodes**n))


@dataclass(frozen=True)
class CnValue:
    """C_n = (negative-part n-th absolute moment) / (positive-part n-th
    moment), with both parts kept in log10."""

    n: int
    value: float
    log10_negative: float
    log10_positive: float


def _logsumexp(logs: np.ndarray) -> float:
    if len(logs) == 0:
        return NEG_INF
    m = np.max(logs)
    if m == NEG_INF:
        return NEG_INF
    return float(m + np.log(np.sum(np.exp(logs - m))))


def compute_Cn(measure: DiscreteMeasure, n: int, digits: int = DEFAULT_DIGITS) -> CnValue:
    """Tail-moment ratio over the discrete measure; nodes at 0 are excluded
    from both sums, and the sums are formed in log space so the ratio
    survives underflow."""
    x = measure.nodes
    w = measure.weights
    pos = x > ZERO_NODE_TOL
    neg = x < -ZERO_NODE_TOL
    if not np.any(pos):
        raise ZeroDenominatorError("measure has no positive nodes")
    with np.errstate(divide="ignore"):
        log_pos = np.log(w[pos]) + n * np.log(x[pos])
        log_neg = (
            np.log(w[neg]) + n * np.log(-x[neg]) if np.any(neg) else np.array([])
        )
    lp = _logsumexp(log_pos)
    ln = _logsumexp(log_neg)
    value = 0.0 if ln == NEG_INF else math.exp(ln - lp)
    log10 = math.log10(math.e)
    return CnValue(n, value, ln * log10 if ln != NEG_INF else NEG_INF, lp * log10)


def cn_series(measure: DiscreteMeasure, n_max: int, digits: int = DEFAULT_DIGITS) -> np.ndarray:
    """C_n for n = 0..n_max (vectorized log-space evaluation)."""
    x = measure.nodes
    w = measure.weights
    pos = x > ZERO_NODE_TOL
    neg = x < -ZERO_NODE_TOL
    if not np.any(pos):
        raise ZeroDenominatorError("measure has no positive nodes")
    ns = np.arange(n_max + 1)[:, None]
    with np.errstate(divide="ignore"):
        lw_pos = np.log(w[pos])[None, :] + ns * np.log(x[pos])[None, :]
    mpos = lw_pos.max(axis=1, keepdims=True)
    log_pos = mpos[:, 0] + np.log(np.exp(lw_pos - mpos).sum(axis=1))
    if np.any(neg):
        with np.errstate(divide="ignore"):
            lw_neg = np.log(w[neg])[None, :] + ns * np.log(-x[neg])[None, :]
        mneg = lw_neg.max(axis=1, keepdims=True)
        log_neg = mneg[:, 0] + np.log(np.exp(lw_neg - mneg).sum(axis=1))
        with np.errstate(over="ignore"):
            return np.exp(log_neg - log_pos)
    return np.zeros(n_max + 1)


def L_functional(
    measure: DiscreteMeasure,
    chain: ChainSpec,
    q_coefficients,
    n: int,
    digits: int = DEFAULT_DIGITS,
) -> float:
    """L_n(f) = int x^n f dpsi / int x^n dpsi for f = sum_m c_m Q_m.

    Raises ZeroDenominatorError when the denominator is numerically zero
    (periodic chain at odd n)."""
    coeffs = list(q_coefficients)
    deg = len(coeffs) - 1
    x = measure.nodes
    w = measure.weights
    qtab = _q_table_f64(chain, deg, tuple(x))
    f = np.zeros_like(x)
    for m, c in enumerate(coeffs):
        if c != 0:
            f += float(c) * qtab[m]
    scale = np.max(np.abs(x))
    t = w * (x / scale) ** n
    den = math.fsum(t)
    num = math.fsum(t * f)
    floor = 64 * len(x) * np.finfo(float).eps * math.fsum(np.abs(t))
    if abs(den) <= floor:
        raise ZeroDenominatorError(
            f"int x^{n} dpsi vanishes numerically (periodic measure, odd power)"
        )
    return num / den


@lru_cache(maxsize=32)
def _q_table_f64(chain: ChainSpec, deg: int, nodes: tuple) -> np.ndarray:
    """Q_0..Q_deg at the given nodes, float64 (bounded on the support)."""
    x = np.asarray(nodes)
    p, q, r, _ = chain.arrays(max(deg, 1))
    tab = np.empty((deg + 1, len(x)))
    tab[0] = 1.0
    if deg >= 1:
        tab[1] = (x - r[0]) / p[0]
    for k in range(1, deg):
        tab[k + 1] = ((x - r[k]) * tab[k] - q[k] * tab[k - 1]) / p[k]
    return tab


# --- transition probabilities ---------------------------------------------------


@dataclass(frozen=True)
class TransitionQuery:
    """P_ij(n) by the spectral formula and by matrix powers, optionally with
    a Monte Carlo estimate (estimate, standard error)."""

    i: int
    j: int
    n: int
    value_spectral: float
    value_matrix: float
    value_mc: tuple[float, float] | None = None


def matrix_transition_vector(chain: ChainSpec, i: int, n: int, dim: int | None = None) -> np.ndarray:
    """Distribution row e_i P^n, truncated at a dimension that is exact
    because mass moves at most one state per step."""
    if dim is None:
        dim = i + n + 2
    dim = int(min(dim, chain.depth))
    p, q, r, _ = chain.arrays(dim - 1)
    v = np.zeros(dim)
    v[i] = 1.0
    for _ in range(n):
        nxt = r[:dim] * v
        nxt[1:] += p[: dim - 1] * v[:-1]
        nxt[:-1] += q[1:dim] * v[1:]
        v = nxt
    return v


def spectral_transition(
    chain: ChainSpec, measure: DiscreteMeasure, i: int, j: int, n: int
) -> float:
    """pi_j int x^n Q_i Q_j dpsi over the discrete measure."""
    deg = max(i, j)
    qtab = _q_table_f64(chain, max(deg, 1), tuple(measure.nodes))
    with mp.workdps(20):
        pi_j = float(mp.exp(log_pi_mpf(chain, max(j, 1))[j]))
    x = measure.nodes
    return pi_j * float(math.fsum(measure.weights * x**n * qtab[i] * qtab[j]))


def transition_probability(
    chain: ChainSpec,
    i: int,
    j: int,
    n: int,
    N: int | None = None,
    digits: int = DEFAULT_DIGITS,
    measure: DiscreteMeasure | None = None,
    mc_samples: int = 0,
    seed: int = 0,
) -> TransitionQuery:
    """Cross-checked n-step transition probability.

    The quadrature size defaults to the smallest N integrating the
    degree-(n+i+j) integrand exactly."""
    if measure is None:
        if N is None:
            N = n // 2 + max(i, j) + 2
        measure = quadrature_from_chain(chain, N, digits=min(digits, FLOAT_DIGITS))
    spect = spectral_transition(chain, measure, i, j, n)
    v = matrix_transition_vector(chain, i, n)
    matrix = float(v[j]) if j < len(v) else 0.0
    mc = None
    if mc_samples:
        mc = monte_carlo_transition(chain, i, j, n, mc_samples, seed)
    return TransitionQuery(i, j, n, spect, matrix, mc)


def monte_carlo_transition(
    chain: ChainSpec, i: int, j: int, n: int, samples: int, seed: int
) -> tuple[float, float]:
    """Empirical P_ij(n) from `samples` trajectories (Philox counter-based
    stream, deterministic for a given seed; killed walks park in a sink)."""
    if samples < 10**3:
        raise ValueError("need at least 1e3 samples")
    top = i + n + 2
    p, q, r, _ = chain.arrays(top)
    thr_q = q[:top]
    thr_qr = q[:top] + r[:top]
    thr_qrp = thr_qr + p[:top]
    rng = np.random.Generator(np.random.Philox(key=seed))
    state = np.full(samples, i, dtype=np.int64)
    alive = np.ones(samples, dtype=bool)
    for _ in range(n):
        u = rng.random(samples)
        s = state[alive]
        ua = u[alive]
        down = ua < thr_q[s]
        hold = (~down) & (ua < thr_qr[s])
        up = (~down) & (~hold) & (ua < thr_qrp[s])
        killed = ~(down | hold | up)
        s = s + up.astype(np.int64) - down.astype(np.int64)
        state[alive] = s
        sub = alive.copy()
        sub[alive] = ~killed
        alive = sub
    hits = float(np.count_nonzero(alive & (state == j)))
    est = hits / samples
    se = math.sqrt(max(est * (1.0 - est), 1.0 / samples) / samples)
    return est, se


def monte_carlo_absorption(
    chain: ChainSpec,
    start: int,
    horizon: int,
    samples: int,
    seed: int,
    state_cap: int | None = None,
) -> tuple[float, float]:
    """Fraction of trajectories absorbed in the cemetery by `horizon` steps
    (a lower estimate of the eventual absorption probability; the censoring
    bias decays with the horizon).  Deterministic for a given seed."""
    cap = state_cap if state_cap is not None else start + horizon + 2
    p, q, r, _ = chain.arrays(cap - 1)
    thr_q = q[:cap]
    thr_qr = thr_q + r[:cap]
    thr_qrp = thr_qr + p[:cap]
    rng = np.random.Generator(np.random.Philox(key=seed))
    state = np.full(samples, start, dtype=np.int64)
    absorbed = 0
    for _ in range(horizon):
        m = len(state)
        if m == 0:
            break
        u = rng.random(m)
        down = u < thr_q[state]
        hold = (~down) & (u < thr_qr[state])
        up = (~down) & (~hold) & (u < thr_qrp[state])
        killed = ~(down | hold | up)
        absorbed += int(np.count_nonzero(killed))
        state = state[~killed] + up[~killed].astype(np.int64) - down[~killed].astype(np.int64)
    est = absorbed / samples
    se = math.sqrt(max(est * (1.0 - est), 1.0 / samples) / samples)
    return est, se


@dataclass(frozen=True)
class EventualAbsorption:
    """Monte Carlo estimate of the eventual absorption probability.

    Censoring at a finite horizon biases the plain absorbed fraction low,
    so the deficit is extrapolated across three geometric horizons: a
    stalling deficit means genuine survivors (transient escape), a deficit
    shrinking with ratio rho per horizon quadrupling is continued
    geometrically to zero."""

    estimate: float
    std_error: float
    horizons: tuple[int, ...]
    absorbed_fractions: tuple[float, ...]


def monte_carlo_eventual_absorption(
    chain: ChainSpec, start: int, samples: int, seed: int, base_horizon: int = 2500
) -> EventualAbsorption:
    horizons = (base_horizon, 4 * base_horizon, 16 * base_horizon)
    fractions = []
    errors = []
    for k, T in enumerate(horizons):
        est, se = monte_carlo_absorption(chain, start, T, samples, seed + k)
        fractions.append(est)
        errors.append(se)
    d1, d2, d3 = (1.0 - f for f in fractions)
    diff12, diff23 = d1 - d2, d2 - d3
    noise = math.sqrt(errors[1] ** 2 + errors[2] ** 2)
    if diff23 <= 4 * noise or diff12 <= 0:
        # deficit has stalled: the survivors are genuine
        stalled = d3
        se = errors[2]
    else:
        rho = diff23 / diff12
        if 0 < rho < 0.95:
            weight = rho / (1.0 - rho)
            stalled = max(0.0, d3 - diff23 * weight)
            se = math.sqrt(
                ((1 + weight) * errors[2]) ** 2 + (weight * errors[1]) ** 2
            )
        else:
            stalled = d3
            se = errors[2]
    return EventualAbsorption(
        1.0 - stalled, se, horizons, tuple(fractions)
    )


@dataclass(frozen=True)
class SrlpComparison:
    """Predicted strong-ratio limit of P_ij(n)/P_kl(n) with the empirical
    matrix-power ratios up to the horizon."""

    predicted: float
    ns: np.ndarray
    ratios: np.ndarray


def srlp_predicted_limit(
    chain: ChainSpec,
    i: int,
    j: int,
    k: int,
    l: int,
    eta,
    digits: int = DEFAULT_DIGITS,
    horizon: int = 200,
) -> SrlpComparison:
    """pi_j Q_i(eta) Q_j(eta) / (pi_l Q_k(eta) Q_l(eta)) and the companion
    empirical sequence."""
    top = max(i, j, k, l)
    dps = digits + 8
    qv = q_values(chain, max(top, 1), eta, dps)
    with mp.workdps(dps):
        logpi = log_pi_mpf(chain, max(top, 1))
        if qv[k] <= 0 or qv[l] <= 0 or qv[i] <= 0 or qv[j] <= 0:
            raise DivisionSentinelError(
                f"{chain.label}: Q at eta-hat = {float(eta)} vanished or went "
                "negative; the edge estimate sits below the true edge"
            )
        predicted = float(
            mp.exp(logpi[j] - logpi[l]) * qv[i] * qv[j] / (qv[k] * qv[l])
        )
    dim = int(min(max(i, k) + horizon + 2, chain.depth))
    vi = matrix_transition_vector(chain, i, 0, dim)
    vk = matrix_transition_vector(chain, k, 0, dim)
    p, q, r, _ = chain.arrays(dim - 1)

    def step(v):
        nxt = r[:dim] * v
        nxt[1:] += p[: dim - 1] * v[:-1]
        nxt[:-1] += q[1:dim] * v[1:]
        return nxt

    ns = []
    ratios = []
    for n in range(1, horizon + 1):
        vi = step(vi)
        vk = step(vk)
        den = vk[l]
        if den > 0:
            ns.append(n)
            ratios.append(float(vi[j] / den))
    return SrlpComparison(predicted, np.asarray(ns), np.asarray(ratios))
