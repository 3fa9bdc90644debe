"""Evaluation of the chain's polynomial family and derived quantities.

The Q_n satisfy x Q_n = q_n Q_{n-1} + r_n Q_n + p_n Q_{n+1} with Q_0 = 1 and
p_0 Q_1 = x - r_0, so Q_n(1) = 1 for honest chains.  Everything here runs the
forward recurrence in mpmath (whose unbounded exponent absorbs the growth
that overflows float64) and reports sign/log-magnitude values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np

from .chains import DEFAULT_DIGITS, ChainSpec, killing_sum, log_pi_mpf
from .errors import (
    IdentityMismatchError,
    MethodsDisagreeError,
    PrecisionExhaustedError,
    UndecidedLimitError,
)
from .limits import estimate_limit, richardson_pair
from .numeric import NEG_INF, SignedLog, mpf_from_fraction, signed_log
from .tridiagonal import (
    FLOAT_DIGITS,
    extreme_eigen_f64,
    extreme_eigen_mpf,
    jacobi_arrays_f64,
    jacobi_arrays_mpf,
)


def to_mpf(x) -> mp.mpf:
    if isinstance(x, Fraction):
        return mpf_from_fraction(x)
    if isinstance(x, str):
        if "/" in x:
            return mpf_from_fraction(Fraction(x))
        return mp.mpf(x)
    return mp.mpf(x)


@lru_cache(maxsize=64)
def _coeff_mpf_cached(chain: ChainSpec, n: int, dps: int):
    """(p, q, r) mpf tuples for j = 0..n at dps working digits."""
    with mp.workdps(dps):
        p = []
        q = []
        r = []
        for j in range(n + 1):
            pj, qj, rj, _ = chain.mpf_at(j)
            p.append(pj)
            q.append(qj)
            r.append(rj)
    return tuple(p), tuple(q), tuple(r)


def q_values(chain: ChainSpec, n: int, x, dps: int) -> list:
    """Q_0(x)..Q_n(x) as mpf at dps working digits (no overflow possible)."""
    p, q, r = _coeff_mpf_cached(chain, max(n - 1, 0), dps)
    with mp.workdps(dps):
        xm = to_mpf(x)
        vals = [mp.mpf(1)]
        if n == 0:
            return vals
        cur = (xm - r[0]) / p[0]
        vals.append(cur)
        prev = vals[0]
        for k in range(1, n):
            nxt = ((xm - r[k]) * cur - q[k] * prev) / p[k]
            prev, cur = cur, nxt
            vals.append(nxt)
    return vals


@dataclass(frozen=True)
class EvalTrace:
    """Sign/log-magnitude values of Q_0..Q_n and p_0..p_n at one point."""

    point: float
    values: tuple[SignedLog, ...]
    orthonormal_values: tuple[SignedLog, ...]
    chain_label: str

    def q_float(self, k: int) -> float:
        return self.values[k].value


def _agreement_failed(full, half, digits: int) -> bool:
    """True when the half-precision run shares no digits with the full one,
    i.e. fewer than digits/2 digits of the full run can be trusted."""
    if full == half:
        return False
    scale = max(abs(full), abs(half))
    if scale == 0:
        return False
    return abs(full - half) / scale >= mp.mpf("0.5")


def eval_Q(
    chain: ChainSpec,
    n: int,
    x,
    digits: int = DEFAULT_DIGITS,
    check_precision: bool = True,
) -> EvalTrace:
    """Forward-recurrence evaluation with sign/log representation.

    Raises PrecisionExhaustedError when a half-precision rerun disagrees
    completely with the full run (estimated error above half the requested
    digits).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    dps = digits + 8
    vals = q_values(chain, n, x, dps)
    if check_precision and n >= 1:
        half = q_values(chain, n, x, max(digits // 2, 6) + 8)
        with mp.workdps(dps):
            if _agreement_failed(vals[-1], half[-1], digits):
                raise PrecisionExhaustedError(
                    f"Q_{n}({x}) carries fewer than {digits // 2} reliable digits "
                    f"at {digits}-digit working precision"
                )
    with mp.workdps(dps):
        logpi = log_pi_mpf(chain, n)
        traces = tuple(signed_log(v) for v in vals)
        ortho = tuple(
            SignedLog(t.sign, float(t.log + 0.5 * lp)) if t.sign != 0 else t
            for t, lp in zip(traces, logpi)
        )
    return EvalTrace(float(x), traces, ortho, chain.label)


def leading_coefficient(chain: ChainSpec, n: int, digits: int = DEFAULT_DIGITS) -> SignedLog:
    """gamma_n > 0 with gamma_n^-2 = prod_{i=1..n} p_{i-1} q_i, as sign/log."""
    if n < 1:
        raise ValueError("n must be >= 1")
    with mp.workdps(digits):
        acc = mp.mpf(0)
        for i in range(1, n + 1):
            acc += mp.log(mpf_from_fraction(chain.p.at(i - 1))) + mp.log(
                mpf_from_fraction(chain.q.at(i))
            )
        return SignedLog(1, float(-acc / 2))


def christoffel(chain: ChainSpec, n: int, x, digits: int = DEFAULT_DIGITS) -> mp.mpf:
    """rho_n(x) = 1 / sum_{j<n} p_j(x)^2 (strictly positive mpf)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dps = digits + 8
    vals = q_values(chain, n - 1, x, dps)
    with mp.workdps(dps):
        logpi = log_pi_mpf(chain, n - 1)
        s = mp.fsum(mp.exp(lp) * v * v for lp, v in zip(logpi, vals))
        return 1 / s


@dataclass(frozen=True)
class RatioSequences:
    """rho_k(-eta)/rho_k(eta) for k = 1..n_max alongside the companion
    Q_k(eta)^2/Q_k(-eta)^2 for k = 0..n_max (floats; underflow reads 0.0)."""

    eta: float
    ratios: np.ndarray
    q_sq_ratios: np.ndarray
    log10_ratios: np.ndarray


def christoffel_ratio_sequence(
    chain: ChainSpec, n_max: int, eta, digits: int = DEFAULT_DIGITS
) -> RatioSequences:
    """One forward pass at +eta and -eta; each ratio lies in (0, 1] up to
    the working precision."""
    dps = digits + 8
    pos = q_values(chain, n_max, eta, dps)
    with mp.workdps(dps):
        neg = q_values(chain, n_max, -to_mpf(eta), dps)
        logpi = log_pi_mpf(chain, n_max)
        ratios = np.empty(n_max)
        logr = np.empty(n_max)
        qsq = np.empty(n_max + 1)
        s_pos = mp.mpf(0)
        s_neg = mp.mpf(0)
        for k in range(n_max + 1):
            w = mp.exp(logpi[k])
            if k >= 1:
                ratio = s_pos / s_neg
                ratios[k - 1] = float(ratio)
                logr[k - 1] = float(mp.log10(ratio)) if ratio > 0 else NEG_INF
            s_pos += w * pos[k] * pos[k]
            s_neg += w * neg[k] * neg[k]
            qsq[k] = float((pos[k] / neg[k]) ** 2) if neg[k] != 0 else math.inf
    return RatioSequences(float(eta), ratios, qsq, logr)


def cd_identity_residual(
    chain: ChainSpec, n: int, x, y, digits: int = DEFAULT_DIGITS
) -> float:
    """Relative residual of the kernel identity
    p_n pi_n (Q_n(x) Q_{n+1}(y) - Q_n(y) Q_{n+1}(x)) =
    (y - x) sum_{j<=n} pi_j Q_j(x) Q_j(y)."""
    if x == y:
        raise ValueError("x and y must differ")
    dps = digits + 8
    qx = q_values(chain, n + 1, x, dps)
    qy = q_values(chain, n + 1, y, dps)
    with mp.workdps(dps):
        logpi = log_pi_mpf(chain, n + 1)
        pn = mpf_from_fraction(chain.p.at(n))
        lhs = pn * mp.exp(logpi[n]) * (qx[n] * qy[n + 1] - qy[n] * qx[n + 1])
        rhs = (to_mpf(y) - to_mpf(x)) * mp.fsum(
            mp.exp(logpi[j]) * qx[j] * qy[j] for j in range(n + 1)
        )
        scale = max(abs(lhs), abs(rhs), mp.mpf(10) ** (-dps))
        return float(abs(lhs - rhs) / scale)


# --- support edges ------------------------------------------------------------


@dataclass(frozen=True)
class SupportEdges:
    """Two-route estimates of the support edges of the orthogonality measure.

    eta_hat/zeta_hat are Richardson-extrapolated eigenvalue estimates; the
    raw same-truncation eigenvalue and positivity-bisection values (which
    both target the extreme zero of the degree-`truncation` polynomial) are
    kept for the cross-check, their gap recorded as `discrepancy`.
    """

    eta_hat: float
    zeta_hat: float
    method: str
    truncation_size: int
    discrepancy: float
    eta_eigen: float
    eta_bisection: float
    zeta_eigen: float
    zeta_bisection: float


def _positivity_infimum(
    chain: ChainSpec, horizon: int, lo: float, hi: float, tol: float,
    digits: int, sign_flip: bool,
) -> float:
    """Bisection end point of {x : (+-1)^k Q_k(x) > 0 for all k <= horizon}.

    For the top edge (sign_flip False) returns the predicate-true end `hi`;
    call with mirrored bracket for the bottom edge.
    """
    dps = digits + 8

    def positive(xv: float) -> bool:
        p, q, r = _coeff_mpf_cached(chain, horizon - 1, dps)
        with mp.workdps(dps):
            xm = mp.mpf(xv)
            prev = mp.mpf(1)
            cur = (xm - r[0]) / p[0]
            if (-cur if sign_flip else cur) <= 0:
                return False
            for k in range(1, horizon):
                prev, cur = cur, ((xm - r[k]) * cur - q[k] * prev) / p[k]
                good = -cur if (sign_flip and (k + 1) % 2 == 1) else cur
                if good <= 0:
                    return False
        return True

    if not positive(hi):
        raise MethodsDisagreeError(
            f"{chain.label}: positivity predicate false at bracket end {hi}"
        )
    if positive(lo):
        return lo
    while hi - lo > tol / 8:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            hi = mid
        else:
            lo = mid
    return hi


def support_edges(
    chain: ChainSpec,
    truncation: int = 2000,
    tol: float = 1e-6,
    digits: int = DEFAULT_DIGITS,
) -> SupportEdges:
    """Edge estimates from (a) extreme eigenvalues of the truncated Jacobi
    matrix with Richardson extrapolation over truncation and truncation/2,
    and (b) bisection on the finite-horizon positivity predicates."""
    if truncation < 50:
        raise ValueError("truncation must be >= 50")
    sizes = (truncation // 2, truncation)
    if digits <= FLOAT_DIGITS:
        ems = []
        for sz in sizes:
            d, e = jacobi_arrays_f64(chain, sz)
            ems.append((extreme_eigen_f64(d, e, "max"),
                        extreme_eigen_f64(d, e, "min")))
    else:
        ems = []
        for sz in sizes:
            d, e = jacobi_arrays_mpf(chain, sz)
            with mp.workdps(digits + 8):
                ems.append((float(extreme_eigen_mpf(d, e, "max", digits)),
                            float(extreme_eigen_mpf(d, e, "min", digits))))
    (eta_c, zeta_c), (eta_f, zeta_f) = ems
    eta_hat = richardson_pair(eta_c, eta_f, order=2)
    zeta_hat = richardson_pair(zeta_c, zeta_f, order=2)

    pad = max(10 * tol, 1e-9)
    eta_bis = _positivity_infimum(
        chain, truncation, eta_f - pad, 1.0 + pad, tol, digits, sign_flip=False
    )
    # bottom edge: mirror predicate, return the predicate-true (lower) end
    lo, hi = -1.0 - pad, zeta_f + pad
    dps = digits + 8

    def negative_side(xv: float) -> bool:
        p, q, r = _coeff_mpf_cached(chain, truncation - 1, dps)
        with mp.workdps(dps):
            xm = mp.mpf(xv)
            prev = mp.mpf(1)
            cur = (xm - r[0]) / p[0]
            if -cur <= 0:
                return False
            sign = -1
            for k in range(1, truncation):
                prev, cur = cur, ((xm - r[k]) * cur - q[k] * prev) / p[k]
                sign = -sign
                if sign * cur <= 0:
                    return False
        return True

    if not negative_side(lo):
        raise MethodsDisagreeError(
            f"{chain.label}: alternating-positivity predicate false at {lo}"
        )
    if negative_side(hi):
        zeta_bis = hi
    else:
        while hi - lo > tol / 8:
            mid = 0.5 * (lo + hi)
            if negative_side(mid):
                lo = mid
            else:
                hi = mid
        zeta_bis = lo

    discrepancy = max(abs(eta_bis - eta_f), abs(zeta_bis - zeta_f))
    if discrepancy > 10 * tol:
        raise MethodsDisagreeError(
            f"{chain.label}: edge routes disagree by {discrepancy:.3g} "
            f"(tol {tol:g})"
        )
    method = "cross-checked" if discrepancy <= tol else "jacobi-eigen"
    return SupportEdges(
        eta_hat=float(eta_hat),
        zeta_hat=float(zeta_hat),
        method=method,
        truncation_size=truncation,
        discrepancy=float(discrepancy),
        eta_eigen=float(eta_f),
        eta_bisection=float(eta_bis),
        zeta_eigen=float(zeta_f),
        zeta_bisection=float(zeta_bis),
    )


# --- killing-side quantities ---------------------------------------------------


def q_at_one_growth(chain: ChainSpec, n: int, digits: int = DEFAULT_DIGITS) -> list[float]:
    """Q_0(1)..Q_n(1), computed by the recurrence and cross-checked against
    the killing double-sum identity; a mismatch is an arithmetic fault."""
    dps = digits + 8
    vals = q_values(chain, n, 1, dps)
    with mp.workdps(dps):
        logpi = log_pi_mpf(chain, n)
        acc = mp.mpf(0)  # sum over j of (1/(p_j pi_j)) sum_{m<=j} kappa_m pi_m Q_m(1)
        inner = mp.mpf(0)
        tol = mp.mpf(10) ** (-(digits // 2))
        for j in range(n):
            pj, _, _, kj = chain.mpf_at(j)
            inner += kj * mp.exp(logpi[j]) * vals[j]
            acc += inner / (pj * mp.exp(logpi[j]))
            identity = 1 + acc
            if abs(identity - vals[j + 1]) > tol * max(1, abs(identity)):
                raise IdentityMismatchError(
                    f"{chain.label}: Q_{j + 1}(1) recurrence/double-sum mismatch "
                    f"{float(vals[j + 1])} vs {float(identity)}"
                )
    return [float(v) for v in vals]


@dataclass(frozen=True)
class AbsorptionResult:
    """Absorption probabilities tau_j = 1 - Q_j(1)/Q_inf(1), with the route
    that determined Q_inf(1)."""

    tau: tuple[float, ...]
    q_infinity: float
    route: str


def absorption_probabilities(
    chain: ChainSpec, j_max: int, n_trunc: int, digits: int = DEFAULT_DIGITS
) -> AbsorptionResult:
    """tau_j for j = 0..j_max; Q_inf(1) by limit extrapolation of Q_n(1), or
    declared infinite when the killing double sum diverges (tau = 1)."""
    if not chain.has_killing():
        return AbsorptionResult(tuple(0.0 for _ in range(j_max + 1)), 1.0, "no-killing")
    verdict = killing_sum(chain, n_trunc, digits)
    growth = q_at_one_growth(chain, max(j_max, n_trunc), digits)
    if verdict.verdict == "diverges":
        return AbsorptionResult(
            tuple(1.0 for _ in range(j_max + 1)), math.inf, "killing-sum-diverges"
        )
    est = estimate_limit(growth)
    if est.kind == "infinite":
        return AbsorptionResult(
            tuple(1.0 for _ in range(j_max + 1)), math.inf, "growth-diverges"
        )
    if est.kind != "finite" or (
        verdict.verdict == "undecided" and est.uncertainty > 1e-3 * abs(est.value)
    ):
        raise UndecidedLimitError(
            f"{chain.label}: neither Q_n(1) extrapolation nor the killing sum "
            f"decided (verdict {verdict.verdict}, estimate {est})"
        )
    qinf = est.value
    tau = tuple(min(1.0, max(0.0, 1.0 - growth[j] / qinf)) for j in range(j_max + 1))
    return AbsorptionResult(tau, qinf, "extrapolated")
