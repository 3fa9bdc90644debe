"""Birth-death chains with optional killing, and coefficient-level analysis.

A chain is given by its one-step transition probabilities p_j (up), q_j
(down), r_j (hold) and kappa_j (killing), as a finite prefix of exact
rationals plus a closed-form tail rule in j.  Everything that can be read
off the coefficients alone lives here: potential coefficients, the
recurrence/transience series, the asymptotic-aperiodicity and killing
double sums, and periodicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np

from . import expressions as ex
from .errors import ChainHasKillingError, MalformedChainError
from .numeric import SignedLog, mpf_from_fraction

SUM_TOL = Fraction(1, 10**14)
DEFAULT_DIGITS = 34

ZERO = ex.Const(Fraction(0))


@dataclass(frozen=True, slots=True)
class CoeffRule:
    """One coefficient family: exact prefix values plus an optional tail
    expression in j.  tail=None means the family is undefined beyond the
    prefix (recovered, finite-depth chains)."""

    prefix: tuple[Fraction, ...]
    tail: ex.Expr | None = None

    def at(self, j: int) -> Fraction:
        if j < len(self.prefix):
            return self.prefix[j]
        if self.tail is None:
            raise MalformedChainError(
                f"coefficient requested at j={j} beyond prefix depth "
                f"{len(self.prefix)} of a tail-less chain"
            )
        try:
            return ex.eval_fraction(self.tail, j)
        except ZeroDivisionError as exc:
            raise MalformedChainError(f"tail rule pole at j={j}") from exc

    @property
    def depth(self) -> float:
        return math.inf if self.tail is not None else len(self.prefix)

    def array(self, n: int) -> np.ndarray:
        """float64 values for j = 0..n."""
        vals = np.empty(n + 1)
        k = min(len(self.prefix), n + 1)
        vals[:k] = [float(v) for v in self.prefix[:k]]
        if n + 1 > k:
            if self.tail is None:
                raise MalformedChainError(
                    f"coefficients requested to j={n} beyond prefix depth {k}"
                )
            vals[k:] = ex.eval_numpy(self.tail, np.arange(k, n + 1, dtype=float))
        return vals


def rule(prefix=(), tail: str | ex.Expr | None = None) -> CoeffRule:
    """Convenience constructor accepting strings and ints/floats."""
    if isinstance(tail, str):
        tail = ex.parse(tail, "j")
    return CoeffRule(tuple(Fraction(v) for v in prefix), tail)


@dataclass(frozen=True, slots=True)
class ChainSpec:
    """One-step transition parameters of a birth-death chain on 0,1,2,...

    Invariants (checked by validate): q_0 = 0, p_j > 0, q_{j+1} > 0,
    r_j >= 0, kappa_j >= 0 and p+q+r+kappa = 1 (exactly for rational tails,
    within 1e-14 for floating prefixes).
    """

    label: str
    p: CoeffRule
    q: CoeffRule
    r: CoeffRule
    kappa: CoeffRule = CoeffRule((), ZERO)

    @property
    def depth(self) -> float:
        return min(self.p.depth, self.q.depth, self.r.depth, self.kappa.depth)

    def at(self, j: int) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.p.at(j), self.q.at(j), self.r.at(j), self.kappa.at(j))

    def arrays(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (self.p.array(n), self.q.array(n), self.r.array(n), self.kappa.array(n))

    def mpf_at(self, j: int):
        return tuple(mpf_from_fraction(v) for v in self.at(j))

    def has_killing(self, horizon: int = 256) -> bool:
        if any(v != 0 for v in self.kappa.prefix):
            return True
        if self.kappa.tail is None:
            return False
        return not ex.is_zero(self.kappa.tail, start=len(self.kappa.prefix))

    def validate(self, check_depth: int = 200) -> None:
        if self.q.at(0) != 0:
            raise MalformedChainError(f"{self.label}: q_0 must be 0")
        depth = self.depth
        top = int(min(check_depth, depth - 1))
        for j in range(top + 1):
            p, q, r, k = self.at(j)
            if p <= 0:
                raise MalformedChainError(f"{self.label}: p_{j} = {p} not > 0")
            if j >= 1 and q <= 0:
                raise MalformedChainError(f"{self.label}: q_{j} = {q} not > 0")
            if r < 0 or k < 0:
                raise MalformedChainError(f"{self.label}: negative r or kappa at j={j}")
            s = p + q + r + k
            if abs(s - 1) > SUM_TOL:
                raise MalformedChainError(
                    f"{self.label}: p+q+r+kappa = {float(s)} at j={j}"
                )
        # tail rules must stay evaluable far out
        if depth == math.inf:
            far = np.array([1e6])
            for name in ("p", "q", "r", "kappa"):
                tail = getattr(self, name).tail
                if tail is not None:
                    v = ex.eval_numpy(tail, far)[0]
                    if not np.isfinite(v):
                        raise MalformedChainError(
                            f"{self.label}: {name} tail not evaluable at j=1e6"
                        )


def is_periodic(chain: ChainSpec) -> bool:
    """True iff r_j = 0 for every j (decidable for supported tail forms)."""
    if any(v != 0 for v in chain.r.prefix):
        return False
    if chain.r.tail is None:
        return True
    return ex.is_zero(chain.r.tail, start=len(chain.r.prefix))


# --- potential coefficients --------------------------------------------------


def log_pi_mpf(chain: ChainSpec, n: int) -> list:
    """ln pi_j for j = 0..n at the current working precision."""
    logs = [mp.mpf(0)]
    acc = mp.mpf(0)
    for j in range(n):
        p = mpf_from_fraction(chain.p.at(j))
        q = mpf_from_fraction(chain.q.at(j + 1))
        acc += mp.log(p) - mp.log(q)
        logs.append(acc)
    return logs


def potential_coefficients(
    chain: ChainSpec, n: int, digits: int = DEFAULT_DIGITS
) -> list[SignedLog]:
    """pi_0..pi_n as sign/log pairs (pi_0 = 1, pi_{j+1} = pi_j p_j / q_{j+1})."""
    if n < 0:
        raise ValueError("n must be >= 0")
    with mp.workdps(digits):
        return [SignedLog(1, float(lg)) for lg in log_pi_mpf(chain, n)]


# --- divergence verdicts ------------------------------------------------------


@dataclass(frozen=True)
class DivergenceVerdict:
    """Trinary verdict on a nonnegative series, with its partial sums.

    verdict is 'diverges', 'converges' or 'undecided'; for 'converges' the
    extrapolated bound is attached.  tail_analysis records which rule fired.
    """

    partial_sums: np.ndarray
    verdict: str
    tail_analysis: str | None = None
    bound: float | None = None


def _aitken_last(seq: np.ndarray) -> float:
    """Last Aitken-accelerated value of a sequence (nan when degenerate)."""
    if len(seq) < 3:
        return float("nan")
    x0, x1, x2 = seq[-3], seq[-2], seq[-1]
    d2 = (x2 - x1) - (x1 - x0)
    if d2 == 0:
        return float(x2)
    return float(x2 - (x2 - x1) ** 2 / d2)


def classify_series(
    partial: np.ndarray,
    summands: np.ndarray,
    divergence_bound: float = 1e8,
    stabilize_rtol: float = 1e-6,
    slope_margin: float = 0.02,
) -> DivergenceVerdict:
    """Heuristic trinary divergence verdict.

    converges: summands identically zero, or Aitken-accelerated partial sums
    stable to stabilize_rtol across two decades of indices, or a clean
    power-law summand fit with exponent <= -1 - slope_margin (bound then
    includes the extrapolated tail).
    diverges: partial sums (raw or accelerated) exceed divergence_bound, or
    the summand tail fits c*j^s with s >= -1 + slope_margin.
    Everything else is undecided.
    """
    partial = np.asarray(partial, dtype=float)
    summands = np.asarray(summands, dtype=float)
    n = len(partial)
    if np.all(summands == 0.0):
        return DivergenceVerdict(partial, "converges", "all summands zero",
                                 float(partial[-1]))
    if n >= 16:
        checkpoints = sorted({n - 1, max(8, n // 10), max(4, n // 100)})
        acc = [_aitken_last(partial[: k + 1]) for k in checkpoints]
        if all(math.isfinite(a) for a in acc):
            scale = max(abs(acc[-1]), 1e-300)
            if (max(acc) - min(acc)) / scale < stabilize_rtol:
                return DivergenceVerdict(
                    partial, "converges",
                    f"aitken stable at {acc[-1]:.6g} over indices {checkpoints}",
                    acc[-1],
                )
    last_acc = _aitken_last(partial)
    if partial[-1] > divergence_bound or (
        math.isfinite(last_acc) and last_acc > divergence_bound
    ):
        return DivergenceVerdict(
            partial, "diverges", f"partial sums exceed bound {divergence_bound:g}"
        )
    # power-law fit of the summand over the last decade of indices
    j = np.arange(n, dtype=float)
    lo = max(1, n // 10)
    window = slice(lo, n)
    t = summands[window]
    if np.all(t > 0) and n - lo >= 4:
        lj = np.log(j[window])
        lt = np.log(t)
        s, intercept = np.polyfit(lj, lt, 1)
        resid = float(np.sqrt(np.mean((lt - (s * lj + intercept)) ** 2)))
        if resid < 0.2:
            if s >= -1.0 + slope_margin:
                return DivergenceVerdict(
                    partial, "diverges",
                    f"summand ~ j^{s:.3f} >= 1/j over j in [{lo},{n - 1}]",
                )
            if s <= -1.0 - slope_margin:
                c = math.exp(intercept)
                tail = c * (n - 1) ** (s + 1) / (-1.0 - s)
                return DivergenceVerdict(
                    partial, "converges",
                    f"summand ~ j^{s:.3f}, extrapolated tail {tail:.3g}",
                    float(partial[-1] + tail),
                )
    return DivergenceVerdict(partial, "undecided", "no rule fired")


def _series_float(chain: ChainSpec, n: int):
    """float64 p, q, r, kappa, log-pi and 1/(p_j pi_j) for j = 0..n.

    pi_j overflows float64 for transient chains, so everything stays in
    log space until the final (order-one) summands.
    """
    p, q, r, k = chain.arrays(n)
    logpi = np.zeros(n + 1)
    logpi[1:] = np.cumsum(np.log(p[:-1]) - np.log(q[1:]))
    with np.errstate(over="ignore", under="ignore"):
        inv_ppi = np.exp(-(np.log(p) + logpi))
    return p, q, r, k, logpi, inv_ppi


def _weighted_double_sum(weights: np.ndarray, p: np.ndarray, logpi: np.ndarray):
    """Summands of sum_j (1/(p_j pi_j)) sum_{m<=j} w_m pi_m in log space."""
    with np.errstate(divide="ignore", over="ignore", under="ignore", invalid="ignore"):
        inner_log = np.logaddexp.accumulate(np.log(weights) + logpi)
        term_log = inner_log - (np.log(p) + logpi)
        terms = np.exp(term_log)
    terms[np.isneginf(term_log)] = 0.0
    return terms


def _inverse_ppi_terms_mpf(chain: ChainSpec, n: int, digits: int) -> np.ndarray:
    with mp.workdps(digits):
        terms = np.empty(n + 1)
        log_pi = mp.mpf(0)
        for j in range(n + 1):
            p, q, _, _ = chain.mpf_at(j)
            if j > 0:
                log_pi += mp.log(mpf_from_fraction(chain.p.at(j - 1))) - mp.log(q)
            terms[j] = float(mp.exp(-(mp.log(p) + log_pi)))
    return terms


def _double_sum_terms_mpf(chain: ChainSpec, n: int, which: str, digits: int) -> np.ndarray:
    with mp.workdps(digits):
        terms = np.empty(n + 1)
        log_pi = mp.mpf(0)
        inner = mp.mpf(0)
        for j in range(n + 1):
            p, q, r, k = chain.mpf_at(j)
            if j > 0:
                log_pi += mp.log(mpf_from_fraction(chain.p.at(j - 1))) - mp.log(q)
            pi_j = mp.exp(log_pi)
            inner += (r if which == "r" else k) * pi_j
            terms[j] = float(inner / (p * pi_j))
    return terms


FLOAT_SERIES_DIGITS = 16


def series_L(chain: ChainSpec, n: int, digits: int = DEFAULT_DIGITS) -> DivergenceVerdict:
    """Partial sums of sum_j 1/(p_j pi_j): diverges iff the chain is recurrent."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if digits <= FLOAT_SERIES_DIGITS:
        _, _, _, _, _, terms = _series_float(chain, n)
    else:
        terms = _inverse_ppi_terms_mpf(chain, n, digits)
    return classify_series(np.cumsum(terms), terms)


def asymptotic_aperiodicity_sum(
    chain: ChainSpec, n: int, digits: int = DEFAULT_DIGITS
) -> DivergenceVerdict:
    """Double sum sum_j (1/(p_j pi_j)) sum_{m<=j} r_m pi_m.

    Divergence is equivalent to asymptotic aperiodicity for honest chains;
    raises ChainHasKillingError when any kappa_j > 0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if chain.has_killing(horizon=max(256, n)):
        raise ChainHasKillingError(
            f"{chain.label}: aperiodicity sum is defined for honest chains only"
        )
    if digits <= FLOAT_SERIES_DIGITS:
        p, _, r, _, logpi, _ = _series_float(chain, n)
        terms = _weighted_double_sum(r, p, logpi)
    else:
        terms = _double_sum_terms_mpf(chain, n, "r", digits)
    return classify_series(np.cumsum(terms), terms)


def rj_over_pj_sum(chain: ChainSpec, n: int, digits: int = DEFAULT_DIGITS) -> DivergenceVerdict:
    """Partial sums of sum_j r_j/p_j (sufficient condition, dominated by the
    aperiodicity double sum termwise)."""
    if digits <= FLOAT_SERIES_DIGITS:
        p, _, r, _ = chain.arrays(n)
        terms = r / p
    else:
        with mp.workdps(digits):
            terms = np.array([
                float(mpf_from_fraction(chain.r.at(j)) / mpf_from_fraction(chain.p.at(j)))
                for j in range(n + 1)
            ])
    return classify_series(np.cumsum(terms), terms)


def killing_sum(chain: ChainSpec, n: int, digits: int = DEFAULT_DIGITS) -> DivergenceVerdict:
    """Double sum sum_j (1/(p_j pi_j)) sum_{m<=j} kappa_m pi_m.

    Divergence is equivalent to certain eventual absorption in the cemetery
    state (equivalently Q_n(1) -> infinity)."""
    if digits <= FLOAT_SERIES_DIGITS:
        p, _, _, k, logpi, _ = _series_float(chain, n)
        terms = _weighted_double_sum(k, p, logpi)
    else:
        terms = _double_sum_terms_mpf(chain, n, "kappa", digits)
    return classify_series(np.cumsum(terms), terms)
