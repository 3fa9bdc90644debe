"""From an analytic edge-weight description to a chain: discretize the
weight, run the Stieltjes/Lanczos inner-product recursion for recurrence
coefficients, and solve for one-step probabilities under p + q + r = 1.

Recovery failure (a negative diagonal or an infeasible p_k) is a first-class
result carrying the first failing index, so experiments can map where the
random-walk-measure condition breaks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath as mp
import numpy as np

from . import expressions as ex
from .chains import ChainSpec, CoeffRule, DEFAULT_DIGITS
from .errors import InputError, StieltjesBreakdownError
from .measures import DiscreteMeasure, _measure_from_arrays
from .numeric import mpf_from_fraction
from .tridiagonal import FLOAT_DIGITS

PANEL_ORDER = 60


@dataclass(frozen=True)
class WeightSpec:
    """Edge-power weight on (-eta, eta): density proportional to
    (eta - x)^alpha (eta + x)^beta * smooth(x), plus optional atoms.

    alpha/beta >= 0 keep the density integrable and bounded; the smooth
    factor must be positive on the closed interval.  Atom masses are raw
    and are normalized together with the density to total mass one.
    """

    label: str
    eta: Fraction
    alpha: Fraction
    beta: Fraction
    smooth: ex.Expr
    atoms: tuple[tuple[Fraction, Fraction], ...] = ()

    def validate(self) -> None:
        if self.eta <= 0:
            raise InputError(f"{self.label}: eta must be > 0")
        if self.alpha < 0 or self.beta < 0:
            raise InputError(f"{self.label}: alpha and beta must be >= 0")
        grid = [Fraction(k, 16) * self.eta for k in range(-16, 17)]
        for xv in grid:
            if ex.eval_fraction(self.smooth, xv) <= 0:
                raise InputError(
                    f"{self.label}: smooth factor not positive at x={float(xv)}"
                )
        for loc, mass in self.atoms:
            if abs(loc) > self.eta:
                raise InputError(f"{self.label}: atom at {float(loc)} outside support")
            if mass <= 0:
                raise InputError(f"{self.label}: atom mass must be positive")


def make_weight(label, eta, alpha, beta, smooth="1", atoms=()) -> WeightSpec:
    if isinstance(smooth, str):
        smooth = ex.parse(smooth, "x")
    spec = WeightSpec(
        label,
        Fraction(eta),
        Fraction(alpha),
        Fraction(beta),
        smooth,
        tuple((Fraction(a), Fraction(m)) for a, m in atoms),
    )
    spec.validate()
    return spec


@lru_cache(maxsize=8)
def _gauss_legendre_mpf(order: int, dps: int):
    """Gauss-Legendre nodes/weights on [-1, 1] at dps digits (Newton on the
    Legendre recurrence from Chebyshev seeds)."""
    with mp.workdps(dps + 10):
        nodes = []
        weights = []
        for k in range(1, order + 1):
            x = mp.cos(mp.pi * (4 * k - 1) / (4 * order + 2))
            for _ in range(40):
                p_prev, p_cur = mp.mpf(1), x
                for m in range(2, order + 1):
                    p_prev, p_cur = p_cur, ((2 * m - 1) * x * p_cur - (m - 1) * p_prev) / m
                dp = order * (x * p_cur - p_prev) / (x * x - 1)
                dx = p_cur / dp
                x -= dx
                if abs(dx) < mp.mpf(10) ** (-(dps + 6)):
                    break
            p_prev, p_cur = mp.mpf(1), x
            for m in range(2, order + 1):
                p_prev, p_cur = p_cur, ((2 * m - 1) * x * p_cur - (m - 1) * p_prev) / m
            dp = order * (x * p_cur - p_prev) / (x * x - 1)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    return tuple(nodes), tuple(weights)


EDGE_LEVELS = 26


def _theta_panels(uniform: int, levels: int = EDGE_LEVELS):
    """Panel edges on (0, pi): `uniform` equal panels for bulk resolution,
    with the first and last replaced by geometric stacks toward the edges.

    An order-60 rule per uniform panel of width pi/U resolves orthonormal
    polynomials up to degree about 33*U; the edge stacks resolve the power
    singularities down to width 2^-levels.
    """
    h = mp.pi / uniform
    stack = [h * mp.mpf(2) ** (-k) for k in range(levels, -1, -1)]
    edges = [mp.mpf(0)] + stack  # 0, h/2^levels, ..., h
    edges += [h * k for k in range(2, uniform)]  # uniform bulk
    edges += [mp.pi - e for e in reversed([mp.mpf(0)] + stack[:-1])]
    return list(zip(edges[:-1], edges[1:]))


def grid_size_for_depth(n: int) -> int:
    """Grid size M whose bulk panels resolve recurrence depth n with margin."""
    return 2 * n + PANEL_ORDER * (2 * (EDGE_LEVELS + 1) + 10)


def discretize_weight(spec: WeightSpec, M: int, digits: int = DEFAULT_DIGITS) -> DiscreteMeasure:
    """Composite quadrature for the weight under x = eta*cos(theta), with
    panels geometrically refined toward both edges (order-60 rule per
    panel, about M nodes total); atoms appended as exact nodes.

    Recurrence coefficients extracted from the result are faithful to the
    continuous measure up to depth about 33 * (bulk panel count); use
    grid_size_for_depth when the target depth is known."""
    if M < 64:
        raise ValueError("M must be >= 64")
    spec.validate()
    uniform = max(4, round(M / PANEL_ORDER) - 2 * (EDGE_LEVELS + 1))
    dps = digits + 10
    gl_x, gl_w = _gauss_legendre_mpf(PANEL_ORDER, digits)
    with mp.workdps(dps):
        eta = mpf_from_fraction(spec.eta)
        alpha = mpf_from_fraction(spec.alpha)
        beta = mpf_from_fraction(spec.beta)
        nodes = []
        weights = []
        for lo, hi in _theta_panels(uniform):
            mid = (lo + hi) / 2
            rad = (hi - lo) / 2
            for t, w in zip(gl_x, gl_w):
                theta = mid + rad * t
                sh = mp.sin(theta / 2)
                ch = mp.cos(theta / 2)
                x = eta * (ch * ch - sh * sh)
                # eta - x = 2 eta sin^2(theta/2), eta + x = 2 eta cos^2(theta/2)
                dens = (
                    mp.power(2 * eta * sh * sh, alpha)
                    * mp.power(2 * eta * ch * ch, beta)
                    * ex.eval_mpf(spec.smooth, x)
                    * eta
                    * 2 * sh * ch
                )
                nodes.append(x)
                weights.append(w * rad * dens)
        total = mp.fsum(weights)
        for loc, mass in spec.atoms:
            nodes.append(mpf_from_fraction(loc))
            weights.append(mpf_from_fraction(mass))
            total += mpf_from_fraction(mass)
        weights = [w / total for w in weights]
    return _measure_from_arrays(nodes, weights, f"from-weight-spec({spec.label}, M={M})")


def raw_density_integral(spec: WeightSpec, digits: int = DEFAULT_DIGITS) -> mp.mpf:
    """Integral of the unnormalized density (excluding atoms)."""
    gl_x, gl_w = _gauss_legendre_mpf(PANEL_ORDER, digits)
    with mp.workdps(digits + 10):
        eta = mpf_from_fraction(spec.eta)
        alpha = mpf_from_fraction(spec.alpha)
        beta = mpf_from_fraction(spec.beta)
        acc = []
        for lo, hi in _theta_panels(8):
            mid = (lo + hi) / 2
            rad = (hi - lo) / 2
            for t, w in zip(gl_x, gl_w):
                theta = mid + rad * t
                sh = mp.sin(theta / 2)
                ch = mp.cos(theta / 2)
                x = eta * (ch * ch - sh * sh)
                acc.append(
                    w * rad
                    * mp.power(2 * eta * sh * sh, alpha)
                    * mp.power(2 * eta * ch * ch, beta)
                    * ex.eval_mpf(spec.smooth, x)
                    * eta * 2 * sh * ch
                )
        return mp.fsum(acc)


# --- Stieltjes / Lanczos ------------------------------------------------------


@dataclass(frozen=True)
class RecurrenceCoefficients:
    """Orthonormal three-term recurrence data: a[k-1] = a_k > 0 couples
    degrees k-1 and k, b[k] is the diagonal; round-tripping a chain gives
    a_k = sqrt(p_{k-1} q_k) and b_k = r_k."""

    a: np.ndarray
    b: np.ndarray

    @property
    def length(self) -> int:
        return len(self.b)


def stieltjes_recurrence(
    measure: DiscreteMeasure,
    n: int,
    digits: int = DEFAULT_DIGITS,
    reorthogonalize: bool | None = None,
) -> RecurrenceCoefficients:
    """First n recurrence coefficients of the discrete measure by the
    inner-product (Stieltjes/Lanczos) recursion.

    The float64 backend reorthogonalizes by default, which keeps deep
    recursions (thousands of coefficients) at working accuracy; the
    high-precision backend relies on extra digits instead.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > len(measure) // 2:
        raise ValueError(f"n = {n} exceeds half the node count {len(measure)}")
    if digits <= FLOAT_DIGITS:
        return _stieltjes_f64(
            measure, n, True if reorthogonalize is None else reorthogonalize
        )
    return _stieltjes_mpf(measure, n, digits)


def _stieltjes_f64(measure, n, reorth) -> RecurrenceCoefficients:
    x = measure.nodes
    v = np.sqrt(measure.weights)
    v = v / np.linalg.norm(v)
    basis = np.empty((len(x), n + 1))
    basis[:, 0] = v
    a = np.empty(n)
    b = np.empty(n)
    v_prev = np.zeros_like(v)
    a_prev = 0.0
    scale = np.max(np.abs(x))
    for k in range(n):
        u = x * v - a_prev * v_prev
        b[k] = v @ u
        u -= b[k] * v
        if reorth:
            u -= basis[:, : k + 1] @ (basis[:, : k + 1].T @ u)
        norm = np.linalg.norm(u)
        if norm <= 1e3 * np.finfo(float).eps * scale:
            raise StieltjesBreakdownError(
                f"norm underflow at coefficient {k + 1}; the measure resolves "
                f"only {k} coefficients"
            )
        a[k] = norm
        v_prev, v = v, u / norm
        a_prev = norm
        basis[:, k + 1] = v
    return RecurrenceCoefficients(a, b)


def _stieltjes_mpf(measure, n, digits) -> RecurrenceCoefficients:
    if measure.mp_nodes is None:
        raise ValueError("high-precision recursion needs an mp-built measure")
    with mp.workdps(digits + 10):
        x = list(measure.mp_nodes)
        w = list(measure.mp_weights)
        norm0 = mp.sqrt(mp.fsum(w))
        v = [mp.sqrt(wk) / norm0 for wk in w]
        v_prev = [mp.mpf(0)] * len(x)
        a_prev = mp.mpf(0)
        a = []
        b = []
        scale = max(abs(xk) for xk in x)
        floor = mp.mpf(10) ** (-(digits + 4))
        for k in range(n):
            u = [xk * vk - a_prev * pk for xk, vk, pk in zip(x, v, v_prev)]
            bk = mp.fsum(vk * uk for vk, uk in zip(v, u))
            u = [uk - bk * vk for uk, vk in zip(u, v)]
            norm = mp.sqrt(mp.fsum(uk * uk for uk in u))
            if norm <= floor * scale:
                raise StieltjesBreakdownError(
                    f"norm underflow at coefficient {k + 1}"
                )
            b.append(bk)
            a.append(norm)
            v_prev = v
            v = [uk / norm for uk in u]
            a_prev = norm
        return RecurrenceCoefficients(
            np.array([float(ak) for ak in a]), np.array([float(bk) for bk in b])
        )


# --- coefficients -> chain ----------------------------------------------------


@dataclass(frozen=True)
class ChainRecovery:
    """Result of solving p_{k-1} q_k = a_k^2, r_k = b_k, p+q+r = 1.

    ok=False carries the first failing index and why; that index is exactly
    the depth at which the random-walk-measure condition is violated.
    """

    ok: bool
    chain: ChainSpec | None
    fail_index: int | None
    fail_reason: str | None
    depth: int


def chain_from_recurrence(
    coeffs: RecurrenceCoefficients,
    label: str = "recovered",
    zero_tol: float = 1e-13,
) -> ChainRecovery:
    """Prefix-only chain from recurrence coefficients.

    Diagonal entries within zero_tol of 0 are treated as exactly 0 (so
    symmetric measures recover periodic chains); a genuinely negative
    diagonal or an infeasible p_k reports failure at that index.
    """
    n = coeffs.length
    p: list[Fraction] = []
    q: list[Fraction] = [Fraction(0)]
    r: list[Fraction] = []
    for k in range(n):
        bk = float(coeffs.b[k])
        if bk < -zero_tol:
            return ChainRecovery(
                False, None, k, f"r_{k} = {bk:.6g} < 0", k
            )
        rk = Fraction(bk) if bk > zero_tol else Fraction(0)
        if k == 0:
            pk = 1 - rk
        else:
            ak = Fraction(float(coeffs.a[k - 1]))
            qk = ak * ak / p[k - 1]
            q.append(qk)
            pk = 1 - rk - qk
        if pk <= zero_tol:
            reason = (
                f"p_{k} = {float(pk):.6g} <= 0; positivity fails at depth {k}"
            )
            return ChainRecovery(False, None, k, reason, k)
        p.append(pk)
        r.append(rk)
    chain = ChainSpec(
        label,
        p=CoeffRule(tuple(p)),
        q=CoeffRule(tuple(q[:n])),
        r=CoeffRule(tuple(r)),
        kappa=CoeffRule(tuple(Fraction(0) for _ in range(n))),
    )
    return ChainRecovery(True, chain, None, None, n)
