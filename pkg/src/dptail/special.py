"""Scalar special functions and divergences.

Everything here is a pure function of its arguments. Extended reals are
plain floats: ``math.inf`` is returned for divergences, never a saturated
large number.
"""

import math

import numpy as np

from ._validation import (
    DomainError,
    check_finite,
    check_positive,
    check_probability_vector,
    check_unit_interval,
)

__all__ = [
    "log_gamma",
    "log_beta",
    "beta_tail",
    "log_beta_tail",
    "beta_cdf",
    "lambert_w0",
    "kl_binary",
    "kl_discrete",
]

EULER_GAMMA = 0.57721566490153286061
HALF_LOG_2PI = 0.91893853320467274178
INV_E = math.exp(-1.0)

# B_2k / (2k (2k - 1)) for the Stirling correction series.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_BERNOULLI = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730)


def _zeta_minus_one(k, n_terms=16):
    """zeta(k) - 1 for integer k >= 2 by Euler-Maclaurin summation."""
    s = math.fsum(n ** -k for n in range(2, n_terms))
    big_n = float(n_terms)
    s += big_n ** (1 - k) / (k - 1) + 0.5 * big_n ** -k
    rising = float(k)
    fact = 2.0
    for j, b2j in enumerate(_BERNOULLI, start=1):
        s += b2j / fact * rising * big_n ** (-k - 2 * j + 1)
        rising *= (k + 2 * j - 1) * (k + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return s


# coefficients (-1)^k (zeta(k) - 1) / k of the series for lnGamma(2 + z)
_LG2_SERIES = tuple((-1) ** k * _zeta_minus_one(k) / k for k in range(2, 60))


def _lgamma_2p(z):
    """ln Gamma(2 + z) for |z| <= 0.5, accurate relative to the result."""
    total = 0.0
    zk = z
    for c in _LG2_SERIES:
        zk *= z
        term = c * zk
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return z * (1.0 - EULER_GAMMA) + total


def _stirling_correction(x):
    """ln Gamma(x) - [(x - 1/2) ln x - x + ln sqrt(2 pi)], for x >= 8."""
    inv = 1.0 / x
    inv2 = inv * inv
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * inv2 + c
    return acc * inv


def log_gamma(x):
    """Natural log of the gamma function for x > 0.

    Taylor series around 1 and 2 keep the relative error small near the
    two roots of ln Gamma; Stirling's series takes over above 15.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"log_gamma requires a finite x > 0, got {x!r}")
    if x < 0.5:
        # Gamma(x) = Gamma(2 + x) / (x (1 + x))
        return _lgamma_2p(x) - math.log1p(x) - math.log(x)
    if x < 1.5:
        z = x - 1.0
        return _lgamma_2p(z) - math.log1p(z)
    if x < 2.5:
        return _lgamma_2p(x - 2.0)
    if x < 15.0:
        m = int(x - 1.5)
        y = x - m
        prod = 1.0
        for i in range(m):
            prod *= y + i
        return _lgamma_2p(y - 2.0) + math.log(prod)
    return (x - 0.5) * math.log(x) - x + HALF_LOG_2PI + _stirling_correction(x)


def _log1pmx(t):
    """log(1 + t) - t without cancellation for small |t|."""
    if abs(t) > 0.25:
        return math.log1p(t) - t
    total = 0.0
    tk = t
    k = 2
    while True:
        tk *= -t
        term = tk / k
        total += term
        if abs(term) <= 1e-18 * abs(total) or k > 200:
            break
        k += 1
    return total


def log_beta(a, b):
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b)."""
    a = check_positive(a, "a")
    b = check_positive(b, "b")
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def _log_front(a, b, x):
    """ln[x^a (1-x)^b / B(a, b)] for 0 < x < 1."""
    n = a + b
    p = a / n
    q = b / n
    d = x - p
    if min(a, b) < 8.0 or abs(d) > 0.5 * min(p, q):
        return a * math.log(x) + b * math.log1p(-x) - log_beta(a, b)
    # Large shapes near the mean: write the Stirling parts out explicitly so
    # the x-dependent logs combine into -(a+b) kl(a/(a+b) || x) before any
    # large terms are formed.
    kl = -a * _log1pmx(d / p) - b * _log1pmx(-d / q)
    corr = _stirling_correction(n) - _stirling_correction(a) - _stirling_correction(b)
    return -kl + corr - HALF_LOG_2PI + 0.5 * (math.log(a) + math.log(b) - math.log(n))


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    max_iter = 10000 + int(20 * math.sqrt(max(a, b)))
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _tail_and_log(a, b, u):
    if u == 0.0:
        return 1.0, 0.0
    if u == 1.0:
        return 0.0, -math.inf
    if u > (a + 1.0) / (a + b + 2.0):
        # P(X >= u) = I_{1-u}(b, a), evaluated directly so deep tails keep
        # their relative accuracy.
        log_tail = _log_front(b, a, 1.0 - u) + math.log(_betacf(b, a, 1.0 - u)) - math.log(b)
        return math.exp(log_tail), log_tail
    cdf = math.exp(_log_front(a, b, u)) * _betacf(a, b, u) / a
    tail = 1.0 - cdf
    return tail, math.log1p(-cdf) if cdf < 1.0 else -math.inf


def _check_beta_args(a, b, u):
    a = check_positive(a, "a")
    b = check_positive(b, "b")
    u = check_unit_interval(u, "u")
    return a, b, u


def beta_tail(a, b, u):
    """P(X >= u) for X ~ Beta(a, b)."""
    a, b, u = _check_beta_args(a, b, u)
    return _tail_and_log(a, b, u)[0]


def log_beta_tail(a, b, u):
    """ln P(X >= u) for X ~ Beta(a, b), accurate in relative terms deep in the tail."""
    a, b, u = _check_beta_args(a, b, u)
    return _tail_and_log(a, b, u)[1]


def beta_cdf(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    a, b, x = _check_beta_args(a, b, x)
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x > (a + 1.0) / (a + b + 2.0):
        return 1.0 - _tail_and_log(a, b, x)[0]
    return math.exp(_log_front(a, b, x)) * _betacf(a, b, x) / a


def _halley_w0(x, w):
    for _ in range(50):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        if w_new < -1.0:
            w_new = -1.0
        if abs(w_new - w) <= 1e-15 * max(abs(w_new), 1e-300):
            return w_new
        w = w_new
    return w


def lambert_w0(x):
    """Principal branch W_0 of the Lambert W function on [-1/e, inf).

    Halley iteration started from a branch-point series near -1/e, from
    log1p(x) for moderate x and from the asymptotic log expansion above e.
    """
    x = check_finite(x, "x")
    if x < -INV_E:
        if x < -INV_E - 1e-15:
            raise DomainError(f"lambert_w0 requires x >= -1/e, got {x!r}")
        return -1.0
    if x == 0.0:
        return 0.0
    if x == -INV_E:
        return -1.0
    if x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < math.e:
        w = math.log1p(x)
        if x > 0.5:
            w *= 0.8
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    return _halley_w0(x, w)


def lambert_w0_from_log(log_x):
    """W_0(exp(log_x)) without forming exp(log_x); for arguments that overflow."""
    log_x = check_finite(log_x, "log_x")
    if log_x < 500.0:
        return lambert_w0(math.exp(log_x))
    # w + ln w = log_x; Newton from the asymptotic guess
    w = log_x - math.log(log_x)
    for _ in range(50):
        step = (w + math.log(w) - log_x) / (1.0 + 1.0 / w)
        w -= step
        if abs(step) <= 1e-15 * w:
            break
    return w


def kl_binary(p, q):
    """Bernoulli KL divergence kl(p || q) with values in [0, inf]."""
    p = check_unit_interval(p, "p")
    q = check_unit_interval(q, "q")
    if p == q:
        return 0.0
    if p > 0.0:
        if q == 0.0:
            return math.inf
        t1 = p * math.log(p / q)
    else:
        t1 = 0.0
    if p < 1.0:
        if q == 1.0:
            return math.inf
        t2 = (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    else:
        t2 = 0.0
    return max(t1 + t2, 0.0)


def kl_discrete(p, q):
    """KL(p || q) between probability vectors of equal length."""
    p = check_probability_vector(p, "p")
    q = check_probability_vector(q, "q")
    if p.shape != q.shape:
        raise DomainError(f"length mismatch: {p.size} vs {q.size}")
    support = p > 0
    if np.any(q[support] == 0):
        return math.inf
    ps = p[support]
    return max(float(np.sum(ps * np.log(ps / q[support]))), 0.0)
