"""Seeded Monte Carlo ground truth for Dirichlet tail events.

Samples are drawn through the Gamma representation X = G / sum(G). Work is
cut into fixed-size blocks; block ``k`` of stream ``s`` draws from
``SeedSequence(seed, spawn_key=(s, k))``, so hit counts do not depend on how
blocks are spread over workers.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import DomainError, check_finite, check_positive, check_probability_vector
from .special import beta_cdf

__all__ = [
    "TailEstimate",
    "Verdict",
    "sample_gamma",
    "sample_dirichlet",
    "clopper_pearson",
    "estimate_event",
    "estimate_tail",
    "check_superadditivity_halfspace",
    "check_superadditivity_convex",
    "check_dirichlet_multinomial",
]

BLOCK_SIZE = 1 << 16
DEFAULT_CONFIDENCE = 0.999


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    n_samples: int
    n_hits: int
    seed: int
    confidence: float


@dataclass(frozen=True)
class Verdict:
    """Outcome of one empirical check: ``pass``, ``fail`` or ``inconclusive``."""

    name: str
    status: str
    detail: dict = field(default_factory=dict)

    @property
    def failed(self):
        return self.status == "fail"


# --- sampling ---------------------------------------------------------------------


def _log_gamma_variates(shape, rng, size):
    """Logs of unit-scale Gamma(shape) draws.

    Shapes below one use Gamma(k) = Gamma(k + 1) U^(1/k), applied on the log
    scale so tiny shapes do not underflow to an exact zero.
    """
    if shape >= 1.0:
        return np.log(rng.standard_gamma(shape, size))
    g = rng.standard_gamma(shape + 1.0, size)
    v = rng.random(size)
    return np.log(g) + np.log1p(-v) / shape


def sample_gamma(shape, rng, size=None):
    """Unit-scale Gamma(shape) variate(s)."""
    shape = check_positive(shape, "shape")
    return np.exp(_log_gamma_variates(shape, rng, size))


def _check_shapes(shapes):
    s = np.asarray(shapes, dtype=float)
    if s.ndim != 1 or s.size == 0 or not np.all(np.isfinite(s)) or np.any(s < 0):
        raise DomainError("Dirichlet shapes must be finite and non-negative")
    if not np.any(s > 0):
        raise DomainError("at least one Dirichlet shape must be positive")
    return s


def _dirichlet_rows(shapes, rng, size):
    """Dirichlet draws as rows; zero shapes give components fixed at 0."""
    out = np.full((size, shapes.size), -np.inf)
    for i, k in enumerate(shapes):
        if k > 0:
            out[:, i] = _log_gamma_variates(k, rng, size)
    out -= out.max(axis=1, keepdims=True)
    np.exp(out, out=out)
    out /= out.sum(axis=1, keepdims=True)
    return out


def sample_dirichlet(d, rng, size=None):
    """Draw(s) from Dir(alpha nu0), or from a raw shape vector."""
    shapes = _check_shapes(d.masses if hasattr(d, "masses") else d)
    rows = _dirichlet_rows(shapes, rng, 1 if size is None else int(size))
    return rows[0] if size is None else rows


# --- confidence intervals -----------------------------------------------------------


def _beta_quantile(a, b, q, rtol=1e-12):
    lo, hi = 0.0, 1.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if beta_cdf(a, b, mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


def clopper_pearson(hits, n, confidence=DEFAULT_CONFIDENCE):
    """Exact two-sided binomial interval for hits successes out of n."""
    if n < 1 or not 0 <= hits <= n:
        raise DomainError(f"need 0 <= hits <= n and n >= 1, got hits={hits}, n={n}")
    if not 0 < confidence < 1:
        raise DomainError(f"confidence must lie in (0, 1), got {confidence!r}")
    tail = 0.5 * (1.0 - confidence)
    low = 0.0 if hits == 0 else _beta_quantile(hits, n - hits + 1, tail)
    high = 1.0 if hits == n else _beta_quantile(hits + 1, n - hits, 1.0 - tail)
    return low, high


# --- estimation ---------------------------------------------------------------------


def _block_hits(shapes, event, seed, stream, block, size):
    ss = np.random.SeedSequence(seed, spawn_key=(stream, block))
    rng = np.random.Generator(np.random.PCG64(ss))
    return int(np.count_nonzero(event(_dirichlet_rows(shapes, rng, size))))


def estimate_event(shapes, event, n, seed, confidence=DEFAULT_CONFIDENCE, stream=0, workers=1):
    """Estimate P(event(X)) for X ~ Dir(shapes).

    ``event`` maps an (m, d) array of draws to m booleans. ``stream`` keeps
    several estimates under one seed on independent randomness.
    """
    shapes = _check_shapes(shapes)
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    sizes = [BLOCK_SIZE] * (n // BLOCK_SIZE)
    if n % BLOCK_SIZE:
        sizes.append(n % BLOCK_SIZE)
    jobs = [(shapes, event, seed, stream, k, m) for k, m in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(lambda job: _block_hits(*job), jobs))
    else:
        hits = sum(_block_hits(*job) for job in jobs)
    low, high = clopper_pearson(hits, n, confidence)
    return TailEstimate(hits / n, low, high, n, hits, int(seed), float(confidence))


def _halfspace(payoffs, u):
    g = np.asarray(payoffs, dtype=float) - u

    def event(x):
        return x @ g >= 0.0

    return event


def estimate_tail(d, u, n=1_000_000, seed=0, confidence=DEFAULT_CONFIDENCE, stream=0, workers=1):
    """Estimate P(E_X[f] >= u) for X ~ Dir(alpha nu0)."""
    u = check_finite(u, "u")
    return estimate_event(d.masses, _halfspace(d.base.payoffs, u), n, seed, confidence, stream, workers)


# --- superadditivity ----------------------------------------------------------------


def _superadditive_verdict(name, estimates, detail):
    """Fail only when h(s+t) < h(s) + h(t) holds even at the CI edges."""
    e_s, e_t, e_st = estimates
    detail = dict(detail)
    for key, e in zip(("s", "t", "s+t"), estimates):
        detail[key] = {"p_hat": e.p_hat, "ci_low": e.ci_low, "ci_high": e.ci_high, "n_hits": e.n_hits}
    if min(e.n_hits for e in estimates) == 0:
        return Verdict(name, "inconclusive", detail)
    lhs = math.log(e_st.ci_high)
    rhs = math.log(e_s.ci_low) + math.log(e_t.ci_low)
    detail["log_ci_high_st"] = lhs
    detail["log_ci_low_s_plus_t"] = rhs
    return Verdict(name, "pass" if lhs >= rhs else "fail", detail)


def _scales(s, t):
    return check_positive(s, "s"), check_positive(t, "t")


def check_superadditivity_halfspace(
    nu, eta, u, s, t, n=1_000_000, seed=0, confidence=DEFAULT_CONFIDENCE, stream=0, workers=1
):
    """Empirical check that r -> ln P_{Dir(r nu + eta)}(E_X[f] >= u) is superadditive."""
    s, t = _scales(s, t)
    u = check_finite(u, "u")
    masses = np.asarray(getattr(eta, "masses", eta), dtype=float)
    if masses.shape != nu.weights.shape or np.any(masses < 0):
        raise DomainError("eta must be a non-negative vector over the atoms of nu")
    if masses.sum() > 1.0 + 1e-12:
        raise DomainError("eta must have total mass <= 1")
    detail = {"u": u, "s_scale": s, "t_scale": t, "eta": masses.tolist()}
    if u <= nu.f_min:
        return Verdict("superadditivity-halfspace", "pass", {**detail, "note": "event is certain"})
    event = _halfspace(nu.payoffs, u)
    estimates = [
        estimate_event(r * nu.weights + masses, event, n, seed, confidence, 3 * stream + k, workers)
        for k, r in enumerate((s, t, s + t))
    ]
    return _superadditive_verdict("superadditivity-halfspace", estimates, detail)


def _tail_sum_event(p_ref):
    # X in C_p  <=>  sum_{j > i} X_j >= sum_{j > i} p_j for i = 1..d-1
    targets = np.cumsum(p_ref[::-1])[::-1][1:]

    def event(x):
        tails = np.cumsum(x[:, ::-1], axis=1)[:, ::-1][:, 1:]
        return np.all(tails >= targets, axis=1)

    return event


def check_superadditivity_convex(
    p_ref, x_atom, s, t, n=1_000_000, seed=0, nu=None, confidence=DEFAULT_CONFIDENCE, stream=0, workers=1
):
    """Empirical check that r -> ln P_{Dir(r nu + delta_x)}(X in C_p) is superadditive.

    C_p holds the distributions whose tail sums dominate those of ``p_ref``.
    ``nu`` defaults to the uniform distribution.
    """
    s, t = _scales(s, t)
    p_ref = check_probability_vector(p_ref, "p_ref")
    d = p_ref.size
    if d < 2:
        raise DomainError("C_p needs at least two atoms")
    nu_w = np.full(d, 1.0 / d) if nu is None else check_probability_vector(getattr(nu, "weights", nu), "nu")
    if nu_w.size != d:
        raise DomainError("nu and p_ref differ in length")
    if not 0 <= int(x_atom) < d:
        raise DomainError(f"x_atom must index an atom, got {x_atom!r}")
    delta = np.zeros(d)
    delta[int(x_atom)] = 1.0
    event = _tail_sum_event(p_ref)
    estimates = [
        estimate_event(r * nu_w + delta, event, n, seed, confidence, 3 * stream + k, workers)
        for k, r in enumerate((s, t, s + t))
    ]
    detail = {"p_ref": p_ref.tolist(), "x_atom": int(x_atom), "nu": nu_w.tolist(), "s_scale": s, "t_scale": t}
    return _superadditive_verdict("superadditivity-convex", estimates, detail)


# --- Dirichlet-Multinomial correspondence -----------------------------------------------


def _compositions(n, d):
    for bars in itertools.combinations(range(n + d - 1), d - 1):
        edges = (-1, *bars, n + d - 1)
        yield tuple(edges[i + 1] - edges[i] - 1 for i in range(d))


def _multinomial_side(n_trials, p, k):
    """P(for all i < d: M_1 + ... + M_i >= k_i) by enumeration."""
    total = 0.0
    for m in _compositions(n_trials, p.size):
        if all(c >= ki for c, ki in zip(itertools.accumulate(m[:-1]), k)):
            coef = math.factorial(n_trials)
            prob = 1.0
            for mi, pi in zip(m, p):
                coef //= math.factorial(mi)
                prob *= pi**mi
            total += coef * prob
    return float(total)


def check_dirichlet_multinomial(
    n_trials, p, thresholds, n=1_000_000, seed=0, confidence=DEFAULT_CONFIDENCE, stream=0, workers=1
):
    """Compare the exact multinomial probability with a Dirichlet Monte Carlo CI.

    ``thresholds`` holds k_1 <= ... <= k_{d-1} <= n_trials; the Dirichlet
    shapes are k_i - k_{i-1} with k_0 = 0 and k_d = n_trials + 1.
    """
    p = check_probability_vector(p, "p")
    d = p.size
    n_trials = int(n_trials)
    k = [int(x) for x in thresholds]
    if d < 2 or len(k) != d - 1:
        raise DomainError("need d >= 2 and exactly d - 1 thresholds")
    if n_trials < 0 or k[0] < 0 or k[-1] > n_trials or any(a > b for a, b in zip(k, k[1:])):
        raise DomainError("thresholds must satisfy 0 <= k_1 <= ... <= k_{d-1} <= n_trials")
    exact = _multinomial_side(n_trials, p, k)
    shapes = np.diff([0, *k, n_trials + 1]).astype(float)
    est = estimate_event(shapes, _tail_sum_event(p), n, seed, confidence, stream, workers)
    status = "pass" if est.ci_low <= exact <= est.ci_high else "fail"
    detail = {
        "n_trials": n_trials,
        "p": p.tolist(),
        "thresholds": k,
        "exact": exact,
        "p_hat": est.p_hat,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
    }
    return Verdict("dirichlet-multinomial", status, detail)
