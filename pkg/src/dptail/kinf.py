"""K_inf on finite supports: the variational solver and a brute-force oracle.

``K_inf(nu, u, f) = inf { KL(nu || mu) : E_mu[f] >= u }`` is computed through
its one-dimensional dual

    max_{0 <= lam <= 1/(f_max - u)}  sum_i w_i log(1 - lam (f_i - u)),

a concave program solved by bisection on the derivative.
"""

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    NORMALIZATION_TOL,
    DomainError,
    check_finite,
    check_probability_vector,
    check_unit_interval,
)
from .special import kl_binary

__all__ = [
    "FiniteSupport",
    "KinfSolution",
    "kinf_variational",
    "kinf_batch",
    "kinf_bruteforce",
    "kinf_indicator",
]


@dataclass(frozen=True)
class FiniteSupport:
    """A probability vector on atoms ``0..d-1`` with a payoff per atom."""

    weights: np.ndarray
    payoffs: np.ndarray

    def __post_init__(self):
        w = check_probability_vector(self.weights, "weights")
        f = np.asarray(self.payoffs, dtype=float)
        if f.shape != w.shape:
            raise DomainError(f"weights and payoffs differ in length ({w.size} vs {f.size})")
        if not np.all(np.isfinite(f)):
            raise DomainError("payoffs must be finite")
        w = w.copy()
        f = f.copy()
        w.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "payoffs", f)

    @property
    def d(self):
        return self.weights.size

    @property
    def mean(self):
        return float(self.weights @ self.payoffs)

    @property
    def f_min(self):
        return float(self.payoffs.min())

    @property
    def f_max(self):
        return float(self.payoffs.max())


@dataclass(frozen=True)
class KinfSolution:
    value: float
    lambda_star: float
    dual_slack: float
    at_boundary: bool = False
    # u == f_max was answered by the +inf / 0 convention rather than the dual
    extended: bool = False
    notes: tuple = field(default_factory=tuple)


def _solve_dual(W, f, u, max_iter=2000, rtol=1e-15):
    """Vectorized dual solve for the rows of ``W`` sharing payoffs ``f``.

    Requires f_min <= u < f_max. Returns ``(value, lam, slack, at_boundary)``
    arrays. The bisection tracks lam and the gap s = lam_max - lam side by
    side; atoms close to f_max evaluate 1 - lam (f - u) through s so the
    boundary region keeps full relative precision.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    m = W.shape[0]
    g = f - u
    g_max = float(g.max())
    lam_max = 1.0 / g_max
    near_top = g > 0.5 * g_max
    base_top = (f.max() - f) / g_max  # 1 - lam_max * g, exactly

    def denom(lam, s):
        return np.where(near_top, base_top + s[:, None] * g, 1.0 - lam[:, None] * g)

    def deriv(lam, s):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(W > 0, W * g / denom(lam, s), 0.0)
        return -terms.sum(axis=1)

    value = np.zeros(m)
    lam_star = np.zeros(m)
    slack = np.ones(m)
    boundary = np.zeros(m, dtype=bool)

    active = (W @ f) < u
    if not np.any(active):
        return value, lam_star, slack, boundary

    top = f == f.max()
    no_top_mass = ~np.any((W > 0) & top[None, :], axis=1)
    zeros = np.zeros(m)
    lam_max_vec = np.full(m, lam_max)
    at_edge = active & no_top_mass
    if np.any(at_edge):
        # the derivative at lam_max is finite; the optimum sits on the edge
        # whenever it is still non-negative there
        d_edge = deriv(lam_max_vec, zeros)
        boundary = at_edge & (d_edge >= 0)

    solve = active & ~boundary
    lo_lam = np.zeros(m)
    lo_s = np.full(m, lam_max)
    hi_lam = np.full(m, lam_max)
    hi_s = np.zeros(m)
    idx = np.flatnonzero(solve)
    for _ in range(max_iter):
        if idx.size == 0:
            break
        mid_lam = 0.5 * (lo_lam[idx] + hi_lam[idx])
        mid_s = 0.5 * (lo_s[idx] + hi_s[idx])
        rows = W[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            den = np.where(near_top, base_top + mid_s[:, None] * g, 1.0 - mid_lam[:, None] * g)
            dphi = -np.where(rows > 0, rows * g / den, 0.0).sum(axis=1)
        up = dphi > 0
        stalled = (mid_lam == lo_lam[idx]) | (mid_lam == hi_lam[idx])
        lo_lam[idx[up]] = mid_lam[up]
        lo_s[idx[up]] = mid_s[up]
        hi_lam[idx[~up]] = mid_lam[~up]
        hi_s[idx[~up]] = mid_s[~up]
        width = hi_lam[idx] - lo_lam[idx]
        scale = np.minimum(mid_lam, mid_s)
        done = (width <= rtol * scale) | stalled
        idx = idx[~done]

    fin_lam = np.where(boundary, lam_max, 0.5 * (lo_lam + hi_lam))
    fin_s = np.where(boundary, 0.0, 0.5 * (lo_s + hi_s))
    with np.errstate(divide="ignore", invalid="ignore"):
        den = denom(fin_lam, fin_s)
        obj = np.where(W > 0, W * np.log(den), 0.0).sum(axis=1)
        inv = np.where(W > 0, W / den, 0.0).sum(axis=1)
    use = solve | boundary
    value = np.where(use, np.maximum(obj, 0.0), 0.0)
    lam_star = np.where(use, fin_lam, 0.0)
    slack = np.where(use, inv, 1.0)
    return value, lam_star, slack, boundary


def _check_u(f_min, f_max, u):
    if u < f_min:
        raise DomainError(f"u={u!r} is below the smallest payoff {f_min!r}")
    if u > f_max:
        raise DomainError(f"u={u!r} exceeds the largest payoff {f_max!r}")


def kinf_variational(nu, u):
    """Solve K_inf(nu, u, f) through the dual and return a certificate.

    ``dual_slack`` is E_nu[1 / (1 - lam* (f - u))]; it never exceeds one and
    equals one at an interior optimum.
    """
    u = check_finite(u, "u")
    f = nu.payoffs
    w = nu.weights
    f_min, f_max = nu.f_min, nu.f_max
    if f_min == f_max:
        if u <= f_max:
            return KinfSolution(0.0, 0.0, 1.0)
        raise DomainError(f"u={u!r} exceeds the constant payoff {f_max!r}")
    _check_u(f_min, f_max, u)
    if u == f_max:
        on_top = float(w[f == f_max].sum())
        note = ("u equals f_max: the only feasible mu sits on the top atoms",)
        if abs(on_top - 1.0) <= NORMALIZATION_TOL:
            return KinfSolution(0.0, 0.0, 1.0, extended=True, notes=note)
        return KinfSolution(math.inf, 0.0, 1.0, extended=True, notes=note)
    if nu.mean >= u:
        return KinfSolution(0.0, 0.0, 1.0)
    value, lam, slack, boundary = _solve_dual(w[None, :], f, u)
    return KinfSolution(float(value[0]), float(lam[0]), float(slack[0]), bool(boundary[0]))


def kinf_batch(weights, payoffs, u):
    """K_inf for every row of ``weights`` against shared ``payoffs``.

    Rows need not be normalized to machine precision; they are used as
    given. Requires ``f_min <= u < f_max``.
    """
    f = np.asarray(payoffs, dtype=float)
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    u = float(u)
    _check_u(float(f.min()), float(f.max()), u)
    if u == f.max():
        raise DomainError("kinf_batch needs u < f_max")
    return _solve_dual(W, f, u)[0]


def kinf_indicator(nu_mass, u):
    """kl(nu(A) || u), the closed form K_inf for a {0, 1} payoff when u >= nu(A).

    Below nu(A) the true K_inf is 0; this returns the plain divergence.
    """
    nu_mass = check_unit_interval(nu_mass, "nu_mass")
    u = check_unit_interval(u, "u")
    return kl_binary(nu_mass, u)


# --- brute-force oracle ------------------------------------------------------

DEFAULT_GRID_STEPS = {1: 1, 2: 2000, 3: 400, 4: 100}
# resolution of the lattice laid on the active face E_mu[f] = u
FACE_STEPS = {3: 100000, 4: 1500}
REFINE_FACTOR = 10
REFINE_HALF_WIDTH = 2 * REFINE_FACTOR  # two coarse cells either side
MAX_RECENTER = 200


@functools.lru_cache(maxsize=8)
def _simplex_lattice(n, d):
    """All integer vectors of length d with non-negative entries summing to n."""
    if d == 1:
        out = np.array([[n]], dtype=np.int64)
    else:
        bars = np.array(list(itertools.combinations(range(n + d - 1), d - 1)), dtype=np.int64)
        ends = np.full((bars.shape[0], 1), n + d - 1)
        out = np.diff(np.hstack([np.full_like(ends, -1), bars, ends]), axis=1) - 1
    out.setflags(write=False)
    return out


def _kl_rows(nu_w, mu):
    pos = nu_w > 0
    mp = mu[:, pos]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sum(nu_w[pos] * (np.log(nu_w[pos]) - np.log(mp)), axis=1)
    out[np.any(mp <= 0, axis=1)] = math.inf
    return out


def _best_feasible(nu_w, f, u, counts, n):
    feasible = counts @ f >= u * n
    if not np.any(feasible):
        return math.inf, None
    kl = _kl_rows(nu_w, counts[feasible] / n)
    j = int(np.argmin(kl))
    return float(kl[j]), counts[feasible][j]


def _lattice_search(nu_w, f, u, n, refine_passes):
    d = nu_w.size
    best, arg = _best_feasible(nu_w, f, u, _simplex_lattice(n, d), n)
    if arg is None:
        return best
    steps = np.arange(-REFINE_HALF_WIDTH, REFINE_HALF_WIDTH + 1)
    offsets = np.array(list(itertools.product(steps, repeat=d - 1)), dtype=np.int64)
    for _ in range(refine_passes):
        n *= REFINE_FACTOR
        arg = arg * REFINE_FACTOR
        # walk the window until the incumbent stops moving at this level
        for _ in range(MAX_RECENTER):
            head = arg[: d - 1] + offsets
            local = np.hstack([head, (n - head.sum(axis=1))[:, None]])
            local = local[np.all(local >= 0, axis=1)]
            fine_best, fine_arg = _best_feasible(nu_w, f, u, local, n)
            if fine_arg is None or fine_best >= best:
                break
            best, arg = fine_best, fine_arg
    return best


def _face_points(f, u, top, low, free):
    """Complete free coordinates to points with sum 1 and E_mu[f] = u."""
    rest = 1.0 - free.sum(axis=1)
    others = np.array([i for i in range(f.size) if i not in (top, low)])
    target = u - (free @ f[others] if others.size else 0.0)
    mu_top = (target - f[low] * rest) / (f[top] - f[low])
    mu_low = rest - mu_top
    mu = np.empty((free.shape[0], f.size))
    mu[:, top] = mu_top
    mu[:, low] = mu_low
    if others.size:
        mu[:, others] = free
    keep = (mu_top >= 0) & (mu_low >= 0)
    return mu[keep], free[keep]


def _face_search(nu_w, f, u):
    d = f.size
    top, low = int(np.argmax(f)), int(np.argmin(f))
    if d == 2:
        mu, _ = _face_points(f, u, top, low, np.zeros((1, 0)))
        return float(_kl_rows(nu_w, mu).min()) if mu.size else math.inf
    n = FACE_STEPS[d]
    grid = _simplex_lattice(n, d - 1)[:, : d - 2] / n
    mu, free = _face_points(f, u, top, low, grid)
    if mu.size == 0:
        return math.inf
    kl = _kl_rows(nu_w, mu)
    j = int(np.argmin(kl))
    best, center = float(kl[j]), free[j]
    # one zoomed pass around the face incumbent
    h = 1.0 / (n * REFINE_FACTOR)
    steps = np.arange(-REFINE_HALF_WIDTH, REFINE_HALF_WIDTH + 1) * h
    local = center + np.array(list(itertools.product(steps, repeat=d - 2)))
    local = local[np.all(local >= 0, axis=1) & (local.sum(axis=1) <= 1)]
    mu, _ = _face_points(f, u, top, low, local)
    if mu.size:
        best = min(best, float(_kl_rows(nu_w, mu).min()))
    return best


def kinf_bruteforce(nu, u, grid_steps=None, refine_passes=1):
    """Primal K_inf by exhaustive search; the independent check on the dual.

    Two primal searches are combined and the smaller value returned:

    * a simplex lattice of resolution ``1/grid_steps`` restricted to
      E_mu[f] >= u, followed by ``refine_passes`` zoomed passes (ten times
      finer, re-centered on every improvement);
    * a lattice on the face E_mu[f] = u, where the minimizer lies whenever
      nu itself is infeasible. Two atoms are solved from the constraints,
      the remaining ``d - 2`` coordinates are gridded.

    Only meant for ``d <= 4``. Returns +inf when no distribution meets the
    constraint.
    """
    u = check_finite(u, "u")
    d = nu.d
    if d > 4:
        raise DomainError(f"brute-force oracle supports d <= 4, got {d}")
    w, f = nu.weights, nu.payoffs
    if u > nu.f_max:
        return math.inf
    if nu.mean >= u:
        return 0.0
    n = int(grid_steps or DEFAULT_GRID_STEPS[d])
    if n < 1:
        raise DomainError("grid_steps must be positive")
    best = _lattice_search(w, f, u, n, refine_passes if d > 1 else 0)
    if d >= 2 and nu.f_min < nu.f_max:
        best = min(best, _face_search(w, f, u))
    return best
