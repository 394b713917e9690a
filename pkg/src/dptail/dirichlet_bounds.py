"""Tail bounds for E_X[f] with X ~ Dir(alpha * nu0) on a finite support.

Every bound has the form

    ln P(E_X[f] >= u) <= -(alpha - eta(total)) K_inf((alpha nu0 - eta) / (alpha - eta(total)), u, f)

for some perturbation eta; eta = 0 is the plain Chernoff bound.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from ._validation import DegenerateScaleError, DomainError, check_finite, check_positive
from .beta_bounds import BetaParams, BoundKind, BoundReport, PerturbationRule, eta_cap
from .kinf import FiniteSupport, _solve_dual, kinf_variational
from .special import log_beta_tail

__all__ = [
    "DirichletParams",
    "Perturbation",
    "chernoff_kinf_bound",
    "unit_mass_eta_star",
    "unit_mass_perturbed_bound",
    "perturbed_exponent",
    "eta_star_oracle",
    "beyond_unit_bound",
    "two_value_log_tail",
]

# slack for "alpha nu0(A_1) == 1" and for eta <= alpha nu0 comparisons
MASS_TOL = 1e-12


@dataclass(frozen=True)
class DirichletParams:
    alpha: float
    base: FiniteSupport

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_positive(self.alpha, "alpha"))
        if not isinstance(self.base, FiniteSupport):
            raise DomainError("base must be a FiniteSupport")
        if np.any(self.base.weights <= 0):
            raise DomainError("every base weight must be > 0")

    @classmethod
    def from_lists(cls, alpha, weights, payoffs):
        return cls(alpha, FiniteSupport(np.asarray(weights, float), np.asarray(payoffs, float)))

    @property
    def masses(self):
        """alpha * nu0, the Dirichlet shape vector."""
        return self.alpha * self.base.weights


@dataclass(frozen=True)
class Perturbation:
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.ndim != 1 or not np.all(np.isfinite(m)) or np.any(m < 0):
            raise DomainError("perturbation masses must be finite and non-negative")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "masses", m)

    @property
    def total(self):
        return float(self.masses.sum())


def _check_u(d, u):
    u = check_finite(u, "u")
    f = d.base.payoffs
    if u < f.min() or u >= f.max():
        raise DomainError(f"u={u!r} must lie in [f_min, f_max) = [{f.min()!r}, {f.max()!r})")
    return u


def perturbed_exponent(d, eta, u):
    """(alpha - eta(total)) K_inf of the tilted base; returns (exponent, kinf solution)."""
    remaining = np.clip(d.masses - eta.masses, 0.0, None)
    scale = float(remaining.sum())
    if scale <= 0.0:
        raise DegenerateScaleError("the perturbation removes the whole Dirichlet scale")
    tilted = FiniteSupport(remaining / remaining.sum(), d.base.payoffs)
    sol = kinf_variational(tilted, u)
    return scale * sol.value, sol


def chernoff_kinf_bound(d, u):
    u = _check_u(d, u)
    sol = kinf_variational(d.base, u)
    detail = {"alpha": d.alpha, "u": u, "lambda_star": sol.lambda_star, "dual_slack": sol.dual_slack}
    val = -d.alpha * sol.value
    return BoundReport(BoundKind.CHERNOFF_KINF, 0.0 if val == 0 else val, True, detail=detail)


def _threshold_u1(d, u):
    """Smallest x >= u with alpha nu0(f > x) <= 1."""
    f = d.base.payoffs
    m = d.masses
    if m[f > u].sum() <= 1.0 + MASS_TOL:
        return u
    for v in np.unique(f[f > u]):
        if m[f > v].sum() <= 1.0 + MASS_TOL:
            return float(v)
    raise AssertionError("unreachable: nothing lies above f_max")


def unit_mass_eta_star(d, u):
    """Maximizer of the unit-mass perturbed exponent.

    Mass alpha nu0 on the atoms above the threshold u_1, plus the remaining
    budget spread over the atoms at u_1 in proportion to nu0. The spread is
    capped at alpha nu0 on those atoms (it only binds when u_1 = u, where
    those atoms do not affect the exponent), and dropped if no atom sits at
    u_1.
    """
    u = _check_u(d, u)
    f = d.base.payoffs
    m = d.masses
    u1 = _threshold_u1(d, u)
    above = f > u1
    at = f == u1
    eta = np.where(above, m, 0.0)
    deficit = 1.0 - eta.sum()
    at_mass = d.base.weights[at].sum()
    if deficit > MASS_TOL and at_mass > 0:
        spread = min(deficit, float(m[at].sum()))
        eta = eta + np.where(at, spread * d.base.weights / at_mass, 0.0)
    return Perturbation(eta)


def unit_mass_perturbed_bound(d, u):
    u = _check_u(d, u)
    eta = unit_mass_eta_star(d, u)
    u1 = _threshold_u1(d, u)
    detail = {"alpha": d.alpha, "u": u, "u1": u1, "eta": eta.masses.tolist()}
    if u == d.base.f_min:
        # the event is certain
        return BoundReport(BoundKind.UNIT_MASS, 0.0, True, eta_used=eta.total, detail=detail)
    exponent, sol = perturbed_exponent(d, eta, u)
    detail.update(lambda_star=sol.lambda_star, dual_slack=sol.dual_slack)
    return BoundReport(BoundKind.UNIT_MASS, -exponent if exponent else 0.0, True, eta_used=eta.total, detail=detail)


# --- grid oracle for the unit-mass maximizer -------------------------------------

ORACLE_CHUNK = 200_000
# the value is quadratic in the lambda error, so a loose bracket suffices
ORACLE_RTOL = 1e-9


def _box_points(caps, steps):
    axes = [np.linspace(0.0, c, steps + 1) for c in caps]
    return np.array(list(itertools.product(*axes))) if axes else np.zeros((1, 0))


def _oracle_points(caps, steps):
    """Grid points of {0 <= eta <= caps, sum(eta) <= 1}.

    For d <= 2 the whole box is gridded. For d = 3 only the boundary is: the
    exponent is a supremum over lambda of functions affine in eta, hence
    convex, so its maximum over the polytope sits on the boundary.
    """
    d = caps.size
    if d <= 2:
        pts = _box_points(caps, steps)
        return pts[pts.sum(axis=1) <= 1.0 + MASS_TOL]
    faces = []
    for j in range(d):
        rest = np.delete(caps, j)
        for fixed in (0.0, caps[j]):
            sub = _box_points(rest, steps)
            faces.append(np.insert(sub, j, fixed, axis=1))
    # the face sum(eta) = 1, the last coordinate solved from the others
    sub = _box_points(caps[:-1], steps)
    last = 1.0 - sub.sum(axis=1)
    keep = (last >= 0) & (last <= caps[-1])
    faces.append(np.hstack([sub[keep], last[keep, None]]))
    pts = np.vstack(faces)
    return pts[pts.sum(axis=1) <= 1.0 + MASS_TOL]


def eta_star_oracle(d, u, grid_steps=400):
    """Grid maximum of the unit-mass perturbed exponent over admissible eta."""
    u = _check_u(d, u)
    if d.base.d > 3:
        raise DomainError("eta_star_oracle supports at most 3 atoms")
    f = d.base.payoffs
    m = d.masses
    caps = np.minimum(1.0, m)
    pts = _oracle_points(caps, int(grid_steps))
    best = 0.0
    for start in range(0, pts.shape[0], ORACLE_CHUNK):
        eta = pts[start : start + ORACLE_CHUNK]
        remaining = np.clip(m - eta, 0.0, None)
        scale = remaining.sum(axis=1)
        ok = scale > 0
        if not np.any(ok):
            continue
        rows = remaining[ok] / scale[ok, None]
        value = _solve_dual(rows, f, u, rtol=ORACLE_RTOL)[0]
        best = max(best, float(np.max(scale[ok] * value)))
    return best


# --- beyond unit mass --------------------------------------------------------------


def _candidate_mass(d, u, v, rule):
    """Mass M_i(a_v, alpha - a_v, u/v) placed on the f = v atoms, or a skip reason."""
    f = d.base.payoffs
    a_v = float(d.masses[f == v].sum())
    b_v = d.alpha - a_v
    if b_v <= 0:
        return None, "no mass off v"
    # the S-levels compare Beta thresholds through u/v, which needs
    # E[f | f != v] >= 0 and u/v in (0, 1)
    s_ok = u > 0 and float(f[f != v].min()) >= 0
    if rule.name == "explicit":
        if a_v < 1.0 or rule.eta == 0.0:
            return min(rule.eta, a_v), None
        if not s_ok:
            return None, "S-level needs u > 0 and non-negative payoffs off v"
        return eta_cap(BetaParams(a_v, b_v), u / v, rule), None
    if a_v < 1.0:
        return a_v, None
    if not s_ok:
        return None, "S-level needs u > 0 and non-negative payoffs off v"
    return eta_cap(BetaParams(a_v, b_v), u / v, rule), None


def beyond_unit_bound(d, u, rule=PerturbationRule("sinf")):
    """Best bound over perturbations concentrated on a single payoff value v > u."""
    u = _check_u(d, u)
    f = d.base.payoffs
    w = d.base.weights
    values = [float(v) for v in np.unique(f) if v > max(u, 0.0)]
    if not values:
        raise DomainError("no payoff value lies above max(u, 0)")
    best = None
    candidates = []
    for v in values:
        mass, reason = _candidate_mass(d, u, v, rule)
        if reason is None and d.alpha - mass <= 0:
            reason = "perturbation consumes the scale"
        if reason is not None:
            candidates.append({"v": v, "skipped": reason})
            continue
        on_v = f == v
        eta = Perturbation(np.where(on_v, mass * w / w[on_v].sum(), 0.0))
        exponent, sol = perturbed_exponent(d, eta, u)
        candidates.append({"v": v, "eta": mass, "exponent": exponent})
        if best is None or exponent > best[0]:
            best = (exponent, v, mass, sol)
    detail = {"alpha": d.alpha, "u": u, "rule": str(rule), "candidates": candidates}
    if best is None:
        # every candidate was skipped; only the trivial bound remains
        return BoundReport(BoundKind.BEYOND_UNIT, 0.0, True, eta_used=0.0, detail=detail)
    exponent, v, mass, sol = best
    detail.update(v_star=v, lambda_star=sol.lambda_star, dual_slack=sol.dual_slack)
    return BoundReport(BoundKind.BEYOND_UNIT, -exponent if exponent else 0.0, True, eta_used=mass, detail=detail)


def two_value_log_tail(d, u):
    """Exact ln P(E_X[f] >= u) when the payoffs take exactly two values; else None.

    With values lo < hi, E_X[f] = lo + (hi - lo) B where B = X(f = hi) is
    Beta(alpha nu0(f = hi), alpha nu0(f = lo)).
    """
    u = check_finite(u, "u")
    f = d.base.payoffs
    values = np.unique(f)
    if values.size != 2:
        return None
    lo, hi = float(values[0]), float(values[1])
    if u <= lo:
        return 0.0
    if u > hi:
        return -np.inf
    a = float(d.masses[f == hi].sum())
    b = float(d.masses[f == lo].sum())
    return log_beta_tail(a, b, min(1.0, (u - lo) / (hi - lo)))
