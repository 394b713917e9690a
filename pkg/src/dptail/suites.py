"""Fixed property suites run by ``dptail check`` and by the acceptance tests.

Each suite returns a list of :class:`Verdict`. Instances are hard-coded so a
given seed always reproduces the same output.
"""

import math

import numpy as np

from .beta_bounds import PerturbationRule, R_function, s0, s1, s2, s_inf
from .dirichlet_bounds import DirichletParams, beyond_unit_bound, chernoff_kinf_bound, unit_mass_perturbed_bound
from .kinf import FiniteSupport
from .montecarlo import (
    DEFAULT_CONFIDENCE,
    Verdict,
    check_dirichlet_multinomial,
    check_superadditivity_convex,
    check_superadditivity_halfspace,
    estimate_tail,
)

SUITES = ("superadditivity", "convex", "correspondence", "soundness", "s-family")

# (nu weights, payoffs, eta, u, s, t)
HALFSPACE_CASES = [
    ((0.5, 0.5), (1, 0), (1, 0), 0.7, 2, 2),
    ((0.5, 0.5), (1, 0), (0, 0), 0.6, 1, 3),
    ((0.3, 0.7), (1, 0), (0.5, 0), 0.5, 2, 5),
    ((0.2, 0.3, 0.5), (0, 0.5, 1), (0, 0, 1), 0.8, 3, 3),
    ((1 / 3, 1 / 3, 1 / 3), (0, 1, 2), (0, 0.5, 0.5), 1.4, 2, 4),
    ((0.25, 0.25, 0.25, 0.25), (0, 1, 2, 3), (0, 0, 0, 1), 2.0, 4, 4),
    ((0.6, 0.4), (0, 1), (0, 0.3), 0.55, 1.5, 2.5),
    ((0.5, 0.3, 0.2), (-1, 0.5, 2), (0.2, 0.2, 0.2), 0.6, 3, 2),
    ((0.1, 0.9), (1, 0), (1, 0), 0.3, 5, 5),
    ((0.4, 0.4, 0.2), (0, 1, 3), (0, 0, 0), 1.2, 2, 6),
]

# (p_ref, x_atom, nu, s, t)
CONVEX_CASES = [
    ((0.2, 0.3, 0.5), 2, (1 / 3, 1 / 3, 1 / 3), 3, 3),
    ((1 / 3, 1 / 3, 1 / 3), 2, (1 / 3, 1 / 3, 1 / 3), 2, 2),
    ((0.1, 0.3, 0.6), 2, (0.3, 0.3, 0.4), 2, 4),
    ((0.3, 0.3, 0.4), 1, (0.5, 0.25, 0.25), 3, 5),
    ((0.2, 0.2, 0.6), 0, (1 / 3, 1 / 3, 1 / 3), 1, 2),
]

# (n_trials, p, thresholds k_1..k_{d-1})
CORRESPONDENCE_CASES = [
    (1, (0.5, 0.5), (1,)),
    (4, (0.3, 0.3, 0.4), (1, 3)),
    (3, (0.5, 0.5), (0,)),
    (8, (0.2, 0.8), (3,)),
    (5, (0.25, 0.25, 0.25, 0.25), (1, 2, 4)),
    (6, (0.1, 0.3, 0.6), (2, 2)),
    (8, (0.4, 0.3, 0.2, 0.1), (3, 5, 7)),
    (2, (0.6, 0.4), (2,)),
    (7, (0.2, 0.2, 0.2, 0.4), (0, 3, 3)),
    (8, (0.5, 0.25, 0.25), (4, 8)),
]

# (alpha, weights, payoffs, u) with three atoms
SOUNDNESS_CASES = [
    (3, (0.2, 0.3, 0.5), (0, 0.5, 1), 0.8),
    (5, (1 / 3, 1 / 3, 1 / 3), (0, 1, 2), 1.3),
    (2, (0.5, 0.3, 0.2), (0.1, 0.4, 1), 0.5),
    (10, (0.3, 0.3, 0.4), (0, 0.2, 1), 0.6),
    (1.5, (0.6, 0.2, 0.2), (0, 1, 2), 1.0),
    (4, (0.1, 0.6, 0.3), (0.3, 0.5, 0.9), 0.7),
    (8, (0.25, 0.5, 0.25), (0, 0.5, 1), 0.65),
    (0.8, (0.4, 0.4, 0.2), (0, 0.6, 1), 0.5),
    (6, (0.2, 0.2, 0.6), (-1, 0, 1), 0.6),
    (20, (0.4, 0.3, 0.3), (0, 0.5, 1), 0.55),
]

S_FAMILY_SHAPES = (0.5, 1.0, 2.0, 5.0, 10.0)
S_FAMILY_U = tuple(k / 100 for k in range(1, 100))
ORDER_SLACK = 1e-10
RESIDUAL_TOL = 1e-9


def run_superadditivity(n=1_000_000, seed=0, workers=1):
    out = []
    for i, (w, f, eta, u, s, t) in enumerate(HALFSPACE_CASES):
        nu = FiniteSupport(np.array(w), np.array(f, dtype=float))
        v = check_superadditivity_halfspace(nu, eta, u, s, t, n=n, seed=seed, stream=i, workers=workers)
        out.append(Verdict(f"{v.name}[{i}]", v.status, {"weights": list(w), "payoffs": list(f), **v.detail}))
    return out


def run_convex(n=1_000_000, seed=0, workers=1):
    out = []
    for i, (p, x, nu, s, t) in enumerate(CONVEX_CASES):
        v = check_superadditivity_convex(p, x, s, t, n=n, seed=seed, nu=nu, stream=100 + i, workers=workers)
        out.append(Verdict(f"{v.name}[{i}]", v.status, v.detail))
    return out


def run_correspondence(n=1_000_000, seed=0, workers=1):
    out = []
    for i, (m, p, k) in enumerate(CORRESPONDENCE_CASES):
        v = check_dirichlet_multinomial(m, p, k, n=n, seed=seed, stream=200 + i, workers=workers)
        out.append(Verdict(f"{v.name}[{i}]", v.status, v.detail))
    return out


def soundness_reports(d, u):
    """Every Dirichlet bound on P(E_X[f] >= u)."""
    reports = [chernoff_kinf_bound(d, u), unit_mass_perturbed_bound(d, u)]
    for name in PerturbationRule.NAMES:
        reports.append(beyond_unit_bound(d, u, PerturbationRule(name)))
    return reports


def run_soundness(n=1_000_000, seed=0, workers=1, confidence=DEFAULT_CONFIDENCE):
    out = []
    for i, (alpha, w, f, u) in enumerate(SOUNDNESS_CASES):
        d = DirichletParams.from_lists(alpha, w, f)
        est = estimate_tail(d, u, n=n, seed=seed, confidence=confidence, stream=300 + i, workers=workers)
        rows = []
        status = "pass"
        for rep in soundness_reports(d, u):
            ok = not rep.valid or math.exp(rep.log_bound) >= est.ci_low
            label = rep.kind.value if "rule" not in rep.detail else f"{rep.kind.value}:{rep.detail['rule']}"
            rows.append({"bound": label, "log_bound": rep.log_bound, "valid": rep.valid, "ok": ok})
            if not ok:
                status = "fail"
        detail = {"alpha": alpha, "weights": list(w), "payoffs": list(f), "u": u,
                  "p_hat": est.p_hat, "ci_low": est.ci_low, "ci_high": est.ci_high, "bounds": rows}
        out.append(Verdict(f"soundness-d3[{i}]", status, detail))
    return out


def s_inf_residual_tolerance(a, b, u, eta):
    """1e-9 plus the change in R across a few ulps of eta at the root.

    Where u^(-eta) is huge, R moves by more than 1e-9 between adjacent
    doubles, so no floating-point eta can meet the plain 1e-9 target.
    """
    L = -math.log(u)
    scale = math.exp(eta * L) / b
    slope = abs(scale * ((1.0 - u) + L * (u * b - (1.0 - u) * (a - eta))))
    return RESIDUAL_TOL + 4.0 * slope * math.ulp(eta) + 8.0 * math.ulp(1.0) * (1.0 + abs(scale))


def s_family_checks():
    """Counts of violations of each S-level property over the (a, b, u) grid."""
    counts = {"ordering": 0, "residual": 0, "residual_plain": 0, "negative_below_root": 0,
              "threshold": 0, "monotone": 0, "points": 0}
    worst_plain = 0.0
    for a in S_FAMILY_SHAPES:
        for b in S_FAMILY_SHAPES:
            prev = math.inf
            for u in S_FAMILY_U:
                p = (a, b)
                counts["points"] += 1
                si = s_inf(p, u)
                if a >= 1:
                    levels = [si, s2(p, u), s1(p, u), s0(p, u), 0.0]
                    if any(levels[k] < levels[k + 1] - ORDER_SLACK for k in range(4)):
                        counts["ordering"] += 1
                    if si > prev + ORDER_SLACK:
                        counts["monotone"] += 1
                    prev = si
                r = abs(R_function(p, u, si))
                worst_plain = max(worst_plain, r)
                if r > RESIDUAL_TOL:
                    counts["residual_plain"] += 1
                if r > s_inf_residual_tolerance(a, b, u, si):
                    counts["residual"] += 1
                if any(R_function(p, u, si * k / 21) > 0 for k in range(1, 21)):
                    counts["negative_below_root"] += 1
                if (si <= a) != (a >= 1):
                    counts["threshold"] += 1
    return counts, worst_plain


def run_s_family():
    counts, worst_plain = s_family_checks()
    out = []
    for key in ("ordering", "residual", "negative_below_root", "threshold", "monotone"):
        detail = {"violations": counts[key], "points": counts["points"]}
        if key == "residual":
            detail.update(plain_1e9_violations=counts["residual_plain"], worst_plain_residual=worst_plain)
        out.append(Verdict(f"s-family:{key}", "fail" if counts[key] else "pass", detail))
    return out


def run_suite(name, n=1_000_000, seed=0, workers=1):
    runners = {
        "superadditivity": lambda: run_superadditivity(n, seed, workers),
        "convex": lambda: run_convex(n, seed, workers),
        "correspondence": lambda: run_correspondence(n, seed, workers),
        "soundness": lambda: run_soundness(n, seed, workers),
        "s-family": run_s_family,
    }
    if name == "all":
        return [v for key in SUITES for v in runners[key]()]
    if name not in runners:
        raise KeyError(name)
    return runners[name]()
