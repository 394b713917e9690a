"""Exponential upper bounds on Beta tails P(B >= u), B ~ Beta(a, b).

All bounds are reported on the log scale. A report always carries the
formula value, even outside its validity range, so callers can inspect it;
the ``valid`` flag says whether the inequality is actually guaranteed.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

from ._validation import DomainError, check_finite, check_positive, check_unit_interval
from .special import kl_binary, lambert_w0_from_log, log_beta_tail

__all__ = [
    "BetaParams",
    "BoundKind",
    "BoundReport",
    "PerturbationRule",
    "hoeffding_bound",
    "bernstein_bound",
    "kl_bound",
    "perturbed_kl_bound_table1",
    "R_function",
    "s0",
    "s1",
    "s2",
    "s_inf",
    "eta_cap",
    "perturbed_kl_bound_general",
]


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", check_positive(self.a, "a"))
        object.__setattr__(self, "b", check_positive(self.b, "b"))

    @property
    def mean(self):
        return self.a / (self.a + self.b)


class BoundKind(str, Enum):
    HOEFFDING = "hoeffding"
    BERNSTEIN = "bernstein"
    KL = "kl"
    PERTURBED_TABLE1 = "perturbed-table1"
    PERTURBED_GENERAL = "perturbed-general"
    CHERNOFF_KINF = "chernoff"
    UNIT_MASS = "unit-mass"
    BEYOND_UNIT = "beyond-unit"

    @property
    def perturbed(self):
        return self in _PERTURBED_KINDS


_PERTURBED_KINDS = frozenset(
    {BoundKind.PERTURBED_TABLE1, BoundKind.PERTURBED_GENERAL, BoundKind.UNIT_MASS, BoundKind.BEYOND_UNIT}
)


@dataclass(frozen=True)
class BoundReport:
    """One bound on ln P(tail event); ``eta_used`` is set for perturbed kinds only."""

    kind: BoundKind
    log_bound: float
    valid: bool
    eta_used: float | None = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.eta_used is not None) != self.kind.perturbed:
            raise ValueError(f"eta_used must be given exactly for perturbed kinds ({self.kind.value})")


@dataclass(frozen=True)
class PerturbationRule:
    """Which perturbation level to use: one of the S-family or an explicit eta."""

    name: str
    eta: float | None = None

    NAMES = ("s0", "s1", "s2", "sinf")

    def __post_init__(self):
        if self.name == "explicit":
            eta = check_finite(self.eta, "eta")
            if eta < 0:
                raise DomainError(f"explicit eta must be >= 0, got {eta!r}")
            object.__setattr__(self, "eta", eta)
        elif self.name in self.NAMES:
            if self.eta is not None:
                raise DomainError(f"rule {self.name} takes no eta")
        else:
            raise DomainError(f"unknown perturbation rule {self.name!r}")

    @classmethod
    def parse(cls, text):
        """Parse ``s0``, ``s1``, ``s2``, ``sinf`` or ``eta=VALUE``."""
        text = text.strip().lower()
        if text.startswith("eta="):
            try:
                value = float(text[4:])
            except ValueError:
                raise DomainError(f"cannot parse eta in {text!r}") from None
            return cls("explicit", value)
        return cls(text)

    @classmethod
    def explicit(cls, eta):
        return cls("explicit", eta)

    def __str__(self):
        return f"eta={self.eta!r}" if self.name == "explicit" else self.name


def _as_params(p):
    return p if isinstance(p, BetaParams) else BetaParams(*p)


def _clean(x):
    # -0.0 reads oddly in reports
    return 0.0 if x == 0 else x


# --- classical bounds ---------------------------------------------------------


def hoeffding_bound(p, u):
    p = _as_params(p)
    u = check_unit_interval(u, "u")
    a, b = p.a, p.b
    val = -2.0 * (a + b + 1.0) * (u - p.mean) ** 2
    return BoundReport(BoundKind.HOEFFDING, _clean(val), u >= p.mean, detail={"a": a, "b": b, "u": u})


def bernstein_bound(p, u):
    p = _as_params(p)
    u = check_unit_interval(u, "u")
    a, b = p.a, p.b
    dev = (a + b) * u - a
    denom = 2.0 * a * b / (a + b + 1.0) + 4.0 * dev * max(b - a, 0.0) / (3.0 * (a + b + 2.0))
    val = -dev * dev / denom if denom > 0 else math.nan
    return BoundReport(BoundKind.BERNSTEIN, _clean(val), u >= p.mean, detail={"a": a, "b": b, "u": u})


def kl_bound(p, u):
    p = _as_params(p)
    u = check_unit_interval(u, "u")
    a, b = p.a, p.b
    val = -(a + b) * kl_binary(p.mean, u)
    return BoundReport(BoundKind.KL, _clean(val), u >= p.mean, detail={"a": a, "b": b, "u": u})


def _perturbed_value(a, b, eta, u):
    """Return (x, -(a+b-eta) kl(x || u)) with x = (a-eta)/(a+b-eta); nan if x leaves [0, 1]."""
    scale = a + b - eta
    x = (a - eta) / scale
    if x < 0.0 or x > 1.0:
        return x, math.nan
    return x, _clean(-scale * kl_binary(x, u))


def perturbed_kl_bound_table1(p, u):
    """Perturbed KL bound at the fixed level eta = 1 + (a-1)/(b+1)."""
    p = _as_params(p)
    u = check_unit_interval(u, "u")
    a, b = p.a, p.b
    eta = 1.0 + (a - 1.0) / (b + 1.0)
    x, val = _perturbed_value(a, b, eta, u)
    valid = a >= 1.0 and u >= x
    return BoundReport(
        BoundKind.PERTURBED_TABLE1, val, valid, eta_used=eta, detail={"a": a, "b": b, "u": u, "x": x}
    )


# --- perturbation levels --------------------------------------------------------


def _open_u(u):
    return check_unit_interval(u, "u", open_left=True, open_right=True)


def R_function(p, u, eta):
    """R(eta) = (u b - (1-u)(a-eta)) / b * u^(-eta) - 1; negative exactly on [0, s_inf)."""
    p = _as_params(p)
    u = _open_u(u)
    eta = check_finite(eta, "eta")
    a, b = p.a, p.b
    return (u * b - (1.0 - u) * (a - eta)) / b * math.exp(-eta * math.log(u)) - 1.0


def s0(p, u):
    p = _as_params(p)
    _open_u(u)
    return p.a - p.b * (p.a - 1.0) / (p.b + 1.0)


def s1(p, u):
    p = _as_params(p)
    u = _open_u(u)
    a, b = p.a, p.b
    L = -math.log(u)
    return a - b * (a - 1.0) / (b + (1.0 / u - 1.0) / L)


def s2(p, u):
    """Second-order level; nan when the square root is undefined (possible for a < 1)."""
    p = _as_params(p)
    u = _open_u(u)
    a, b = p.a, p.b
    if a == 1.0:
        return 1.0
    L = -math.log(u)
    c = 1.0 / u - 1.0
    B = b * L + c
    x = 2.0 * c * c * L * (a - 1.0) / (B * B)
    if x < -1.0:
        return math.nan
    # sqrt(1+x) - 1 rewritten as x / (sqrt(1+x) + 1) to avoid cancellation
    return a - 2.0 * b * L * (a - 1.0) / (B * (math.sqrt(1.0 + x) + 1.0))


def _s_inf_lambert(a, b, u):
    L = -math.log(u)
    shift = a - b * u / (1.0 - u)
    log_arg = math.log(b) + shift * math.log(u) + math.log(L) - math.log1p(-u)
    if log_arg < -700.0:
        # W0(x) = x (1 + O(x)) for tiny x
        return shift + math.exp(log_arg) / L
    return shift + lambert_w0_from_log(log_arg) / L


def _s_inf_bisect(a, b, u):
    def r(eta):
        return (u * b - (1.0 - u) * (a - eta)) / b * math.exp(-eta * math.log(u)) - 1.0

    lo = 0.0
    hi = a + b * u / (1.0 - u) + 10.0
    while r(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if r(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


S_INF_RESIDUAL_TOL = 1e-10


def s_inf(p, u):
    """Unique root of R on [0, inf), via Lambert W; verified and repaired by bisection."""
    p = _as_params(p)
    u = _open_u(u)
    a, b = p.a, p.b
    if a == 1.0:
        return 1.0
    eta = _s_inf_lambert(a, b, u)
    ok = math.isfinite(eta) and eta >= 0.0
    if ok:
        try:
            ok = abs(R_function(p, u, eta)) <= S_INF_RESIDUAL_TOL
        except OverflowError:
            ok = False
    if not ok:
        eta = _s_inf_bisect(a, b, u)
    return eta


_S_RULES = {"s0": s0, "s1": s1, "s2": s2, "sinf": s_inf}


def eta_cap(p, u, rule):
    """Perturbation level for ``rule``.

    S-family rules give S_i(a, b, u) when a >= 1 and a otherwise. An explicit
    eta is clamped into [0, min(a, s_inf)], the range where the perturbed
    bound is proven.
    """
    p = _as_params(p)
    u = _open_u(u)
    if rule.name == "explicit":
        return min(rule.eta, p.a, s_inf(p, u))
    if p.a < 1.0:
        return p.a
    return _S_RULES[rule.name](p, u)


def perturbed_kl_bound_general(p, u, rule):
    """Perturbed KL bound with eta from ``rule``.

    ``log_bound`` is -(a+b-eta) kl(x || u) with x = (a-eta)/(a+b-eta). The
    sharper difference form ln P(B >= x) - (a+b-eta) kl(x || u) is stored in
    ``detail["difference_form"]``.
    """
    p = _as_params(p)
    u = _open_u(u)
    a, b = p.a, p.b
    eta = eta_cap(p, u, rule)
    clamped = rule.name == "explicit" and eta < rule.eta
    x, val = _perturbed_value(a, b, eta, u)
    valid = math.isfinite(val) and u > x
    diff = math.nan
    if valid:
        diff = log_beta_tail(a, b, x) + val
    detail = {"a": a, "b": b, "u": u, "rule": str(rule), "x": x, "clamped": clamped, "difference_form": diff}
    return BoundReport(BoundKind.PERTURBED_GENERAL, val, valid, eta_used=eta, detail=detail)
