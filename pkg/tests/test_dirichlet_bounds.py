import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dptail import DegenerateScaleError, DomainError
from dptail.beta_bounds import PerturbationRule, kl_bound, perturbed_kl_bound_general
from dptail.dirichlet_bounds import (
    DirichletParams,
    Perturbation,
    beyond_unit_bound,
    chernoff_kinf_bound,
    eta_star_oracle,
    perturbed_exponent,
    two_value_log_tail,
    unit_mass_eta_star,
    unit_mass_perturbed_bound,
)
from dptail.kinf import FiniteSupport
from dptail.special import beta_tail, kl_binary, log_beta_tail

WORKED = DirichletParams.from_lists(3, [0.2, 0.8], [1, 0])


def test_worked_example():
    ch = chernoff_kinf_bound(WORKED, 0.6)
    assert ch.log_bound == pytest.approx(-3 * kl_binary(0.2, 0.6), rel=1e-14)
    assert ch.log_bound == pytest.approx(-1.00432, abs=1e-3)
    eta = unit_mass_eta_star(WORKED, 0.6)
    np.testing.assert_allclose(eta.masses, [0.6, 0.0], atol=1e-15)
    um = unit_mass_perturbed_bound(WORKED, 0.6)
    assert um.log_bound == pytest.approx(-2.4 * kl_binary(0.0, 0.6), rel=1e-14)
    assert um.log_bound == pytest.approx(-2.19910, abs=1e-5)
    assert um.eta_used == pytest.approx(0.6)
    assert um.detail["u1"] == 0.6
    assert um.log_bound >= math.log(beta_tail(0.6, 2.4, 0.6))


def test_oracle_on_worked_example():
    assert eta_star_oracle(WORKED, 0.6, grid_steps=400) == pytest.approx(2.19910, abs=1e-3)


def test_oracle_tiny_alpha_is_chernoff():
    d = DirichletParams.from_lists(1e-9, [0.3, 0.3, 0.4], [0, 0.5, 1])
    # every exponent is O(alpha), so the perturbation cannot move it by more
    ch = -chernoff_kinf_bound(d, 0.7).log_bound
    assert eta_star_oracle(d, 0.7, grid_steps=50) == pytest.approx(ch, abs=1e-8)
    assert -unit_mass_perturbed_bound(d, 0.7).log_bound == pytest.approx(ch, abs=1e-8)


def test_chernoff_matches_kl_bound_on_two_atoms():
    for alpha, w, u in [(3, 0.2, 0.6), (10, 0.5, 0.8), (0.7, 0.4, 0.9)]:
        d = DirichletParams.from_lists(alpha, [w, 1 - w], [1, 0])
        expect = kl_bound((alpha * w, alpha * (1 - w)), u).log_bound
        assert chernoff_kinf_bound(d, u).log_bound == pytest.approx(expect, rel=1e-12)


def test_below_mean_gives_zero():
    d = DirichletParams.from_lists(5, [0.3, 0.3, 0.4], [0, 1, 2])
    assert chernoff_kinf_bound(d, 1.0).log_bound == 0.0


def test_eta_star_saturates_for_large_alpha():
    d = DirichletParams.from_lists(20, [0.25, 0.25, 0.25, 0.25], [0, 1, 2, 3])
    eta = unit_mass_eta_star(d, 1.2)
    # alpha nu0 = 5 per atom, so only the top value clears the unit budget
    assert unit_mass_perturbed_bound(d, 1.2).detail["u1"] == 3.0
    np.testing.assert_allclose(eta.masses, [0, 0, 0, 1.0])
    d = DirichletParams.from_lists(2, [0.25, 0.25, 0.25, 0.25], [0, 1, 2, 3])
    eta = unit_mass_eta_star(d, 1.2)
    assert unit_mass_perturbed_bound(d, 1.2).detail["u1"] == 1.2
    np.testing.assert_allclose(eta.masses, [0, 0, 0.5, 0.5])
    assert eta.total == pytest.approx(1.0)
    assert np.all(eta.masses <= d.masses + 1e-12)


def test_eta_star_constraints_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        k = int(rng.integers(2, 6))
        d = DirichletParams(rng.exponential(3), _support(rng, k))
        u = rng.uniform(d.base.f_min, d.base.f_max)
        eta = unit_mass_eta_star(d, u)
        assert eta.total <= 1 + 1e-12
        assert np.all(eta.masses <= d.masses + 1e-12)
        # no mass below u
        assert np.all(eta.masses[d.base.payoffs < u] == 0)


def _support(rng, k):
    return FiniteSupport(rng.dirichlet(np.ones(k)), np.round(rng.uniform(-1, 2, k), 2))


def test_unit_mass_reduces_to_explicit_one():
    for alpha, w, u in [(3, 0.5, 0.7), (10, 0.2, 0.5), (4, 0.3, 0.9)]:
        d = DirichletParams.from_lists(alpha, [w, 1 - w], [1, 0])
        um = unit_mass_perturbed_bound(d, u)
        beta = perturbed_kl_bound_general((alpha * w, alpha * (1 - w)), u, PerturbationRule.explicit(1.0))
        assert um.eta_used == pytest.approx(1.0)
        assert um.log_bound == pytest.approx(beta.log_bound, rel=1e-10)


@pytest.mark.parametrize("name", PerturbationRule.NAMES)
def test_beyond_unit_reduces_to_beta(name):
    rule = PerturbationRule(name)
    for alpha, w, u in [(3, 0.5, 0.7), (10, 0.2, 0.5), (4, 0.3, 0.9), (30, 0.6, 0.8)]:
        d = DirichletParams.from_lists(alpha, [w, 1 - w], [1, 0])
        got = beyond_unit_bound(d, u, rule)
        ref = perturbed_kl_bound_general((alpha * w, alpha * (1 - w)), u, rule)
        assert got.eta_used == pytest.approx(ref.eta_used, rel=1e-12)
        assert got.log_bound == pytest.approx(ref.log_bound, rel=1e-10, abs=1e-12)


def test_beyond_unit_explicit_zero_is_chernoff():
    d = DirichletParams.from_lists(4, [0.2, 0.3, 0.5], [0, 0.5, 1])
    b = beyond_unit_bound(d, 0.8, PerturbationRule.explicit(0.0))
    assert b.log_bound == pytest.approx(chernoff_kinf_bound(d, 0.8).log_bound, rel=1e-13)


def test_beyond_unit_small_atom_removes_it():
    d = DirichletParams.from_lists(2, [0.3, 0.3, 0.4], [0, 0.5, 1])
    b = beyond_unit_bound(d, 0.6)
    cand = {c["v"]: c for c in b.detail["candidates"]}
    assert cand[1.0]["eta"] == pytest.approx(0.8)


def test_beyond_unit_skips_and_errors():
    # only candidate v = 1 carries all the scale
    with pytest.raises(DomainError):
        beyond_unit_bound(DirichletParams.from_lists(2, [0.5, 0.5], [-1, 0]), -0.5)
    d = DirichletParams.from_lists(3, [0.5, 0.5], [-1, 1])
    b = beyond_unit_bound(d, -0.5)
    assert b.valid and b.log_bound == 0.0 and "skipped" in b.detail["candidates"][0]


def test_degenerate_scale_error():
    d = DirichletParams.from_lists(0.5, [0.5, 0.5], [1, 0])
    with pytest.raises(DegenerateScaleError):
        perturbed_exponent(d, Perturbation(np.array([0.25, 0.25])), 0.5)


def test_validation():
    with pytest.raises(DomainError):
        DirichletParams.from_lists(0, [0.5, 0.5], [1, 0])
    with pytest.raises(DomainError):
        DirichletParams.from_lists(1, [1.0, 0.0], [1, 0])
    with pytest.raises(DomainError):
        Perturbation(np.array([-0.1, 0.2]))
    with pytest.raises(DomainError):
        chernoff_kinf_bound(WORKED, 1.0)
    with pytest.raises(DomainError):
        unit_mass_perturbed_bound(WORKED, -0.1)


def test_oracle_certifies_random_instances():
    rng = np.random.default_rng(12)
    for k in (2, 2, 3):
        d = DirichletParams(rng.uniform(0.5, 6), _support(rng, k))
        u = rng.uniform(d.base.mean, d.base.f_max)
        closed = -unit_mass_perturbed_bound(d, u).log_bound
        assert closed >= eta_star_oracle(d, u) - 2e-3


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 50), st.integers(2, 5), st.integers(0, 10_000), st.floats(0, 0.999))
def test_dominance(alpha, k, seed, frac):
    rng = np.random.default_rng(seed)
    d = DirichletParams(alpha, _support(rng, k))
    u = d.base.f_min + frac * (d.base.f_max - d.base.f_min)
    assert unit_mass_perturbed_bound(d, u).log_bound <= chernoff_kinf_bound(d, u).log_bound + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 50), st.integers(2, 5), st.integers(0, 10_000), st.floats(0, 0.999),
       st.floats(0.1, 10), st.floats(-5, 5))
def test_affine_invariance(alpha, k, seed, frac, c, s):
    rng = np.random.default_rng(seed)
    d = DirichletParams(alpha, _support(rng, k))
    u = d.base.f_min + frac * (d.base.f_max - d.base.f_min)
    moved = DirichletParams(alpha, FiniteSupport(d.base.weights, c * d.base.payoffs + s))
    v = c * u + s
    # keep the threshold inside the moved support despite rounding
    v = min(max(v, moved.base.f_min), np.nextafter(moved.base.f_max, -np.inf))
    for fn in (chernoff_kinf_bound, unit_mass_perturbed_bound):
        assert fn(d, u).log_bound == pytest.approx(fn(moved, v).log_bound, abs=1e-8, rel=1e-8)


def test_two_atom_soundness_grid():
    rules = [PerturbationRule(n) for n in PerturbationRule.NAMES]
    count = 0
    for alpha in (0.5, 1, 2, 5, 20):
        for w in (0.1, 0.3, 0.5, 0.7, 0.9):
            d = DirichletParams.from_lists(alpha, [w, 1 - w], [1, 0])
            for u in np.linspace(0.05, 0.95, 20):
                exact = log_beta_tail(alpha * w, alpha * (1 - w), u)
                assert two_value_log_tail(d, u) == exact
                reps = [chernoff_kinf_bound(d, u), unit_mass_perturbed_bound(d, u)]
                reps += [beyond_unit_bound(d, u, r) for r in rules]
                for r in reps:
                    assert r.log_bound >= exact - 1e-9
                count += 1
    assert count >= 500


def test_two_value_log_tail():
    d = DirichletParams.from_lists(3, [0.2, 0.3, 0.5], [1, 1, -1])
    assert two_value_log_tail(d, 0.2) == pytest.approx(log_beta_tail(1.5, 1.5, 0.6), rel=1e-15)
    assert two_value_log_tail(d, -1) == 0.0
    assert two_value_log_tail(DirichletParams.from_lists(3, [0.2, 0.3, 0.5], [0, 0.5, 1]), 0.2) is None
