import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dptail import DomainError
from dptail.kinf import FiniteSupport, kinf_batch, kinf_bruteforce, kinf_indicator, kinf_variational
from dptail.special import kl_binary, kl_discrete


def fs(w, f):
    return FiniteSupport(np.array(w, dtype=float), np.array(f, dtype=float))


def test_indicator_example():
    sol = kinf_variational(fs([0.3, 0.7], [1, 0]), 0.5)
    assert sol.value == pytest.approx(kl_binary(0.3, 0.5), abs=1e-14)
    assert sol.lambda_star == pytest.approx(0.8, rel=1e-12)
    assert sol.dual_slack == pytest.approx(1.0, abs=1e-12)


def test_feasible_nu_gives_zero():
    sol = kinf_variational(fs([0.6, 0.4], [1, 0]), 0.5)
    assert sol.value == 0.0 and sol.lambda_star == 0.0


def test_three_atom_example_matches_oracle():
    nu = fs([0.2, 0.5, 0.3], [0, 0.5, 1])
    assert kinf_variational(nu, 0.8).value == pytest.approx(kinf_bruteforce(nu, 0.8), abs=1e-4)


def test_oracle_examples():
    nu = fs([0.3, 0.7], [1, 0])
    assert kinf_bruteforce(nu, 0.5, grid_steps=2000) == pytest.approx(0.0823, abs=1e-4)
    assert kinf_bruteforce(nu, 0.0) == 0.0
    # nu has no mass on the top payoff: the minimizer is mu = (1/2, 1/2)
    assert kinf_bruteforce(fs([1, 0], [0, 1]), 0.5) == pytest.approx(math.log(2), abs=1e-4)


def test_boundary_case_without_top_mass():
    sol = kinf_variational(fs([1, 0], [0, 1]), 0.5)
    assert sol.at_boundary
    assert sol.value == pytest.approx(math.log(2), abs=1e-14)
    assert sol.lambda_star == pytest.approx(2.0)
    assert sol.dual_slack <= 1 + 1e-9


def test_u_equal_f_max_extension():
    sol = kinf_variational(fs([0.5, 0.5], [1, 0]), 1.0)
    assert sol.value == math.inf and sol.extended
    sol = kinf_variational(fs([1.0, 0.0], [1, 0]), 1.0)
    assert sol.value == 0.0 and sol.extended


def test_constant_payoffs():
    assert kinf_variational(fs([0.5, 0.5], [2, 2]), 1.0).value == 0.0
    with pytest.raises(DomainError):
        kinf_variational(fs([0.5, 0.5], [2, 2]), 3.0)


@pytest.mark.parametrize("u", [-0.1, 1.1, math.nan])
def test_u_out_of_range(u):
    with pytest.raises(DomainError):
        kinf_variational(fs([0.5, 0.5], [1, 0]), u)


def test_finite_support_validation():
    with pytest.raises(DomainError):
        fs([0.5, 0.6], [1, 0])
    with pytest.raises(DomainError):
        fs([0.5, 0.5], [1, 0, 2])
    with pytest.raises(DomainError):
        fs([0.5, 0.5], [1, math.inf])


def random_instance(rng, d):
    w = rng.dirichlet(np.ones(d))
    f = rng.uniform(-1, 2, d)
    nu = FiniteSupport(w, f)
    return nu, nu.mean + rng.uniform(0, 0.9) * (nu.f_max - nu.mean)


def test_agrees_with_bruteforce_on_random_instances():
    rng = np.random.default_rng(2024)
    for i in range(30):
        nu, u = random_instance(rng, 2 + i % 3)
        sol = kinf_variational(nu, u)
        assert sol.value == pytest.approx(kinf_bruteforce(nu, u), abs=1e-4)


def test_primal_certificate():
    # the tilted mu_i = w_i / (1 - lam (f_i - u)) is feasible and attains the value
    rng = np.random.default_rng(8)
    for _ in range(50):
        nu, u = random_instance(rng, 4)
        sol = kinf_variational(nu, u)
        if sol.at_boundary or sol.value == 0:
            continue
        mu = nu.weights / (1 - sol.lambda_star * (nu.payoffs - u))
        assert mu.sum() == pytest.approx(1.0, abs=1e-9)
        assert mu @ nu.payoffs >= u - 1e-9
        assert kl_discrete(nu.weights, mu / mu.sum()) == pytest.approx(sol.value, abs=1e-9)


def test_dual_slack_certificate():
    rng = np.random.default_rng(3)
    for _ in range(100):
        nu, u = random_instance(rng, int(rng.integers(2, 6)))
        sol = kinf_variational(nu, u)
        assert sol.dual_slack <= 1 + 1e-9
        if sol.value > 0 and not sol.at_boundary:
            assert abs(sol.dual_slack - 1) <= 1e-6


def test_boundary_instances_have_slack_below_one():
    rng = np.random.default_rng(4)
    seen = 0
    for _ in range(200):
        w = rng.dirichlet(np.ones(3))
        w[0] = 0.0
        w /= w.sum()
        nu = FiniteSupport(w, np.array([1.0, rng.uniform(0, 0.5), rng.uniform(-1, 0)]))
        u = rng.uniform(nu.mean, 1.0)
        sol = kinf_variational(nu, u)
        assert sol.dual_slack <= 1 + 1e-9
        if sol.at_boundary:
            seen += 1
            assert sol.value == pytest.approx(kinf_bruteforce(nu, u), abs=1e-4)
    assert seen > 0


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
    st.data(),
)
def test_indicator_reduction(raw, data):
    w = np.array(raw) / sum(raw)
    d = w.size
    bits = data.draw(st.lists(st.integers(0, 1), min_size=d, max_size=d))
    bits[0], bits[-1] = 1, 0
    f = np.array(bits, dtype=float)
    mass = float(w[f == 1].sum())
    u = data.draw(st.floats(mass, 0.999))
    assert kinf_variational(FiniteSupport(w, f), u).value == pytest.approx(kinf_indicator(mass, u), abs=1e-10)


def test_kinf_indicator_examples():
    assert kinf_indicator(0.3, 0.5) == pytest.approx(0.0822828785, abs=1e-9)
    assert kinf_indicator(0.4, 0.4) == 0.0
    assert kinf_indicator(0.0, 0.6) == pytest.approx(0.9162907318741551, rel=1e-14)


def test_monotone_in_u():
    rng = np.random.default_rng(6)
    for _ in range(20):
        nu, _ = random_instance(rng, 4)
        us = np.linspace(nu.mean, nu.f_max, 40, endpoint=False)
        vals = [kinf_variational(nu, u).value for u in us]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert vals[0] == 0.0


def test_batch_matches_scalar():
    rng = np.random.default_rng(9)
    f = np.array([0.0, 0.4, 1.0])
    W = rng.dirichlet(np.ones(3), size=25)
    batch = kinf_batch(W, f, 0.7)
    for row, v in zip(W, batch):
        assert v == pytest.approx(kinf_variational(FiniteSupport(row, f), 0.7).value, abs=1e-13)


def test_affine_equivariance():
    nu = fs([0.2, 0.5, 0.3], [0, 0.5, 1])
    shifted = fs([0.2, 0.5, 0.3], [3, 4, 5])
    assert kinf_variational(nu, 0.8).value == pytest.approx(kinf_variational(shifted, 4.6).value, abs=1e-12)
