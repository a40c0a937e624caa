import numpy as np
import pytest

import presets
from exceptions import ParameterError, UnstableStation
from model import Deterministic, NetworkModel
from oracle import (
    burn_in_estimate,
    finite_difference_gradient,
    mm1_mean_wait,
    mm1_wait_derivative,
    mm_forkjoin_mean_sojourn,
    mm_forkjoin_mean_unsync,
    mm_forkjoin_sojourn_derivative,
)

TABLE_RATES = (1.8, 1.4, 1.1, 1.06)
TRUE_SOJOURN = (1.7882, 3.5268, 13.8636, 23.0346)
TRUE_UNSYNC = (1.0764, 2.0536, 7.7273, 12.7358)
TRUE_DERIVATIVE = (-2.1870, -8.6575, -137.6033, -382.0557)


# --- Fórmulas fechadas ---
@pytest.mark.parametrize("mu, s, d, g", zip(TABLE_RATES, TRUE_SOJOURN, TRUE_UNSYNC, TRUE_DERIVATIVE))
def test_closed_forms_reproduce_tables(mu, s, d, g):
    assert round(mm_forkjoin_mean_sojourn(1.0, mu), 4) == s
    assert round(mm_forkjoin_mean_unsync(1.0, mu), 4) == d
    assert round(mm_forkjoin_sojourn_derivative(1.0, mu), 4) == g


def test_closed_form_limits():
    mu = 1.7
    assert mm_forkjoin_mean_sojourn(0.0, mu) == pytest.approx(1.5 / mu)
    assert mm_forkjoin_mean_unsync(0.0, mu) == 0.0
    assert mm_forkjoin_sojourn_derivative(0.0, mu) == pytest.approx(-1.5 / mu**2)


def test_closed_forms_increase_with_load():
    lam = np.linspace(0.0, 0.99, 60)
    S = [mm_forkjoin_mean_sojourn(x, 1.0) for x in lam]
    D = [mm_forkjoin_mean_unsync(x, 1.0) for x in lam]
    assert np.all(np.diff(S) > 0)
    assert np.all(np.diff(D) > 0)
    assert S[-1] > 50


def test_derivative_matches_numerical_difference():
    h = 1e-6
    num = (mm_forkjoin_mean_sojourn(1.0, 1.4 + h) - mm_forkjoin_mean_sojourn(1.0, 1.4 - h)) / (2 * h)
    assert mm_forkjoin_sojourn_derivative(1.0, 1.4) == pytest.approx(num, rel=1e-6)
    num = (mm1_mean_wait(1.0, 2.0 + h) - mm1_mean_wait(1.0, 2.0 - h)) / (2 * h)
    assert mm1_wait_derivative(1.0, 2.0) == pytest.approx(num, rel=1e-6)


@pytest.mark.parametrize("f", [mm_forkjoin_mean_sojourn, mm_forkjoin_mean_unsync, mm_forkjoin_sojourn_derivative])
def test_closed_forms_reject_unstable_rates(f):
    with pytest.raises(ParameterError):
        f(1.0, 1.0)


# --- Simulação com aquecimento ---
def test_burn_in_always_empty(empty_model, rng):
    est = burn_in_estimate(empty_model, 100, 2100, rng)
    assert est.mean_sojourn == 1.0
    assert est.se_sojourn == 0.0
    assert est.mean_wait.tolist() == [0.0]
    assert est.mean_Q[0] == pytest.approx(0.5, abs=1e-9)
    assert est.mean_total_D == 0.0


def test_burn_in_mm1_wait(mm1, rng):
    est = burn_in_estimate(mm1, 10**4, 10**6, rng)
    assert est.mean_wait[0] == pytest.approx(mm1_mean_wait(1.0, 1.4), rel=0.05)
    rho = 1 / 1.4
    assert est.mean_Q[0] == pytest.approx(rho / (1 - rho), rel=0.05)


def test_burn_in_two_station(mm_two_station, rng):
    est = burn_in_estimate(mm_two_station, 10**4, 10**6, rng)
    assert est.mean_sojourn == pytest.approx(3.5268, rel=0.04)
    assert est.mean_total_D == pytest.approx(2.0536, rel=0.06)
    assert est.se_sojourn > 0
    assert np.all(est.se_Q > 0)


def test_burn_in_error_shrinks_with_horizon(mm1):
    # dobrar os jobs medidos divide o erro padrão por ~sqrt(2); média em 8 sementes
    warmup = 10**3

    def erro_medio(medidos):
        return np.mean([
            burn_in_estimate(mm1, warmup, warmup + medidos, np.random.default_rng(s)).se_sojourn
            for s in range(8)
        ])

    razao = erro_medio(5 * 10**4) / erro_medio(10**5)
    assert 1.15 <= razao <= 1.75


def test_burn_in_requires_warmup_below_horizon(mm1, rng):
    with pytest.raises(ParameterError):
        burn_in_estimate(mm1, 100, 100, rng)


def test_burn_in_same_seed_same_estimate(mixed_model):
    a = burn_in_estimate(mixed_model, 100, 5000, np.random.default_rng(6))
    b = burn_in_estimate(mixed_model, 100, 5000, np.random.default_rng(6))
    assert a.mean_sojourn == b.mean_sojourn
    np.testing.assert_array_equal(a.mean_D, b.mean_D)


# --- Diferenças finitas ---
def test_finite_difference_of_empty_model(rng):
    model = NetworkModel(Deterministic(2.0), (Deterministic(1.0),), (1.0,))
    h = 0.01
    fd = finite_difference_gradient(model, 0, h, 1, rng, warmup=10, horizon=200)
    # S = 1/mu exatamente: diferença central = -1/(1 - h^2)
    assert fd.estimate == pytest.approx(-1 / (1 - h**2))
    assert fd.standard_error == 0.0


def test_finite_difference_two_station(rng):
    model = presets.two_station(1.8)
    partes = [finite_difference_gradient(model, k, 0.01, 8, rng, warmup=10**4, horizon=10**5) for k in range(2)]
    total = sum(p.estimate for p in partes)
    erro = np.hypot(*[p.standard_error for p in partes])
    assert abs(total + 2.1870) <= 3 * erro + 0.1
    assert abs(partes[0].estimate - partes[1].estimate) <= 3 * erro + 0.1


def test_finite_difference_rejects_unstable_perturbation(rng):
    model = presets.two_station(1.005)
    with pytest.raises(UnstableStation):
        finite_difference_gradient(model, 0, 0.01, 1, rng)
