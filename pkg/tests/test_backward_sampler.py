import numpy as np
import pytest
from scipy import stats

from backward_sampler import BackwardWalk, milestone_level, simulate_backward_path
from conftest import PATH_CONFIGS
from exceptions import BudgetExceeded, ParameterError
from ipa_gradient import last_empty_epoch
from model import CramerRoots, solve_cramer_roots


def _paths(model, n, seed):
    roots = solve_cramer_roots(model)
    rng = np.random.default_rng(seed)
    return [simulate_backward_path(model, roots, rng) for _ in range(n)]


# --- Nível dos marcos ---
def test_milestone_level_examples():
    assert milestone_level(CramerRoots([0.8, 0.4]), 2.0) == pytest.approx([2.5, 5.0])
    assert milestone_level(CramerRoots([1.0, 1.0]), 1.0) == pytest.approx([1.0, 1.0])


def test_milestone_level_rejects_non_positive_c():
    with pytest.raises(ParameterError):
        milestone_level(CramerRoots([1.0]), 0.0)


def test_walk_levels_skip_stations_that_never_rise(empty_model, rng):
    walk = BackwardWalk(empty_model, solve_cramer_roots(empty_model), rng)
    assert walk.L.tolist() == [0.0]
    assert len(walk.rising) == 0


@pytest.mark.parametrize("opcoes", [
    {"milestone_c": -5.0},
    {"milestone_c": 0.0},
    {"milestone_c": float("nan")},
    {"budget": 0},
])
def test_walk_rejects_bad_options(mm_two_station, rng, opcoes):
    # c negativo seria mascarado por max(c, log K)
    with pytest.raises(ParameterError):
        BackwardWalk(mm_two_station, solve_cramer_roots(mm_two_station), rng, **opcoes)


# --- Invariantes do caminho ---
@pytest.mark.parametrize("name", sorted(PATH_CONFIGS))
def test_path_invariants(name):
    model = PATH_CONFIGS[name]
    for path in _paths(model, 200, seed=11):
        path.check_invariants()
        assert path.N >= 1
        assert path.length == path.N
        for k in range(model.K):
            tau = last_empty_epoch(path, k)
            assert path.W[-tau, k] == 0
            assert np.all(path.W[:-tau, k] > 0)
        # a resolução de tau pode estender: as identidades continuam valendo
        path.check_invariants()


def test_deterministic_path_is_always_empty(empty_model):
    for path in _paths(empty_model, 50, seed=3):
        path.check_invariants()
        assert np.all(path.W == 0)
        assert path.N in (1, 2)
        assert (path.N == 1) == (path.I_eq > 1.0)


def test_completion_strictly_decreasing(mm_two_station):
    for path in _paths(mm_two_station, 100, seed=8):
        fim = path.completion()[1 : path.N + 1]
        assert np.all(np.diff(fim, axis=0) < 0)


def test_same_stream_same_path(mixed_model):
    a = _paths(mixed_model, 5, seed=21)
    b = _paths(mixed_model, 5, seed=21)
    for p, q in zip(a, b):
        assert p.N == q.N
        np.testing.assert_array_equal(p.R, q.R)
        np.testing.assert_array_equal(p.M, q.M)


def test_extend_marks_the_horizon(mm_two_station):
    path = _paths(mm_two_station, 1, seed=4)[0]
    N = path.N
    path.extend(N + 25)
    assert path.length >= N + 25
    assert path.tau_horizon_extended
    path.check_invariants()


def test_budget_exceeded(mm_two_station, rng):
    roots = solve_cramer_roots(mm_two_station)
    with pytest.raises(BudgetExceeded) as err:
        simulate_backward_path(mm_two_station, roots, rng, budget=10)
    assert err.value.steps > 10


# --- Exatidão em distribuição ---
def test_mm1_empty_probability(mm1):
    n = 5000
    vazio = np.array([path.W[0, 0] == 0 for path in _paths(mm1, n, seed=99)])
    p = 1 - 1 / 1.4
    assert abs(vazio.mean() - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_waiting_law_is_stationary_along_the_path(mm1):
    paths = _paths(mm1, 4000, seed=5)
    for path in paths:
        path.extend(3)
    agora = [p.W[0, 0] for p in paths[:2000]]
    antes = [p.W[3, 0] for p in paths[2000:]]
    assert stats.ks_2samp(agora, antes).pvalue > 0.01


def test_mean_horizon_stable_across_seeds(mm_two_station):
    a = np.array([p.N for p in _paths(mm_two_station, 2000, seed=1)])
    b = np.array([p.N for p in _paths(mm_two_station, 2000, seed=2)])
    se = np.hypot(a.std(ddof=1), b.std(ddof=1)) / np.sqrt(2000)
    assert abs(a.mean() - b.mean()) <= 3 * se
