import numpy as np
import pytest

from backward_sampler import BackwardPath
from model import solve_cramer_roots
from observables import STATIONARITY, StationarySample, draw_stationary_sample, queue_snapshot, sojourn_times


def _one_job_path(I_eq, W, J):
    """N = 1: job 0 e um único job anterior; R = 0 e M = W*."""
    W = np.asarray(W, dtype=float)
    K = W.shape[1]
    return BackwardPath(
        N=1, I_eq=I_eq, I=np.array([np.nan, I_eq]),
        J=np.vstack([np.full(K, np.nan), J]), R=np.zeros_like(W), M=W, mu=np.ones(K),
    )


def _draws(model, n, seed):
    roots = solve_cramer_roots(model)
    rng = np.random.default_rng(seed)
    return [draw_stationary_sample(model, roots, rng) for _ in range(n)]


# --- Permanências ---
def test_sojourn_of_empty_system():
    path = _one_job_path(5.0, [[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0])
    S = sojourn_times(path, np.array([1.0, 2.0]))
    assert S[0] == 2.0
    assert S[1] == 1.0


def test_single_station_sojourn():
    path = _one_job_path(1.0, [[0.7], [0.0]], [0.4])
    assert sojourn_times(path, np.array([0.5]))[0] == pytest.approx(1.2)


# --- Contagens no instante 0 ---
def test_snapshot_job_already_gone():
    path = _one_job_path(5.0, [[0.0], [0.0]], [1.0])
    counts = queue_snapshot(path, [0.5, 2.0])
    assert counts.Q.tolist() == [0]
    assert counts.D.tolist() == [0]
    assert counts.total_unsync == 0


def test_snapshot_task_still_in_service():
    path = _one_job_path(0.5, [[0.0, 0.0], [0.0, 0.0]], [1.0, 1.2])
    counts = queue_snapshot(path, [1.0, 1.2])
    assert counts.Q[0] == 1
    assert counts.D[0] == 0


def test_snapshot_task_waiting_for_sibling():
    # tarefa 1 acabou em -0.5, a irmã ainda roda até 0.7
    path = _one_job_path(1.5, [[0.0, 0.0], [0.0, 0.0]], [1.0, 2.2])
    counts = queue_snapshot(path, [1.0, 2.2])
    assert counts.Q.tolist() == [0, 1]
    assert counts.D.tolist() == [1, 0]
    assert counts.total_unsync == 1


# --- Amostra completa ---
def test_always_empty_model(empty_model):
    amostras = _draws(empty_model, 4000, seed=12)
    assert all(s.S0 == 1.0 for s in amostras)
    assert all(s.D.tolist() == [0] for s in amostras)
    assert all(s.tau == (0,) for s in amostras)
    busy = np.array([s.Q[0] for s in amostras])
    assert set(busy) <= {0, 1}
    assert abs(busy.mean() - 0.5) <= 3 * np.sqrt(0.25 / len(busy))


def test_seeded_determinism(mixed_model):
    a = _draws(mixed_model, 20, seed=77)
    b = _draws(mixed_model, 20, seed=77)
    for x, y in zip(a, b):
        assert x.S0 == y.S0
        np.testing.assert_array_equal(x.Q, y.Q)
        np.testing.assert_array_equal(x.D, y.D)
        np.testing.assert_array_equal(x.H, y.H)


def test_sample_invariants(mixed_model):
    for s in _draws(mixed_model, 300, seed=2):
        assert isinstance(s, StationarySample)
        assert s.S0 >= np.max(s.J0 / s.mu) - 1e-12
        assert s.S0 == pytest.approx(np.max(s.task_sojourn))
        assert np.all(s.Q >= 0) and np.all(s.Q <= s.N)
        assert np.all(s.D >= 0) and np.all(s.D <= s.N)
        assert s.Q.dtype.kind == "i" and s.D.dtype.kind == "i"
        assert np.count_nonzero(s.H) == 1 and s.H[s.k0] < 0


def test_stationarity_labels():
    assert StationarySample.stationarity is STATIONARITY
    assert STATIONARITY["S0"] == "job (Palm)"
    assert STATIONARITY["Q"] == STATIONARITY["D"] == "time"


def test_mean_queue_matches_mm1(mm_two_station):
    amostras = _draws(mm_two_station, 4000, seed=40)
    Q = np.array([s.Q for s in amostras], dtype=float)
    rho = 1 / 1.4
    for k in range(2):
        se = Q[:, k].std(ddof=1) / np.sqrt(len(Q))
        assert abs(Q[:, k].mean() - rho / (1 - rho)) <= 3 * se
