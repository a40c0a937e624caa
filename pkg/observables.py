"""Do caminho para trás às saídas: tempos de permanência, contagens Q(0), D(0) e a amostra completa."""
import logging
from dataclasses import dataclass

import numpy as np

from backward_sampler import DEFAULT_MILESTONE_C, DEFAULT_STEP_BUDGET, simulate_backward_path
from ipa_gradient import gradient_estimator

logger = logging.getLogger(__name__)

# S0, W0 e H seguem a lei vista pelos jobs que chegam (Palm); Q e D, a lei num instante qualquer
STATIONARITY = {
    "S0": "job (Palm)",
    "W0": "job (Palm)",
    "H": "job (Palm)",
    "Q": "time",
    "D": "time",
}


@dataclass
class SnapshotCounts:
    Q: np.ndarray
    D: np.ndarray

    @property
    def total_unsync(self):
        return int(self.D.sum())


@dataclass
class StationarySample:
    S0: float
    J0: np.ndarray
    W0: np.ndarray
    Q: np.ndarray
    D: np.ndarray
    H: np.ndarray
    tau: tuple
    N: int
    k0: int
    tie: bool = False
    extended: bool = False
    steps: int = 0
    mu: np.ndarray = None

    stationarity = STATIONARITY

    @property
    def total_unsync(self):
        return int(self.D.sum())

    @property
    def task_sojourn(self):
        """S*_k(0) = W*_k(0) + J_k(0)/mu_k."""
        return self.W0 + self.J0 / self.mu


def sojourn_times(path, J0):
    """S*(0) = max_k(W*_k(0) + J0_k/mu_k); S*(-n) = max_k(W*_k(-n) + J_k(n)/mu_k), 1 <= n <= N."""
    W = path.W[: path.N + 1]
    servico = path.J[: path.N + 1] / path.mu
    servico[0] = np.asarray(J0) / path.mu
    return np.max(W + servico, axis=1)


def queue_snapshot(path, sojourns):
    """Q_k(0): tarefas ainda na estação k; D_k(0): tarefas prontas esperando as irmãs."""
    N = path.N
    fim = path.completion()[1 : N + 1]
    saida = path.A[1 : N + 1] + np.asarray(sojourns)[1 : N + 1]
    Q = np.sum(fim > 0, axis=0)
    D = np.sum((fim < 0) & (saida > 0)[:, None], axis=0)
    return SnapshotCounts(Q=Q.astype(int), D=D.astype(int))


def draw_stationary_sample(
    model, roots, rng, milestone_c=DEFAULT_MILESTONE_C, budget=DEFAULT_STEP_BUDGET, full_diagnostics=False
):
    """Uma amostra exata: caminho, permanências, contagens e gradiente, nessa ordem."""
    path = simulate_backward_path(model, roots, rng, milestone_c, budget)
    J0 = np.array([lei.sample(rng) for lei in model.service_req], dtype=float)
    W0 = path.W[0].copy()

    S = sojourn_times(path, J0)
    contagens = queue_snapshot(path, S)
    grad = gradient_estimator(path, J0, W0, full=full_diagnostics)

    amostra = StationarySample(
        S0=float(S[0]),
        J0=J0,
        W0=W0,
        Q=contagens.Q,
        D=contagens.D,
        H=grad.H,
        tau=grad.tau,
        N=path.N,
        k0=grad.k0,
        tie=grad.tie,
        extended=path.tau_horizon_extended,
        steps=path.steps,
        mu=path.mu,
    )
    logger.debug("amostra: N=%d, S0=%.4g, k0=%d", path.N, amostra.S0, grad.k0 + 1)
    return amostra
