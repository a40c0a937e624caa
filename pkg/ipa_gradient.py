"""Estimadores IPA de dW*_k(0)/dmu_k e de dE[S*(0)]/dmu_k sobre o período ocupado."""
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class GradientSample:
    tau: tuple          # tau_k <= 0, ou None quando não resolvido
    V: np.ndarray       # V*_k, nan quando tau_k não resolvido
    k0: int
    tie: bool
    H: np.ndarray


def _first_zero(W_k):
    zeros = np.flatnonzero(W_k == 0)
    return int(zeros[0]) if len(zeros) else None


def last_empty_epoch(path, k):
    """tau_k = -min{n >= 0 : W*_k(-n) = 0}, estendendo o caminho se preciso."""
    n = _first_zero(path.W[:, k])
    while n is None:
        path.extend(2 * path.length + 1)
        n = _first_zero(path.W[:, k])
    return -n


def waiting_derivative(path, k, tau_k):
    """V*_k = -sum_{n=1}^{-tau_k} J_k(n) / mu_k^2 (não inclui J(0))."""
    if tau_k == 0:
        return 0.0
    mu = path.mu[k]
    return -float(np.sum(path.J[1 : -tau_k + 1, k])) / mu**2


def argmax_station(W0, J0, mu):
    """(k0, empate): estação que termina por último; empates vão para o menor índice."""
    fim = np.asarray(W0) + np.asarray(J0) / np.asarray(mu)
    k0 = int(np.argmax(fim))
    empate = int(np.count_nonzero(fim == fim[k0])) > 1
    if empate:
        logger.debug("empate no argmax entre estações %s", (np.flatnonzero(fim == fim[k0]) + 1).tolist())
    return k0, empate


def gradient_estimator(path, J0, W0, full=False):
    """H_k = 1{k = k0} (V*_k - J0_k / mu_k^2)."""
    mu = path.mu
    k0, empate = argmax_station(W0, J0, mu)

    tau = [None] * path.K
    V = np.full(path.K, np.nan)
    for k in range(path.K):
        if k == k0 or full:
            tau[k] = last_empty_epoch(path, k)
        else:
            # só diagnóstico: não estende o caminho
            n = _first_zero(path.W[:, k])
            tau[k] = None if n is None else -n
        if tau[k] is not None:
            V[k] = waiting_derivative(path, k, tau[k])

    H = np.zeros(path.K)
    H[k0] = V[k0] - J0[k0] / mu[k0] ** 2
    return GradientSample(tau=tuple(tau), V=V, k0=k0, tie=empate, H=H)
