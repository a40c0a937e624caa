"""Verdades independentes: fórmulas fechadas do caso M/M de 2 estações e um simulador com aquecimento."""
import logging
from dataclasses import dataclass

import numpy as np

from exceptions import ParameterError
from model import sample_increments, validate

logger = logging.getLogger(__name__)

DEFAULT_BATCHES = 20


# --- Fórmulas fechadas ---
def _check_rates(lam, mu):
    if not (0 <= lam < mu):
        raise ParameterError(f"fórmula exige 0 <= lambda < mu (recebido lambda={lam}, mu={mu})")


def mm_forkjoin_mean_sojourn(lam, mu):
    """E[S*] da rede M/M fork-join com 2 estações idênticas."""
    _check_rates(lam, mu)
    return (12 * mu - lam) / (8 * mu * (mu - lam))


def mm_forkjoin_mean_unsync(lam, mu):
    """Número médio de tarefas não sincronizadas (soma das duas estações)."""
    _check_rates(lam, mu)
    return lam * (4 * mu - lam) / (4 * mu * (mu - lam))


def mm_forkjoin_sojourn_derivative(lam, mu):
    """dE[S*]/dmu com mu_1 = mu_2 = mu."""
    _check_rates(lam, mu)
    return (2 * lam * mu - lam**2 - 12 * mu**2) / (8 * mu**2 * (mu - lam) ** 2)


def mm1_mean_wait(lam, mu):
    _check_rates(lam, mu)
    return lam / (mu * (mu - lam))


def mm1_wait_derivative(lam, mu):
    _check_rates(lam, mu)
    return -lam * (2 * mu - lam) / (mu**2 * (mu - lam) ** 2)


# --- Simulação com aquecimento ---
@dataclass
class BurnInEstimate:
    mean_sojourn: float
    se_sojourn: float
    mean_wait: np.ndarray
    mean_Q: np.ndarray
    se_Q: np.ndarray
    mean_D: np.ndarray
    se_D: np.ndarray
    mean_total_D: float
    se_total_D: float
    warmup: int
    horizon: int


def _batch_se(values, batches):
    medias = np.array([np.mean(b, axis=0) for b in np.array_split(values, batches)])
    return np.std(medias, axis=0, ddof=1) / np.sqrt(batches)


def _overlap(start, end, w0, w1):
    return np.clip(np.minimum(end, w1) - np.maximum(start, w0), 0.0, None)


def burn_in_estimate(model, warmup, horizon, rng, batches=DEFAULT_BATCHES):
    """Lindley para frente; médias nos jobs [warmup, horizon) e no tempo entre as chegadas deles."""
    if not 0 <= warmup < horizon - 1:
        raise ParameterError(f"requer 0 <= warmup < horizon - 1 (recebido {warmup}, {horizon})")
    mu = model.mu
    I, J = sample_increments(model, rng, horizon)

    # job 0 chega no instante 0; I[n] separa os jobs n-1 e n
    chegada = np.cumsum(I) - I[0]
    servico = J / mu
    X = servico[:-1] - I[1:, None]
    caminho = np.vstack([np.zeros(model.K), np.cumsum(X, axis=0)])
    W = caminho - np.minimum.accumulate(caminho, axis=0)
    del caminho, X

    estadia = W + servico
    S = estadia.max(axis=1)
    saida = chegada + S

    mean_sojourn = float(S[warmup:].mean())
    se_sojourn = float(_batch_se(S[warmup:], batches))
    mean_wait = W[warmup:].mean(axis=0)

    # integrais no tempo dos indicadores de Q e D, janela a janela
    T0, T1 = chegada[warmup], chegada[-1]
    bordas = np.linspace(T0, T1, batches + 1)
    larguras = np.diff(bordas)
    vivos = saida > T0
    a, fim_job = chegada[vivos], saida[vivos]
    integ_Q = np.zeros((batches, model.K))
    integ_D = np.zeros((batches, model.K))
    for k in range(model.K):
        fim_tarefa = a + estadia[vivos, k]
        for b in range(batches):
            integ_Q[b, k] = _overlap(a, fim_tarefa, bordas[b], bordas[b + 1]).sum()
            integ_D[b, k] = _overlap(fim_tarefa, fim_job, bordas[b], bordas[b + 1]).sum()

    total = T1 - T0
    medias_Q = integ_Q / larguras[:, None]
    medias_D = integ_D / larguras[:, None]
    raiz = np.sqrt(batches)
    estimativa = BurnInEstimate(
        mean_sojourn=mean_sojourn,
        se_sojourn=se_sojourn,
        mean_wait=mean_wait,
        mean_Q=integ_Q.sum(axis=0) / total,
        se_Q=np.std(medias_Q, axis=0, ddof=1) / raiz,
        mean_D=integ_D.sum(axis=0) / total,
        se_D=np.std(medias_D, axis=0, ddof=1) / raiz,
        mean_total_D=float(integ_D.sum() / total),
        se_total_D=float(np.std(medias_D.sum(axis=1), ddof=1) / raiz),
        warmup=warmup,
        horizon=horizon,
    )
    logger.info(
        "aquecimento %d, horizonte %d: E[S]=%.4f +- %.4f", warmup, horizon, mean_sojourn, se_sojourn
    )
    return estimativa


# --- Diferenças finitas com números aleatórios comuns ---
@dataclass
class FiniteDifference:
    estimate: float
    standard_error: float
    h: float
    reps: int


def finite_difference_gradient(model, k, h, reps, rng, warmup=10**4, horizon=10**5, batches=DEFAULT_BATCHES):
    """Diferença central de E[S] em mu_k +- h; as duas pontas reusam a mesma semente."""
    if not h > 0 or reps < 1:
        raise ParameterError(f"requer h > 0 e reps >= 1 (recebido h={h}, reps={reps})")
    mais = validate(model.with_rate(k, model.rates[k] + h))
    menos = validate(model.with_rate(k, model.rates[k] - h))

    diffs, erros = [], []
    for _ in range(reps):
        semente = int(rng.integers(2**63))
        alto = burn_in_estimate(mais, warmup, horizon, np.random.default_rng(semente), batches)
        baixo = burn_in_estimate(menos, warmup, horizon, np.random.default_rng(semente), batches)
        diffs.append((alto.mean_sojourn - baixo.mean_sojourn) / (2 * h))
        erros.append(np.hypot(alto.se_sojourn, baixo.se_sojourn) / (2 * h))

    diffs = np.asarray(diffs)
    if reps >= 2:
        se = float(np.std(diffs, ddof=1) / np.sqrt(reps))
    else:
        # sem réplicas: erro conservador a partir das médias em lotes
        se = float(erros[0])
    return FiniteDifference(estimate=float(diffs.mean()), standard_error=se, h=h, reps=reps)
