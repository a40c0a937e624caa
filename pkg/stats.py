"""Motor de replicações: n amostras estacionárias independentes, médias com IC de 95% e cobertura."""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import binom, norm

from backward_sampler import DEFAULT_MILESTONE_C, DEFAULT_STEP_BUDGET
from exceptions import BudgetExceeded, InsufficientSamples
from model import solve_cramer_roots, validate
from observables import draw_stationary_sample

logger = logging.getLogger(__name__)

Z_95 = 1.96


# --- Intervalos de confiança ---
def ci(samples, alpha=0.05):
    """(média, meia-largura) com z fixo = 1.96 para 95% e desvio padrão com divisor n-1."""
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise InsufficientSamples(len(x))
    z = Z_95 if alpha == 0.05 else float(norm.ppf(1 - alpha / 2))
    return float(x.mean()), float(z * x.std(ddof=1) / np.sqrt(len(x)))


def binomial_band(n, p=0.95, level=0.99):
    """Faixa central `level` de Binomial(n, p) para contagens de cobertura."""
    cauda = (1 - level) / 2
    return int(binom.ppf(cauda, n, p)), int(binom.ppf(1 - cauda, n, p))


@dataclass(frozen=True)
class QuantityEstimate:
    mean: float
    std: float
    n: int
    half_width: float

    @classmethod
    def from_samples(cls, samples):
        x = np.asarray(samples, dtype=float)
        media, meia = ci(x)
        return cls(mean=media, std=float(x.std(ddof=1)), n=len(x), half_width=meia)

    def covers(self, truth):
        return abs(self.mean - truth) <= self.half_width


@dataclass
class EstimateReport:
    n_reps: int
    seed: int
    quantities: dict
    diagnostics: dict
    seconds: float = field(default=0.0, compare=False)

    def __getitem__(self, name):
        return self.quantities[name]

    def to_frame(self):
        linhas = [{"quantity": nome, **asdict(q)} for nome, q in self.quantities.items()]
        return pd.DataFrame(linhas, columns=["quantity", "mean", "std", "n", "half_width"])

    def to_dict(self, timing=False):
        d = {
            "n_reps": self.n_reps,
            "seed": self.seed,
            "quantities": {nome: asdict(q) for nome, q in self.quantities.items()},
            "diagnostics": dict(self.diagnostics),
        }
        if timing:
            d["seconds"] = self.seconds
        return d


# --- Replicações ---
def replication_rng(seed, index, prefix=()):
    """Fluxo da replicação `index`, derivado só de (seed, prefix, index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(prefix) + (index,)))


def _replicate(args):
    # nível de módulo para o ProcessPoolExecutor conseguir serializar
    model, roots, seed, prefix, i, milestone_c, budget = args
    try:
        return draw_stationary_sample(model, roots, replication_rng(seed, i, prefix), milestone_c, budget)
    except BudgetExceeded as e:
        raise e.with_replication(i) from None


def _parallel(pool, tarefas, threads):
    return list(pool.map(_replicate, tarefas, chunksize=max(1, len(tarefas) // (8 * threads))))


def draw_replications(
    model, n_reps, seed, roots=None, threads=1,
    milestone_c=DEFAULT_MILESTONE_C, budget=DEFAULT_STEP_BUDGET, prefix=(), pool=None,
):
    """Lista de StationarySample na ordem das replicações.

    `pool` reaproveita um executor já aberto; sem ele, threads > 1 abre um só para esta chamada.
    """
    if roots is None:
        roots = solve_cramer_roots(validate(model))
    tarefas = [(model, roots, seed, prefix, i, milestone_c, budget) for i in range(n_reps)]
    if pool is not None:
        return _parallel(pool, tarefas, threads)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return _parallel(pool, tarefas, threads)
    return [_replicate(t) for t in tarefas]


def collect(samples):
    """Séries por quantidade, em ordem fixa: S, D_total, Q_k, D_k, H_k, H_sum."""
    K = len(samples[0].Q)
    Q = np.array([s.Q for s in samples])
    D = np.array([s.D for s in samples])
    H = np.array([s.H for s in samples])
    series = {"S": np.array([s.S0 for s in samples]), "D_total": D.sum(axis=1)}
    series.update({f"Q_{k + 1}": Q[:, k] for k in range(K)})
    series.update({f"D_{k + 1}": D[:, k] for k in range(K)})
    series.update({f"H_{k + 1}": H[:, k] for k in range(K)})
    series["H_sum"] = H.sum(axis=1)
    return series


def run_experiment(
    model, n_reps, seed, threads=1, milestone_c=DEFAULT_MILESTONE_C, budget=DEFAULT_STEP_BUDGET, roots=None,
):
    """n_reps amostras exatas independentes; determinístico dado (model, seed, n_reps)."""
    if n_reps < 2:
        raise InsufficientSamples(n_reps)
    validate(model)
    if roots is None:
        roots = solve_cramer_roots(model)

    inicio = time.perf_counter()
    amostras = draw_replications(model, n_reps, seed, roots, threads, milestone_c, budget)
    segundos = time.perf_counter() - inicio

    quantidades = {nome: QuantityEstimate.from_samples(x) for nome, x in collect(amostras).items()}
    diagnostico = {
        "mean_N": float(np.mean([s.N for s in amostras])),
        "ties": int(sum(s.tie for s in amostras)),
        "extensions": int(sum(s.extended for s in amostras)),
        "mean_steps": float(np.mean([s.steps for s in amostras])),
    }
    logger.info("%d replicações (semente %d) em %.2fs", n_reps, seed, segundos)
    return EstimateReport(n_reps, seed, quantidades, diagnostico, seconds=segundos)


# --- Cobertura ---
@dataclass
class CoverageResult:
    count: int
    n_cis: int
    reps_per_ci: int
    truth: float
    quantity: str
    band: tuple

    @property
    def within_band(self):
        return self.band[0] <= self.count <= self.band[1]


def coverage_experiment(
    model, n_cis, reps_per_ci, truth, seed, quantity="S", threads=1,
    milestone_c=DEFAULT_MILESTONE_C, budget=DEFAULT_STEP_BUDGET,
):
    """Conta quantos de n_cis ICs de 95% independentes contêm `truth`."""
    if reps_per_ci < 2:
        raise InsufficientSamples(reps_per_ci)
    roots = solve_cramer_roots(validate(model))
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    cobre = 0
    try:
        for j in range(n_cis):
            amostras = draw_replications(
                model, reps_per_ci, seed, roots, threads, milestone_c, budget, prefix=(j,), pool=pool
            )
            if QuantityEstimate.from_samples(collect(amostras)[quantity]).covers(truth):
                cobre += 1
    finally:
        if pool is not None:
            pool.shutdown()
    resultado = CoverageResult(cobre, n_cis, reps_per_ci, truth, quantity, binomial_band(n_cis))
    logger.info("cobertura de %s: %d/%d (faixa %s)", quantity, cobre, n_cis, resultado.band)
    return resultado
