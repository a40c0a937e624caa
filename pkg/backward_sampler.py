"""Caminho estacionário para trás {W*(-n)} com os máximos futuros exatos do passeio R.

W*(-n) = M(n) - R(n), onde R(n) = R(n-1) + J(n)/mu - I(n) e M(n) = max_{m >= n} R(m)
(componente a componente). Os máximos futuros são certificados por barreiras: depois de
amostrar exatamente o indicador "o passeio nunca mais passa de b", todo índice cujo máximo
já observado alcança b tem M(n) conhecido.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from exceptions import BudgetExceeded, ParameterError
from model import equilibrium_sample, tilted_laws

logger = logging.getLogger(__name__)

# --- Configurações ---
DEFAULT_MILESTONE_C = 2.0
DEFAULT_STEP_BUDGET = 10**8
BLOCK_SIZE = 64
INITIAL_CAPACITY = 256


def milestone_level(roots, c=DEFAULT_MILESTONE_C):
    """L_k = c / theta_k (zero nas estações que nunca sobem)."""
    if not c > 0:
        raise ParameterError(f"a constante de marco c deve ser positiva (recebido {c})")
    theta = np.asarray(roots.theta, dtype=float)
    if np.any(theta <= 0):
        raise ParameterError(f"raízes de Cramér devem ser positivas {theta}")
    return c / theta


class _Rows:
    """Buffer de linhas que cresce por duplicação."""

    def __init__(self, width, fill=np.nan):
        self._data = np.full((INITIAL_CAPACITY, width), fill)
        self._fill = fill
        self._n = 0

    def __len__(self):
        return self._n

    def extend(self, rows):
        rows = np.atleast_2d(rows)
        fim = self._n + len(rows)
        if fim > len(self._data):
            novo = np.full((max(fim, 2 * len(self._data)), self._data.shape[1]), self._fill)
            novo[: self._n] = self._data[: self._n]
            self._data = novo
        self._data[self._n : fim] = rows
        self._n = fim

    def view(self):
        return self._data[: self._n]


class BackwardWalk:
    """Simula o passeio R para frente no índice n (para trás no tempo), certificando M(n).

    Estado: tempo t, posição R(t) e barreiras b (talvez +inf) tais que a lei do futuro é a
    nominal condicionada a {R_k(m) <= b_k para todo m > t e todo k}. Com b finito vale
    b - R(t) >= L (folga de pelo menos um marco).
    """

    def __init__(self, model, roots, rng, milestone_c=DEFAULT_MILESTONE_C, budget=DEFAULT_STEP_BUDGET):
        if not milestone_c > 0:
            raise ParameterError(f"c dos marcos deve ser > 0 (recebido {milestone_c})")
        if budget < 1:
            raise ParameterError(f"orçamento deve ser >= 1 (recebido {budget})")
        self.model = model
        self.rng = rng
        self.budget = budget
        self.mu = model.mu
        self.K = model.K
        self.theta = np.asarray(roots.theta, dtype=float)
        self.rising = np.flatnonzero(np.isfinite(self.theta))

        # c >= log K garante razão de verossimilhança da mistura <= 1
        c_eff = max(milestone_c, math.log(len(self.rising))) if len(self.rising) else milestone_c
        self.L = milestone_level(roots, c_eff)
        self.L[~np.isfinite(self.theta)] = 0.0

        self._nominal = model.nominal_laws()
        self._tilted = {int(k): tilted_laws(model, int(k), self.theta[k]) for k in self.rising}

        self.I = _Rows(1)
        self.J = _Rows(self.K)
        self.R = _Rows(self.K, fill=0.0)
        self.M = _Rows(self.K)
        self.I.extend([[np.nan]])
        self.J.extend([np.full(self.K, np.nan)])
        self.R.extend([np.zeros(self.K)])

        self.pos = np.zeros(self.K)
        self.barrier = np.full(self.K, np.inf)
        self.steps = 0
        self.rejections = 0
        self.milestones = 0

    # --- Sorteio de incrementos ---
    def _draw(self, laws, size=BLOCK_SIZE):
        self.steps += size
        if self.steps > self.budget:
            raise BudgetExceeded(self.steps)
        return laws.draw(self.rng, size)

    def _segment(self, start, laws, stop):
        """Estende a partir de `start` até `stop(R)` devolver (índice, desfecho)."""
        partes = []
        pos = start
        while True:
            I, J = self._draw(laws)
            X = J / self.mu - I[:, None]
            R = np.add.accumulate(np.vstack([pos, X]), axis=0)[1:]
            hit = stop(R)
            if hit is not None:
                i, desfecho = hit
                partes.append((I[: i + 1], J[: i + 1], R[: i + 1]))
                I, J, R = (np.concatenate(p) for p in zip(*partes))
                return I, J, R, desfecho
            partes.append((I, J, R))
            pos = R[-1]

    # --- Indicador exato de cruzamento (união das estações) ---
    def _crossing(self, start, gaps):
        """Sob a lei nominal, amostra se algum R_k sobe mais que gaps_k acima de start.

        Proposta: mistura uniforme das K inclinações exponenciais. Aceitar com a razão
        1 / mean_k exp(theta_k (R_k(T) - start_k)) devolve o segmento até o primeiro
        cruzamento T, distribuído como o caminho nominal condicionado ao cruzamento.
        Devolve None quando não há cruzamento.
        """
        coords = self.rising[np.isfinite(gaps[self.rising])]
        if len(coords) == 0:
            return None
        k = int(coords[self.rng.integers(len(coords))])
        niveis = start[coords] + gaps[coords]

        def stop(R):
            acima = np.any(R[:, coords] > niveis, axis=1)
            return (int(np.argmax(acima)), None) if acima.any() else None

        I, J, R, _ = self._segment(start, self._tilted[k], stop)
        log_dq = logsumexp(self.theta[coords] * (R[-1, coords] - start[coords])) - math.log(len(coords))
        assert log_dq > 0, "razão de verossimilhança da mistura acima de 1"
        if math.log(self.rng.random()) < -log_dq:
            return I, J, R
        return None

    def _descent(self, start, barrier):
        """Segmento nominal até todas as coordenadas caírem L abaixo de start; None se violar b."""
        alvo = start - self.L

        def stop(R):
            feito = np.all(R <= alvo, axis=1)
            violou = np.any(R > barrier, axis=1)
            qual = feito | violou
            if not qual.any():
                return None
            i = int(np.argmax(qual))
            return i, bool(violou[i])

        I, J, R, violou = self._segment(start, self._nominal, stop)
        return None if violou else (I, J, R)

    def _append(self, I, J, R):
        self.I.extend(I[:, None])
        self.J.extend(J)
        self.R.extend(R)
        self.pos = R[-1].copy()

    # --- Ciclo de marcos ---
    def _tighten(self):
        """Tenta baixar as barreiras para R(t) + L; True se o caminho avançou."""
        niveis = self.pos + self.L
        livre = np.all(np.isinf(self.barrier))
        while True:
            seg = self._crossing(self.pos, self.L)
            if seg is None:
                self.barrier = niveis
                return False
            I, J, R = seg
            if livre:
                self._append(I, J, R)
                return True
            # o cruzamento só vale sob a condição de nunca passar da barreira atual
            if np.any(R > self.barrier):
                self.rejections += 1
                continue
            desc = self._descent(R[-1], self.barrier)
            if desc is None or self._crossing(desc[2][-1], self.barrier - desc[2][-1]) is not None:
                self.rejections += 1
                continue
            self._append(I, J, R)
            self._append(*desc)
            return True

    def _descend(self):
        """Avança um marco para baixo respeitando as barreiras."""
        while True:
            desc = self._descent(self.pos, self.barrier)
            if desc is not None and self._crossing(desc[2][-1], self.barrier - desc[2][-1]) is None:
                self._append(*desc)
                self.milestones += 1
                return
            self.rejections += 1

    def _finalize(self):
        """Fixa M(n) para todo índice pendente cujo máximo observado já alcança b."""
        if np.any(np.isinf(self.barrier)):
            return
        inicio = len(self.M)
        pendentes = self.R.view()[inicio:]
        sufixo = np.maximum.accumulate(pendentes[::-1], axis=0)[::-1]
        ok = np.all(sufixo >= self.barrier, axis=1)
        n = len(ok) if ok.all() else int(np.argmin(ok))
        if n:
            self.M.extend(sufixo[:n])

    def advance(self):
        if not self._tighten():
            self._descend()
        self._finalize()

    def finalize_through(self, n):
        """Garante M(0..n) conhecidos."""
        while len(self.M) <= n:
            self.advance()

    @property
    def finalized(self):
        return len(self.M)


# --- Caminho estacionário ---
@dataclass
class BackwardPath:
    """Uma realização do caminho estacionário para trás, índices 0..length."""

    N: int
    I_eq: float
    I: np.ndarray
    J: np.ndarray
    R: np.ndarray
    M: np.ndarray
    mu: np.ndarray
    tau_horizon_extended: bool = False
    steps: int = 0
    _walk: BackwardWalk = field(default=None, repr=False, compare=False)

    @property
    def K(self):
        return len(self.mu)

    @property
    def length(self):
        return len(self.R) - 1

    @property
    def W(self):
        return self.M - self.R

    @property
    def A(self):
        """A(-n) = -(I*(1) + I(2) + ... + I(n)); A[0] = 0."""
        clock = np.zeros(self.length + 1)
        if self.length:
            incrementos = np.concatenate([[self.I_eq], self.I[2:]])
            clock[1:] = -np.cumsum(incrementos)
        return clock

    def completion(self):
        """A(-n) + W*_k(-n) + J_k(n)/mu_k para n >= 1 (linha 0 indefinida)."""
        return self.A[:, None] + self.W + self.J / self.mu

    def extend(self, n):
        """Estende o horizonte finalizado até pelo menos n."""
        if n <= self.length:
            return
        if self._walk is None:
            raise ParameterError("caminho sem gerador associado não pode ser estendido")
        self._walk.finalize_through(n)
        self._load(self._walk, self._walk.finalized - 1)
        if n > self.N:
            self.tau_horizon_extended = True

    def _load(self, walk, length):
        self.I = walk.I.view()[: length + 1, 0].copy()
        self.J = walk.J.view()[: length + 1].copy()
        self.R = walk.R.view()[: length + 1].copy()
        self.M = walk.M.view()[: length + 1].copy()
        self.steps = walk.steps

    def check_invariants(self, atol=1e-9):
        """Verifica as identidades do caminho; levanta AssertionError na primeira falha."""
        X = self.J[1:] / self.mu - self.I[1:, None]
        assert np.allclose(self.R[0], 0.0)
        assert np.allclose(self.R[1:], self.R[:-1] + X, atol=atol), "recursão do passeio"
        assert np.allclose(self.M[:-1], np.maximum(self.R[:-1], self.M[1:]), atol=atol), "recursão de M"
        W = self.W
        assert np.all(W >= -atol), "W* negativo"
        assert np.all((W == 0) == (self.R == self.M)), "zero de W* fora do máximo"
        lindley = np.maximum(W[1:] + X, 0.0)
        assert np.allclose(W[:-1], lindley, atol=atol), "consistência de Lindley"
        fim = self.completion()[1 : self.N + 1]
        parada = np.all(fim < 0, axis=1)
        assert parada[-1], "horizonte N não satisfaz a regra de parada"
        assert not parada[:-1].any(), "N não é o menor índice de parada"


def simulate_backward_path(model, roots, rng, milestone_c=DEFAULT_MILESTONE_C, budget=DEFAULT_STEP_BUDGET):
    """Caminho estacionário até o primeiro N com A(-N) + W*_k(-N) + J_k(N)/mu_k < 0 para todo k."""
    I_eq = equilibrium_sample(model.interarrival, rng)
    walk = BackwardWalk(model, roots, rng, milestone_c, budget)
    mu = model.mu

    clock = -I_eq
    n = 1
    while True:
        walk.finalize_through(n)
        if n > 1:
            clock -= walk.I.view()[n, 0]
        W = walk.M.view()[n] - walk.R.view()[n]
        if np.all(clock + W + walk.J.view()[n] / mu < 0):
            break
        n += 1

    path = BackwardPath(N=n, I_eq=I_eq, I=None, J=None, R=None, M=None, mu=mu, _walk=walk)
    path._load(walk, n)
    logger.debug(
        "caminho: N=%d, %d incrementos, %d rejeições, %d marcos",
        n, walk.steps, walk.rejections, walk.milestones,
    )
    return path
