"""Especificação da rede fork-join: leis de chegada e de serviço, validação e raízes de Cramér.

Convenção de taxas: o tempo de serviço da tarefa k do job n é J_k(n)/mu_k, em todo o projeto.
Estações são indexadas a partir de 0 no código e a partir de 1 nas mensagens.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize, stats
from scipy.special import logsumexp

from exceptions import (
    ConfigError,
    HeavyTail,
    ParameterError,
    RootNotBracketed,
    TiltOutsideDomain,
    UnstableStation,
)

logger = logging.getLogger(__name__)

# --- Configurações do solver de raízes ---
ROOT_XTOL = 1e-12
ROOT_START = 1e-6
ROOT_BOUNDARY_FRACTION = 0.999
THETA_CAP = 1e12  # teto da busca quando a FGM é finita em toda a reta
RESIDUAL_TOL = 1e-10


# --- Famílias de distribuição ---
class DistributionSpec(ABC):
    """Lei de um tempo não negativo com FGM em forma fechada."""

    family = None
    lower = 0.0
    upper = math.inf
    mgf_bound = math.inf

    @property
    @abstractmethod
    def mean(self):
        ...

    @abstractmethod
    def log_mgf(self, s):
        """log E[exp(sX)]; +inf fora do domínio."""

    @abstractmethod
    def sample(self, rng, size=None):
        ...

    @abstractmethod
    def tilted(self, s):
        """Lei reponderada por exp(sx)/E[exp(sX)]."""

    def mgf(self, s):
        return math.exp(self.log_mgf(s))

    def equilibrium_cdf(self, x):
        """F_e(x) = (1/m) * integral de 0 a x de (1 - F(u)) du, por quadratura."""
        if x <= 0:
            return 0.0
        pontos = [p for p in (self.lower, self.upper) if 0 < p < x]
        valor, _ = integrate.quad(self.sf, 0.0, x, points=pontos or None, limit=200)
        return min(valor / self.mean, 1.0)

    def to_config(self):
        return {"family": self.family, "params": self._params()}

    def _params(self):
        return {}

    @staticmethod
    def from_config(cfg):
        """Constrói a lei a partir de {"family": ..., "params": {...}}."""
        if not isinstance(cfg, dict) or "family" not in cfg:
            raise ConfigError(f"distribuição precisa de 'family': {cfg!r}")
        family = cfg["family"]
        cls = FAMILIES.get(family)
        if cls is None:
            raise ConfigError(f"família desconhecida '{family}' (opções: {', '.join(FAMILIES)})")
        params = cfg.get("params", {})
        try:
            return cls(**params)
        except ParameterError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(f"parâmetros inválidos para '{family}': {e}") from e


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    rate: float
    family = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"exponential: rate deve ser positiva (recebido {self.rate})")

    @property
    def mgf_bound(self):
        return self.rate

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def second_moment(self):
        return 2.0 / self.rate**2

    def log_mgf(self, s):
        if s >= self.rate:
            return math.inf
        return math.log(self.rate) - math.log(self.rate - s)

    def sf(self, x):
        return stats.expon.sf(x, scale=1.0 / self.rate)

    def pdf(self, x):
        return stats.expon.pdf(x, scale=1.0 / self.rate)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def tilted(self, s):
        return Exponential(self.rate - s)

    def equilibrium_sample(self, rng, size=None):
        # sem memória: F_e = F
        return self.sample(rng, size)

    def _params(self):
        return {"rate": self.rate}


@dataclass(frozen=True)
class Erlang(DistributionSpec):
    shape: int
    rate: float
    family = "erlang"

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise ParameterError(f"erlang: shape deve ser inteiro >= 1 (recebido {self.shape})")
        if not self.rate > 0:
            raise ParameterError(f"erlang: rate deve ser positiva (recebido {self.rate})")

    @property
    def mgf_bound(self):
        return self.rate

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def second_moment(self):
        return self.shape * (self.shape + 1) / self.rate**2

    def log_mgf(self, s):
        if s >= self.rate:
            return math.inf
        return self.shape * (math.log(self.rate) - math.log(self.rate - s))

    def sf(self, x):
        return stats.gamma.sf(x, a=self.shape, scale=1.0 / self.rate)

    def pdf(self, x):
        return stats.gamma.pdf(x, a=self.shape, scale=1.0 / self.rate)

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def tilted(self, s):
        return Erlang(self.shape, self.rate - s)

    def equilibrium_sample(self, rng, size=None):
        # F_e é a mistura uniforme de Erlang(i, rate), i = 1..shape
        fases = rng.integers(1, self.shape + 1, size)
        return rng.gamma(fases, 1.0 / self.rate)

    def _params(self):
        return {"shape": self.shape, "rate": self.rate}


@dataclass(frozen=True)
class HyperExponential(DistributionSpec):
    weights: tuple
    rates: tuple
    family = "hyperexponential"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if len(self.weights) != len(self.rates) or not self.rates:
            raise ParameterError("hyperexponential: weights e rates precisam do mesmo tamanho (> 0)")
        if any(w < 0 for w in self.weights) or not math.isclose(sum(self.weights), 1.0, abs_tol=1e-9):
            raise ParameterError(f"hyperexponential: weights não formam um vetor de probabilidade {self.weights}")
        if any(not r > 0 for r in self.rates):
            raise ParameterError(f"hyperexponential: rates devem ser positivas {self.rates}")
        # componentes de peso zero não entram na lei nem nas inclinações
        mantidos = [(w, r) for w, r in zip(self.weights, self.rates) if w > 0]
        object.__setattr__(self, "weights", tuple(w for w, _ in mantidos))
        object.__setattr__(self, "rates", tuple(r for _, r in mantidos))

    @property
    def mgf_bound(self):
        return min(self.rates)

    @property
    def mean(self):
        return sum(w / r for w, r in zip(self.weights, self.rates))

    @property
    def second_moment(self):
        return sum(2.0 * w / r**2 for w, r in zip(self.weights, self.rates))

    def log_mgf(self, s):
        if s >= self.mgf_bound:
            return math.inf
        w = np.asarray(self.weights)
        r = np.asarray(self.rates)
        return float(logsumexp(np.log(w) + np.log(r) - np.log(r - s)))

    def sf(self, x):
        return sum(w * stats.expon.sf(x, scale=1.0 / r) for w, r in zip(self.weights, self.rates))

    def pdf(self, x):
        return sum(w * stats.expon.pdf(x, scale=1.0 / r) for w, r in zip(self.weights, self.rates))

    def _mixture(self, rng, probs, size):
        r = np.asarray(self.rates)
        idx = rng.choice(len(r), p=probs, size=size)
        return rng.exponential(1.0 / r[idx])

    def sample(self, rng, size=None):
        return self._mixture(rng, np.asarray(self.weights), size)

    def tilted(self, s):
        w = np.asarray(self.weights)
        r = np.asarray(self.rates)
        novos = w * r / (r - s)
        return HyperExponential(tuple(novos / novos.sum()), tuple(r - s))

    def equilibrium_sample(self, rng, size=None):
        # densidade (1 - F)/m: mistura de exponenciais com pesos w_i / (r_i m)
        w = np.asarray(self.weights) / np.asarray(self.rates) / self.mean
        return self._mixture(rng, w / w.sum(), size)

    def _params(self):
        return {"weights": list(self.weights), "rates": list(self.rates)}


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    lo: float
    hi: float
    family = "uniform"

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise ParameterError(f"uniform: requer 0 <= lo < hi (recebido lo={self.lo}, hi={self.hi})")

    @property
    def lower(self):
        return self.lo

    @property
    def upper(self):
        return self.hi

    @property
    def mean(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def second_moment(self):
        return (self.lo**2 + self.lo * self.hi + self.hi**2) / 3.0

    def log_mgf(self, s):
        w = self.hi - self.lo
        if s == 0:
            return 0.0
        if s > 0:
            return s * self.hi + math.log(-math.expm1(-s * w)) - math.log(s * w)
        return s * self.lo + math.log(-math.expm1(s * w)) - math.log(-s * w)

    def sf(self, x):
        return stats.uniform.sf(x, loc=self.lo, scale=self.hi - self.lo)

    def pdf(self, x):
        return stats.uniform.pdf(x, loc=self.lo, scale=self.hi - self.lo)

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def tilted(self, s):
        if s == 0:
            return self
        return TiltedUniform(self.lo, self.hi, s)

    def equilibrium_sample(self, rng, size=None):
        # inversão fechada de F_e: linear até lo, quadrática em [lo, hi]
        w = self.hi - self.lo
        y = rng.random(size) * self.mean
        z = w * (1.0 - np.sqrt(np.clip(1.0 - 2.0 * (y - self.lo) / w, 0.0, None)))
        return np.where(y <= self.lo, y, self.lo + z)

    def _params(self):
        return {"lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Deterministic(DistributionSpec):
    value: float
    family = "deterministic"

    def __post_init__(self):
        if not self.value > 0:
            raise ParameterError(f"deterministic: value deve ser positivo (recebido {self.value})")

    @property
    def lower(self):
        return self.value

    @property
    def upper(self):
        return self.value

    @property
    def mean(self):
        return self.value

    @property
    def second_moment(self):
        return self.value**2

    def log_mgf(self, s):
        return s * self.value

    def sf(self, x):
        return np.where(np.asarray(x) < self.value, 1.0, 0.0)

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def tilted(self, s):
        return self

    def equilibrium_sample(self, rng, size=None):
        return rng.uniform(0.0, self.value, size)

    def _params(self):
        return {"value": self.value}


@dataclass(frozen=True)
class TiltedUniform(DistributionSpec):
    """Uniforme em [lo, hi] reponderada por exp(s x): exponencial truncada."""

    lo: float
    hi: float
    s: float
    family = "tilted-uniform"

    @property
    def lower(self):
        return self.lo

    @property
    def upper(self):
        return self.hi

    @property
    def mean(self):
        w = self.hi - self.lo
        return self.lo + w / -math.expm1(-self.s * w) - 1.0 / self.s

    def log_mgf(self, u):
        base = Uniform(self.lo, self.hi)
        return base.log_mgf(self.s + u) - base.log_mgf(self.s)

    def sample(self, rng, size=None):
        u = rng.random(size)
        w = self.hi - self.lo
        if self.s > 0:
            return self.hi + np.log(u + (1.0 - u) * math.exp(-self.s * w)) / self.s
        return self.lo + np.log1p(u * math.expm1(self.s * w)) / self.s

    def tilted(self, u):
        if self.s + u == 0:
            return Uniform(self.lo, self.hi)
        return TiltedUniform(self.lo, self.hi, self.s + u)


FAMILIES = {
    cls.family: cls for cls in (Exponential, Erlang, HyperExponential, Uniform, Deterministic)
}


# --- Modelo da rede ---
@dataclass(frozen=True)
class NetworkModel:
    """K estações paralelas; cada job se divide em K tarefas, uma por estação."""

    interarrival: DistributionSpec
    service_req: tuple
    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "service_req", tuple(self.service_req))
        try:
            object.__setattr__(self, "rates", tuple(float(m) for m in self.rates))
        except (TypeError, ValueError) as e:
            raise ParameterError(f"taxas de serviço devem ser numéricas (recebido {self.rates!r})") from e
        if not self.service_req:
            raise ParameterError("a rede precisa de pelo menos uma estação")
        if len(self.service_req) != len(self.rates):
            raise ParameterError(
                f"{len(self.service_req)} leis de serviço para {len(self.rates)} taxas"
            )
        for k, mu in enumerate(self.rates):
            if not mu > 0:
                raise ParameterError(f"estação {k + 1}: taxa de serviço deve ser positiva (recebido {mu})")

    @property
    def K(self):
        return len(self.rates)

    @property
    def mu(self):
        return np.asarray(self.rates)

    def load(self, k):
        """rho_k = E[J_k] / (mu_k E[I])."""
        return self.service_req[k].mean / self.rates[k] / self.interarrival.mean

    def with_rate(self, k, rate):
        rates = list(self.rates)
        rates[k] = rate
        return replace(self, rates=tuple(rates))

    def nominal_laws(self):
        return IncrementLaws(self.interarrival, self.service_req)

    @classmethod
    def from_config(cls, cfg):
        try:
            arrival = DistributionSpec.from_config(cfg["arrival"])
            estacoes = cfg["stations"]
            servicos = [DistributionSpec.from_config(e["service"]) for e in estacoes]
            taxas = [e.get("rate", 1.0) for e in estacoes]
        except (KeyError, TypeError) as e:
            raise ConfigError(f"modelo mal formado: chave ausente ou inválida {e}") from e
        return cls(arrival, tuple(servicos), tuple(taxas))

    def to_config(self):
        return {
            "arrival": self.interarrival.to_config(),
            "stations": [
                {"service": j.to_config(), "rate": mu} for j, mu in zip(self.service_req, self.rates)
            ],
        }


@dataclass(frozen=True)
class IncrementLaws:
    """Lei conjunta de (I, J) com componentes independentes."""

    interarrival: DistributionSpec
    service: tuple

    def draw(self, rng, size):
        I = np.asarray(self.interarrival.sample(rng, size), dtype=float)
        J = np.column_stack([np.asarray(lei.sample(rng, size), dtype=float) for lei in self.service])
        return I, J


@dataclass
class CramerRoots:
    theta: np.ndarray
    residuals: np.ndarray = field(default=None)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.residuals is None:
            self.residuals = np.zeros_like(self.theta)
        self.residuals = np.asarray(self.residuals, dtype=float)

    @property
    def rising(self):
        """Estações cujo passeio pode subir (theta finito)."""
        return np.isfinite(self.theta)


# --- Validação ---
def validate(model):
    """Devolve o modelo se cada estação é estável e tem FGM finita perto de zero."""
    ea = model.interarrival.mean
    for k, (lei, mu) in enumerate(zip(model.service_req, model.rates)):
        if not lei.mgf_bound > 0:
            raise HeavyTail(k)
        if lei.mean / mu >= ea:
            raise UnstableStation(k, lei.mean / mu / ea)
    return model


def increment_sup(model, k):
    """Supremo essencial do incremento J_k/mu_k - I."""
    return model.service_req[k].upper / model.rates[k] - model.interarrival.lower


def psi(model, k, theta):
    """psi_k(theta) = log E[exp(theta (J_k/mu_k - I))]."""
    return model.interarrival.log_mgf(-theta) + model.service_req[k].log_mgf(theta / model.rates[k])


def cramer_root(model, k, xtol=ROOT_XTOL):
    """Raiz positiva de psi_k por duplicação seguida de bissecção."""
    if increment_sup(model, k) <= 0:
        raise RootNotBracketed(k, "o incremento nunca é positivo")
    fronteira = model.rates[k] * model.service_req[k].mgf_bound
    teto = ROOT_BOUNDARY_FRACTION * fronteira if math.isfinite(fronteira) else THETA_CAP

    f = lambda t: psi(model, k, t)
    lo = ROOT_START
    while f(lo) >= 0:
        lo /= 2
        if lo < 1e-15:
            raise RootNotBracketed(k, "psi não fica negativa perto de zero")
    hi = min(2 * lo, teto)
    while f(hi) <= 0:
        if hi >= teto:
            raise RootNotBracketed(k, f"psi <= 0 até theta={teto:.6g}")
        lo, hi = hi, min(2 * hi, teto)
    return optimize.bisect(f, lo, hi, xtol=xtol, maxiter=500)


def root_residual(model, k, theta):
    """|E[exp(theta (J_k/mu_k - I))] - 1|."""
    if not math.isfinite(theta):
        return 0.0
    return abs(math.expm1(psi(model, k, theta)))


def solve_cramer_roots(model):
    """Resolve theta_k para todas as estações; estações que nunca sobem recebem +inf."""
    thetas, residuos = [], []
    for k in range(model.K):
        if increment_sup(model, k) <= 0:
            thetas.append(math.inf)
            residuos.append(0.0)
            continue
        theta = cramer_root(model, k)
        residuo = root_residual(model, k, theta)
        if residuo > RESIDUAL_TOL:
            raise RootNotBracketed(k, f"resíduo {residuo:.3g} acima da tolerância")
        thetas.append(theta)
        residuos.append(residuo)
    logger.info("raízes de Cramér: %s", np.round(thetas, 6).tolist())
    return CramerRoots(np.array(thetas), np.array(residuos))


# --- Amostragem ---
def sample(dist, rng):
    return dist.sample(rng)


def equilibrium_sample(dist, rng):
    """Amostra da lei de equilíbrio F_e (idade/excesso de um intervalo de renovação)."""
    return float(dist.equilibrium_sample(rng))


def tilted_laws(model, k, theta):
    """Leis de (I, J) reponderadas por exp(theta (J_k/mu_k - I)); J_j, j != k, inalteradas."""
    lei_j = model.service_req[k]
    s = theta / model.rates[k]
    if s >= lei_j.mgf_bound:
        raise TiltOutsideDomain(k, s, lei_j.mgf_bound)
    servicos = list(model.service_req)
    servicos[k] = lei_j.tilted(s)
    return IncrementLaws(model.interarrival.tilted(-theta), tuple(servicos))


def sample_tilted_pair(model, k, theta, rng):
    I, J = tilted_laws(model, k, theta).draw(rng, 1)
    return float(I[0]), J[0]


def sample_increments(model, rng, size, tilt=None):
    """Lote de (I, J); `tilt=(k, theta)` usa a lei inclinada na estação k."""
    leis = model.nominal_laws() if tilt is None else tilted_laws(model, *tilt)
    return leis.draw(rng, size)
