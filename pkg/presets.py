"""Configurações embutidas dos experimentos de referência (comando `repro`)."""
from model import Exponential, NetworkModel

# taxas de serviço dos experimentos de 2 estações, da carga moderada à pesada
TWO_STATION_RATES = (1.8, 1.4, 1.1, 1.06)
TEN_STATION_RATES = tuple(round(2 - 0.05 * k, 10) for k in range(1, 11))


def poisson_network(rates, lam=1.0):
    """Chegadas de Poisson(lam), requisitos exp(1) e tempo de serviço J_k / mu_k."""
    return NetworkModel(Exponential(lam), tuple(Exponential(1.0) for _ in rates), tuple(rates))


def two_station(mu, lam=1.0):
    return poisson_network((mu, mu), lam)


def ten_station(lam=1.0):
    return poisson_network(TEN_STATION_RATES, lam)
