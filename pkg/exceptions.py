"""Hierarquia de erros do simulador de redes fork-join."""


class FJSimError(Exception):
    """Raiz de todos os erros do projeto."""


# --- Erros de configuração / parâmetros ---
class ConfigError(FJSimError):
    """Arquivo de configuração ilegível ou com chaves inválidas."""


class ParameterError(FJSimError, ValueError):
    """Parâmetro numérico fora do domínio permitido."""


class InsufficientSamples(ParameterError):
    """Menos de duas amostras: intervalo de confiança indefinido."""

    def __init__(self, n):
        super().__init__(f"pelo menos 2 amostras são necessárias para um IC (recebido n={n})")
        self.n = n


# --- Erros de validação do modelo ---
class ModelValidationError(FJSimError):
    """Modelo viola as hipóteses de estabilidade ou de cauda leve."""

    def __init__(self, station, message):
        # estação reportada em base 1
        super().__init__(f"estação {station + 1}: {message}")
        self.station = station


class UnstableStation(ModelValidationError):
    def __init__(self, station, load):
        super().__init__(station, f"instável, E[J]/mu = {load:.6g} x E[I] (precisa ser < 1)")
        self.load = load


class HeavyTail(ModelValidationError):
    def __init__(self, station):
        super().__init__(station, "função geradora de momentos sem domínio positivo")


class RootNotBracketed(ModelValidationError):
    def __init__(self, station, detail=""):
        msg = "não existe raiz de Cramér positiva no domínio da FGM"
        super().__init__(station, f"{msg} ({detail})" if detail else msg)


class TiltOutsideDomain(ModelValidationError):
    def __init__(self, station, s, bound):
        super().__init__(station, f"inclinação s={s:.6g} fora do domínio da FGM (s < {bound:.6g})")
        self.s = s
        self.bound = bound


# --- Erros de execução ---
class BudgetExceeded(FJSimError):
    """Teto de incrementos atingido: modelo próximo da saturação."""

    def __init__(self, steps, replication=None):
        self.steps = steps
        self.replication = replication
        super().__init__(self._message())

    def _message(self):
        msg = f"orçamento de passos esgotado após {self.steps} incrementos"
        if self.replication is not None:
            msg += f" (replicação {self.replication})"
        return msg

    def with_replication(self, replication):
        return BudgetExceeded(self.steps, replication)

    def __reduce__(self):
        return (BudgetExceeded, (self.steps, self.replication))
