"""Linha de comando: valida modelos, roda experimentos e reproduz as tabelas de referência.

Colunas do CSV de `estimate`/`gradient`: quantity, mean, std, n, half_width
(half_width = 1.96 s / sqrt(n)). O JSON espelha o relatório completo.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

import presets
from backward_sampler import DEFAULT_MILESTONE_C, DEFAULT_STEP_BUDGET
from exceptions import BudgetExceeded, ConfigError, ModelValidationError, ParameterError
from model import NetworkModel, solve_cramer_roots, validate
from oracle import mm_forkjoin_mean_sojourn, mm_forkjoin_mean_unsync, mm_forkjoin_sojourn_derivative
from stats import coverage_experiment, run_experiment

logger = logging.getLogger("fjsim")

# --- Códigos de saída ---
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_BUDGET = 4

DEFAULT_REPS = 10_000
DEFAULT_SEED = 1
SEED_ENV = "FJSIM_SEED"
OUTPUTS = ("sojourn", "counts", "gradient")


# --- Configuração ---
@dataclass
class ExperimentConfig:
    model: NetworkModel
    reps: int = DEFAULT_REPS
    seed: int = None
    outputs: tuple = OUTPUTS
    milestone_c: float = DEFAULT_MILESTONE_C
    budget: int = DEFAULT_STEP_BUDGET
    threads: int = 1
    coverage: dict = field(default_factory=dict)


def load_config(path):
    """Lê o JSON do experimento; qualquer problema vira ConfigError."""
    try:
        with open(path) as f:
            cfg = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"arquivo de configuração não encontrado: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido em {path}: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: o topo do arquivo deve ser um objeto")

    try:
        model = NetworkModel.from_config(cfg)
    except ParameterError as e:
        raise ConfigError(f"{path}: {e}") from e
    outputs = tuple(cfg.get("outputs", OUTPUTS))
    desconhecidas = set(outputs) - set(OUTPUTS)
    if desconhecidas:
        raise ConfigError(f"saídas desconhecidas {sorted(desconhecidas)} (opções: {', '.join(OUTPUTS)})")
    config = ExperimentConfig(
        model=model,
        reps=_field(cfg, "reps", DEFAULT_REPS, int),
        seed=cfg.get("seed"),
        outputs=outputs,
        milestone_c=_field(cfg, "milestone_c", DEFAULT_MILESTONE_C, float),
        budget=_field(cfg, "budget", DEFAULT_STEP_BUDGET, int),
        threads=_field(cfg, "threads", 1, int),
        coverage=_field(cfg, "coverage", {}, dict),
    )
    if config.reps < 2:
        raise ConfigError(f"reps deve ser >= 2 (recebido {config.reps})")
    _check_options(config.milestone_c, config.budget, config.threads)
    return config


def _field(cfg, key, default, kind):
    return _convert(cfg.get(key, default), key, kind)


def _convert(valor, key, kind):
    try:
        return kind(valor)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: valor inválido {valor!r}") from e


def _check_options(milestone_c, budget, threads):
    if not milestone_c > 0:
        raise ConfigError(f"milestone_c deve ser > 0 (recebido {milestone_c})")
    if budget < 1:
        raise ConfigError(f"budget deve ser >= 1 (recebido {budget})")
    if threads < 1:
        raise ConfigError(f"threads deve ser >= 1 (recebido {threads})")


def resolve_seed(flag, config_seed=None):
    """Flag > arquivo > FJSIM_SEED > padrão."""
    if flag is not None:
        return flag
    if config_seed is not None:
        try:
            return int(config_seed)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"seed deve ser inteiro (recebido {config_seed!r})") from e
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError as e:
            raise ConfigError(f"{SEED_ENV} deve ser inteiro (recebido {env!r})") from e
    return DEFAULT_SEED


# --- Saída ---
def write_output(frame, path, payload=None):
    """CSV (colunas fixas) ou JSON, conforme a extensão."""
    path = Path(path)
    if path.suffix == ".json":
        dados = payload if payload is not None else frame.to_dict(orient="records")
        path.write_text(json.dumps(dados, indent=2) + "\n")
    else:
        frame.to_csv(path, index=False, float_format="%.10g")
    logger.info("resultados gravados em %s", path)


def _show(frame):
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4f}"))


def _selected(report, outputs, K):
    nomes = []
    if "sojourn" in outputs:
        nomes.append("S")
    if "counts" in outputs:
        nomes += ["D_total"] + [f"Q_{k}" for k in range(1, K + 1)] + [f"D_{k}" for k in range(1, K + 1)]
    if "gradient" in outputs:
        nomes += [f"H_{k}" for k in range(1, K + 1)] + ["H_sum"]
    frame = report.to_frame()
    return frame[frame["quantity"].isin(nomes)].reset_index(drop=True)


def _experiment_options(args, config):
    opcoes = dict(
        threads=args.threads if args.threads is not None else config.threads,
        milestone_c=args.milestone_c if args.milestone_c is not None else config.milestone_c,
        budget=args.budget if args.budget is not None else config.budget,
    )
    _check_options(**opcoes)
    return opcoes


# --- Subcomandos ---
def cmd_validate(args):
    config = load_config(args.config)
    model = validate(config.model)
    roots = solve_cramer_roots(model)
    frame = pd.DataFrame({
        "station": range(1, model.K + 1),
        "rate": model.rates,
        "mean_requirement": [j.mean for j in model.service_req],
        "load": [model.load(k) for k in range(model.K)],
        "theta": roots.theta,
    })
    _show(frame)
    print(f"modelo válido: {model.K} estação(ões), E[I] = {model.interarrival.mean:.6g}")
    return EXIT_OK


def cmd_estimate(args, outputs=None):
    config = load_config(args.config)
    reps = args.reps if args.reps is not None else config.reps
    seed = resolve_seed(args.seed, config.seed)
    report = run_experiment(config.model, reps, seed, **_experiment_options(args, config))
    frame = _selected(report, outputs or config.outputs, config.model.K)
    _show(frame)
    print(f"{reps} replicações, semente {seed}, {report.seconds:.2f}s")
    if args.out:
        write_output(frame, args.out, report.to_dict(timing=args.timing))
    return EXIT_OK


def cmd_gradient(args):
    return cmd_estimate(args, outputs=("gradient",))


def cmd_coverage(args):
    config = load_config(args.config)
    bloco = config.coverage
    truth = args.truth if args.truth is not None else bloco.get("truth")
    if truth is None:
        raise ConfigError("coverage precisa de --truth ou da chave coverage.truth")
    resultado = coverage_experiment(
        config.model,
        n_cis=args.n_cis if args.n_cis is not None else _field(bloco, "n_cis", 200, int),
        reps_per_ci=args.reps_per_ci if args.reps_per_ci is not None else _field(bloco, "reps_per_ci", 2000, int),
        truth=_convert(truth, "truth", float),
        seed=resolve_seed(args.seed, config.seed),
        quantity=args.quantity or bloco.get("quantity", "S"),
        **_experiment_options(args, config),
    )
    frame = pd.DataFrame([{
        "quantity": resultado.quantity,
        "truth": resultado.truth,
        "covering": resultado.count,
        "n_cis": resultado.n_cis,
        "reps_per_ci": resultado.reps_per_ci,
        "band_lo": resultado.band[0],
        "band_hi": resultado.band[1],
    }])
    _show(frame)
    if args.out:
        write_output(frame, args.out)
    return EXIT_OK


def _repro_table1(report, mu):
    return {
        "mu": mu,
        "one_minus_rho": 1 - 1 / mu,
        "true_S": mm_forkjoin_mean_sojourn(1.0, mu),
        "est_S": report["S"].mean,
        "hw_S": report["S"].half_width,
        "true_D": mm_forkjoin_mean_unsync(1.0, mu),
        "est_D": report["D_total"].mean,
        "hw_D": report["D_total"].half_width,
    }


def _repro_table2(report, mu):
    return {
        "mu": mu,
        "one_minus_rho": 1 - 1 / mu,
        "true_dS": mm_forkjoin_sojourn_derivative(1.0, mu),
        "est_dS": report["H_sum"].mean,
        "hw_dS": report["H_sum"].half_width,
    }


def cmd_repro(args):
    seed = resolve_seed(args.seed)
    padrao = ExperimentConfig(model=None)
    opcoes = _experiment_options(args, padrao)
    reps = args.reps if args.reps is not None else DEFAULT_REPS
    linhas = []
    if args.table in ("table1", "table2"):
        montar = _repro_table1 if args.table == "table1" else _repro_table2
        for mu in presets.TWO_STATION_RATES:
            report = run_experiment(presets.two_station(mu), reps, seed, **opcoes)
            linhas.append({**montar(report, mu), "seconds": report.seconds})
    else:
        model = presets.ten_station()
        report = run_experiment(model, reps, seed, **opcoes)
        if args.table == "table3":
            nomes = ["S"] + [f"D_{k}" for k in range(1, model.K + 1)]
        else:
            nomes = [f"H_{k}" for k in range(1, model.K + 1)]
        for nome in nomes:
            q = report[nome]
            linhas.append({"quantity": nome, "estimate": q.mean, "half_width": q.half_width})
        for linha in linhas:
            linha["seconds"] = report.seconds

    frame = pd.DataFrame(linhas)
    _show(frame)
    if args.out:
        write_output(frame if args.timing else frame.drop(columns="seconds"), args.out)
    return EXIT_OK


# --- Parser ---
def _add_run_flags(p):
    p.add_argument("--reps", type=int, help="número de replicações (padrão: config ou 10000)")
    p.add_argument("--seed", type=int, help=f"semente (padrão: config, ${SEED_ENV} ou {DEFAULT_SEED})")
    p.add_argument("--out", help="arquivo de saída .csv ou .json")
    p.add_argument("--threads", type=int, help="processos para as replicações")
    p.add_argument("--budget", type=int, help="teto de incrementos por replicação")
    p.add_argument("--milestone-c", type=float, dest="milestone_c", help="constante c dos marcos (L_k = c/theta_k)")
    p.add_argument("--timing", action="store_true", help="grava o tempo de execução no arquivo de saída")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fjsim",
        description="Amostragem perfeita e gradientes IPA para redes fork-join.",
        epilog="CSV de estimate/gradient: quantity,mean,std,n,half_width. "
        "Códigos de saída: 0 ok, 2 configuração, 3 validação, 4 orçamento esgotado.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="valida estabilidade e resolve as raízes de Cramér")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("estimate", help="estima E[S*], E[Q], E[D] e gradientes")
    p.add_argument("config")
    _add_run_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("gradient", help="estima dE[S*]/dmu_k")
    p.add_argument("config")
    _add_run_flags(p)
    p.set_defaults(func=cmd_gradient)

    p = sub.add_parser("coverage", help="conta ICs de 95%% que cobrem o valor verdadeiro")
    p.add_argument("config")
    _add_run_flags(p)
    p.add_argument("--n-cis", type=int, dest="n_cis")
    p.add_argument("--reps-per-ci", type=int, dest="reps_per_ci")
    p.add_argument("--truth", type=float)
    p.add_argument("--quantity", choices=["S", "D_total", "H_sum"])
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("repro", help="reproduz as tabelas de referência")
    p.add_argument("table", choices=["table1", "table2", "table3", "table4"])
    _add_run_flags(p)
    p.set_defaults(func=cmd_repro)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    nivel = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=nivel, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return args.func(args)
    except (ConfigError, ParameterError) as e:
        print(f"erro de configuração: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ModelValidationError as e:
        print(f"modelo inválido: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except BudgetExceeded as e:
        print(f"simulação interrompida: {e}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(run())
