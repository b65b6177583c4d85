"""Ponto de entrada de linha de comando do laboratório de Finsler."""

from __future__ import annotations

import logging
import sys
from typing import Optional

import numpy as np

from . import storage
from .config import load_settings
from .exceptions import (
    ClassificationAborted,
    ConeRequired,
    DegenerateFlag,
    FinslerConfigError,
    FinslerError,
    HomogeneityGateError,
    IntegrationStalled,
    JetEvaluationError,
    MissingReference,
    ModelDefinitionError,
    SlitBundleError,
    StrongConvexityViolation,
)
from .lab import FinslerLab
from .models import RunConfig
from .options import build_run_config, parse_cli_args, parse_slit_point, parse_vector
from .transport import BasePath

log = logging.getLogger("finsler-lab")

EXIT_OK = 0
EXIT_MODEL = 2
EXIT_HOMOGENEITY = 3
EXIT_DOMAIN = 4
EXIT_INTEGRATION = 5
EXIT_UNEXPECTED = 99


def _path(config: RunConfig) -> BasePath:
    return BasePath.polyline([parse_vector(v, "vértice") for v in config.path_vertices], closed=config.closed)


def execute(lab: FinslerLab, config: RunConfig) -> None:
    """Despacha o comando e grava os artefatos."""
    m = lab.load_model(config.model_path, seed=config.seed)
    comando = config.command

    if comando == "classify":
        report = lab.classify(m, points=config.points, directions=config.samples, seed=config.seed, order=config.quad_order)
        storage.salvar_json(storage.report_to_dict(report), config.output_path or lab.default_output(f"{m.name}_classificacao.json"))
        if config.xlsx_path:
            storage.exportar_relatorio_para_excel(report, config.xlsx_path)
        for nome, veredicto in report.verdicts.items():
            log.info("  %s: %s", nome, veredicto)
        return

    if comando == "tensors":
        pontos = [parse_slit_point(v) for v in config.vectors]
        storage.salvar_json(lab.tensors(m, pontos), config.output_path or lab.default_output(f"{m.name}_tensores.json"))
        return

    if comando == "average":
        xs = [parse_vector(v, "ponto base") for v in config.vectors]
        dados = lab.average(m, xs, source=config.field_name, order=config.quad_order)
        storage.salvar_json(dados, config.output_path or lab.default_output(f"{m.name}_media.json"))
        return

    if comando == "geodesic":
        x0, v0 = (parse_vector(v) for v in config.vectors)
        solucao = lab.geodesic(m, x0, v0, config.field_name, config.t_end, config.tol, config.quad_order)
        storage.salvar_trajetoria_csv(solucao, config.output_path or lab.default_output(f"{m.name}_geodesica.csv"))
        if solucao.F_drift is not None:
            log.info("Variação de F ao longo da geodésica: %.3e", solucao.F_drift)
        return

    if comando == "transport":
        W0 = parse_vector(config.vectors[0], "W0")
        u0 = parse_vector(config.reference, "referência") if config.reference else None
        estados = lab.transport(m, _path(config), W0, config.field_name, u0, config.tol, config.quad_order)
        storage.salvar_trajetoria_csv(estados, config.output_path or lab.default_output(f"{m.name}_transporte.csv"))
        F = np.asarray([s.F for s in estados])
        log.info("Variação de F ao longo do transporte: %.3e", float(np.max(np.abs(F - F[0]))))
        return

    if comando == "probe-indicatrix":
        dados = lab.probe_indicatrix(m, _path(config), config.field_name, config.quad_order, config.tol)
        storage.salvar_json(dados, config.output_path or lab.default_output(f"{m.name}_indicatriz.json"))
        log.info("Desvio máximo da indicatriz transportada: %.3e", dados["deviation"])
        return

    if comando == "compare":
        m2 = lab.load_model(config.model2_path, seed=config.seed) if config.model2_path else None
        pontos = [parse_slit_point(v) for v in config.vectors]
        dados = lab.compare(
            m, config.field_name, config.field2_name, pontos, trials=config.samples, t_end=config.t_end,
            tol=config.tol, order=config.quad_order, m2=m2, seed=config.seed,
        )
        storage.salvar_json(dados, config.output_path or lab.default_output(f"{m.name}_comparacao.json"))
        return

    raise FinslerConfigError(f"Comando desconhecido: {comando}")


def run(argv: Optional[list[str]] = None) -> int:
    """Executa a CLI e devolve o código de saída."""
    args = parse_cli_args(argv)

    try:
        settings = load_settings()
        lab = FinslerLab(settings=settings)
        config = build_run_config(settings, args)
        execute(lab, config)
        return EXIT_OK
    except HomogeneityGateError as exc:
        log.error("Portão de homogeneidade: %s", exc)
        return EXIT_HOMOGENEITY
    except (ModelDefinitionError, FinslerConfigError, MissingReference) as exc:
        log.error("Modelo ou parâmetros inválidos: %s", exc)
        return EXIT_MODEL
    except (
        StrongConvexityViolation, SlitBundleError, ConeRequired, DegenerateFlag, ClassificationAborted, JetEvaluationError,
    ) as exc:
        log.error("Fora do domínio: %s", exc)
        return EXIT_DOMAIN
    except IntegrationStalled as exc:
        log.error("Integração interrompida em t = %s: %s", exc.t, exc)
        return EXIT_INTEGRATION
    except FinslerError as exc:
        log.error("Falha no laboratório: %s", exc)
        return EXIT_DOMAIN
    except SystemExit:
        raise
    except Exception as exc:  # pragma: no cover - proteção CLI
        log.exception("Erro inesperado: %s", exc)
        return EXIT_UNEXPECTED


def main(argv: Optional[list[str]] = None) -> None:
    """Wrapper que encerra o programa com o código de retorno da execução."""
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
