"""Interpretação dos parâmetros de linha de comando em `RunConfig`."""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import Settings
from .exceptions import FinslerConfigError
from .models import RunConfig, SlitPoint

COMMANDS = ("classify", "tensors", "average", "geodesic", "transport", "probe-indicatrix", "compare")
FIELDS = ("chern", "berwald", "averaged", "averaged-berwald", "levi-civita-average", "flat")


def _add_common_args(parser: argparse.ArgumentParser) -> None:
    """Flags compartilhadas por todos os subcomandos."""
    parser.add_argument("--model", required=True, type=Path, help="Arquivo JSON do modelo de Finsler.")
    parser.add_argument("--out", type=Path, help="Arquivo de saída (JSON ou CSV, conforme o comando).")
    parser.add_argument("--quad-order", type=int, dest="quad_order", help="Ordem da quadratura na indicatriz.")
    parser.add_argument("--tol", type=float, help="Tolerância do integrador (rtol = atol).")
    parser.add_argument("--seed", type=int, help="Semente da amostragem quase aleatória (default: 42).")
    parser.add_argument("--samples", type=int, default=20, help="Direções por ponto ou tentativas (default: 20).")
    parser.add_argument("--points", type=int, default=50, help="Pontos base amostrados (default: 50).")
    parser.add_argument("--t-end", type=float, default=1.0, dest="t_end", help="Parâmetro final da integração.")


def _add_field_arg(parser: argparse.ArgumentParser, default: str, flag: str = "--field", dest: str = "field") -> None:
    parser.add_argument(
        flag,
        dest=dest,
        choices=FIELDS,
        default=default,
        help=f"Campo de conexão (default: {default}).",
    )


def _add_path_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("vertices", nargs="+", help="Vértices da poligonal base, no formato 'x1,x2,...'.")
    parser.add_argument("--closed", action="store_true", help="Fecha a poligonal no primeiro vértice.")


def build_parser() -> argparse.ArgumentParser:
    """Constrói o parser com um subcomando por operação do laboratório."""
    parser = argparse.ArgumentParser(
        prog="finsler-lab",
        description="Laboratório numérico de geometria de Finsler: tensores, médias, transporte e classificação.",
    )
    subparsers = parser.add_subparsers(dest="comando", required=True, help="Comandos disponíveis")

    classify = subparsers.add_parser("classify", help="Classifica o modelo (Riemann, Berwald, Landsberg, Minkowski).")
    _add_common_args(classify)
    classify.add_argument("--xlsx", type=Path, help="Exporta também uma planilha Excel do relatório.")

    tensors = subparsers.add_parser("tensors", help="Tensores g, A, γ, N, Γ, G, R, P e Ȧ em pontos dados.")
    _add_common_args(tensors)
    tensors.add_argument("pontos", nargs="+", help="Pontos do fibrado no formato 'x1,x2:y1,y2'.")

    average = subparsers.add_parser("average", help="⟨Γ⟩, ⟨g⟩, ⟨R⟩ e a diferença para a curvatura de ⟨Γ⟩.")
    _add_common_args(average)
    average.add_argument("pontos", nargs="+", help="Pontos base no formato 'x1,x2'.")
    average.add_argument("--source", choices=("chern", "berwald"), default="chern", help="Conexão a ser média.")

    geodesic = subparsers.add_parser("geodesic", help="Integra uma geodésica e grava a trajetória em CSV.")
    _add_common_args(geodesic)
    geodesic.add_argument("x0", help="Posição inicial 'x1,x2,...'.")
    geodesic.add_argument("v0", help="Velocidade inicial 'v1,v2,...'.")
    _add_field_arg(geodesic, "chern")

    transport = subparsers.add_parser("transport", help="Transporte paralelo ao longo de uma poligonal (CSV).")
    _add_common_args(transport)
    transport.add_argument("w0", help="Vetor transportado 'w1,w2,...'.")
    _add_path_args(transport)
    transport.add_argument("--reference", help="Vetor de referência u0 para campos dependentes de y.")
    _add_field_arg(transport, "chern")

    probe = subparsers.add_parser("probe-indicatrix", help="Desvio de F sobre a indicatriz transportada.")
    _add_common_args(probe)
    _add_path_args(probe)
    _add_field_arg(probe, "averaged")

    compare = subparsers.add_parser("compare", help="Tensor diferença e equivalência geodésica de dois campos.")
    _add_common_args(compare)
    compare.add_argument("pontos", nargs="*", help="Pontos do fibrado 'x:y' para o tensor diferença.")
    _add_field_arg(compare, "chern")
    _add_field_arg(compare, "averaged", flag="--field2", dest="field2")
    compare.add_argument("--model2", type=Path, help="Modelo do segundo campo (default: o mesmo).")
    return parser


def parse_cli_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Interpreta os argumentos da CLI."""
    return build_parser().parse_args(argv)


def parse_vector(text: str, label: str = "vetor") -> np.ndarray:
    """'1,2.5,-3' → array; erros viram `FinslerConfigError`."""
    try:
        valores = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise FinslerConfigError(f"{label} inválido: {text!r}") from exc
    if not valores:
        raise FinslerConfigError(f"{label} vazio: {text!r}")
    return np.asarray(valores)


def parse_slit_point(text: str) -> SlitPoint:
    """'x1,x2:y1,y2' → SlitPoint."""
    if text.count(":") != 1:
        raise FinslerConfigError(f"Ponto {text!r} deve ter o formato 'x1,x2:y1,y2'.")
    x, y = text.split(":")
    return SlitPoint(parse_vector(x, "x"), parse_vector(y, "y"))


def build_run_config(settings: Settings, args: argparse.Namespace) -> RunConfig:
    """Combina argumentos e configurações (ambiente) num `RunConfig`."""
    vectors: List[str] = list(getattr(args, "pontos", None) or [])
    if args.comando == "geodesic":
        vectors = [args.x0, args.v0]
    elif args.comando == "transport":
        vectors = [args.w0]
    return RunConfig(
        command=args.comando,
        model_path=args.model,
        output_path=args.out,
        seed=args.seed if args.seed is not None else settings.seed,
        quad_order=args.quad_order if args.quad_order is not None else settings.quad_order,
        tol=args.tol if args.tol is not None else settings.tol,
        samples=args.samples,
        points=args.points,
        t_end=args.t_end,
        field_name=getattr(args, "field", None) or getattr(args, "source", "chern"),
        field2_name=getattr(args, "field2", "averaged"),
        model2_path=getattr(args, "model2", None),
        vectors=vectors,
        path_vertices=list(getattr(args, "vertices", None) or []),
        closed=bool(getattr(args, "closed", False)),
        reference=getattr(args, "reference", None),
        xlsx_path=getattr(args, "xlsx", None),
    )
