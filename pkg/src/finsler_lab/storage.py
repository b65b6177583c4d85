"""Leitura de arquivos de modelo e gravação de relatórios (JSON, CSV e Excel)."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Union

import numpy as np
from openpyxl import Workbook

from .catalog import FAMILIES, FinslerModel, check_convexity, make_catalog_model
from .exceptions import ModelDefinitionError
from .models import ClassificationReport, GeodesicSolution, SlitPoint, TransportState

log = logging.getLogger(__name__)

MODEL_KEYS = ("name", "family", "dim", "params", "lower", "upper", "cone", "periods")
SPOT_CHECK_SAMPLES = 40


# --- modelos ---------------------------------------------------------------


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _schema_problems(data: Any) -> List[str]:
    """Enumera todas as violações de esquema de um arquivo de modelo."""
    if not isinstance(data, dict):
        return ["o conteúdo deve ser um objeto JSON"]
    problemas = [f"chave desconhecida '{k}'" for k in data if k not in MODEL_KEYS]
    family = data.get("family")
    if family is None:
        problemas.append("campo obrigatório 'family' ausente")
    elif family not in FAMILIES:
        problemas.append(f"family {family!r} fora de {', '.join(FAMILIES)}")
    dim = data.get("dim")
    if dim is not None and (not isinstance(dim, int) or isinstance(dim, bool) or dim < 2):
        problemas.append("'dim' deve ser inteiro ≥ 2")
    if "name" in data and not isinstance(data["name"], str):
        problemas.append("'name' deve ser texto")
    if "params" in data and not isinstance(data["params"], dict):
        problemas.append("'params' deve ser um objeto")
    for chave in ("lower", "upper"):
        if chave in data:
            valor = data[chave]
            if not isinstance(valor, list) or not all(_is_number(v) for v in valor):
                problemas.append(f"'{chave}' deve ser uma lista de números")
            elif isinstance(dim, int) and len(valor) != dim:
                problemas.append(f"'{chave}' com {len(valor)} entradas para dim = {dim}")
    if "cone" in data:
        cone = data["cone"]
        if not (isinstance(cone, list) and len(cone) == 2 and all(_is_number(v) for v in cone) and cone[0] < cone[1]):
            problemas.append("'cone' deve ser [ângulo_min, ângulo_max] com min < max")
    if "periods" in data:
        periods = data["periods"]
        if not isinstance(periods, list) or not all(p is None or (_is_number(p) and p > 0) for p in periods):
            problemas.append("'periods' deve listar períodos positivos ou null")
    return problemas


def model_from_dict(data: Mapping[str, Any], origem: str = "<dict>") -> FinslerModel:
    """Valida o esquema, constrói o modelo e faz a verificação amostral de convexidade."""
    problemas = _schema_problems(data)
    if problemas:
        raise ModelDefinitionError(f"Modelo inválido em {origem}", problemas)
    model = make_catalog_model(
        data["family"],
        data.get("params"),
        data.get("dim"),
        name=data.get("name"),
        lower=data.get("lower"),
        upper=data.get("upper"),
        cone=data.get("cone"),
        periods=data.get("periods"),
    )
    check_convexity(model, samples=SPOT_CHECK_SAMPLES)
    return model


def parse_model(path: Union[str, Path]) -> FinslerModel:
    """Lê um arquivo JSON de modelo."""
    path = Path(path).expanduser()
    if not path.exists():
        raise ModelDefinitionError(f"Arquivo de modelo não encontrado: {path}")
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ModelDefinitionError(
            f"JSON malformado em {path} (linha {exc.lineno}, coluna {exc.colno}): {exc.msg}"
        ) from exc
    if isinstance(data, dict) and "name" not in data:
        data["name"] = path.stem
    model = model_from_dict(data, str(path))
    log.info("Modelo carregado: %s", model)
    return model


# --- serialização ----------------------------------------------------------


def _key(k: Any) -> str:
    if isinstance(k, float):
        return format(k, "g")
    return str(k)


def to_jsonable(obj: Any) -> Any:
    """Converte dataclasses, arrays e escalares numpy em tipos JSON; não finitos viram null."""
    if isinstance(obj, SlitPoint):
        return {"x": to_jsonable(obj.x), "y": to_jsonable(obj.y)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if not callable(getattr(obj, f.name))}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, Mapping):
        return {_key(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def report_to_dict(report: ClassificationReport) -> Dict[str, Any]:
    """Relatório com os nomes de campo exatos de `ClassificationReport`."""
    return to_jsonable(report)


def salvar_json(dados: Any, caminho: Union[str, Path]) -> Path:
    """Grava JSON determinístico (ordem de inserção, sem carimbo de tempo)."""
    path = Path(caminho).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(to_jsonable(dados), handle, ensure_ascii=False, indent=2, allow_nan=False)
        handle.write("\n")
    log.info("JSON salvo em %s", path)
    return path


def _columns(prefix: str, n: int) -> List[str]:
    return [f"{prefix}{i}" for i in range(n)]


def trajectory_rows(trajectory: Union[GeodesicSolution, Sequence[TransportState]]) -> List[List[Any]]:
    """Linhas (t, x…, u…, W…, F) ou (t, x…, v…, F) com cabeçalho."""
    if isinstance(trajectory, GeodesicSolution):
        n = trajectory.x.shape[1]
        F = trajectory.F if trajectory.F is not None else [float("nan")] * len(trajectory.t)
        rows: List[List[Any]] = [["t", *_columns("x", n), *_columns("v", n), "F"]]
        for t, x, v, f in zip(trajectory.t, trajectory.x, trajectory.v, F):
            rows.append([float(t), *map(float, x), *map(float, v), float(f)])
        return rows
    states = list(trajectory)
    if not states:
        return [["t", "F"]]
    n = len(states[0].x)
    has_u = states[0].u is not None
    has_W = states[0].W is not None
    header = ["t", *_columns("x", n)]
    header += _columns("u", n) if has_u else []
    header += _columns("W", n) if has_W else []
    rows = [header + ["F"]]
    for s in states:
        row = [float(s.t), *map(float, s.x)]
        if has_u:
            row += list(map(float, s.u))
        if has_W:
            row += list(map(float, s.W))
        rows.append(row + [float(s.F)])
    return rows


def salvar_trajetoria_csv(trajectory: Union[GeodesicSolution, Sequence[TransportState]], caminho: Union[str, Path]) -> Path:
    """Grava uma trajetória em CSV para plotagem externa."""
    path = Path(caminho).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = trajectory_rows(trajectory)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerows(rows)
    log.info("Trajetória salva em %s (%s amostra(s)).", path, len(rows) - 1)
    return path


def exportar_relatorio_para_excel(report: ClassificationReport, caminho: Union[str, Path]) -> str:
    """Planilha com resíduos, limiares e veredictos da classificação."""
    path = Path(caminho).expanduser()
    if path.is_dir():
        path = path / f"{report.model}_classificacao.xlsx"
    elif path.suffix.lower() != ".xlsx":
        path = path.with_suffix(".xlsx")
    path.parent.mkdir(parents=True, exist_ok=True)

    wb = Workbook()
    ws = wb.active
    if ws is None:
        ws = wb.create_sheet("Resíduos")
    else:
        ws.title = "Resíduos"
    ws.append(["Resíduo", "Valor", "Sim abaixo de", "Não acima de"])
    for nome, valor in report.residuals.items():
        limiar = report.thresholds.get(nome, {})
        ws.append([nome, valor, limiar.get("yes_below"), limiar.get("no_above")])

    ws_v = wb.create_sheet("Veredictos")
    ws_v.append(["Classe", "Veredicto"])
    for nome, veredicto in report.verdicts.items():
        ws_v.append([nome, veredicto])

    ws_n = wb.create_sheet("Notas")
    ws_n.append(["Nota"])
    for nota in report.notes:
        ws_n.append([nota])

    wb.save(path)
    log.info("Planilha Excel gerada: %s", path)
    return str(path)
