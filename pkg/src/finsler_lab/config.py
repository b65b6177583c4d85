"""Carregamento de configurações e ajuste de logging do laboratório."""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from dotenv import load_dotenv

from .exceptions import FinslerConfigError

load_dotenv()

DEFAULT_SEED = 42
DEFAULT_QUAD_ORDER = 32
DEFAULT_TOL = 1e-9
DEFAULT_THREADS = 4


def _str_to_bool(value: Optional[str]) -> Optional[bool]:
    """Converte strings comuns em valores booleanos (`sim`, `não`, `true`, etc.)."""
    if value is None:
        return None
    value_norm = value.strip().lower()
    truthy = {"1", "true", "t", "yes", "y", "sim"}
    falsy = {"0", "false", "f", "no", "n", "nao", "não"}
    if value_norm in truthy:
        return True
    if value_norm in falsy:
        return False
    return None


def _env_number(name: str, default: float, kind: type = float) -> float:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = kind(raw.strip())
    except ValueError as exc:
        raise FinslerConfigError(f"Variável {name} inválida: {raw!r}") from exc
    if value <= 0:
        raise FinslerConfigError(f"Variável {name} deve ser positiva (recebido {raw!r}).")
    return value


@dataclass(frozen=True)
class Settings:
    """Representa a configuração de execução do laboratório."""

    data_dir: Path = field(default_factory=lambda: Path(os.environ.get("FINSLER_DATA_DIR", "saida")))
    debug_enabled: bool = field(default_factory=lambda: _str_to_bool(os.environ.get("FINSLER_DEBUG")) is True)
    threads: int = field(default_factory=lambda: int(_env_number("FINSLER_THREADS", DEFAULT_THREADS, int)))
    quad_order: int = field(default_factory=lambda: int(_env_number("FINSLER_QUAD_ORDER", DEFAULT_QUAD_ORDER, int)))
    tol: float = field(default_factory=lambda: _env_number("FINSLER_TOL", DEFAULT_TOL))
    seed: int = field(default_factory=lambda: int(_env_number("FINSLER_SEED", DEFAULT_SEED, int)))

    @property
    def reports_dir(self) -> Path:
        """Diretório padrão dos relatórios JSON."""
        return self.data_dir / "relatorios"

    @property
    def trajectories_dir(self) -> Path:
        """Diretório padrão das trajetórias CSV."""
        return self.data_dir / "trajetorias"


def load_settings(overrides: Optional[Mapping[str, object]] = None) -> Settings:
    """
    Carrega configurações a partir de variáveis de ambiente com possíveis sobrescritas.

    Raises:
        FinslerConfigError: Se alguma variável numérica for inválida ou um override desconhecido.
    """
    base = Settings()
    if not overrides:
        return base

    data = asdict(base)
    desconhecidos = sorted(set(overrides) - set(data))
    if desconhecidos:
        raise FinslerConfigError(f"Overrides desconhecidos: {', '.join(desconhecidos)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    data["data_dir"] = Path(data["data_dir"])
    return Settings(**data)  # type: ignore[arg-type]


def configure_logging(settings: Settings) -> logging.Logger:
    """Configura o logging global de acordo com o modo debug das configurações."""
    level = logging.DEBUG if settings.debug_enabled else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%H:%M:%S",
    )
    return logging.getLogger("finsler-lab")
