"""Hierarquia de exceções do laboratório de Finsler."""

from __future__ import annotations

from typing import Any, Mapping, Optional, Sequence


class FinslerError(Exception):
    """Exceção base para erros do laboratório."""


class FinslerConfigError(FinslerError):
    """Erro relacionado à configuração (variáveis de ambiente, overrides)."""


class ModelDefinitionError(FinslerError):
    """Arquivo de modelo ou parâmetros de família inválidos."""

    def __init__(self, message: str, problems: Optional[Sequence[str]] = None) -> None:
        self.problems = list(problems or [])
        if self.problems:
            message = message + ": " + "; ".join(self.problems)
        super().__init__(message)


class ExpressionSyntaxError(ModelDefinitionError):
    """Expressão fora da gramática aceita (posição em linha/coluna)."""

    def __init__(self, message: str, source: str, line: int = 1, column: int = 1) -> None:
        self.source = source
        self.line = line
        self.column = column
        super().__init__(f"{message} (linha {line}, coluna {column}) em {source!r}")


class JetEvaluationError(FinslerError):
    """Derivada não finita ao avaliar um jato."""


class SlitBundleError(FinslerError):
    """Ponto ou estêncil fora do fibrado tangente sem a seção nula."""


class StrongConvexityViolation(FinslerError):
    """Tensor fundamental não positivo definido no ponto avaliado."""

    def __init__(self, message: str, eigenvalue: Optional[float] = None, point: Any = None) -> None:
        self.eigenvalue = eigenvalue
        self.point = point
        super().__init__(message)


class DegenerateFlag(FinslerError):
    """Bandeira degenerada: V e y linearmente dependentes."""


class ConeRequired(FinslerError):
    """Modelo y-local exige um cone de direções para a quadratura."""


class IntegrationStalled(FinslerError):
    """Integrador parou (passo abaixo da resolução ou valor não finito)."""

    def __init__(self, message: str, t: Optional[float] = None, state: Any = None) -> None:
        self.t = t
        self.state = state
        super().__init__(message)


class MissingReference(FinslerError):
    """Transporte por conexão dependente de y sem vetor de referência."""


class HomogeneityGateError(FinslerError):
    """Modelo reprovado no teste de homogeneidade obrigatório."""

    def __init__(self, residual_name: str, value: float, threshold: float) -> None:
        self.residual_name = residual_name
        self.value = value
        self.threshold = threshold
        super().__init__(
            f"Resíduo de homogeneidade '{residual_name}' = {value:.3e} acima do limite {threshold:.1e}"
        )


class ClassificationAborted(FinslerError):
    """Classificação interrompida; carrega os resíduos parciais."""

    def __init__(self, message: str, partial: Optional[Mapping[str, Any]] = None) -> None:
        self.partial = dict(partial or {})
        super().__init__(message)
