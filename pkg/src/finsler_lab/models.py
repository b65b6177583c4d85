"""Modelos de dados do laboratório: pontos do fibrado, valores tensoriais, relatórios e opções."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np

from .exceptions import FinslerConfigError, SlitBundleError

Verdict = Literal["yes", "no", "inconclusive"]


@dataclass
class SlitPoint:
    """Ponto (x, y) do fibrado tangente sem a seção nula."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        if self.x.shape != self.y.shape:
            raise SlitBundleError(
                f"Dimensões incompatíveis: x tem {self.x.size} coordenadas, y tem {self.y.size}."
            )
        if not np.linalg.norm(self.y) > 0.0:
            raise SlitBundleError(f"y = 0 não pertence ao fibrado (x = {self.x.tolist()}).")

    @property
    def dim(self) -> int:
        return int(self.x.size)

    def __str__(self) -> str:  # pragma: no cover - apenas para logs
        return f"(x={np.round(self.x, 6).tolist()}, y={np.round(self.y, 6).tolist()})"


@dataclass
class Jet2Value:
    """Valor e derivadas de primeira/segunda ordem de um campo no fibrado."""

    value: np.ndarray
    dy: np.ndarray
    dyy: np.ndarray
    dx: np.ndarray
    dxy: np.ndarray


@dataclass
class MetricValue:
    """Tensor fundamental g_ij num ponto."""

    g: np.ndarray
    point: SlitPoint


@dataclass
class CartanValue:
    """Tensor de Cartan A_ijk num ponto."""

    A: np.ndarray
    point: SlitPoint


@dataclass
class NonlinearConnectionValue:
    """Coeficientes N^i_j da conexão não linear num ponto."""

    N: np.ndarray
    point: SlitPoint


@dataclass
class CurvatureValue:
    """Curvaturas hh (R) e hv (P) da conexão de Chern num ponto."""

    R: np.ndarray
    P: np.ndarray
    point: SlitPoint


@dataclass
class FlagValue:
    """Curvatura de bandeira K com mastro y e aresta transversal V."""

    K: float
    flag: SlitPoint
    transverse: np.ndarray


@dataclass
class HomogeneityReport:
    """Resíduos de homogeneidade positiva e da identidade de Euler."""

    homogeneity_residual: float
    euler_residual: float
    samples: int

    @property
    def worst(self) -> Tuple[str, float]:
        if self.euler_residual > self.homogeneity_residual:
            return "euler_residual", self.euler_residual
        return "homogeneity_residual", self.homogeneity_residual

    def passes(self, threshold: float) -> bool:
        return self.worst[1] < threshold


@dataclass
class StructureReport:
    """Resíduos das equações de estrutura da conexão de Chern."""

    horizontal_compatibility: float
    torsion: float
    vertical_compatibility: float
    samples: int

    def max_residual(self) -> float:
        return max(self.horizontal_compatibility, self.torsion, self.vertical_compatibility)


@dataclass
class IndicatrixQuadrature:
    """Nós e pesos sobre a indicatriz I_x com a densidade de volume induzida."""

    x: np.ndarray
    ys: np.ndarray
    weights: np.ndarray
    order: int
    cone: Optional[Tuple[float, float]] = None

    @property
    def nodes(self) -> List[SlitPoint]:
        return [SlitPoint(self.x, y) for y in self.ys]

    @property
    def cone_restricted(self) -> bool:
        return self.cone is not None


@dataclass
class AveragedConnection:
    """Conexão média ⟨Γ⟩: campo em x e a amostra no ponto pedido."""

    coefficients: Callable[[np.ndarray], np.ndarray]
    quadrature_order: int
    source: str
    x: np.ndarray
    value: np.ndarray
    cone_restricted: bool = False


@dataclass
class TransportState:
    """Estado ao longo de um levantamento/transporte."""

    t: float
    x: np.ndarray
    u: Optional[np.ndarray]
    W: Optional[np.ndarray]
    F: float


@dataclass
class GeodesicSolution:
    """Amostras (t, x, ẋ) de uma geodésica integrada."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    tolerance: float
    connection: str
    F: Optional[np.ndarray] = None

    @property
    def samples(self) -> List[Tuple[float, np.ndarray, np.ndarray]]:
        return [(float(t), x, v) for t, x, v in zip(self.t, self.x, self.v)]

    @property
    def F_drift(self) -> Optional[float]:
        if self.F is None:
            return None
        return float(np.max(np.abs(self.F - self.F[0])))


@dataclass
class SampleSpec:
    """Densidade de amostragem: pontos base × direções, com semente fixa."""

    points: int = 50
    directions: int = 20
    seed: int = 42

    def __post_init__(self) -> None:
        if self.points < 1 or self.directions < 1:
            raise FinslerConfigError("SampleSpec exige ao menos um ponto e uma direção.")


@dataclass
class Thresholds:
    """Faixas de decisão (relativas à escala da amostra)."""

    yes_below: float = 1e-6
    no_above: float = 1e-5

    def __post_init__(self) -> None:
        if not (0 < self.yes_below <= self.no_above):
            raise FinslerConfigError("Limiares devem satisfazer 0 < yes_below <= no_above.")

    def verdict(self, residual: Optional[float], scale: float) -> Verdict:
        if residual is None or not np.isfinite(residual):
            return "inconclusive"
        if residual < self.yes_below * scale:
            return "yes"
        if residual > self.no_above * scale:
            return "no"
        return "inconclusive"


@dataclass
class ClassificationReport:
    """Relatório de classificação com resíduos, limiares e veredictos."""

    model: str
    sample_spec: SampleSpec
    residuals: Dict[str, Optional[float]]
    thresholds: Dict[str, Dict[str, float]]
    verdicts: Dict[str, Verdict]
    scale: float = 1.0
    notes: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RandersCriterion:
    """Critério de Berwald para Randers: sup‖b‖_a, max|b_{j|k}| e veredicto."""

    sup_b_norm: float
    max_covariant_derivative: float
    berwald: bool

    @property
    def verdict(self) -> str:
        return "berwald" if self.berwald else "not-berwald"


@dataclass
class EquivalenceReport:
    """Comparação de geodésicas de dois campos e da parte simétrica S."""

    separation: float
    max_symmetric_difference: float
    trials: int
    equivalent: bool


@dataclass
class ReversibilityReport:
    """Defeitos numéricos de reversibilidade."""

    return_gap: float
    norm_defect: float
    trials: int
    velocity_defect: float = 0.0


@dataclass
class InvarianceProbe:
    """Desvio máximo de F sobre os nós transportados da indicatriz."""

    deviation: float
    x_start: np.ndarray
    x_end: np.ndarray
    nodes: int


@dataclass
class LandsbergDiagnostic:
    """Tabela de desvios da família interpolada I_x(t) por laço."""

    deviations: Dict[float, List[float]]
    max_deviation: float
    witness: Optional[Tuple[float, int]]
    conclusion: str
    notes: List[str] = field(default_factory=list)


@dataclass
class RunConfig:
    """Configuração de uma execução da CLI."""

    command: Literal["classify", "tensors", "average", "geodesic", "transport", "probe-indicatrix", "compare"]
    model_path: Path
    output_path: Optional[Path] = None
    seed: int = 42
    quad_order: int = 32
    tol: float = 1e-9
    samples: int = 20
    points: int = 50
    t_end: float = 1.0
    field_name: str = "chern"
    field2_name: str = "averaged"
    model2_path: Optional[Path] = None
    vectors: List[str] = field(default_factory=list)
    path_vertices: List[str] = field(default_factory=list)
    closed: bool = False
    reference: Optional[str] = None
    xlsx_path: Optional[Path] = None

    def __post_init__(self) -> None:
        for nome in ("quad_order", "tol", "samples", "points", "t_end"):
            if not getattr(self, nome) > 0:
                raise FinslerConfigError(f"Parâmetro {nome} deve ser positivo.")
