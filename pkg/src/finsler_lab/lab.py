"""Fachada de alto nível do laboratório: carrega modelos e executa as operações da CLI."""

from __future__ import annotations

import importlib
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import averaging, classifier, connections, storage, transport
from .catalog import FinslerModel, cartan_norm, cartan_tensor, check_homogeneity, fundamental_tensor
from .config import Settings, configure_logging, load_settings
from .exceptions import FinslerConfigError, HomogeneityGateError
from .models import ClassificationReport, GeodesicSolution, SampleSpec, SlitPoint, Thresholds, TransportState

# O pacote reexporta a função ``curvature``, que sombreia o submódulo homônimo.
curvature = importlib.import_module(".curvature", __package__)

log = logging.getLogger(__name__)

HOMOGENEITY_GATE = 1e-6


class FinslerLab:
    """Encapsula configurações, o portão de homogeneidade e as operações sobre modelos."""

    def __init__(self, settings: Optional[Settings] = None, auto_configure_logging: bool = True) -> None:
        self.settings = settings or load_settings()
        if auto_configure_logging:
            configure_logging(self.settings)

    def load_model(self, path: Path, seed: Optional[int] = None) -> FinslerModel:
        """Lê o modelo e aplica o portão de homogeneidade (< 1e-6)."""
        model = storage.parse_model(path)
        report = check_homogeneity(model, seed=self._seed(seed))
        nome, valor = report.worst
        if not report.passes(HOMOGENEITY_GATE):
            raise HomogeneityGateError(nome, valor, HOMOGENEITY_GATE)
        log.info("Homogeneidade de %s: %s = %.2e", model.name, nome, valor)
        return model

    def field(self, m: FinslerModel, name: str, order: Optional[int] = None) -> connections.ConnectionField:
        """Campo de conexão pelo nome usado na CLI."""
        order = int(order or self.settings.quad_order)
        if name == "chern":
            return connections.chern_field(m)
        if name == "berwald":
            return connections.berwald_field(m)
        if name == "averaged":
            return averaging.averaged_field(m, order)
        if name == "averaged-berwald":
            return averaging.averaged_field(m, order, source="berwald")
        if name == "levi-civita-average":
            return connections.levi_civita_field(averaging.averaged_metric_field(m, order), m.dim, name)
        if name == "flat":
            return connections.flat_field(m.dim)
        raise FinslerConfigError(f"Campo desconhecido: {name!r}")

    def _seed(self, seed: Optional[int]) -> int:
        return self.settings.seed if seed is None else int(seed)

    # --- comandos ----------------------------------------------------------

    def classify(
        self, m: FinslerModel, points: int = 50, directions: int = 20, seed: Optional[int] = None, order: Optional[int] = None
    ) -> ClassificationReport:
        spec = SampleSpec(points=points, directions=directions, seed=self._seed(seed))
        return classifier.classify(m, spec, Thresholds(), order or self.settings.quad_order, self.settings.threads)

    def tensors(self, m: FinslerModel, points: Sequence[SlitPoint]) -> List[Dict[str, Any]]:
        """g, A, γ, N, Γ, G, R, P e Ȧ em cada ponto pedido."""
        saida = []
        for p in points:
            metric = fundamental_tensor(m, p)
            p = metric.point
            value = curvature.curvature(m, p)
            saida.append(
                {
                    "x": p.x,
                    "y": p.y,
                    "F": m.evaluate(p.x, p.y),
                    "g": metric.g,
                    "A": cartan_tensor(m, p).A,
                    "cartan_norm": cartan_norm(m, p),
                    "formal_christoffel": connections.formal_christoffel(m, p),
                    "N": connections.nonlinear_connection(m, p).N,
                    "chern": connections.chern_coefficients(m, p),
                    "berwald": connections.berwald_coefficients(m, p),
                    "R": value.R,
                    "P": value.P,
                    "landsberg": curvature.landsberg_tensor(m, p),
                }
            )
        return saida

    def average(
        self, m: FinslerModel, xs: Sequence[np.ndarray], source: str = "chern", order: Optional[int] = None
    ) -> List[Dict[str, Any]]:
        """⟨Γ⟩, ⟨g⟩, ⟨R⟩, a diferença para a curvatura de ⟨Γ⟩ e a compatibilidade métrica."""
        order = int(order or self.settings.quad_order)
        saida = []
        for x in xs:
            quadrature = averaging.build_indicatrix_quadrature(m, x, order)
            gap = averaging.averaged_curvature_gap(m, x, order)
            saida.append(
                {
                    "x": np.asarray(x, dtype=float),
                    "source": source,
                    "quad_order": order,
                    "cone_restricted": quadrature.cone_restricted,
                    "indicatrix_volume": averaging.indicatrix_volume(quadrature),
                    "averaged_connection": averaging.averaged_connection(m, source, x, order).value,
                    "averaged_metric": averaging.averaged_metric(m, x, order),
                    "averaged_curvature": gap["averaged_curvature"],
                    "curvature_of_average": gap["curvature_of_average"],
                    "curvature_gap": gap["gap"],
                    "metric_compatibility": averaging.averaged_metric_compatibility(m, x, order),
                }
            )
        return saida

    def geodesic(
        self, m: FinslerModel, x0: np.ndarray, v0: np.ndarray, field_name: str = "chern", t_end: float = 1.0,
        tol: Optional[float] = None, order: Optional[int] = None,
    ) -> GeodesicSolution:
        m.require(SlitPoint(x0, v0))
        field = self.field(m, field_name, order)
        return transport.integrate_geodesic(field, x0, v0, t_end, tol or self.settings.tol)

    def transport(
        self, m: FinslerModel, path: transport.BasePath, W0: np.ndarray, field_name: str = "chern",
        u0: Optional[np.ndarray] = None, tol: Optional[float] = None, order: Optional[int] = None,
    ) -> List[TransportState]:
        field = self.field(m, field_name, order)
        return transport.parallel_transport(field, m, path, W0, u0, tol or self.settings.tol)

    def probe_indicatrix(
        self, m: FinslerModel, path: transport.BasePath, field_name: str = "averaged",
        order: Optional[int] = None, tol: Optional[float] = None,
    ) -> Dict[str, Any]:
        order = int(order or self.settings.quad_order)
        field = self.field(m, field_name, order)
        probe = transport.indicatrix_invariance_probe(m, field, path.start, path, order, tol or self.settings.tol)
        return {"field": field.name, "closed": path.closed, **storage.to_jsonable(probe)}

    def compare(
        self, m: FinslerModel, field1: str, field2: str, points: Sequence[SlitPoint], trials: int = 20,
        t_end: float = 1.0, tol: Optional[float] = None, order: Optional[int] = None, m2: Optional[FinslerModel] = None,
        seed: Optional[int] = None,
    ) -> Dict[str, Any]:
        """Tensor diferença nos pontos dados e sonda de equivalência geodésica."""
        seed = self._seed(seed)
        primeiro = self.field(m, field1, order)
        segundo = self.field(m2 or m, field2, order)
        if not points:
            points = m.sample_slit_points(3, 2, seed)
        diferencas = []
        for p in points:
            B, S, A = transport.difference_tensor(primeiro, segundo, p)
            diferencas.append(
                {"x": p.x, "y": p.y, "max_B": float(np.max(np.abs(B))), "max_S": float(np.max(np.abs(S))),
                 "max_A": float(np.max(np.abs(A))), "B": B}
            )
        report = transport.geodesic_equivalence_probe(
            primeiro, segundo, trials, t_end, tol or self.settings.tol, m=m, seed=seed,
            threads=self.settings.threads,
        )
        return {"field1": primeiro.name, "field2": segundo.name, "difference": diferencas, "equivalence": report}

    # --- saída -------------------------------------------------------------

    def default_output(self, nome: str) -> Path:
        if nome.endswith(".csv"):
            return self.settings.trajectories_dir / nome
        return self.settings.reports_dir / nome


def create_lab(auto_configure_logging: bool = True) -> FinslerLab:
    """Cria uma instância de `FinslerLab` com configuração de logging opcional."""
    return FinslerLab(auto_configure_logging=auto_configure_logging)
