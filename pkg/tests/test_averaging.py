import functools
import math
import unittest
from pathlib import Path

import jax.numpy as jnp
import numpy as np
from scipy.integrate import quad

from finsler_lab.averaging import (
    average_tensor,
    averaged_connection,
    averaged_curvature,
    averaged_curvature_gap,
    averaged_field,
    averaged_metric,
    averaged_metric_compatibility,
    averaged_metric_field,
    build_indicatrix_quadrature,
    indicatrix_volume,
    interpolated_family,
)
from finsler_lab.catalog import FinslerModel, cartan_norm
from finsler_lab.connections import chern_coefficients
from finsler_lab.exceptions import ConeRequired, ModelDefinitionError
from finsler_lab.models import SlitPoint
from finsler_lab.storage import parse_model

MODELOS = Path(__file__).resolve().parents[1] / "modelos"


@functools.lru_cache(maxsize=None)
def _modelo(nome: str) -> FinslerModel:
    return parse_model(MODELOS / f"{nome}.json")


class QuadratureTests(unittest.TestCase):
    def test_volume_euclidiano(self) -> None:
        q2 = build_indicatrix_quadrature(_modelo("euclidean"), [0.0, 0.0], 32)
        self.assertAlmostEqual(indicatrix_volume(q2), 2 * math.pi, delta=1e-8)
        q3 = build_indicatrix_quadrature(_modelo("euclidean3"), [0.0, 0.0, 0.0], 16)
        self.assertAlmostEqual(indicatrix_volume(q3), 4 * math.pi, delta=1e-8)

    def test_nos_na_indicatriz(self) -> None:
        m = _modelo("slope")
        q = build_indicatrix_quadrature(m, [0.0, 0.0], 24)
        F = [m.evaluate(q.x, y) for y in q.ys]
        np.testing.assert_allclose(F, 1.0, atol=1e-13)

    def test_comprimento_da_indicatriz_de_randers(self) -> None:
        """Comprimento da elipse deslocada contra `quad` sobre a mesma curva."""
        m = _modelo("minkowski")
        q = build_indicatrix_quadrature(m, [0.0, 0.0], 64)
        metrica = m.kernels.compiled("metric")

        def no(theta: float) -> np.ndarray:
            u = np.array([math.cos(theta), math.sin(theta)])
            return u / m.evaluate([0.0, 0.0], u)

        def densidade(theta: float) -> float:
            h = 1e-6
            tangente = (no(theta + h) - no(theta - h)) / (2 * h)
            g = np.asarray(metrica(jnp.zeros(2), jnp.asarray(no(theta))))
            return math.sqrt(float(tangente @ g @ tangente))

        esperado, _ = quad(densidade, 0.0, 2 * math.pi, limit=200)
        self.assertAlmostEqual(indicatrix_volume(q), esperado, delta=1e-6)

    def test_media_de_constante(self) -> None:
        q = build_indicatrix_quadrature(_modelo("slope"), [0.0, 0.0], 16)
        media = average_tensor(q, lambda p: np.full((2, 2), 3.5))
        np.testing.assert_allclose(media, 3.5, atol=1e-14)

    def test_modelo_y_local_sem_cone(self) -> None:
        base = _modelo("berwald_rund")
        sem_cone = FinslerModel(name="sem-cone", family="custom", dim=2, F=base.F, y_local=True)
        with self.assertRaises(ConeRequired):
            averaged_connection(sem_cone, "chern", [1.0, 0.0], 16)


class AveragedConnectionTests(unittest.TestCase):
    def test_riemanniano_igual_a_levi_civita(self) -> None:
        m = _modelo("sphere")
        x = [0.4, 1.2]
        media = averaged_connection(m, "chern", x, 32).value
        esperado = chern_coefficients(m, SlitPoint(x, [1.0, 0.0]))
        np.testing.assert_allclose(media, esperado, atol=1e-12)

    def test_berwald_media_igual_a_chern(self) -> None:
        m = _modelo("randers_s2xs1")
        x = [1.0, 0.9, 2.5]
        media = averaged_connection(m, "chern", x, 16)
        self.assertFalse(media.cone_restricted)
        np.testing.assert_allclose(media.value, chern_coefficients(m, SlitPoint(x, [0.3, 0.1, 0.5])), atol=1e-7)
        berwald = averaged_connection(m, "berwald", x, 16).value
        np.testing.assert_allclose(berwald, media.value, atol=1e-7)

    def test_curvatura_media_de_berwald(self) -> None:
        gap = averaged_curvature_gap(_modelo("randers_s2xs1"), [1.0, 0.9, 2.5], 16)
        self.assertLess(gap["gap"], 1e-5)
        self.assertEqual(np.asarray(gap["averaged_curvature"]).shape, (3, 3, 3, 3))

    def test_compatibilidade_metrica_em_berwald(self) -> None:
        self.assertLess(averaged_metric_compatibility(_modelo("randers_s2xs1"), [1.0, 0.9, 2.5], 16), 1e-6)

    def test_estabilidade_ao_dobrar_a_ordem(self) -> None:
        m = _modelo("randers_nonparallel")
        x = [0.5, 1.1, 0.8]
        baixa = averaged_connection(m, "chern", x, 16).value
        alta = averaged_connection(m, "chern", x, 32).value
        self.assertLess(float(np.max(np.abs(baixa - alta))), 1e-6)

    def test_metrica_e_curvatura_medias_estaveis_ao_dobrar_a_ordem(self) -> None:
        m = _modelo("randers_nonparallel")
        x = [0.5, 1.1, 0.8]
        np.testing.assert_allclose(averaged_metric(m, x, 32), averaged_metric(m, x, 16), atol=1e-8, rtol=0.0)
        baixa, alta = averaged_curvature(m, x, 16), averaged_curvature(m, x, 32)
        escala = max(1.0, float(np.max(np.abs(alta))))
        self.assertLess(float(np.max(np.abs(baixa - alta))), 1e-5 * escala)

    def test_cone_restrito_em_berwald_rund(self) -> None:
        m = _modelo("berwald_rund")
        media = averaged_connection(m, "chern", [1.0, 0.1], 16)
        self.assertTrue(media.cone_restricted)
        np.testing.assert_allclose(media.value, chern_coefficients(m, SlitPoint([1.0, 0.1], [0.5, 1.0])), atol=1e-7)

    def test_campo_medio_sem_torcao(self) -> None:
        field = averaged_field(_modelo("randers_nonparallel"), 16)
        gamma = field.at(np.array([0.5, 1.1, 0.8]))
        self.assertTrue(field.y_independent)
        np.testing.assert_allclose(gamma, np.swapaxes(gamma, 1, 2), atol=1e-14)

    def test_fonte_desconhecida(self) -> None:
        with self.assertRaises(ValueError):
            averaged_connection(_modelo("sphere"), "cartan", [0.4, 1.2], 8)


class InterpolationTests(unittest.TestCase):
    def test_extremos_da_familia(self) -> None:
        m = _modelo("randers_s2xs1")
        h = averaged_metric_field(m, 12)
        self.assertIs(interpolated_family(m, h, 0.0), m)
        riemann = interpolated_family(m, h, 1.0)
        p = SlitPoint([1.0, 0.9, 2.5], [0.3, 0.1, 0.5])
        self.assertLess(cartan_norm(riemann, p), 1e-7)
        hx = averaged_metric(m, p.x, 12)
        self.assertAlmostEqual(riemann.evaluate(p.x, p.y), math.sqrt(p.y @ hx @ p.y), places=12)

    def test_ponto_medio(self) -> None:
        m = _modelo("randers_s2xs1")
        h = averaged_metric_field(m, 12)
        meio = interpolated_family(m, h, 0.5)
        p = SlitPoint([1.0, 0.9, 2.5], [0.3, 0.1, 0.5])
        hx = averaged_metric(m, p.x, 12)
        esperado = 0.5 * m.evaluate(p.x, p.y) + 0.5 * math.sqrt(p.y @ hx @ p.y)
        self.assertAlmostEqual(meio.evaluate(p.x, p.y), esperado, places=12)

    def test_parametro_fora_do_intervalo(self) -> None:
        m = _modelo("sphere")
        with self.assertRaises(ModelDefinitionError):
            interpolated_family(m, averaged_metric_field(m, 8), 1.5)


if __name__ == "__main__":
    unittest.main()
