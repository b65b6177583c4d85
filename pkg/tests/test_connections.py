import functools
import math
import unittest
from pathlib import Path

import jax.numpy as jnp
import numpy as np

from finsler_lab.catalog import FinslerModel, cartan_tensor, fundamental_tensor
from finsler_lab.connections import (
    berwald_coefficients,
    cartan_connection_coefficients,
    chern_coefficients,
    chern_field,
    flat_field,
    formal_christoffel,
    horizontal_derivative,
    levi_civita_field,
    nonlinear_connection,
    verify_structure_equations,
)
from finsler_lab.exceptions import FinslerError
from finsler_lab.models import SlitPoint
from finsler_lab.storage import parse_model

MODELOS = Path(__file__).resolve().parents[1] / "modelos"


@functools.lru_cache(maxsize=None)
def _modelo(nome: str) -> FinslerModel:
    return parse_model(MODELOS / f"{nome}.json")


def _levi_civita_esfera(phi: float, dim: int = 2) -> np.ndarray:
    """Símbolos de g = diag(sen²φ, 1, ...) na carta (θ, φ, ...)."""
    gamma = np.zeros((dim, dim, dim))
    gamma[0, 0, 1] = gamma[0, 1, 0] = math.cos(phi) / math.sin(phi)
    gamma[1, 0, 0] = -math.sin(phi) * math.cos(phi)
    return gamma


class ChernTests(unittest.TestCase):
    def test_esfera_reduz_a_levi_civita(self) -> None:
        m = _modelo("sphere")
        for p in m.sample_slit_points(5, 3):
            with self.subTest(ponto=str(p)):
                esperado = _levi_civita_esfera(p.x[1])
                np.testing.assert_allclose(chern_coefficients(m, p), esperado, atol=1e-7)
                np.testing.assert_allclose(formal_christoffel(m, p), esperado, atol=1e-7)
                np.testing.assert_allclose(berwald_coefficients(m, p), esperado, atol=1e-7)

    def test_randers_paralelo_independe_de_y(self) -> None:
        m = _modelo("randers_s2xs1")
        x = [1.0, 0.9, 2.5]
        esperado = _levi_civita_esfera(0.9, dim=3)
        for y in ([1.0, 0.2, 0.3], [-0.4, 0.7, -1.1], [0.0, 0.0, 1.0]):
            p = SlitPoint(x, y)
            np.testing.assert_allclose(chern_coefficients(m, p), esperado, atol=1e-8)
            np.testing.assert_allclose(berwald_coefficients(m, p), esperado, atol=1e-7)

    def test_randers_nao_paralelo_depende_de_y(self) -> None:
        m = _modelo("randers_nonparallel")
        x = [1.0, 0.9, 0.4]
        g1 = chern_coefficients(m, SlitPoint(x, [1.0, 0.2, 0.3]))
        g2 = chern_coefficients(m, SlitPoint(x, [-0.4, 0.7, -1.1]))
        self.assertGreater(float(np.max(np.abs(g1 - g2))), 1e-3)

    def test_equacoes_de_estrutura(self) -> None:
        for nome in ("slope", "randers_nonparallel", "numata", "berwald_rund"):
            with self.subTest(modelo=nome):
                report = verify_structure_equations(_modelo(nome), samples=6)
                self.assertGreater(report.samples, 0)
                self.assertLess(report.horizontal_compatibility, 1e-7)
                self.assertLess(report.torsion, 1e-12)
                self.assertLess(report.vertical_compatibility, 1e-9)

    def test_estrutura_com_varias_direcoes_por_ponto(self) -> None:
        report = verify_structure_equations(_modelo("euclidean"), samples=4)
        self.assertEqual(report.samples, 12)
        self.assertLess(report.max_residual(), 1e-10)
        with self.assertRaises(ValueError):
            verify_structure_equations(_modelo("euclidean"), samples=4, directions=1)

    def test_F2_horizontalmente_constante_em_todos_os_modelos(self) -> None:
        for arquivo in sorted(MODELOS.glob("*.json")):
            m = parse_model(arquivo)
            for p in m.sample_slit_points(3, 2, seed=9):
                escala = max(1.0, m.evaluate(p.x, p.y) ** 2)
                for k in range(m.dim):
                    with self.subTest(modelo=m.name, ponto=str(p), k=k):
                        self.assertAlmostEqual(horizontal_derivative(m, m.squared, p, k), 0.0, delta=1e-7 * escala)

    def test_F_horizontalmente_constante(self) -> None:
        m = _modelo("randers_nonparallel")
        p = SlitPoint([0.7, 1.3, 0.9], [0.4, -0.3, 0.8])
        for k in range(3):
            self.assertAlmostEqual(horizontal_derivative(m, m.F, p, k), 0.0, delta=1e-9)
        with self.assertRaises(IndexError):
            horizontal_derivative(m, m.F, p, 3)

    def test_conexao_nao_linear_euclidiana_nula(self) -> None:
        m = _modelo("euclidean")
        p = SlitPoint([0.1, 0.2], [1.0, -1.0])
        np.testing.assert_allclose(nonlinear_connection(m, p).N, np.zeros((2, 2)), atol=1e-15)

    def test_parte_vertical_de_cartan(self) -> None:
        m = _modelo("slope")
        p = SlitPoint([0.0, 0.0], [0.6, 0.8])
        horizontal, vertical = cartan_connection_coefficients(m, p)
        g = fundamental_tensor(m, p).g
        A = cartan_tensor(m, p).A
        np.testing.assert_allclose(vertical, np.einsum("kl,lij->kij", np.linalg.inv(g), A), atol=1e-10)
        np.testing.assert_allclose(horizontal, chern_coefficients(m, p), atol=1e-14)


class FieldTests(unittest.TestCase):
    def test_campo_de_chern_exige_referencia(self) -> None:
        field = chern_field(_modelo("sphere"))
        with self.assertRaises(FinslerError):
            field.at(np.array([0.0, 1.0]))

    def test_levi_civita_de_campo_metrico(self) -> None:
        field = levi_civita_field(lambda x: jnp.diag(jnp.array([jnp.sin(x[1]) ** 2, 1.0])), 2)
        np.testing.assert_allclose(field.at(np.array([0.3, 1.1])), _levi_civita_esfera(1.1), atol=1e-9)
        self.assertTrue(field.y_independent)

    def test_campo_plano(self) -> None:
        self.assertEqual(float(np.max(np.abs(flat_field(3).at(np.zeros(3))))), 0.0)


if __name__ == "__main__":
    unittest.main()
