import functools
import math
import unittest
from pathlib import Path

import jax.numpy as jnp
import numpy as np

from finsler_lab.averaging import averaged_field
from finsler_lab.catalog import FinslerModel
from finsler_lab.connections import ConnectionField, chern_field, flat_field, levi_civita_field
from finsler_lab.exceptions import FinslerError, IntegrationStalled, MissingReference
from finsler_lab.models import SlitPoint
from finsler_lab.storage import parse_model
from finsler_lab.transport import (
    BasePath,
    default_loops,
    difference_tensor,
    geodesic_equivalence_probe,
    horizontal_lift,
    indicatrix_invariance_probe,
    integrate_geodesic,
    parallel_transport,
    reversibility_probe,
    transport_matrix,
)

MODELOS = Path(__file__).resolve().parents[1] / "modelos"


@functools.lru_cache(maxsize=None)
def _modelo(nome: str) -> FinslerModel:
    return parse_model(MODELOS / f"{nome}.json")


def _metrica_esfera(x):
    return jnp.diag(jnp.array([jnp.sin(x[1]) ** 2, 1.0]))


def _carta_esfera(v):
    return jnp.array([jnp.arctan2(v[1], v[0]), jnp.arccos(v[2])])


def _arco(p: np.ndarray, q: np.ndarray) -> BasePath:
    """Quarto de círculo máximo de p até q (ortonormais), na carta (θ, φ)."""
    p, q = jnp.asarray(p), jnp.asarray(q)
    return BasePath.from_function(lambda t: _carta_esfera(jnp.cos(t) * p + jnp.sin(t) * q), 0.0, math.pi / 2)


class GeodesicTests(unittest.TestCase):
    def test_reta_no_plano(self) -> None:
        sol = integrate_geodesic(chern_field(_modelo("euclidean")), [0.1, 0.2], [0.3, -0.4], 2.0)
        np.testing.assert_allclose(sol.x[-1], [0.7, -0.6], atol=1e-10)
        np.testing.assert_allclose(sol.F, 0.5, atol=1e-12)
        self.assertEqual(len(sol.t), 101)

    def test_equador_fecha(self) -> None:
        m = _modelo("sphere")
        sol = integrate_geodesic(chern_field(m), [0.0, math.pi / 2], [1.0, 0.0], 2 * math.pi)
        self.assertLess(float(np.linalg.norm(m.wrap(sol.x[-1] - sol.x[0]))), 1e-5)

    def test_F_conservada_em_randers(self) -> None:
        m = _modelo("randers_s2xs1")
        sol = integrate_geodesic(chern_field(m), [1.0, 0.9, 2.5], [0.3, 0.1, 0.5], 2.0, tol=1e-10)
        self.assertLess(sol.F_drift, 1e-7)

    def test_chern_e_media_coincidem_em_berwald(self) -> None:
        m = _modelo("randers_s2xs1")
        report = geodesic_equivalence_probe(chern_field(m), averaged_field(m, 8), trials=2, m=m)
        self.assertLess(report.separation, 1e-6)
        self.assertLess(report.max_symmetric_difference, 1e-6)
        self.assertTrue(report.equivalent)

    def test_explosao_em_tempo_finito(self) -> None:
        gamma = np.zeros((2, 2, 2))
        gamma[0, 0, 0] = 1.0
        campo = ConnectionField("explosivo", 2, lambda x, y=None: gamma, True, True)
        with self.assertRaises(IntegrationStalled):
            integrate_geodesic(campo, [0.0, 0.0], [-1.0, 0.0], 2.0)

    def test_parametros_invalidos(self) -> None:
        with self.assertRaises(ValueError):
            integrate_geodesic(flat_field(2), [0.0, 0.0], [1.0, 0.0], 1.0, tol=0.0)


class BasePathTests(unittest.TestCase):
    def test_spline_amostrada_reproduz_o_arco(self) -> None:
        a = np.array([1.0, 0.0, 1.0]) / math.sqrt(2)
        b = np.array([0.0, 1.0, 0.0])
        exato = _arco(a, b)
        ts = np.linspace(0.0, math.pi / 2, 41)
        xs = [exato.segments[0].position(t) for t in ts]
        amostrado = BasePath.from_samples(ts, xs)
        self.assertAlmostEqual(amostrado.duration, math.pi / 2, places=14)
        np.testing.assert_allclose(amostrado.start, exato.start, atol=1e-14)
        np.testing.assert_allclose(amostrado.end, exato.end, atol=1e-14)
        for s in (0.13, 0.71, 1.29):
            seg, ref = amostrado.segments[0], exato.segments[0]
            np.testing.assert_allclose(seg.position(s), ref.position(s), atol=1e-6)
            np.testing.assert_allclose(seg.velocity(s), ref.velocity(s), atol=1e-3)

    def test_transporte_pela_spline(self) -> None:
        campo = levi_civita_field(_metrica_esfera, 2)
        exato = BasePath.from_function(lambda t: jnp.array([0.4 + t, 1.0 + 0.3 * jnp.sin(t)]), 0.0, 2.0)
        ts = np.linspace(0.0, 2.0, 81)
        amostrado = BasePath.from_samples(ts, [exato.segments[0].position(t) for t in ts])
        W_exato = parallel_transport(campo, None, exato, [0.3, 0.8], tol=1e-11)[-1].W
        W_amostrado = parallel_transport(campo, None, amostrado, [0.3, 0.8], tol=1e-11)[-1].W
        np.testing.assert_allclose(W_amostrado, W_exato, atol=1e-5)


class HorizontalLiftTests(unittest.TestCase):
    def test_constante_no_plano(self) -> None:
        path = BasePath.polyline([[0.0, 0.0], [1.0, 0.5], [0.2, 1.0]])
        for estado in horizontal_lift(_modelo("euclidean"), path, [0.3, 0.7]):
            np.testing.assert_allclose(estado.u, [0.3, 0.7], atol=1e-12)

    def test_meridiano_da_esfera(self) -> None:
        path = BasePath.polyline([[0.5, 0.6], [0.5, 2.0]])
        final = horizontal_lift(_modelo("sphere"), path, [0.7, 0.4], tol=1e-10)[-1]
        np.testing.assert_allclose(final.x, [0.5, 2.0], atol=1e-14)
        esperado = [0.7 * math.sin(0.6) / math.sin(2.0), 0.4]
        np.testing.assert_allclose(final.u, esperado, atol=1e-7)

    def test_F_conservada_em_laco(self) -> None:
        m = _modelo("randers_s2xs1")
        estados = horizontal_lift(m, default_loops(m, count=1)[0], [0.3, 0.1, 0.5], tol=1e-10)
        F = np.array([e.F for e in estados])
        self.assertLess(float(np.max(np.abs(F - F[0]))), 1e-7)


class ParallelTransportTests(unittest.TestCase):
    def test_chern_com_referencia_propria(self) -> None:
        m = _modelo("randers_nonparallel")
        path = BasePath.polyline([[1.0, 1.2, 0.3], [1.4, 1.0, 0.9], [1.1, 1.5, 1.6]])
        u0 = [0.2, 0.3, 0.5]
        for estado in parallel_transport(chern_field(m), m, path, u0, u0=u0, tol=1e-10):
            np.testing.assert_allclose(estado.W, estado.u, atol=1e-8)

    def test_chern_preserva_F_em_laco_berwald(self) -> None:
        m = _modelo("randers_s2xs1")
        path = default_loops(m, count=1)[0]
        estados = parallel_transport(chern_field(m), m, path, [0.1, -0.4, 0.7], u0=[0.3, 0.1, 0.5], tol=1e-10)
        F = np.array([e.F for e in estados])
        self.assertFalse(np.allclose(estados[-1].W, estados[-1].u))
        self.assertLess(float(np.max(np.abs(F - F[0]))), 1e-7)

    def test_referencia_ausente(self) -> None:
        m = _modelo("slope")
        with self.assertRaises(MissingReference):
            parallel_transport(chern_field(m), m, BasePath.polyline([[0.0, 0.0], [0.5, 0.5]]), [1.0, 0.0])

    def test_holonomia_do_triangulo_octante(self) -> None:
        a = np.array([1.0, 0.0, 1.0]) / math.sqrt(2)
        b = np.array([1.0, 0.0, -1.0]) / math.sqrt(2)
        c = np.array([0.0, 1.0, 0.0])
        path = _arco(a, b).then(_arco(b, c)).then(_arco(c, a))
        np.testing.assert_allclose(path.start, [0.0, math.pi / 4], atol=1e-14)
        campo = levi_civita_field(_metrica_esfera, 2)
        W = parallel_transport(campo, None, path, [0.0, 1.0], tol=1e-11)[-1].W
        phi = math.pi / 4
        ortonormal = np.array([math.sin(phi) * W[0], W[1]])
        self.assertAlmostEqual(float(np.linalg.norm(ortonormal)), 1.0, delta=1e-7)
        angulo = math.acos(float(np.clip(ortonormal[1], -1.0, 1.0)))
        self.assertAlmostEqual(angulo, math.pi / 2, delta=1e-5)

    def test_linearidade(self) -> None:
        campo = levi_civita_field(_metrica_esfera, 2)
        path = default_loops(_modelo("sphere"), count=1)[0]
        W0 = np.array([0.4, -0.9])
        simples = parallel_transport(campo, None, path, W0)[-1].W
        dobro = parallel_transport(campo, None, path, 2 * W0)[-1].W
        np.testing.assert_allclose(dobro, 2 * simples, rtol=1e-15, atol=0.0)

    def test_ida_e_volta(self) -> None:
        campo = levi_civita_field(_metrica_esfera, 2)
        path = BasePath.polyline([[0.3, 0.8], [1.1, 1.4], [0.6, 2.1]])
        Phi = transport_matrix(campo, path.then(path.reversed()), tol=1e-11)
        np.testing.assert_allclose(Phi, np.eye(2), atol=1e-8)

    def test_propagador_exige_campo_independente_de_y(self) -> None:
        m = _modelo("sphere")
        with self.assertRaises(FinslerError):
            transport_matrix(chern_field(m), BasePath.polyline([[0.3, 0.8], [1.1, 1.4]]))


class InvarianceProbeTests(unittest.TestCase):
    def test_esfera_levi_civita(self) -> None:
        m = _modelo("sphere")
        path = default_loops(m, count=1)[0]
        probe = indicatrix_invariance_probe(m, levi_civita_field(_metrica_esfera, 2), path.start, path, 24)
        self.assertLess(probe.deviation, 1e-6)
        self.assertEqual(probe.nodes, 24)

    def test_randers_paralelo_com_media(self) -> None:
        m = _modelo("randers_s2xs1")
        path = default_loops(m, count=1)[0]
        probe = indicatrix_invariance_probe(m, averaged_field(m, 8), path.start, path, 8)
        self.assertLess(probe.deviation, 1e-5)

    def test_randers_nao_paralelo_em_segmento(self) -> None:
        m = _modelo("randers_nonparallel")
        x = [1.0, 1.2, 0.0]
        path = BasePath.polyline([x, [1.0, 1.2, math.pi / 2]])
        probe = indicatrix_invariance_probe(m, averaged_field(m, 8), x, path, 8)
        self.assertGreater(probe.deviation, 1e-3)

    def test_caminho_fora_do_ponto(self) -> None:
        m = _modelo("sphere")
        path = BasePath.polyline([[0.3, 0.8], [1.1, 1.4]])
        with self.assertRaises(FinslerError):
            indicatrix_invariance_probe(m, levi_civita_field(_metrica_esfera, 2), [0.5, 0.8], path, 8)


class ComparisonTests(unittest.TestCase):
    def test_tensor_diferenca(self) -> None:
        m = _modelo("sphere")
        p = SlitPoint([0.4, 1.2], [0.6, -0.3])
        B, S, A = difference_tensor(chern_field(m), chern_field(m), p)
        self.assertEqual(float(np.max(np.abs(B))), 0.0)
        B, S, A = difference_tensor(chern_field(m), averaged_field(m, 8), p)
        self.assertLess(float(np.max(np.abs(A))), 1e-10)
        self.assertLess(float(np.max(np.abs(S))), 1e-10)
        np.testing.assert_allclose(B, S + A, atol=1e-15)

    def test_campos_identicos_sao_equivalentes(self) -> None:
        m = _modelo("sphere")
        report = geodesic_equivalence_probe(chern_field(m), chern_field(m), trials=2)
        self.assertEqual(report.separation, 0.0)
        self.assertEqual(report.trials, 2)

    def test_levi_civita_contra_plano(self) -> None:
        m = _modelo("sphere")
        report = geodesic_equivalence_probe(
            levi_civita_field(_metrica_esfera, 2), flat_field(2), trials=4, m=m
        )
        self.assertGreater(report.separation, 1e-2)
        self.assertFalse(report.equivalent)

    def test_chern_e_media_divergem_em_randers_nao_paralelo(self) -> None:
        m = _modelo("randers_nonparallel")
        report = geodesic_equivalence_probe(chern_field(m), averaged_field(m, 6), trials=3, m=m)
        self.assertGreater(report.separation, 1e-3)
        self.assertFalse(report.equivalent)

    def test_sem_modelo_para_amostrar(self) -> None:
        with self.assertRaises(FinslerError):
            geodesic_equivalence_probe(flat_field(2), flat_field(2), trials=1)


class ReversibilityTests(unittest.TestCase):
    def test_esfera_reversivel(self) -> None:
        report = reversibility_probe(_modelo("sphere"), trials=3)
        self.assertLess(report.return_gap, 1e-6)
        self.assertLess(report.norm_defect, 1e-12)

    def test_plano(self) -> None:
        report = reversibility_probe(_modelo("euclidean"), trials=2)
        self.assertLess(report.return_gap, 1e-12)
        self.assertEqual(report.norm_defect, 0.0)

    def test_randers_nao_reversivel(self) -> None:
        report = reversibility_probe(_modelo("randers_s2xs1"), trials=3)
        self.assertGreater(report.norm_defect, 1e-3)

    def test_modelo_y_local(self) -> None:
        with self.assertRaises(FinslerError):
            reversibility_probe(_modelo("berwald_rund"), trials=1)


if __name__ == "__main__":
    unittest.main()
