import csv
import json
import math
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from finsler_lab import cli
from finsler_lab.catalog import check_homogeneity
from finsler_lab.config import load_settings
from finsler_lab.exceptions import FinslerConfigError, FinslerError, JetEvaluationError, SlitBundleError
from finsler_lab.options import build_run_config, parse_cli_args, parse_slit_point, parse_vector

MODELOS = Path(__file__).resolve().parents[1] / "modelos"


class CliTests(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)
        self._env = patch.dict(os.environ, {"FINSLER_DATA_DIR": str(self.dir / "saida"), "FINSLER_THREADS": "1"})
        self._env.start()

    def tearDown(self) -> None:
        self._env.stop()
        self._tmp.cleanup()

    def _modelo_temporario(self, dados: dict) -> Path:
        path = self.dir / "modelo.json"
        path.write_text(json.dumps(dados), encoding="utf-8")
        return path

    def _classificar(self, saida: Path, *extra: str) -> int:
        argv = ["classify", "--model", str(MODELOS / "euclidean.json"), "--points", "3", "--samples", "4"]
        return cli.run(argv + ["--quad-order", "8", "--out", str(saida), *extra])

    def test_classify_euclidiano(self) -> None:
        saida = self.dir / "rel.json"
        self.assertEqual(self._classificar(saida), cli.EXIT_OK)
        dados = json.loads(saida.read_text(encoding="utf-8"))
        self.assertEqual(dados["verdicts"]["locally_minkowski"], "yes")
        self.assertEqual(dados["model"], "euclidean")

    def test_execucoes_repetidas_identicas(self) -> None:
        a, b = self.dir / "a.json", self.dir / "b.json"
        self.assertEqual(self._classificar(a), cli.EXIT_OK)
        self.assertEqual(self._classificar(b), cli.EXIT_OK)
        self.assertEqual(a.read_bytes(), b.read_bytes())

    def test_classify_com_planilha(self) -> None:
        planilha = self.dir / "rel.xlsx"
        self.assertEqual(self._classificar(self.dir / "rel.json", "--xlsx", str(planilha)), cli.EXIT_OK)
        self.assertTrue(planilha.exists())

    def test_portao_de_homogeneidade(self) -> None:
        path = self._modelo_temporario({"family": "custom", "dim": 2, "params": {"F": "y[0]**2 + y[1]**2"}})
        self.assertEqual(cli.run(["classify", "--model", str(path)]), cli.EXIT_HOMOGENEITY)

    def test_gramatica_invalida(self) -> None:
        path = self._modelo_temporario({"family": "custom", "dim": 2, "params": {"F": "__import__('os')"}})
        self.assertEqual(cli.run(["classify", "--model", str(path)]), cli.EXIT_MODEL)

    def test_randers_fora_do_limite(self) -> None:
        dados = {"family": "randers", "dim": 2, "params": {"a": [["1", "0"], ["0", "1"]], "b": ["0", "1.5"]}}
        path = self._modelo_temporario(dados)
        self.assertEqual(cli.run(["classify", "--model", str(path)]), cli.EXIT_MODEL)

    def test_secao_nula(self) -> None:
        argv = ["tensors", "--model", str(MODELOS / "euclidean.json"), "0,0:0,0", "--out", str(self.dir / "t.json")]
        self.assertEqual(cli.run(argv), cli.EXIT_DOMAIN)

    def test_tensores(self) -> None:
        saida = self.dir / "t.json"
        argv = ["tensors", "--model", str(MODELOS / "sphere.json"), "0.4,1.2:0.6,-0.3", "--out", str(saida)]
        self.assertEqual(cli.run(argv), cli.EXIT_OK)
        dados = json.loads(saida.read_text(encoding="utf-8"))
        self.assertEqual(len(dados), 1)
        self.assertAlmostEqual(dados[0]["g"][0][0], math.sin(1.2) ** 2, places=12)

    def test_geodesica_na_esfera(self) -> None:
        saida = self.dir / "geo.csv"
        argv = [
            "geodesic", "--model", str(MODELOS / "sphere.json"), f"0,{math.pi / 2}", "1,0",
            "--t-end", str(2 * math.pi), "--out", str(saida),
        ]
        self.assertEqual(cli.run(argv), cli.EXIT_OK)
        with saida.open(encoding="utf-8", newline="") as handle:
            linhas = list(csv.reader(handle))
        self.assertEqual(linhas[0], ["t", "x0", "x1", "v0", "v1", "F"])
        ultima = [float(v) for v in linhas[-1]]
        self.assertAlmostEqual(ultima[1], 2 * math.pi, delta=1e-5)
        self.assertAlmostEqual(ultima[2], math.pi / 2, delta=1e-5)

    def test_saida_padrao_no_diretorio_de_dados(self) -> None:
        argv = ["geodesic", "--model", str(MODELOS / "euclidean.json"), "0,0", "1,0"]
        self.assertEqual(cli.run(argv), cli.EXIT_OK)
        self.assertTrue((self.dir / "saida" / "trajetorias" / "euclidean_geodesica.csv").exists())

    def test_transporte_exige_referencia(self) -> None:
        argv = ["transport", "--model", str(MODELOS / "slope.json"), "1,0", "0,0", "0.5,0.5", "--out", str(self.dir / "w.csv")]
        self.assertEqual(cli.run(argv), cli.EXIT_MODEL)

    def test_vetor_malformado(self) -> None:
        argv = ["geodesic", "--model", str(MODELOS / "euclidean.json"), "0,a", "1,0"]
        self.assertEqual(cli.run(argv), cli.EXIT_MODEL)

    def _comparar(self, seed: str) -> dict:
        saida = self.dir / f"cmp_{seed}.json"
        argv = [
            "compare", "--model", str(MODELOS / "euclidean.json"), "--field", "chern", "--field2", "flat",
            "--samples", "1", "--seed", seed, "--out", str(saida),
        ]
        self.assertEqual(cli.run(argv), cli.EXIT_OK)
        return json.loads(saida.read_text(encoding="utf-8"))

    def test_compare_respeita_semente(self) -> None:
        a, b = self._comparar("7"), self._comparar("8")
        xs_a = [d["x"] for d in a["difference"]]
        xs_b = [d["x"] for d in b["difference"]]
        self.assertEqual(len(xs_a), len(xs_b))
        self.assertNotEqual(xs_a, xs_b)
        self.assertEqual(self._comparar("7")["difference"], a["difference"])

    def test_semente_chega_ao_portao_de_homogeneidade(self) -> None:
        argv = ["tensors", "--model", str(MODELOS / "euclidean.json"), "0,0:1,0", "--seed", "11", "--out", str(self.dir / "t.json")]
        with patch("finsler_lab.lab.check_homogeneity", wraps=check_homogeneity) as gate:
            self.assertEqual(cli.run(argv), cli.EXIT_OK)
        self.assertEqual(gate.call_args.kwargs["seed"], 11)

    def test_erros_do_laboratorio_tem_codigo_de_dominio(self) -> None:
        argv = ["tensors", "--model", str(MODELOS / "euclidean.json"), "0,0:1,0", "--out", str(self.dir / "t.json")]
        for erro in (FinslerError("caminho não começa no ponto base"), JetEvaluationError("bloco d2F/dy2 não finito")):
            with self.subTest(erro=type(erro).__name__):
                with patch("finsler_lab.lab.FinslerLab.tensors", side_effect=erro):
                    self.assertEqual(cli.run(argv), cli.EXIT_DOMAIN)


class OptionsTests(unittest.TestCase):
    def test_vetor(self) -> None:
        self.assertEqual(parse_vector("1, 2.5,-3").tolist(), [1.0, 2.5, -3.0])
        with self.assertRaises(FinslerConfigError):
            parse_vector("")

    def test_ponto_do_fibrado(self) -> None:
        p = parse_slit_point("0,1:2,3")
        self.assertEqual(p.x.tolist(), [0.0, 1.0])
        self.assertEqual(p.y.tolist(), [2.0, 3.0])
        with self.assertRaises(FinslerConfigError):
            parse_slit_point("0,1")
        with self.assertRaises(SlitBundleError):
            parse_slit_point("0,1:0,0")

    def test_configuracao_de_execucao(self) -> None:
        args = parse_cli_args(
            ["transport", "--model", "m.json", "1,0", "0,0", "1,1", "--closed", "--reference", "0,1", "--tol", "1e-8"]
        )
        with patch.dict(os.environ, {}, clear=True):
            config = build_run_config(load_settings(), args)
        self.assertEqual(config.command, "transport")
        self.assertEqual(config.vectors, ["1,0"])
        self.assertEqual(config.path_vertices, ["0,0", "1,1"])
        self.assertTrue(config.closed)
        self.assertEqual(config.reference, "0,1")
        self.assertEqual(config.tol, 1e-8)
        self.assertEqual(config.quad_order, 32)
        self.assertEqual(config.field_name, "chern")

    def test_campo_desconhecido(self) -> None:
        with self.assertRaises(SystemExit):
            parse_cli_args(["geodesic", "--model", "m.json", "0,0", "1,0", "--field", "cartan"])


if __name__ == "__main__":
    unittest.main()
