#!/usr/bin/env python3
"""Script para classificar os modelos de `modelos/` e imprimir a tabela de taxonomia."""

import sys
from pathlib import Path

# Adicionar src ao path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from finsler_lab.lab import FinslerLab

COLUNAS = ("riemannian", "berwald", "landsberg", "locally_minkowski")
ROTULOS = {"yes": "sim", "no": "não", "inconclusive": "?"}


def main() -> int:
    print("=" * 70)
    print("TAXONOMIA DOS MODELOS INCLUÍDOS")
    print("=" * 70)

    lab = FinslerLab()
    pasta = Path(__file__).parent.parent / "modelos"
    linhas = []
    for arquivo in sorted(pasta.glob("*.json")):
        modelo = lab.load_model(arquivo)
        relatorio = lab.classify(modelo, points=10, directions=8)
        linhas.append((modelo.name, [ROTULOS[relatorio.verdicts[c]] for c in COLUNAS]))
        print(f"[OK] {modelo.name}")

    print()
    print("| Modelo | " + " | ".join(COLUNAS) + " |")
    print("|---" * (len(COLUNAS) + 1) + "|")
    for nome, valores in linhas:
        print(f"| `{nome}` | " + " | ".join(valores) + " |")
    return 0


if __name__ == "__main__":
    sys.exit(main())
