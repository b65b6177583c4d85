"""Script simples para executar a CLI do laboratório a partir da raiz do projeto."""

from finsler_lab.cli import main


if __name__ == "__main__":
    main()
