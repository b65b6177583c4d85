# Pacote de testes do finsler-lab.
