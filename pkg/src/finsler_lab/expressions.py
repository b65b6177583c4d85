"""Gramática de expressões dos arquivos de modelo.

Aceita `+ - * / **`, `pow`, `sqrt`, `sin`, `cos`, `exp`, `log`, a constante `pi`,
números e coordenadas indexadas a partir de zero (`x[0]`, `y[1]`). A árvore é
validada com `ast` antes de ser entregue ao `sympy`, que gera a função `jax`.
"""

from __future__ import annotations

import ast
import logging
from typing import Callable, Sequence, Union

import jax.numpy as jnp
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr

from .exceptions import ExpressionSyntaxError, ModelDefinitionError

log = logging.getLogger(__name__)

ALLOWED_FUNCTIONS = {
    "sqrt": sp.sqrt,
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
    "log": sp.log,
    "pow": sp.Pow,
}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARY = (ast.UAdd, ast.USub)

Source = Union[str, int, float]


class _GrammarChecker(ast.NodeVisitor):
    def __init__(self, source: str, dim: int, indexed: Sequence[str], scalars: Sequence[str]) -> None:
        self.source = source
        self.dim = dim
        self.indexed = set(indexed)
        self.scalars = set(scalars) | {"pi"}

    def fail(self, node: ast.AST, message: str) -> None:
        raise ExpressionSyntaxError(
            message, self.source, getattr(node, "lineno", 1), getattr(node, "col_offset", 0) + 1
        )

    def generic_visit(self, node: ast.AST) -> None:
        self.fail(node, f"construção não permitida: {type(node).__name__}")

    def visit_Expression(self, node: ast.Expression) -> None:
        self.visit(node.body)

    def visit_BinOp(self, node: ast.BinOp) -> None:
        if not isinstance(node.op, _BINOPS):
            self.fail(node, f"operador não permitido: {type(node.op).__name__}")
        self.visit(node.left)
        self.visit(node.right)

    def visit_UnaryOp(self, node: ast.UnaryOp) -> None:
        if not isinstance(node.op, _UNARY):
            self.fail(node, f"operador não permitido: {type(node.op).__name__}")
        self.visit(node.operand)

    def visit_Constant(self, node: ast.Constant) -> None:
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            self.fail(node, f"constante não numérica: {node.value!r}")

    def visit_Name(self, node: ast.Name) -> None:
        if node.id in self.indexed:
            self.fail(node, f"'{node.id}' deve ser indexado, por exemplo {node.id}[0]")
        if node.id not in self.scalars:
            self.fail(node, f"nome desconhecido: '{node.id}'")

    def visit_Subscript(self, node: ast.Subscript) -> None:
        alvo = node.value
        if not isinstance(alvo, ast.Name) or alvo.id not in self.indexed:
            self.fail(node, "apenas coordenadas " + ", ".join(sorted(self.indexed)) + " podem ser indexadas")
        indice = node.slice
        if not isinstance(indice, ast.Constant) or isinstance(indice.value, bool) or not isinstance(indice.value, int):
            self.fail(node, "índice deve ser um inteiro literal")
        if not 0 <= indice.value < self.dim:
            self.fail(node, f"índice {indice.value} fora de 0..{self.dim - 1}")

    def visit_Call(self, node: ast.Call) -> None:
        if not isinstance(node.func, ast.Name) or node.func.id not in ALLOWED_FUNCTIONS:
            nome = getattr(node.func, "id", "?")
            self.fail(node, f"função não permitida: {nome}")
        if node.keywords:
            self.fail(node, "argumentos nomeados não são aceitos")
        esperado = 2 if node.func.id == "pow" else 1
        if len(node.args) != esperado:
            self.fail(node, f"{node.func.id} espera {esperado} argumento(s)")
        for arg in node.args:
            self.visit(arg)


def validate_expression(
    source: Source,
    dim: int,
    indexed: Sequence[str] = ("x", "y"),
    scalars: Sequence[str] = (),
) -> str:
    """Valida a expressão contra a gramática; devolve o texto normalizado."""
    texto = str(source).strip()
    if not texto:
        raise ExpressionSyntaxError("expressão vazia", texto)
    try:
        tree = ast.parse(texto, mode="eval")
    except SyntaxError as exc:
        raise ExpressionSyntaxError(exc.msg or "sintaxe inválida", texto, exc.lineno or 1, exc.offset or 1) from exc
    _GrammarChecker(texto, dim, indexed, scalars).visit(tree)
    return texto


def _symbols(dim: int) -> tuple[tuple[sp.Symbol, ...], tuple[sp.Symbol, ...]]:
    return sp.symbols(f"x_0:{dim}", real=True), sp.symbols(f"y_0:{dim}", real=True)


def parse_expression(source: Source, dim: int, indexed: Sequence[str] = ("x", "y")) -> sp.Expr:
    """Converte a expressão validada em árvore `sympy`."""
    texto = validate_expression(source, dim, indexed)
    xs, ys = _symbols(dim)
    local = {"x": xs, "y": ys, "pi": sp.pi, **ALLOWED_FUNCTIONS}
    return sp.sympify(parse_expr(texto, local_dict=local, evaluate=True))


def compile_field(source: Source, dim: int, indexed: Sequence[str] = ("x", "y")) -> Callable:
    """Campo escalar f(x, y) traçável por `jax` a partir de uma expressão."""
    expr = parse_expression(source, dim, indexed)
    xs, ys = _symbols(dim)
    fn = sp.lambdify([list(xs), list(ys)], expr, modules="jax")
    log.debug("Expressão compilada: %s", expr)

    def field(x, y):
        return jnp.asarray(fn(x, y), dtype=jnp.float64)

    return field


def compile_scalar_function(source: Source, name: str = "xi") -> Callable:
    """Função de uma variável escalar (por exemplo ψ(ξ))."""
    texto = validate_expression(source, 1, indexed=(), scalars=(name,))
    sym = sp.Symbol(name, real=True)
    expr = sp.sympify(parse_expr(texto, local_dict={name: sym, "pi": sp.pi, **ALLOWED_FUNCTIONS}))
    fn = sp.lambdify([sym], expr, modules="jax")
    return lambda s: jnp.asarray(fn(s), dtype=jnp.float64)


def _entries(matrix: object, dim: int, what: str) -> list[list[Source]]:
    if not isinstance(matrix, (list, tuple)) or len(matrix) != dim:
        raise ModelDefinitionError(f"{what} deve ser uma matriz {dim}×{dim}")
    rows = []
    for row in matrix:
        if not isinstance(row, (list, tuple)) or len(row) != dim:
            raise ModelDefinitionError(f"{what} deve ser uma matriz {dim}×{dim}")
        rows.append(list(row))
    return rows


def compile_matrix_field(matrix: object, dim: int, indexed: Sequence[str], what: str = "matriz") -> Callable:
    """Matriz de expressões -> campo (x, y) -> array n×n simetrizado."""
    rows = _entries(matrix, dim, what)
    compiled = [[compile_field(entry, dim, indexed) for entry in row] for row in rows]

    def field(x, y):
        m = jnp.stack([jnp.stack([c(x, y) for c in row]) for row in compiled])
        return 0.5 * (m + m.T)

    return field


def compile_vector_field(vector: object, dim: int, indexed: Sequence[str], what: str = "vetor") -> Callable:
    """Vetor de expressões -> campo (x, y) -> array de tamanho n."""
    if not isinstance(vector, (list, tuple)) or len(vector) != dim:
        raise ModelDefinitionError(f"{what} deve ter {dim} componentes")
    compiled = [compile_field(entry, dim, indexed) for entry in vector]
    return lambda x, y: jnp.stack([c(x, y) for c in compiled])

