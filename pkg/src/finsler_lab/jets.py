"""Jatos de segunda ordem no fibrado tangente sem a seção nula.

As derivadas saem de aninhamento de `jax.jacfwd` (modo direto, números duais
truncados, uma camada por ordem); `fd_check` é o oráculo por diferenças
centrais usado em testes e diagnósticos.
"""

from __future__ import annotations

import functools
import logging
from typing import Callable

import jax

jax.config.update("jax_enable_x64", True)

import jax.numpy as jnp  # noqa: E402
import numpy as np  # noqa: E402

from .exceptions import JetEvaluationError, SlitBundleError  # noqa: E402
from .models import Jet2Value, SlitPoint  # noqa: E402

log = logging.getLogger(__name__)

Field = Callable[[jax.Array, jax.Array], jax.Array]

JET_BLOCKS = ("value", "dy", "dyy", "dx", "dxy")


def jet_blocks(f: Field) -> Callable[[jax.Array, jax.Array], tuple]:
    """Monta a função traçável (x, y) -> (f, ∂_y f, ∂_yy f, ∂_x f, ∂_x∂_y f).

    Para campos com valores em arrays, os índices de derivada ficam nos
    últimos eixos; `dxy[..., i, j]` = ∂²f/∂x^i∂y^j.
    """
    grad_y = jax.jacfwd(f, argnums=1)
    hess_y = jax.jacfwd(grad_y, argnums=1)
    grad_x = jax.jacfwd(f, argnums=0)
    mixed = jax.jacfwd(grad_y, argnums=0)

    def blocks(x: jax.Array, y: jax.Array) -> tuple:
        return f(x, y), grad_y(x, y), hess_y(x, y), grad_x(x, y), jnp.swapaxes(mixed(x, y), -1, -2)

    return blocks


@functools.lru_cache(maxsize=128)
def _compiled_jet(f: Field) -> Callable:
    return jax.jit(jet_blocks(f))


def _check_finite(name: str, block: np.ndarray, p: SlitPoint) -> None:
    if np.all(np.isfinite(block)):
        return
    indice = tuple(int(i) for i in np.argwhere(~np.isfinite(block))[0])
    raise JetEvaluationError(f"Valor não finito em {name}{list(indice)} no ponto {p}")


def eval_jet(f: Field, p: SlitPoint) -> Jet2Value:
    """Avalia f e suas derivadas de ordem ≤ 2 (y, x e mista) em p."""
    if not isinstance(p, SlitPoint):
        p = SlitPoint(*p)
    blocks = [np.asarray(b, dtype=float) for b in _compiled_jet(f)(jnp.asarray(p.x), jnp.asarray(p.y))]
    for name, block in zip(JET_BLOCKS, blocks):
        _check_finite(name, block, p)
    return Jet2Value(*blocks)


def _stencil_guard(y: np.ndarray, h: float) -> None:
    if np.all(np.abs(y) <= 2.0 * h):
        raise SlitBundleError(f"Estêncil de passo {h:g} sai do fibrado (y = {y.tolist()}).")


def fd_check(f: Field, p: SlitPoint, h: float) -> Jet2Value:
    """Estimativas por diferenças centrais dos mesmos blocos de `eval_jet`."""
    if h <= 0:
        raise ValueError("Passo h deve ser positivo.")
    if not isinstance(p, SlitPoint):
        p = SlitPoint(*p)
    _stencil_guard(p.y, h)
    fj = jax.jit(f)
    x, y = p.x, p.y
    n = p.dim
    eye = np.eye(n)

    def ev(xx: np.ndarray, yy: np.ndarray) -> np.ndarray:
        return np.asarray(fj(jnp.asarray(xx), jnp.asarray(yy)), dtype=float)

    value = ev(x, y)
    dy = np.stack([(ev(x, y + h * e) - ev(x, y - h * e)) / (2 * h) for e in eye], axis=-1)
    dx = np.stack([(ev(x + h * e, y) - ev(x - h * e, y)) / (2 * h) for e in eye], axis=-1)
    dyy = np.empty(value.shape + (n, n))
    dxy = np.empty(value.shape + (n, n))
    for i in range(n):
        for j in range(n):
            ei, ej = eye[i], eye[j]
            dyy[..., i, j] = (
                ev(x, y + h * ei + h * ej) - ev(x, y + h * ei - h * ej)
                - ev(x, y - h * ei + h * ej) + ev(x, y - h * ei - h * ej)
            ) / (4 * h * h)
            dxy[..., i, j] = (
                ev(x + h * ei, y + h * ej) - ev(x + h * ei, y - h * ej)
                - ev(x - h * ei, y + h * ej) + ev(x - h * ei, y - h * ej)
            ) / (4 * h * h)
    return Jet2Value(value, dy, dyy, dx, dxy)


def adaptive_step(z: jax.Array) -> jax.Array:
    """Passo 1e-5·(1+|z|) das diferenças de Richardson."""
    return 1e-5 * (1.0 + jnp.linalg.norm(z))


def richardson_jacobian(fn: Callable[[jax.Array], jax.Array], z: jax.Array, h: jax.Array) -> jax.Array:
    """Derivada central com extrapolação de Richardson; o índice novo fica no último eixo.

    Traçável (jit/vmap), usada nas derivadas adaptadas de Γ e de ⟨Γ⟩.
    """
    eye = jnp.eye(z.shape[0], dtype=z.dtype)

    def central(step: jax.Array) -> jax.Array:
        plus = jax.vmap(lambda e: fn(z + step * e))(eye)
        minus = jax.vmap(lambda e: fn(z - step * e))(eye)
        return (plus - minus) / (2.0 * step)

    d = (4.0 * central(0.5 * h) - central(h)) / 3.0
    return jnp.moveaxis(d, 0, -1)
