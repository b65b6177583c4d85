"""Fórmulas traçáveis (jax.numpy) da geometria de uma função de Finsler.

Convenções de índices dos arrays:
    g[i, j]            g_ij
    dg_dx[i, j, k]     ∂g_ij/∂x^k           dg_dy[i, j, k]   ∂g_ij/∂y^k
    gamma[i, j, k]     γ^i_jk               N[i, j]          N^i_j
    chern[i, j, k]     Γ^i_jk               berwald[i, j, k] G^i_jk = ∂N^i_j/∂y^k
    R[i, j, k, l]      R^i_jkl              P[i, j, k, l]    P^i_jkl

R^i_jkl = δΓ^i_jl/δx^k − δΓ^i_jk/δx^l + Γ^i_hk Γ^h_jl − Γ^i_hl Γ^h_jk, e o
numerador da curvatura de bandeira é R_ijkl V^i y^j V^k y^l com R_ijkl = g_im R^m_jkl.
"""

from __future__ import annotations

import logging
import threading
from typing import Callable, Dict, Tuple

import jax
import jax.numpy as jnp
from jax.scipy.linalg import cho_factor, cho_solve

from .jets import adaptive_step, richardson_jacobian

log = logging.getLogger(__name__)

FLAG_CONTRACTION = "R_ijkl V^i y^j V^k y^l, R_ijkl = g_im R^m_jkl"


def _sym12(a: jax.Array) -> jax.Array:
    return 0.5 * (a + jnp.swapaxes(a, 1, 2))


def christoffel_from_derivatives(ginv: jax.Array, dg: jax.Array) -> jax.Array:
    """½ g^is (d_k g_sj + d_j g_sk − d_s g_jk) para qualquer derivada d (parcial ou adaptada)."""
    term = dg + jnp.swapaxes(dg, 1, 2) - jnp.transpose(dg, (2, 0, 1))
    return _sym12(0.5 * jnp.einsum("is,sjk->ijk", ginv, term))


def spd_inverse(g: jax.Array) -> jax.Array:
    factor = cho_factor(g, lower=True)
    inv = cho_solve(factor, jnp.eye(g.shape[0], dtype=g.dtype))
    return 0.5 * (inv + inv.T)


def curvature_from_derivatives(gamma: jax.Array, dgamma: jax.Array) -> jax.Array:
    """R^i_jkl a partir de Γ e de dΓ[i, j, k, l] = d_l Γ^i_jk."""
    quad = jnp.einsum("ihk,hjl->ijkl", gamma, gamma) - jnp.einsum("ihl,hjk->ijkl", gamma, gamma)
    return jnp.swapaxes(dgamma, 2, 3) - dgamma + quad


def levi_civita_symbols(h: Callable[[jax.Array], jax.Array], x: jax.Array) -> jax.Array:
    """Símbolos de Christoffel de um campo métrico h(x) (sem dependência em y)."""
    hx = 0.5 * (h(x) + h(x).T)
    dh = jax.jacfwd(lambda z: 0.5 * (h(z) + h(z).T))(x)
    return christoffel_from_derivatives(spd_inverse(hx), dh)


def classical_curvature(gamma_fn: Callable[[jax.Array], jax.Array], x: jax.Array) -> jax.Array:
    """Tensor de Riemann de uma conexão afim Γ(x), derivadas por Richardson em x."""
    dgamma = richardson_jacobian(gamma_fn, x, adaptive_step(x))
    return curvature_from_derivatives(gamma_fn(x), dgamma)


class GeometryKernels:
    """Tensores de Finsler de F(x, y) como funções traçáveis e versões compiladas."""

    def __init__(self, F: Callable[[jax.Array, jax.Array], jax.Array], dim: int) -> None:
        self.F = F
        self.dim = dim
        self._compiled: Dict[Tuple[str, str], Callable] = {}
        self._lock = threading.Lock()

    # --- tensores métricos -------------------------------------------------

    def lagrangian(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return 0.5 * self.F(x, y) ** 2

    def metric(self, x: jax.Array, y: jax.Array) -> jax.Array:
        h = jax.jacfwd(jax.jacfwd(self.lagrangian, argnums=1), argnums=1)(x, y)
        return 0.5 * (h + h.T)

    def metric_dy(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return jax.jacfwd(self.metric, argnums=1)(x, y)

    def metric_dx(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return jax.jacfwd(self.metric, argnums=0)(x, y)

    def inverse_metric(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return spd_inverse(self.metric(x, y))

    def cartan(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return 0.5 * self.F(x, y) * self.metric_dy(x, y)

    def cartan_norm(self, x: jax.Array, y: jax.Array) -> jax.Array:
        ginv = self.inverse_metric(x, y)
        A = self.cartan(x, y)
        return jnp.sqrt(jnp.abs(jnp.einsum("il,jm,kn,ijk,lmn->", ginv, ginv, ginv, A, A)))

    # --- conexões ----------------------------------------------------------

    def formal_christoffel(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return christoffel_from_derivatives(self.inverse_metric(x, y), self.metric_dx(x, y))

    def nonlinear(self, x: jax.Array, y: jax.Array) -> jax.Array:
        ginv = self.inverse_metric(x, y)
        gamma = christoffel_from_derivatives(ginv, self.metric_dx(x, y))
        A_up = jnp.einsum("il,ljk->ijk", ginv, self.cartan(x, y))
        spray = jnp.einsum("krs,r,s->k", gamma, y, y)
        return jnp.einsum("ijk,k->ij", gamma, y) - jnp.einsum("ijk,k->ij", A_up, spray) / self.F(x, y)

    def horizontal_metric_derivative(self, x: jax.Array, y: jax.Array) -> jax.Array:
        """δg_ij/δx^k = ∂g_ij/∂x^k − N^m_k ∂g_ij/∂y^m."""
        N = self.nonlinear(x, y)
        return self.metric_dx(x, y) - jnp.einsum("mk,ijm->ijk", N, self.metric_dy(x, y))

    def chern(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return christoffel_from_derivatives(self.inverse_metric(x, y), self.horizontal_metric_derivative(x, y))

    def berwald(self, x: jax.Array, y: jax.Array) -> jax.Array:
        return jax.jacfwd(self.nonlinear, argnums=1)(x, y)

    def horizontal_gradient(self, f: Callable, x: jax.Array, y: jax.Array) -> jax.Array:
        """δf/δx^k para um campo escalar f(x, y)."""
        fx = jax.grad(f, argnums=0)(x, y)
        fy = jax.grad(f, argnums=1)(x, y)
        return fx - jnp.einsum("ik,i->k", self.nonlinear(x, y), fy)

    # --- curvaturas --------------------------------------------------------

    def curvature(self, x: jax.Array, y: jax.Array) -> Tuple[jax.Array, jax.Array]:
        """(R, P) com derivadas de Γ por Richardson em x e em y."""
        gamma = self.chern(x, y)
        d_x = richardson_jacobian(lambda z: self.chern(z, y), x, adaptive_step(x))
        d_y = richardson_jacobian(lambda v: self.chern(x, v), y, adaptive_step(y))
        N = self.nonlinear(x, y)
        delta = d_x - jnp.einsum("ml,ijkm->ijkl", N, d_y)
        R = curvature_from_derivatives(gamma, delta)
        P = -self.F(x, y) * d_y
        return R, P

    def landsberg(self, x: jax.Array, y: jax.Array) -> jax.Array:
        """Ȧ_ikl = −l^j g_jm P^m_ikl."""
        _, P = self.curvature(x, y)
        return landsberg_from_hv(P, self.metric(x, y), y, self.F(x, y))

    def diagnostics(self, x: jax.Array, y: jax.Array) -> Dict[str, jax.Array]:
        """Tudo o que o classificador lê num ponto, numa única passagem."""
        R, P = self.curvature(x, y)
        g = self.metric(x, y)
        F = self.F(x, y)
        return {
            "F": F,
            "g": g,
            "A": self.cartan(x, y),
            "chern": self.chern(x, y),
            "R": R,
            "P": P,
            "landsberg": landsberg_from_hv(P, g, y, F),
        }

    def flag_terms(self, x: jax.Array, y: jax.Array, V: jax.Array) -> Tuple[jax.Array, jax.Array]:
        R, _ = self.curvature(x, y)
        g = self.metric(x, y)
        R_low = jnp.einsum("im,mjkl->ijkl", g, R)
        numerator = jnp.einsum("ijkl,i,j,k,l->", R_low, V, y, V, y)
        gVV, gyy, gyV = V @ g @ V, y @ g @ y, y @ g @ V
        return numerator, gVV * gyy - gyV**2

    # --- compilação --------------------------------------------------------

    def compiled(self, name: str, batch: str = "point") -> Callable:
        """Versão `jit` de um kernel; `batch` em {point, directions, pairs}."""
        key = (name, batch)
        with self._lock:
            fn = self._compiled.get(key)
            if fn is None:
                fn = getattr(self, name)
                if batch == "directions":
                    fn = jax.vmap(fn, in_axes=(None, 0))
                elif batch == "pairs":
                    fn = jax.vmap(fn)
                elif batch != "point":
                    raise ValueError(f"Modo de lote desconhecido: {batch}")
                fn = jax.jit(fn)
                self._compiled[key] = fn
                log.debug("Kernel %s/%s compilado (dim=%s).", name, batch, self.dim)
        return fn


def landsberg_from_hv(P: jax.Array, g: jax.Array, y: jax.Array, F: jax.Array) -> jax.Array:
    lower = jnp.einsum("jm,mikl->jikl", g, P)
    return -jnp.einsum("j,jikl->ikl", y / F, lower)
