"""Símbolos formais, conexão não linear, derivadas adaptadas e as conexões de Chern, Berwald e Cartan."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from .catalog import FinslerModel, ensure_positive_definite, fundamental_tensor
from .exceptions import FinslerError
from .geometry import GeometryKernels, levi_civita_symbols
from .jets import eval_jet
from .models import NonlinearConnectionValue, SlitPoint, StructureReport

log = logging.getLogger(__name__)

Coefficients = Callable[[np.ndarray, Optional[np.ndarray]], np.ndarray]


@dataclass(frozen=True, eq=False)
class ConnectionField:
    """Coeficientes Γ^i_jk como função de (x, y), ou de x quando independe de y."""

    name: str
    dim: int
    coefficients: Coefficients
    y_independent: bool
    torsion_free: bool
    model: Optional[FinslerModel] = None

    def at(self, x: np.ndarray, y: Optional[np.ndarray] = None) -> np.ndarray:
        if y is None and not self.y_independent:
            raise FinslerError(f"Campo {self.name} depende de y: informe o vetor de referência.")
        gamma = np.asarray(self.coefficients(np.asarray(x, dtype=float), None if y is None else np.asarray(y, dtype=float)))
        if not np.all(np.isfinite(gamma)):
            raise FinslerError(f"Coeficientes não finitos de {self.name} em x = {np.asarray(x).tolist()}")
        return gamma

    def __call__(self, p: SlitPoint) -> np.ndarray:
        return self.at(p.x, p.y)


def _checked(m: FinslerModel, p: SlitPoint) -> Tuple[SlitPoint, jax.Array, jax.Array]:
    p = fundamental_tensor(m, p).point
    return p, jnp.asarray(p.x), jnp.asarray(p.y)


def formal_christoffel(m: FinslerModel, p: SlitPoint) -> np.ndarray:
    """γ^i_jk = ½ g^is(∂g_sj/∂x^k − ∂g_jk/∂x^s + ∂g_sk/∂x^j)."""
    p, x, y = _checked(m, p)
    return np.asarray(m.kernels.compiled("formal_christoffel")(x, y))


def nonlinear_connection(m: FinslerModel, p: SlitPoint) -> NonlinearConnectionValue:
    """N^i_j = γ^i_jk y^k − A^i_jk γ^k_rs y^r y^s / F."""
    p, x, y = _checked(m, p)
    return NonlinearConnectionValue(N=np.asarray(m.kernels.compiled("nonlinear")(x, y)), point=p)


def horizontal_derivative(m: FinslerModel, f: Callable, p: SlitPoint, k: int) -> float:
    """δf/δx^k = ∂f/∂x^k − N^i_k ∂f/∂y^i."""
    if not 0 <= k < m.dim:
        raise IndexError(f"Índice {k} fora de 0..{m.dim - 1}")
    N = nonlinear_connection(m, p).N
    jet = eval_jet(f, p)
    return float(jet.dx[k] - N[:, k] @ jet.dy)


def chern_coefficients(m: FinslerModel, p: SlitPoint) -> np.ndarray:
    """Γ^l_jk = ½ g^ls(δg_sj/δx^k + δg_sk/δx^j − δg_jk/δx^s)."""
    p, x, y = _checked(m, p)
    return np.asarray(m.kernels.compiled("chern")(x, y))


def berwald_coefficients(m: FinslerModel, p: SlitPoint) -> np.ndarray:
    """G^i_jk = ∂N^i_j/∂y^k."""
    p, x, y = _checked(m, p)
    return np.asarray(m.kernels.compiled("berwald")(x, y))


def cartan_connection_coefficients(m: FinslerModel, p: SlitPoint) -> Tuple[np.ndarray, np.ndarray]:
    """Parte horizontal (Γ de Chern) e vertical (A^k_ij) da conexão de Cartan."""
    p, x, y = _checked(m, p)
    horizontal = np.asarray(m.kernels.compiled("chern")(x, y))
    ginv = np.asarray(m.kernels.compiled("inverse_metric")(x, y))
    A = np.asarray(m.kernels.compiled("cartan")(x, y))
    return horizontal, np.einsum("kl,lij->kij", ginv, A)


def verify_structure_equations(
    m: FinslerModel, samples: int = 20, seed: int = 42, directions: int = 3
) -> StructureReport:
    """Resíduos de compatibilidade horizontal, torção e compatibilidade vertical.

    Cada ponto base é avaliado em `directions` direções.
    """
    if samples < 1 or directions < 2:
        raise ValueError("samples deve ser ≥ 1 e directions ≥ 2")
    k = m.kernels
    dg_h = k.compiled("horizontal_metric_derivative")
    gamma_fn = k.compiled("chern")
    metric = k.compiled("metric")
    cartan = k.compiled("cartan")
    horizontal = torsion = vertical = 0.0
    pontos = m.sample_slit_points(samples, directions, seed) or m.sample_slit_points(samples, 4 * directions, seed)
    for p in pontos:
        ensure_positive_definite(np.asarray(metric(jnp.asarray(p.x), jnp.asarray(p.y))), p)
        x, y = jnp.asarray(p.x), jnp.asarray(p.y)
        dg = np.asarray(dg_h(x, y))
        gamma = np.asarray(gamma_fn(x, y))
        g = np.asarray(metric(x, y))
        compat = dg - np.einsum("mj,mik->ijk", g, gamma) - np.einsum("im,mjk->ijk", g, gamma)
        horizontal = max(horizontal, float(np.max(np.abs(compat))))
        torsion = max(torsion, float(np.max(np.abs(gamma - np.swapaxes(gamma, 1, 2)))))
        jet = eval_jet(k.metric, p)
        F = m.evaluate(p.x, p.y)
        vertical = max(vertical, float(np.max(np.abs(F * jet.dy - 2.0 * np.asarray(cartan(x, y))))))
    log.info(
        "Equações de estrutura em %s: compat.=%.2e torção=%.2e vertical=%.2e (%s pontos)",
        m.name, horizontal, torsion, vertical, len(pontos),
    )
    return StructureReport(horizontal, torsion, vertical, len(pontos))


# --- campos de conexão -----------------------------------------------------


def chern_field(m: FinslerModel) -> ConnectionField:
    fn = m.kernels.compiled("chern")
    return ConnectionField(
        name="chern",
        dim=m.dim,
        coefficients=lambda x, y: fn(jnp.asarray(x), jnp.asarray(y)),
        y_independent=False,
        torsion_free=True,
        model=m,
    )


def berwald_field(m: FinslerModel) -> ConnectionField:
    fn = m.kernels.compiled("berwald")
    return ConnectionField(
        name="berwald",
        dim=m.dim,
        coefficients=lambda x, y: fn(jnp.asarray(x), jnp.asarray(y)),
        y_independent=False,
        torsion_free=True,
        model=m,
    )


def levi_civita_field(metric: Callable[[jax.Array], jax.Array], dim: int, name: str = "levi-civita") -> ConnectionField:
    """Conexão de Levi-Civita de um campo métrico h(x)."""
    fn = jax.jit(lambda x: levi_civita_symbols(metric, x))
    return ConnectionField(
        name=name,
        dim=dim,
        coefficients=lambda x, y=None: fn(jnp.asarray(x)),
        y_independent=True,
        torsion_free=True,
    )


def flat_field(dim: int) -> ConnectionField:
    zeros = np.zeros((dim, dim, dim))
    return ConnectionField(
        name="flat",
        dim=dim,
        coefficients=lambda x, y=None: zeros,
        y_independent=True,
        torsion_free=True,
    )


def field_nonlinear(field: ConnectionField) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """N^i_k(x, u) usado no levantamento horizontal da referência."""
    if field.model is None:
        raise FinslerError(f"Campo {field.name} não carrega um modelo para o levantamento horizontal.")
    kernels: GeometryKernels = field.model.kernels
    fn = kernels.compiled("nonlinear")
    return lambda x, u: np.asarray(fn(jnp.asarray(x), jnp.asarray(u)))
