"""Quadratura sobre a indicatriz e médias de conexão, métrica e curvatura.

Os nós são y(θ) = u(θ)/F(x, u(θ)) sobre direções u da esfera unitária e os
pesos carregam √det h(θ), com h o pullback de g(x, y(θ)) pela parametrização
angular. Em dimensão 2 a regra é o trapézio periódico (ou Gauss–Legendre no
cone); em dimensão ≥ 3, Gauss–Legendre nos ângulos polares × trapézio no azimute.
"""

from __future__ import annotations

import functools
import logging
import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from .catalog import FinslerModel, ensure_positive_definite
from .connections import ConnectionField
from .exceptions import ConeRequired, FinslerError, ModelDefinitionError, StrongConvexityViolation
from .geometry import GeometryKernels, classical_curvature
from .jets import adaptive_step, richardson_jacobian
from .models import AveragedConnection, IndicatrixQuadrature, SlitPoint

log = logging.getLogger(__name__)

SOURCES = ("chern", "berwald")
INTERPOLATION_SAMPLES = 20

Cone = Optional[Tuple[float, float]]


def reference_rule(dim: int, order: int, cone: Cone = None) -> Tuple[np.ndarray, np.ndarray]:
    """Ângulos (M, n−1) e pesos (M,) da regra angular de referência."""
    if order < 2:
        raise ValueError("Ordem da quadratura deve ser ≥ 2.")
    if dim == 2:
        if cone is not None:
            nodes, weights = np.polynomial.legendre.leggauss(order)
            half = 0.5 * (cone[1] - cone[0])
            return (cone[0] + half * (nodes + 1.0))[:, None], half * weights
        theta = 2.0 * math.pi * np.arange(order) / order
        return theta[:, None], np.full(order, 2.0 * math.pi / order)
    if cone is not None:
        raise ConeRequired("Cones de direções só são suportados em dimensão 2.")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    polar = 0.5 * math.pi * (nodes + 1.0)
    polar_w = 0.5 * math.pi * weights
    azimuth = 2.0 * math.pi * np.arange(2 * order) / (2 * order)
    azimuth_w = np.full(2 * order, 2.0 * math.pi / (2 * order))
    grids = np.meshgrid(*([polar] * (dim - 2) + [azimuth]), indexing="ij")
    wgrids = np.meshgrid(*([polar_w] * (dim - 2) + [azimuth_w]), indexing="ij")
    angles = np.stack([g.reshape(-1) for g in grids], axis=1)
    return angles, np.prod(np.stack([w.reshape(-1) for w in wgrids], axis=1), axis=1)


def direction(angles: jax.Array) -> jax.Array:
    """Coordenadas hiperesféricas: (cos a₀, sen a₀ cos a₁, ..., Π sen · sen a_last)."""
    comps = []
    s = jnp.asarray(1.0, dtype=angles.dtype)
    for a in angles[:-1]:
        comps.append(s * jnp.cos(a))
        s = s * jnp.sin(a)
    comps.extend([s * jnp.cos(angles[-1]), s * jnp.sin(angles[-1])])
    return jnp.stack(comps)


class IndicatrixRule:
    """Regra de quadratura de um modelo numa ordem fixa; métodos traçáveis em x."""

    def __init__(self, kernels: GeometryKernels, order: int, cone: Cone = None) -> None:
        self.kernels = kernels
        self.order = order
        self.cone = cone
        angles, weights = reference_rule(kernels.dim, order, cone)
        self.angles = jnp.asarray(angles)
        self.ref_weights = jnp.asarray(weights)
        self._jit: Dict[str, Callable] = {}

    def _node(self, x: jax.Array, angles: jax.Array) -> jax.Array:
        u = direction(angles)
        return u / self.kernels.F(x, u)

    def nodes_weights(self, x: jax.Array) -> Tuple[jax.Array, jax.Array]:
        def one(a: jax.Array) -> Tuple[jax.Array, jax.Array]:
            y = self._node(x, a)
            J = jax.jacfwd(lambda b: self._node(x, b))(a)
            h = J.T @ self.kernels.metric(x, y) @ J
            return y, jnp.sqrt(jnp.linalg.det(h))

        ys, density = jax.vmap(one)(self.angles)
        return ys, self.ref_weights * density

    def mean(self, fn: Callable[[jax.Array, jax.Array], jax.Array], x: jax.Array) -> jax.Array:
        ys, w = self.nodes_weights(x)
        values = jax.vmap(fn, in_axes=(None, 0))(x, ys)
        return jnp.tensordot(w, values, axes=1) / jnp.sum(w)

    def connection(self, x: jax.Array) -> jax.Array:
        gamma = self.mean(self.kernels.chern, x)
        return 0.5 * (gamma + jnp.swapaxes(gamma, 1, 2))

    def berwald_connection(self, x: jax.Array) -> jax.Array:
        G = self.mean(self.kernels.berwald, x)
        return 0.5 * (G + jnp.swapaxes(G, 1, 2))

    def metric(self, x: jax.Array) -> jax.Array:
        g = self.mean(self.kernels.metric, x)
        return 0.5 * (g + g.T)

    def curvature(self, x: jax.Array) -> jax.Array:
        return self.mean(lambda z, y: self.kernels.curvature(z, y)[0], x)

    def connection_curvature(self, x: jax.Array) -> jax.Array:
        return classical_curvature(self.connection, x)

    def metric_compatibility(self, x: jax.Array) -> jax.Array:
        dg = richardson_jacobian(self.metric, x, adaptive_step(x))
        g, gamma = self.metric(x), self.connection(x)
        return dg - jnp.einsum("mj,mik->ijk", g, gamma) - jnp.einsum("im,mjk->ijk", g, gamma)

    def compiled(self, name: str) -> Callable:
        fn = self._jit.get(name)
        if fn is None:
            fn = jax.jit(getattr(self, name))
            self._jit[name] = fn
        return fn


@functools.lru_cache(maxsize=64)
def _rule(m: FinslerModel, order: int, cone: Cone) -> IndicatrixRule:
    return IndicatrixRule(m.kernels, order, cone)


def _resolve_cone(m: FinslerModel, cone: Optional[Sequence[float]]) -> Cone:
    if cone is not None:
        return (float(cone[0]), float(cone[1]))
    if m.cone is not None:
        return m.cone
    if m.y_local:
        raise ConeRequired(f"Modelo y-local {m.name} exige um cone de direções para a média.")
    return None


def rule_for(m: FinslerModel, order: int, cone: Optional[Sequence[float]] = None) -> IndicatrixRule:
    return _rule(m, int(order), _resolve_cone(m, cone))


def build_indicatrix_quadrature(
    m: FinslerModel, x: Sequence[float], order: int, cone: Optional[Sequence[float]] = None
) -> IndicatrixQuadrature:
    """Nós com F = 1 e pesos com a densidade de volume induzida."""
    rule = rule_for(m, order, cone)
    xj = jnp.asarray(x, dtype=float)
    ys, weights = (np.asarray(a) for a in rule.compiled("nodes_weights")(xj))
    x_np = np.asarray(xj)
    if not (np.all(np.isfinite(ys)) and np.all(np.isfinite(weights))):
        raise FinslerError(f"Indicatriz não avaliável em x = {x_np.tolist()}")
    gs = np.asarray(m.kernels.compiled("metric", "directions")(xj, jnp.asarray(ys)))
    for k, (y, g) in enumerate(zip(ys, gs)):
        p = SlitPoint(x_np, y)
        if m.convexity_domain is not None and not m.convexity_domain(p):
            raise StrongConvexityViolation(
                f"Nó {k} da indicatriz fora do domínio de convexidade de {m.name}: {p}", point=p
            )
        ensure_positive_definite(g, p)
    log.debug("Quadratura em x=%s: %s nós, volume %.12f", x_np.tolist(), len(ys), weights.sum())
    return IndicatrixQuadrature(x=x_np, ys=ys, weights=weights, order=int(order), cone=rule.cone)


def indicatrix_volume(q: IndicatrixQuadrature) -> float:
    return float(np.sum(q.weights))


def average_tensor(q: IndicatrixQuadrature, T: Callable[[SlitPoint], np.ndarray]) -> np.ndarray:
    """⟨T⟩ = (1/vol I_x) Σ w_k T(x, y_k), soma ordenada pelos nós."""
    values = []
    for k, node in enumerate(q.nodes):
        try:
            values.append(np.asarray(T(node), dtype=float))
        except Exception as exc:
            raise FinslerError(f"Falha ao avaliar o tensor no nó {k} ({node}): {exc}") from exc
    return np.tensordot(q.weights, np.stack(values), axes=1) / indicatrix_volume(q)


def averaged_connection(
    m: FinslerModel, source: str, x: Sequence[float], order: int, cone: Optional[Sequence[float]] = None
) -> AveragedConnection:
    """⟨Γ⟩(x) da conexão de Chern (ou de Berwald) sobre I_x."""
    if source not in SOURCES:
        raise ValueError(f"Fonte desconhecida: {source!r} (opções: {', '.join(SOURCES)})")
    quadrature = build_indicatrix_quadrature(m, x, order, cone)
    rule = rule_for(m, order, cone)
    fn = rule.compiled("connection" if source == "chern" else "berwald_connection")

    def coefficients(z: np.ndarray) -> np.ndarray:
        return np.asarray(fn(jnp.asarray(z, dtype=float)))

    return AveragedConnection(
        coefficients=coefficients,
        quadrature_order=int(order),
        source=source,
        x=quadrature.x,
        value=coefficients(quadrature.x),
        cone_restricted=quadrature.cone_restricted,
    )


def averaged_metric(m: FinslerModel, x: Sequence[float], order: int, cone: Optional[Sequence[float]] = None) -> np.ndarray:
    quadrature = build_indicatrix_quadrature(m, x, order, cone)
    h = np.asarray(rule_for(m, order, cone).compiled("metric")(jnp.asarray(quadrature.x)))
    return ensure_positive_definite(h, SlitPoint(quadrature.x, quadrature.ys[0]))


def averaged_curvature(m: FinslerModel, x: Sequence[float], order: int, cone: Optional[Sequence[float]] = None) -> np.ndarray:
    quadrature = build_indicatrix_quadrature(m, x, order, cone)
    return np.asarray(rule_for(m, order, cone).compiled("curvature")(jnp.asarray(quadrature.x)))


def averaged_curvature_gap(
    m: FinslerModel, x: Sequence[float], order: int, cone: Optional[Sequence[float]] = None
) -> Dict[str, object]:
    """⟨R⟩, a curvatura de ⟨Γ⟩ pela fórmula clássica e a diferença máxima entre elas."""
    averaged = averaged_curvature(m, x, order, cone)
    rule = rule_for(m, order, cone)
    of_average = np.asarray(rule.compiled("connection_curvature")(jnp.asarray(x, dtype=float)))
    return {
        "averaged_curvature": averaged,
        "curvature_of_average": of_average,
        "gap": float(np.max(np.abs(averaged - of_average))),
    }


def averaged_metric_compatibility(
    m: FinslerModel, x: Sequence[float], order: int, cone: Optional[Sequence[float]] = None
) -> float:
    """max |∂_k⟨g⟩_ij − ⟨g⟩_mj⟨Γ⟩^m_ik − ⟨g⟩_im⟨Γ⟩^m_jk|."""
    build_indicatrix_quadrature(m, x, order, cone)
    residual = rule_for(m, order, cone).compiled("metric_compatibility")(jnp.asarray(x, dtype=float))
    return float(np.max(np.abs(np.asarray(residual))))


def averaged_field(
    m: FinslerModel, order: int, source: str = "chern", cone: Optional[Sequence[float]] = None
) -> ConnectionField:
    """⟨Γ⟩ como campo de conexão independente de y e sem torção."""
    if source not in SOURCES:
        raise ValueError(f"Fonte desconhecida: {source!r}")
    rule = rule_for(m, order, cone)
    fn = rule.compiled("connection" if source == "chern" else "berwald_connection")
    return ConnectionField(
        name=f"averaged-{source}",
        dim=m.dim,
        coefficients=lambda x, y=None: fn(jnp.asarray(x, dtype=float)),
        y_independent=True,
        torsion_free=True,
        model=m,
    )


def averaged_metric_field(m: FinslerModel, order: int, cone: Optional[Sequence[float]] = None) -> Callable:
    """x ↦ ⟨g⟩(x) como função traçável (entrada de `interpolated_family`)."""
    return rule_for(m, order, cone).metric


def interpolated_family(
    m: FinslerModel, h: Callable[[jax.Array], jax.Array], t: float, samples: int = INTERPOLATION_SAMPLES
) -> FinslerModel:
    """F_t = (1−t)F + t√(h_ij y^i y^j), com F_0 = F e F_1 = √(h y y)."""
    if not 0.0 <= t <= 1.0:
        raise ModelDefinitionError(f"Parâmetro de interpolação t = {t} fora de [0, 1].")
    h_compiled = jax.jit(h)
    for x in m.sample_points(samples):
        hx = np.asarray(h_compiled(jnp.asarray(x)))
        if not np.allclose(hx, hx.T, atol=1e-12) or np.linalg.eigvalsh(0.5 * (hx + hx.T))[0] <= 0:
            raise ModelDefinitionError(f"h não é simétrica positiva definida em x = {x.tolist()}")
    if t == 0.0:
        return m

    def riemann_norm(x: jax.Array, y: jax.Array) -> jax.Array:
        return jnp.sqrt(jnp.einsum("i,ij,j->", y, h(x), y))

    if t == 1.0:
        F_t = riemann_norm
    else:
        F_t = lambda x, y: (1.0 - t) * m.F(x, y) + t * riemann_norm(x, y)  # noqa: E731

    return FinslerModel(
        name=f"{m.name}@t={t:g}",
        family="interpolated",
        dim=m.dim,
        F=F_t,
        params={"base": m.name, "t": t},
        lower=m.lower,
        upper=m.upper,
        cone=m.cone,
        periods=m.periods,
        y_local=m.y_local,
        convexity_domain=m.convexity_domain,
    )
