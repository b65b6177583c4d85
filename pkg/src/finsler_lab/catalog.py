"""Catálogo de estruturas de Finsler, verificação dos axiomas e tensores g e A."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, Mapping, Optional, Sequence, Tuple

import jax
import jax.numpy as jnp
import numpy as np
from scipy.stats import norm, qmc

from . import expressions
from .exceptions import ModelDefinitionError, StrongConvexityViolation
from .geometry import GeometryKernels
from .jets import eval_jet
from .models import CartanValue, HomogeneityReport, MetricValue, SlitPoint

log = logging.getLogger(__name__)

FAMILIES = (
    "euclidean",
    "riemannian",
    "randers",
    "numata",
    "berwald_rund",
    "sphere_circle_randers",
    "slope",
    "custom",
)
HOMOGENEITY_FACTORS = (0.5, 2.0, 7.3)
CONVEXITY_SAMPLES = 200
RANDERS_SAMPLES = 200
BERWALD_RUND_CONE = (0.2, 1.8)


@dataclass(frozen=True, eq=False)
class FinslerModel:
    """Função de Finsler F(x, y) numa única carta, com caixa de amostragem e domínio de convexidade."""

    name: str
    family: str
    dim: int
    F: Callable[[jax.Array, jax.Array], jax.Array]
    params: Mapping[str, Any] = field(default_factory=dict)
    lower: Tuple[float, ...] = ()
    upper: Tuple[float, ...] = ()
    cone: Optional[Tuple[float, float]] = None
    periods: Tuple[Optional[float], ...] = ()
    y_local: bool = False
    convexity_domain: Optional[Callable[[SlitPoint], bool]] = None
    extras: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ModelDefinitionError(f"Dimensão da carta deve ser ≥ 2 (recebido {self.dim}).")
        if not self.lower:
            object.__setattr__(self, "lower", (-1.0,) * self.dim)
        if not self.upper:
            object.__setattr__(self, "upper", (1.0,) * self.dim)
        if not self.periods:
            object.__setattr__(self, "periods", (None,) * self.dim)
        if len(self.lower) != self.dim or len(self.upper) != self.dim or len(self.periods) != self.dim:
            raise ModelDefinitionError("Caixa de amostragem/períodos com dimensão diferente da carta.")
        if self.cone is not None and self.dim != 2:
            raise ModelDefinitionError("Cones de direções só são suportados em dimensão 2.")

    def __str__(self) -> str:  # pragma: no cover - apenas para logs
        return f"{self.name} ({self.family}, n={self.dim})"

    @cached_property
    def kernels(self) -> GeometryKernels:
        return GeometryKernels(self.F, self.dim)

    @cached_property
    def squared(self) -> Callable[[jax.Array, jax.Array], jax.Array]:
        return lambda x, y: self.F(x, y) ** 2

    def evaluate(self, x: Sequence[float], y: Sequence[float]) -> float:
        return float(self.kernels.compiled("F")(jnp.asarray(x, dtype=float), jnp.asarray(y, dtype=float)))

    def contains(self, p: SlitPoint) -> bool:
        """Indica se p está no domínio onde a convexidade forte é afirmada."""
        if self.cone is not None:
            angle = math.atan2(p.y[1], p.y[0])
            if not self.cone[0] <= angle <= self.cone[1]:
                return False
        if self.convexity_domain is not None and not self.convexity_domain(p):
            return False
        return True

    def require(self, p: SlitPoint) -> SlitPoint:
        if not isinstance(p, SlitPoint):
            p = SlitPoint(*p)
        if p.dim != self.dim:
            raise ModelDefinitionError(f"Ponto de dimensão {p.dim} para modelo de dimensão {self.dim}.")
        if not self.contains(p):
            raise StrongConvexityViolation(f"Ponto {p} fora do domínio de convexidade de {self.name}.", point=p)
        return p

    def wrap(self, dx: np.ndarray) -> np.ndarray:
        """Diferença de coordenadas reduzida pelos períodos da carta."""
        out = np.array(dx, dtype=float)
        for i, period in enumerate(self.periods):
            if period:
                out[..., i] = (out[..., i] + 0.5 * period) % period - 0.5 * period
        return out

    # --- amostragem --------------------------------------------------------

    def sample_points(self, count: int, seed: int = 42) -> np.ndarray:
        """Pontos base quase aleatórios (Halton) na caixa da carta."""
        engine = qmc.Halton(d=self.dim, scramble=False)
        engine.fast_forward(seed + 1)
        return qmc.scale(engine.random(count), self.lower, self.upper)

    def sample_directions(self, count: int, seed: int = 42) -> np.ndarray:
        """Direções unitárias quase aleatórias (no cone, quando houver)."""
        if self.cone is not None:
            engine = qmc.Halton(d=1, scramble=False)
            engine.fast_forward(seed + 7)
            theta = self.cone[0] + engine.random(count)[:, 0] * (self.cone[1] - self.cone[0])
            return np.stack([np.cos(theta), np.sin(theta)], axis=1)
        engine = qmc.Halton(d=self.dim, scramble=False)
        engine.fast_forward(seed + 7)
        gauss = norm.ppf(engine.random(count))
        return gauss / np.linalg.norm(gauss, axis=1, keepdims=True)

    def sample_slit_points(self, points: int, directions: int, seed: int = 42) -> list[SlitPoint]:
        """Pontos do domínio: cada ponto base com as direções que caem no domínio."""
        amostras = []
        for x in self.sample_points(points, seed):
            for y in self.sample_directions(directions, seed):
                p = SlitPoint(x, y)
                if self.contains(p):
                    amostras.append(p)
        return amostras


# --- famílias --------------------------------------------------------------


def _quadratic_norm(a: jax.Array, y: jax.Array) -> jax.Array:
    return jnp.sqrt(jnp.einsum("i,ij,j->", y, a, y))


def _euclidean(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    return {"F": lambda x, y: jnp.sqrt(jnp.dot(y, y))}


def _riemannian(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    _require(params, "g", "riemannian")
    g = expressions.compile_matrix_field(params["g"], dim, ("x",), "g")
    metric = lambda x: g(x, x)  # noqa: E731
    return {"F": lambda x, y: _quadratic_norm(metric(x), y), "extras": {"metric": metric}}


def _randers(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    _require(params, "a", "randers")
    a_field = expressions.compile_matrix_field(params["a"], dim, ("x",), "a")
    b_field = expressions.compile_vector_field(params.get("b", ["0"] * dim), dim, ("x",), "b")
    a = lambda x: a_field(x, x)  # noqa: E731
    b = lambda x: b_field(x, x)  # noqa: E731
    return {
        "F": lambda x, y: _quadratic_norm(a(x), y) + jnp.dot(b(x), y),
        "extras": {"randers_a": a, "randers_b": b},
    }


def _numata(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    _require(params, "g", "numata")
    g_field = expressions.compile_matrix_field(params["g"], dim, ("y",), "g")
    b_field = expressions.compile_vector_field(params.get("b", ["0"] * dim), dim, ("x",), "b")
    return {"F": lambda x, y: _quadratic_norm(g_field(x, y), y) + jnp.dot(b_field(x, x), y)}


def _slope(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    eta_source = params.get("eta", [["1" if i == j else "0" for j in range(dim)] for i in range(dim)])
    c_source = params.get("c", "1 + 0.2*y[0]/sqrt(" + " + ".join(f"y[{i}]**2" for i in range(dim)) + ")")
    eta = expressions.compile_matrix_field(eta_source, dim, ("x",), "eta")
    c = expressions.compile_field(c_source, dim)
    return {"F": lambda x, y: _quadratic_norm(eta(x, x), y) / c(x, y)}


def _custom(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    _require(params, "F", "custom")
    return {"F": expressions.compile_field(params["F"], dim)}


def _sphere_circle_randers(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    if dim != 3:
        raise ModelDefinitionError("sphere_circle_randers vive em S²×S¹: dim deve ser 3.")
    epsilon = float(params.get("epsilon", 0.3))
    if not abs(epsilon) < 1.0:
        raise ModelDefinitionError(f"|epsilon| = {abs(epsilon)} viola ‖b‖_a < 1.")

    def a(x: jax.Array) -> jax.Array:
        return jnp.diag(jnp.array([jnp.sin(x[1]) ** 2, 1.0, 1.0]))

    def b(x: jax.Array) -> jax.Array:
        return jnp.array([0.0, 0.0, epsilon])

    def F(x: jax.Array, y: jax.Array) -> jax.Array:
        return jnp.sqrt(jnp.sin(x[1]) ** 2 * y[0] ** 2 + y[1] ** 2 + y[2] ** 2) + epsilon * y[2]

    return {
        "F": F,
        "extras": {"randers_a": a, "randers_b": b},
        "lower": (0.0, 0.3, 0.0),
        "upper": (2 * math.pi, math.pi - 0.3, 2 * math.pi),
        "periods": (2 * math.pi, None, 2 * math.pi),
    }


def solve_implicit_root(psi: Callable, lo: float, hi: float, iterations: int = 80) -> Callable:
    """ξ(x) com x⁰ + x¹ξ = ψ(ξ): Newton salvaguardado por bisseção, derivada pelo teorema da função implícita."""
    dpsi = jax.grad(psi)

    @jax.custom_jvp
    def xi(x: jax.Array) -> jax.Array:
        def residual(s: jax.Array) -> jax.Array:
            return psi(s) - x[0] - x[1] * s

        def step(_: int, carry: tuple) -> tuple:
            a, b, s = carry
            r = residual(s)
            same = jnp.sign(r) == jnp.sign(residual(a))
            a = jnp.where(same, s, a)
            b = jnp.where(same, b, s)
            newton = s - r / (dpsi(s) - x[1])
            inside = jnp.isfinite(newton) & (newton >= jnp.minimum(a, b)) & (newton <= jnp.maximum(a, b))
            s = jnp.where(r == 0.0, s, jnp.where(inside, newton, 0.5 * (a + b)))
            return a, b, s

        start = (jnp.asarray(lo, dtype=x.dtype), jnp.asarray(hi, dtype=x.dtype), jnp.asarray(0.5 * (lo + hi), dtype=x.dtype))
        return jax.lax.fori_loop(0, iterations, step, start)[2]

    @xi.defjvp
    def _xi_jvp(primals: tuple, tangents: tuple) -> tuple:
        (x,), (dx,) = primals, tangents
        s = xi(x)
        return s, (dx[0] + s * dx[1]) / (dpsi(s) - x[1])

    return xi


def _berwald_rund(params: Mapping[str, Any], dim: int) -> Dict[str, Any]:
    if dim != 2:
        raise ModelDefinitionError("berwald_rund é uma superfície: dim deve ser 2.")
    psi = expressions.compile_scalar_function(params.get("psi", "xi**2"), "xi")
    lo, hi = (float(v) for v in params.get("xi_bracket", (0.25, 5.0)))
    xi = solve_implicit_root(psi, lo, hi)

    def F(x: jax.Array, y: jax.Array) -> jax.Array:
        return y[1] * (xi(x) + y[0] / y[1]) ** 2

    xi_compiled = jax.jit(xi)

    def domain(p: SlitPoint) -> bool:
        s = float(xi_compiled(jnp.asarray(p.x)))
        return bool(p.y[1] > 0 and p.y[0] + s * p.y[1] > 0)

    dpsi = jax.grad(psi)
    return {
        "F": F,
        "extras": {"xi": xi_compiled, "psi": psi, "dpsi": dpsi, "d2psi": jax.grad(dpsi), "xi_bracket": (lo, hi)},
        "lower": (0.5, -0.5),
        "upper": (1.5, 0.5),
        "cone": BERWALD_RUND_CONE,
        "y_local": True,
        "convexity_domain": domain,
    }


_BUILDERS: Dict[str, Callable[[Mapping[str, Any], int], Dict[str, Any]]] = {
    "euclidean": _euclidean,
    "riemannian": _riemannian,
    "randers": _randers,
    "numata": _numata,
    "berwald_rund": _berwald_rund,
    "sphere_circle_randers": _sphere_circle_randers,
    "slope": _slope,
    "custom": _custom,
}
_FIXED_DIM = {"berwald_rund": 2, "sphere_circle_randers": 3}


def _require(params: Mapping[str, Any], key: str, family: str) -> None:
    if key not in params:
        raise ModelDefinitionError(f"Família {family} exige o parâmetro '{key}'.")


def make_catalog_model(
    family: str,
    params: Optional[Mapping[str, Any]] = None,
    dim: Optional[int] = None,
    *,
    name: Optional[str] = None,
    lower: Optional[Sequence[float]] = None,
    upper: Optional[Sequence[float]] = None,
    cone: Optional[Sequence[float]] = None,
    periods: Optional[Sequence[Optional[float]]] = None,
) -> FinslerModel:
    """Constrói um modelo do catálogo a partir da família e do mapa de parâmetros."""
    if family not in _BUILDERS:
        raise ModelDefinitionError(f"Família desconhecida: {family!r}", [f"opções: {', '.join(FAMILIES)}"])
    params = dict(params or {})
    dim = int(dim if dim is not None else _FIXED_DIM.get(family, 2))
    if family in _FIXED_DIM and dim != _FIXED_DIM[family]:
        raise ModelDefinitionError(f"Família {family} exige dim = {_FIXED_DIM[family]}.")
    spec = _BUILDERS[family](params, dim)

    model = FinslerModel(
        name=name or family,
        family=family,
        dim=dim,
        F=spec["F"],
        params=params,
        lower=tuple(float(v) for v in (lower if lower is not None else spec.get("lower", ()))),
        upper=tuple(float(v) for v in (upper if upper is not None else spec.get("upper", ()))),
        cone=tuple(float(v) for v in cone) if cone is not None else spec.get("cone"),  # type: ignore[arg-type]
        periods=tuple(periods) if periods is not None else spec.get("periods", ()),
        y_local=spec.get("y_local", False),
        convexity_domain=spec.get("convexity_domain"),
        extras=spec.get("extras", {}),
    )
    if "randers_b" in model.extras:
        _validate_randers_bound(model)
    if family == "berwald_rund":
        _validate_root_bracket(model)
    log.debug("Modelo %s construído.", model)
    return model


def randers_norms(a: Callable, b: Callable, xs: np.ndarray) -> np.ndarray:
    """‖b‖_a = √(a^ij b_i b_j) em cada ponto base."""
    norms = []
    for x in xs:
        am = np.asarray(a(jnp.asarray(x)), dtype=float)
        bv = np.asarray(b(jnp.asarray(x)), dtype=float)
        try:
            np.linalg.cholesky(am)
        except np.linalg.LinAlgError as exc:
            raise ModelDefinitionError(f"a não é positiva definida em x = {x.tolist()}") from exc
        norms.append(math.sqrt(max(float(bv @ np.linalg.solve(am, bv)), 0.0)))
    return np.asarray(norms)


def _validate_randers_bound(model: FinslerModel) -> None:
    xs = model.sample_points(RANDERS_SAMPLES)
    norms = randers_norms(model.extras["randers_a"], model.extras["randers_b"], xs)
    pior = int(np.argmax(norms))
    if norms[pior] >= 1.0:
        raise ModelDefinitionError(
            "Randers exige ‖b‖_a < 1 em toda a carta",
            [f"‖b‖_a = {norms[pior]:.6f} em x = {xs[pior].tolist()}"],
        )


def _validate_root_bracket(model: FinslerModel) -> None:
    psi = model.extras["psi"]
    lo, hi = model.extras["xi_bracket"]
    problemas = []
    for x in model.sample_points(CONVEXITY_SAMPLES):
        r_lo = float(psi(lo)) - x[0] - x[1] * lo
        r_hi = float(psi(hi)) - x[0] - x[1] * hi
        if r_lo * r_hi > 0:
            problemas.append(f"sem raiz em [{lo}, {hi}] para x = {x.tolist()}")
            break
    if problemas:
        raise ModelDefinitionError("Equação implícita x⁰ + x¹ξ = ψ(ξ) sem solução no intervalo", problemas)


# --- axiomas e tensores ----------------------------------------------------


def check_homogeneity(m: FinslerModel, samples: int = 50, seed: int = 42) -> HomogeneityReport:
    """Resíduos máximos de F(x, λy) = λF(x, y) e de y·∂F/∂y = F."""
    if samples < 1:
        raise ValueError("samples deve ser ≥ 1")
    F = m.kernels.compiled("F", "directions")
    grad = jax.jit(jax.vmap(jax.grad(m.F, argnums=1), in_axes=(None, 0)))
    hom, euler, total = 0.0, 0.0, 0
    for x in m.sample_points(samples, seed):
        ys = np.asarray([p.y for p in (SlitPoint(x, y) for y in m.sample_directions(4, seed)) if m.contains(p)])
        if ys.size == 0:
            continue
        xj = jnp.asarray(x)
        base = np.asarray(F(xj, jnp.asarray(ys)))
        for lam in HOMOGENEITY_FACTORS:
            scaled = np.asarray(F(xj, jnp.asarray(lam * ys)))
            hom = max(hom, float(np.max(np.abs(scaled - lam * base) / np.abs(lam * base))))
        dF = np.asarray(grad(xj, jnp.asarray(ys)))
        euler = max(euler, float(np.max(np.abs(np.sum(dF * ys, axis=1) - base) / np.abs(base))))
        total += len(ys)
    return HomogeneityReport(homogeneity_residual=hom, euler_residual=euler, samples=total)


def ensure_positive_definite(g: np.ndarray, p: SlitPoint) -> np.ndarray:
    """Simetria + autovalores + pivôs de Cholesky acima de 1e-12·traço."""
    if not np.all(np.isfinite(g)):
        raise StrongConvexityViolation(f"Tensor fundamental não finito em {p}", point=p)
    eig = np.linalg.eigvalsh(g)
    if eig[0] <= 0:
        raise StrongConvexityViolation(
            f"Convexidade forte violada em {p}: autovalor mínimo {eig[0]:.3e}", eigenvalue=float(eig[0]), point=p
        )
    pivots = np.diag(np.linalg.cholesky(g)) ** 2
    if pivots.min() < 1e-12 * np.trace(g):
        raise StrongConvexityViolation(
            f"Pivô de Cholesky {pivots.min():.3e} abaixo de 1e-12·traço em {p}", eigenvalue=float(eig[0]), point=p
        )
    return g


def fundamental_tensor(m: FinslerModel, p: SlitPoint) -> MetricValue:
    """g_ij = ½ ∂²F²/∂y^i∂y^j, via jato de F²."""
    p = m.require(p)
    jet = eval_jet(m.squared, p)
    g = 0.5 * jet.dyy
    g = 0.5 * (g + g.T)
    return MetricValue(g=ensure_positive_definite(g, p), point=p)


def cartan_tensor(m: FinslerModel, p: SlitPoint) -> CartanValue:
    """A_ijk = (F/2) ∂g_ij/∂y^k, com o jato aplicado às entradas de g."""
    metric = fundamental_tensor(m, p)
    jet = eval_jet(m.kernels.metric, metric.point)
    A = 0.5 * m.evaluate(p.x, p.y) * jet.dy
    return CartanValue(A=A, point=metric.point)


def cartan_norm(m: FinslerModel, p: SlitPoint) -> float:
    """Norma invariante ‖A‖ (nula exatamente nos pontos riemannianos)."""
    p = m.require(p)
    return float(m.kernels.compiled("cartan_norm")(jnp.asarray(p.x), jnp.asarray(p.y)))


def check_convexity(m: FinslerModel, samples: int = CONVEXITY_SAMPLES, seed: int = 42) -> int:
    """Verificação amostral de convexidade forte; devolve o número de pontos testados."""
    metric = m.kernels.compiled("metric", "directions")
    points = max(1, samples // 4)
    total = 0
    for x in m.sample_points(points, seed):
        slit = [SlitPoint(x, y) for y in m.sample_directions(4, seed + 3)]
        slit = [p for p in slit if m.contains(p)]
        if not slit:
            continue
        gs = np.asarray(metric(jnp.asarray(x), jnp.asarray([p.y for p in slit])))
        for g, p in zip(gs, slit):
            ensure_positive_definite(g, p)
        total += len(slit)
    log.debug("Convexidade verificada em %s ponto(s) de %s.", total, m.name)
    return total
