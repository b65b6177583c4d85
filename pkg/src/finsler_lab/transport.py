"""Geodésicas, levantamento horizontal, transporte paralelo e sondas de rigidez."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import jax
import jax.numpy as jnp
import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .averaging import build_indicatrix_quadrature
from .catalog import FinslerModel
from .connections import ConnectionField, chern_field, field_nonlinear
from .exceptions import FinslerError, IntegrationStalled, MissingReference
from .models import (
    EquivalenceReport,
    GeodesicSolution,
    InvarianceProbe,
    ReversibilityReport,
    SlitPoint,
    TransportState,
)

log = logging.getLogger(__name__)

METHOD = "DOP853"
DEFAULT_SAMPLES = 101


@dataclass(frozen=True)
class Segment:
    """Trecho suave de um caminho base, parametrizado em [0, duration]."""

    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    duration: float


@dataclass(frozen=True)
class BasePath:
    """Caminho base por trechos suaves; a integração reinicia em cada junção."""

    segments: Tuple[Segment, ...]
    closed: bool = False

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def start(self) -> np.ndarray:
        return np.asarray(self.segments[0].position(0.0), dtype=float)

    @property
    def end(self) -> np.ndarray:
        last = self.segments[-1]
        return np.asarray(last.position(last.duration), dtype=float)

    @classmethod
    def from_function(
        cls, fn: Callable[[jax.Array], jax.Array], t0: float, t1: float, closed: bool = False
    ) -> "BasePath":
        """Trecho dado por uma função traçável t ↦ x(t); velocidade por `jax.jacfwd`."""
        pos = jax.jit(fn)
        vel = jax.jit(jax.jacfwd(fn))
        segment = Segment(
            position=lambda s: np.asarray(pos(jnp.asarray(t0 + s, dtype=float))),
            velocity=lambda s: np.asarray(vel(jnp.asarray(t0 + s, dtype=float))),
            duration=float(t1 - t0),
        )
        return cls((segment,), closed)

    @classmethod
    def polyline(cls, vertices: Sequence[Sequence[float]], closed: bool = False) -> "BasePath":
        """Poligonal pelos vértices, um trecho de duração 1 por aresta."""
        pts = np.asarray(vertices, dtype=float)
        if closed:
            pts = np.vstack([pts, pts[:1]])
        if len(pts) < 2:
            raise FinslerError("Poligonal exige ao menos dois vértices.")
        segments = []
        for a, b in zip(pts[:-1], pts[1:]):
            delta = b - a
            segments.append(Segment(lambda s, a=a, d=delta: a + s * d, lambda s, d=delta: d, 1.0))
        return cls(tuple(segments), closed)

    @classmethod
    def from_samples(cls, ts: Sequence[float], xs: Sequence[Sequence[float]], closed: bool = False) -> "BasePath":
        """Caminho amostrado, interpolado por spline cúbica."""
        ts = np.asarray(ts, dtype=float)
        spline = CubicSpline(ts, np.asarray(xs, dtype=float), axis=0)
        deriv = spline.derivative()
        t0 = ts[0]
        segment = Segment(lambda s: spline(t0 + s), lambda s: deriv(t0 + s), float(ts[-1] - t0))
        return cls((segment,), closed)

    def reversed(self) -> "BasePath":
        segments = tuple(
            Segment(
                lambda s, seg=seg: seg.position(seg.duration - s),
                lambda s, seg=seg: -np.asarray(seg.velocity(seg.duration - s)),
                seg.duration,
            )
            for seg in reversed(self.segments)
        )
        return BasePath(segments, self.closed)

    def then(self, other: "BasePath") -> "BasePath":
        return BasePath(self.segments + other.segments, False)


def _solve(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    z0: np.ndarray,
    duration: float,
    tol: float,
    samples: int,
    label: str,
):
    last_good = {"t": 0.0, "z": np.array(z0, dtype=float)}

    def guarded(t: float, z: np.ndarray) -> np.ndarray:
        dz = np.asarray(rhs(t, z), dtype=float)
        if not np.all(np.isfinite(dz)):
            raise IntegrationStalled(
                f"{label}: derivada não finita em t = {t:.6g}", t=last_good["t"], state=last_good["z"]
            )
        last_good["t"], last_good["z"] = t, np.array(z)
        return dz

    t_eval = np.linspace(0.0, duration, max(int(samples), 2))
    sol = solve_ivp(guarded, (0.0, duration), z0, method=METHOD, rtol=tol, atol=tol, t_eval=t_eval)
    if sol.status != 0:
        t_last = float(sol.t[-1]) if sol.t.size else 0.0
        state = sol.y[:, -1] if sol.y.size else z0
        raise IntegrationStalled(f"{label}: {sol.message}", t=t_last, state=state)
    return sol


def _along_path(
    path: BasePath,
    rhs_factory: Callable[[Segment], Callable[[float, np.ndarray], np.ndarray]],
    z0: np.ndarray,
    tol: float,
    samples: int,
    label: str,
) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """Integra trecho a trecho; devolve (t global, x, estado)."""
    out: List[Tuple[float, np.ndarray, np.ndarray]] = []
    offset = 0.0
    z = np.asarray(z0, dtype=float)
    total = path.duration
    for seg in path.segments:
        n = max(2, int(round(samples * seg.duration / total)) if total > 0 else 2)
        sol = _solve(rhs_factory(seg), z, seg.duration, tol, n, label)
        for k, s in enumerate(sol.t):
            if out and k == 0:
                continue
            out.append((offset + float(s), np.asarray(seg.position(s), dtype=float), sol.y[:, k].copy()))
        z = sol.y[:, -1]
        offset += seg.duration
    return out


def _F(m: Optional[FinslerModel], x: np.ndarray, y: np.ndarray) -> float:
    if m is None:
        return float("nan")
    return m.evaluate(x, y)


def integrate_geodesic(
    field: ConnectionField,
    x0: Sequence[float],
    v0: Sequence[float],
    t_end: float,
    tol: float = 1e-9,
    samples: int = DEFAULT_SAMPLES,
) -> GeodesicSolution:
    """ẍ^i + Γ^i_jk(x, ẋ) ẋ^j ẋ^k = 0 com Runge–Kutta embutido de ordem 8 (DOP853)."""
    if tol <= 0 or t_end <= 0:
        raise ValueError("tol e t_end devem ser positivos.")
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    n = field.dim

    def rhs(_: float, z: np.ndarray) -> np.ndarray:
        x, v = z[:n], z[n:]
        gamma = field.at(x, None if field.y_independent else v)
        return np.concatenate([v, -np.einsum("ijk,j,k->i", gamma, v, v)])

    sol = _solve(rhs, np.concatenate([x0, v0]), float(t_end), tol, samples, f"geodésica ({field.name})")
    xs, vs = sol.y[:n].T.copy(), sol.y[n:].T.copy()
    F = None
    if field.model is not None:
        F = np.asarray(field.model.kernels.compiled("F", "pairs")(jnp.asarray(xs), jnp.asarray(vs)))
    return GeodesicSolution(t=sol.t.copy(), x=xs, v=vs, tolerance=tol, connection=field.name, F=F)


def horizontal_lift(
    m: FinslerModel, path: BasePath, u0: Sequence[float], tol: float = 1e-9, samples: int = DEFAULT_SAMPLES
) -> List[TransportState]:
    """du^i/dt = −N^i_j(x, u) ẋ^j ao longo do caminho."""
    u0 = np.asarray(u0, dtype=float)
    p0 = SlitPoint(path.start, u0)
    if not np.isfinite(m.evaluate(p0.x, p0.y)):
        raise FinslerError(f"F(x(0), u0) não finito em {p0}")
    N = m.kernels.compiled("nonlinear")

    def factory(seg: Segment) -> Callable[[float, np.ndarray], np.ndarray]:
        def rhs(s: float, u: np.ndarray) -> np.ndarray:
            x = seg.position(s)
            return -np.asarray(N(jnp.asarray(x), jnp.asarray(u))) @ np.asarray(seg.velocity(s))

        return rhs

    traj = _along_path(path, factory, u0, tol, samples, "levantamento horizontal")
    return [TransportState(t=t, x=x, u=u, W=None, F=_F(m, x, u)) for t, x, u in traj]


def transport_matrix(field: ConnectionField, path: BasePath, tol: float = 1e-9) -> np.ndarray:
    """Propagador Φ do transporte por um campo independente de y: W(fim) = Φ W(0)."""
    if not field.y_independent:
        raise FinslerError(f"Campo {field.name} depende de y; o propagador linear não se aplica.")
    n = field.dim

    def factory(seg: Segment) -> Callable[[float, np.ndarray], np.ndarray]:
        def rhs(s: float, z: np.ndarray) -> np.ndarray:
            gamma = field.at(seg.position(s))
            Phi = z.reshape(n, n)
            return -np.einsum("ijk,jl,k->il", gamma, Phi, np.asarray(seg.velocity(s))).reshape(-1)

        return rhs

    traj = _along_path(path, factory, np.eye(n).reshape(-1), tol, 2, "propagador")
    return traj[-1][2].reshape(n, n)


def parallel_transport(
    field: ConnectionField,
    m: Optional[FinslerModel],
    path: BasePath,
    W0: Sequence[float],
    u0: Optional[Sequence[float]] = None,
    tol: float = 1e-9,
    samples: int = DEFAULT_SAMPLES,
) -> List[TransportState]:
    """dW^i/dt + Γ^i_jk(x, u) W^j ẋ^k = 0; u segue o levantamento horizontal quando Γ depende de y."""
    W0 = np.asarray(W0, dtype=float)
    n = field.dim
    if W0.size != n:
        raise FinslerError(f"W0 com {W0.size} componentes para campo de dimensão {n}.")

    if field.y_independent:
        def factory(seg: Segment) -> Callable[[float, np.ndarray], np.ndarray]:
            def rhs(s: float, z: np.ndarray) -> np.ndarray:
                gamma = field.at(seg.position(s))
                Phi = z.reshape(n, n)
                return -np.einsum("ijk,jl,k->il", gamma, Phi, np.asarray(seg.velocity(s))).reshape(-1)

            return rhs

        traj = _along_path(path, factory, np.eye(n).reshape(-1), tol, samples, f"transporte ({field.name})")
        states = []
        for t, x, z in traj:
            W = z.reshape(n, n) @ W0
            states.append(TransportState(t=t, x=x, u=None, W=W, F=_F(m, x, W)))
        return states

    if u0 is None:
        raise MissingReference(f"Campo {field.name} depende de y: informe o vetor de referência u0.")
    N = field_nonlinear(field)

    def factory_ref(seg: Segment) -> Callable[[float, np.ndarray], np.ndarray]:
        def rhs(s: float, z: np.ndarray) -> np.ndarray:
            x, v = seg.position(s), np.asarray(seg.velocity(s))
            u, W = z[:n], z[n:]
            gamma = field.at(x, u)
            return np.concatenate([-N(x, u) @ v, -np.einsum("ijk,j,k->i", gamma, W, v)])

        return rhs

    z0 = np.concatenate([np.asarray(u0, dtype=float), W0])
    traj = _along_path(path, factory_ref, z0, tol, samples, f"transporte ({field.name})")
    return [TransportState(t=t, x=x, u=z[:n], W=z[n:], F=_F(m, x, z[n:])) for t, x, z in traj]


def indicatrix_invariance_probe(
    m: FinslerModel,
    field: ConnectionField,
    x: Sequence[float],
    path: BasePath,
    order: int,
    tol: float = 1e-9,
    propagator: Optional[np.ndarray] = None,
) -> InvarianceProbe:
    """Transporta os nós de I_x e mede max |F(x_fim, W_fim) − 1|.

    `propagator` reaproveita um Φ já integrado ao longo do mesmo caminho.
    """
    if not field.y_independent:
        raise FinslerError("A sonda da indicatriz exige um campo independente de y.")
    x = np.asarray(x, dtype=float)
    if not np.allclose(m.wrap(path.start - x), 0.0, atol=1e-12):
        raise FinslerError(f"Caminho começa em {path.start.tolist()}, não em x = {x.tolist()}.")
    quadrature = build_indicatrix_quadrature(m, x, order)
    Phi = transport_matrix(field, path, tol) if propagator is None else np.asarray(propagator)
    W = quadrature.ys @ Phi.T
    F = np.asarray(m.kernels.compiled("F", "directions")(jnp.asarray(path.end), jnp.asarray(W)))
    deviation = float(np.max(np.abs(F - 1.0)))
    log.debug("Sonda da indicatriz (%s): desvio %.3e", field.name, deviation)
    return InvarianceProbe(deviation=deviation, x_start=x, x_end=path.end, nodes=len(W))


def difference_tensor(
    field1: ConnectionField, field2: ConnectionField, p: SlitPoint
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """B = Γ1 − Γ2 com suas partes simétrica S e antissimétrica A em (j, k)."""
    if field1.dim != field2.dim:
        raise FinslerError("Campos de dimensões diferentes.")
    B = field1(p) - field2(p)
    S = 0.5 * (B + np.swapaxes(B, 1, 2))
    return B, S, B - S


def initial_data(m: FinslerModel, trials: int, seed: int = 42) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Condições iniciais (x0, v0) com F(x0, v0) = 1 no domínio do modelo."""
    dados = []
    directions = m.sample_directions(max(trials, 4), seed + 11)
    for k, x in enumerate(m.sample_points(trials, seed + 5)):
        for j in range(len(directions)):
            y = directions[(k + j) % len(directions)]
            p = SlitPoint(x, y)
            if m.contains(p):
                dados.append((x, y / m.evaluate(x, y)))
                break
    return dados


def geodesic_equivalence_probe(
    field1: ConnectionField,
    field2: ConnectionField,
    trials: int,
    t_end: float = 1.0,
    tol: float = 1e-9,
    m: Optional[FinslerModel] = None,
    seed: int = 42,
    threshold: float = 1e-6,
    threads: int = 1,
) -> EquivalenceReport:
    """Separação máxima das geodésicas dos dois campos e max|S| ao longo delas."""
    if trials < 1:
        raise ValueError("trials deve ser ≥ 1")
    model = m or field1.model or field2.model
    if model is None:
        raise FinslerError("Informe um modelo para amostrar as condições iniciais.")

    def one(data: Tuple[np.ndarray, np.ndarray]) -> Tuple[float, float]:
        x0, v0 = data
        g1 = integrate_geodesic(field1, x0, v0, t_end, tol, samples=21)
        g2 = integrate_geodesic(field2, x0, v0, t_end, tol, samples=21)
        sep = float(np.max(np.linalg.norm(model.wrap(g1.x - g2.x), axis=1)))
        s_max = 0.0
        for x, v in zip(g1.x, g1.v):
            _, S, _ = difference_tensor(field1, field2, SlitPoint(x, v))
            s_max = max(s_max, float(np.max(np.abs(S))))
        return sep, s_max

    dados = initial_data(model, trials, seed)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            resultados = list(executor.map(one, dados))
    else:
        resultados = [one(d) for d in dados]
    separation = max(r[0] for r in resultados)
    s_norm = max(r[1] for r in resultados)
    log.info("Equivalência %s × %s: separação %.3e, max|S| %.3e", field1.name, field2.name, separation, s_norm)
    return EquivalenceReport(
        separation=separation,
        max_symmetric_difference=s_norm,
        trials=len(resultados),
        equivalent=separation < threshold and s_norm < threshold,
    )


def reversibility_probe(
    m: FinslerModel, trials: int, tol: float = 1e-9, t_end: float = 1.0, seed: int = 42
) -> ReversibilityReport:
    """Volta pela geodésica de Chern com −v1 e mede a distância ao ponto inicial."""
    if trials < 1:
        raise ValueError("trials deve ser ≥ 1")
    if m.y_local:
        raise FinslerError(f"Reversibilidade exige convexidade y-global; {m.name} é y-local.")
    field = chern_field(m)
    F_pairs = m.kernels.compiled("F", "pairs")
    gap = velocity_defect = norm_defect = 0.0
    dados = initial_data(m, trials, seed)
    for x0, v0 in dados:
        ida = integrate_geodesic(field, x0, v0, t_end, tol, samples=11)
        volta = integrate_geodesic(field, ida.x[-1], -ida.v[-1], t_end, tol, samples=11)
        gap = max(gap, float(np.linalg.norm(m.wrap(volta.x[-1] - x0))))
        velocity_defect = max(velocity_defect, float(np.linalg.norm(volta.v[-1] + v0)))
        xs, vs = jnp.asarray(ida.x), jnp.asarray(ida.v)
        forward = np.asarray(F_pairs(xs, vs))
        backward = np.asarray(F_pairs(xs, -vs))
        norm_defect = max(norm_defect, float(np.max(np.abs(forward - backward) / forward)))
    return ReversibilityReport(
        return_gap=gap, norm_defect=norm_defect, trials=len(dados), velocity_defect=velocity_defect
    )


def default_loops(m: FinslerModel, count: int = 5, seed: int = 42, size: float = 0.15) -> List[BasePath]:
    """Retângulos fechados em pares de coordenadas consecutivas, dentro da caixa da carta."""
    lower, upper = np.asarray(m.lower), np.asarray(m.upper)
    width = upper - lower
    caminhos = []
    for k, centro in enumerate(m.sample_points(count, seed + 17)):
        i, j = k % m.dim, (k + 1) % m.dim
        centro = np.clip(centro, lower + size * width, upper - size * width)
        di = np.zeros(m.dim)
        dj = np.zeros(m.dim)
        di[i] = 0.5 * size * width[i]
        dj[j] = 0.5 * size * width[j]
        vertices = [centro - di - dj, centro + di - dj, centro + di + dj, centro - di + dj]
        caminhos.append(BasePath.polyline(vertices, closed=True))
    return caminhos
