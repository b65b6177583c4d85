"""Curvaturas hh e hv da conexão de Chern, curvatura de bandeira e tensor de Landsberg."""

from __future__ import annotations

import logging

import jax.numpy as jnp
import numpy as np

from .catalog import FinslerModel, fundamental_tensor
from .exceptions import DegenerateFlag, JetEvaluationError
from .models import CurvatureValue, FlagValue, SlitPoint

log = logging.getLogger(__name__)


def curvature(m: FinslerModel, p: SlitPoint) -> CurvatureValue:
    """R^i_jkl e P^i_jkl num ponto do domínio de convexidade."""
    p = fundamental_tensor(m, p).point
    R, P = m.kernels.compiled("curvature")(jnp.asarray(p.x), jnp.asarray(p.y))
    R, P = np.asarray(R), np.asarray(P)
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(P))):
        raise JetEvaluationError(f"Curvatura não finita em {p}")
    return CurvatureValue(R=R, P=P, point=p)


def hh_curvature(m: FinslerModel, p: SlitPoint) -> np.ndarray:
    return curvature(m, p).R


def hv_curvature(m: FinslerModel, p: SlitPoint) -> np.ndarray:
    """P^i_jkl = −F ∂Γ^i_jk/∂y^l."""
    return curvature(m, p).P


def flag_curvature(m: FinslerModel, p: SlitPoint, V: np.ndarray) -> FlagValue:
    """K(y, V) = R_ijkl V^i y^j V^k y^l / (g(V,V)g(y,y) − g(y,V)²)."""
    metric = fundamental_tensor(m, p)
    p = metric.point
    V = np.asarray(V, dtype=float).reshape(-1)
    g = metric.g
    scale = float(V @ g @ V) * float(p.y @ g @ p.y)
    numerator, denominator = m.kernels.compiled("flag_terms")(jnp.asarray(p.x), jnp.asarray(p.y), jnp.asarray(V))
    denominator = float(denominator)
    if not denominator > 1e-12 * scale:
        raise DegenerateFlag(f"Bandeira degenerada em {p} com V = {V.tolist()} (denominador {denominator:.3e})")
    return FlagValue(K=float(numerator) / denominator, flag=p, transverse=V)


def landsberg_tensor(m: FinslerModel, p: SlitPoint) -> np.ndarray:
    """Ȧ_ikl = −l^j P_jikl, com l = y/F e P_jikl = g_jm P^m_ikl."""
    p = fundamental_tensor(m, p).point
    return np.asarray(m.kernels.compiled("landsberg")(jnp.asarray(p.x), jnp.asarray(p.y)))
