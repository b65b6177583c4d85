"""Testes de caracterização (Riemann, Berwald, Landsberg, localmente Minkowski) e relatório."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

import jax.numpy as jnp
import numpy as np

from .averaging import averaged_field, averaged_metric_field, interpolated_family, rule_for
from .catalog import FinslerModel, ensure_positive_definite, randers_norms
from .config import load_settings
from .exceptions import ClassificationAborted, ConeRequired, ModelDefinitionError, StrongConvexityViolation
from .geometry import FLAG_CONTRACTION, christoffel_from_derivatives
from .jets import adaptive_step, richardson_jacobian
from .models import (
    ClassificationReport,
    LandsbergDiagnostic,
    RandersCriterion,
    SampleSpec,
    SlitPoint,
    Thresholds,
    Verdict,
)
from .transport import BasePath, default_loops, indicatrix_invariance_probe, transport_matrix

log = logging.getLogger(__name__)

RESIDUALS = (
    "cartan_norm",
    "hv_norm",
    "dGamma_dy_norm",
    "hh_norm",
    "landsberg_norm",
    "berwald_avg_gap",
    "randers_parallel_residual",
)
VERDICTS = ("riemannian", "berwald", "landsberg", "locally_minkowski", "pure_landsberg_candidate")
RANDERS_PARALLEL_THRESHOLD = 1e-8
INTERPOLATION_PARAMETERS = (0.0, 0.25, 0.5, 0.75, 1.0)
WITNESS_THRESHOLD = 1e-3

SZABO_NOTE = (
    "Dimensão 2: espera-se Berwald ⇒ riemanniano ou localmente Minkowski (Szabó) para estruturas y-globais."
)


# --- critério de Randers ---------------------------------------------------


def randers_berwald_criterion(
    a: Callable,
    b: Callable,
    points: np.ndarray,
    threshold: float = RANDERS_PARALLEL_THRESHOLD,
) -> RandersCriterion:
    """sup‖b‖_a e max|b_{j|k}|, com b_{j|k} = ∂_k b_j − b_s γ^s_jk e γ de Levi-Civita de a."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    sup_norm = float(np.max(randers_norms(a, b, points)))
    derivative = 0.0
    for x in points:
        xj = jnp.asarray(x)
        am = np.asarray(a(xj), dtype=float)
        if np.linalg.eigvalsh(0.5 * (am + am.T))[0] <= 0:
            raise ModelDefinitionError(f"a não é positiva definida em x = {x.tolist()}")
        step = adaptive_step(xj)
        da = np.asarray(richardson_jacobian(a, xj, step))
        db = np.asarray(richardson_jacobian(b, xj, step))
        gamma = np.asarray(christoffel_from_derivatives(jnp.asarray(np.linalg.inv(am)), jnp.asarray(da)))
        bv = np.asarray(b(xj), dtype=float)
        covariant = db - np.einsum("s,sjk->jk", bv, gamma)
        derivative = max(derivative, float(np.max(np.abs(covariant))))
    berwald = sup_norm < 1.0 and derivative < threshold
    log.debug("Critério de Randers: sup‖b‖_a=%.6f, max|b_j|k|=%.3e", sup_norm, derivative)
    return RandersCriterion(sup_b_norm=sup_norm, max_covariant_derivative=derivative, berwald=berwald)


def randers_criterion_for(m: FinslerModel, sample_spec: Optional[SampleSpec] = None) -> Optional[RandersCriterion]:
    """Critério aplicado aos dados (a, b) de um modelo Randers; None para as demais famílias."""
    if "randers_a" not in m.extras or "randers_b" not in m.extras:
        return None
    spec = sample_spec or SampleSpec()
    points = m.sample_points(spec.points, spec.seed)
    return randers_berwald_criterion(m.extras["randers_a"], m.extras["randers_b"], points)


# --- classificação ---------------------------------------------------------


def _point_residuals(
    m: FinslerModel, x: np.ndarray, directions: np.ndarray, average: Optional[Callable]
) -> Optional[Dict[str, float]]:
    slit = [SlitPoint(x, y) for y in directions]
    slit = [p for p in slit if m.contains(p)]
    if not slit:
        return None
    xj = jnp.asarray(x)
    ys = jnp.asarray(np.stack([p.y for p in slit]))
    diag = {k: np.asarray(v) for k, v in m.kernels.compiled("diagnostics", "directions")(xj, ys).items()}
    for g, p in zip(diag["g"], slit):
        ensure_positive_definite(g, p)
    cartan = np.asarray(m.kernels.compiled("cartan_norm", "directions")(xj, ys))
    chern = diag["chern"]
    out = {
        "cartan_norm": float(np.max(cartan)),
        "hv_norm": float(np.max(np.abs(diag["P"]))),
        "dGamma_dy_norm": float(np.max(np.max(chern, axis=0) - np.min(chern, axis=0))),
        "hh_norm": float(np.max(np.abs(diag["R"]))),
        "landsberg_norm": float(np.max(np.abs(diag["landsberg"]))),
        "gamma_max": float(np.max(np.abs(chern))),
        "pairs": float(len(slit)),
    }
    if average is not None:
        avg = np.asarray(average(xj))
        out["berwald_avg_gap"] = float(np.max(np.abs(chern - avg[None])))
    return out


def _merge(partials: List[Dict[str, float]], keys: Sequence[str]) -> Dict[str, Optional[float]]:
    merged: Dict[str, Optional[float]] = {}
    for key in keys:
        values = [p[key] for p in partials if key in p]
        merged[key] = max(values) if values else None
    return merged


def _combine(first: Verdict, second: Verdict) -> Verdict:
    if first == second:
        return first
    return "inconclusive"


def _verdicts(
    residuals: Dict[str, Optional[float]], thresholds: Thresholds, scale: float, notes: List[str]
) -> Dict[str, Verdict]:
    v = {name: thresholds.verdict(residuals.get(name), scale) for name in RESIDUALS}
    berwald = _combine(v["hv_norm"], v["dGamma_dy_norm"])
    if berwald == "inconclusive" and v["hv_norm"] != v["dGamma_dy_norm"]:
        notes.append(
            f"Critérios de Berwald divergentes: hv_norm={v['hv_norm']}, dGamma_dy_norm={v['dGamma_dy_norm']}."
        )
    if v["hh_norm"] == "yes" and v["hv_norm"] == "yes":
        minkowski: Verdict = "yes"
    elif "no" in (v["hh_norm"], v["hv_norm"]):
        minkowski = "no"
    else:
        minkowski = "inconclusive"
    verdicts: Dict[str, Verdict] = {
        "riemannian": v["cartan_norm"],
        "berwald": berwald,
        "landsberg": v["landsberg_norm"],
        "locally_minkowski": minkowski,
    }
    # cadeia riemanniano ⇒ Berwald ⇒ Landsberg
    if verdicts["riemannian"] == "yes" and verdicts["berwald"] != "yes":
        notes.append(f"Riemanniano com berwald={verdicts['berwald']}; promovido a yes pela cadeia de implicações.")
        verdicts["berwald"] = "yes"
    if verdicts["berwald"] == "yes" and verdicts["landsberg"] != "yes":
        notes.append(f"Berwald com landsberg={verdicts['landsberg']}; promovido a yes pela cadeia de implicações.")
        verdicts["landsberg"] = "yes"
    if verdicts["locally_minkowski"] == "yes" and verdicts["berwald"] != "yes":
        notes.append("Localmente Minkowski sem veredicto Berwald; promovido a yes.")
        verdicts["berwald"] = verdicts["landsberg"] = "yes"
    if verdicts["landsberg"] == "yes" and verdicts["berwald"] == "no":
        candidate: Verdict = "yes"
    elif verdicts["berwald"] == "yes" or verdicts["landsberg"] == "no":
        candidate = "no"
    else:
        candidate = "inconclusive"
    verdicts["pure_landsberg_candidate"] = candidate
    if v["berwald_avg_gap"] != "inconclusive" and v["berwald_avg_gap"] != verdicts["berwald"]:
        notes.append(f"Distância Γ − ⟨Γ⟩ ({v['berwald_avg_gap']}) difere do veredicto de Berwald.")
    if v["randers_parallel_residual"] == "yes" and verdicts["berwald"] == "no":
        notes.append("b paralela em relação a a, mas os resíduos de Berwald não se anulam: verificar a amostra.")
    return verdicts


def classify(
    m: FinslerModel,
    sample_spec: Optional[SampleSpec] = None,
    thresholds: Optional[Thresholds] = None,
    order: Optional[int] = None,
    threads: Optional[int] = None,
) -> ClassificationReport:
    """Avalia todos os resíduos na amostra e preenche os veredictos com faixa inconclusiva."""
    settings = load_settings()
    spec = sample_spec or SampleSpec(seed=settings.seed)
    limits = thresholds or Thresholds()
    order = int(order or settings.quad_order)
    workers = max(1, int(threads or settings.threads))
    notes: List[str] = []

    average: Optional[Callable] = None
    try:
        average = rule_for(m, order).compiled("connection")
    except ConeRequired as exc:
        notes.append(f"berwald_avg_gap não calculado: {exc}")

    points = m.sample_points(spec.points, spec.seed)
    directions = m.sample_directions(spec.directions, spec.seed)
    log.info("Classificando %s: %s ponto(s) × %s direção(ões), %s thread(s).", m.name, len(points), len(directions), workers)

    def worker(x: np.ndarray) -> Optional[Dict[str, float]]:
        return _point_residuals(m, x, directions, average)

    partials: List[Dict[str, float]] = []
    keys = RESIDUALS[:-1]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = executor.map(worker, points)
        try:
            for result in results:
                if result is not None:
                    partials.append(result)
        except StrongConvexityViolation as exc:
            parcial = _merge(partials, keys)
            log.error("Classificação de %s interrompida: %s", m.name, exc)
            raise ClassificationAborted(f"Classificação de {m.name} interrompida: {exc}", partial=parcial) from exc

    if not partials:
        raise ClassificationAborted(f"Nenhum ponto da amostra de {m.name} no domínio de convexidade.")

    residuals = _merge(partials, keys)
    randers = randers_criterion_for(m, spec)
    residuals["randers_parallel_residual"] = None if randers is None else randers.max_covariant_derivative
    if randers is not None and randers.sup_b_norm >= 1.0:
        notes.append(f"sup‖b‖_a = {randers.sup_b_norm:.6f} ≥ 1: dados de Randers fora da região admissível.")

    scale = float(np.median([p["gamma_max"] for p in partials])) + 1.0
    verdicts = _verdicts(residuals, limits, scale, notes)
    if m.dim == 2 and verdicts["berwald"] == "yes":
        notes.append(SZABO_NOTE)
        if verdicts["riemannian"] == "no" and verdicts["locally_minkowski"] == "no":
            origem = "cone/y-local" if (m.y_local or m.cone is not None) else "y-global"
            notes.append(f"Notável: Berwald 2-D nem riemanniano nem localmente Minkowski ({origem}).")

    limiares = {
        name: {"yes_below": limits.yes_below * scale, "no_above": limits.no_above * scale} for name in RESIDUALS
    }
    metadata: Dict[str, Any] = {
        "family": m.family,
        "dim": m.dim,
        "quad_order": order,
        "pairs_evaluated": int(sum(p["pairs"] for p in partials)),
        "points_used": len(partials),
        "cone": None if m.cone is None else list(m.cone),
        "y_local": m.y_local,
        "flag_contraction": FLAG_CONTRACTION,
    }
    log.info("Veredictos de %s: %s", m.name, verdicts)
    return ClassificationReport(
        model=m.name,
        sample_spec=spec,
        residuals=residuals,
        thresholds=limiares,
        verdicts=verdicts,
        scale=scale,
        notes=notes,
        metadata=metadata,
    )


# --- diagnóstico pure-Landsberg --------------------------------------------


def pure_landsberg_diagnostic(
    m: FinslerModel,
    loops: Optional[Sequence[BasePath]] = None,
    order: int = 32,
    report: Optional[ClassificationReport] = None,
    thresholds: Optional[Thresholds] = None,
    parameters: Sequence[float] = INTERPOLATION_PARAMETERS,
    tol: float = 1e-9,
) -> LandsbergDiagnostic:
    """Sonda da indicatriz sob ⟨Γ⟩ para cada I_x(t) da família interpolada com h = ⟨g⟩."""
    limits = thresholds or Thresholds()
    notes: List[str] = []
    if report is not None and not (
        report.verdicts.get("landsberg") == "yes" and report.verdicts.get("berwald") == "no"
    ):
        notes.append(
            "Pré-condição landsberg=yes e berwald=no não satisfeita "
            f"(landsberg={report.verdicts.get('landsberg')}, berwald={report.verdicts.get('berwald')})."
        )
    caminhos = list(loops) if loops is not None else default_loops(m)
    if not caminhos:
        raise ValueError("Informe ao menos um caminho.")
    h = averaged_metric_field(m, order)
    field = averaged_field(m, order)
    propagadores = [transport_matrix(field, path, tol) for path in caminhos]

    deviations: Dict[float, List[float]] = {}
    for t in parameters:
        F_t = interpolated_family(m, h, float(t))
        deviations[float(t)] = [
            indicatrix_invariance_probe(F_t, field, path.start, path, order, tol, propagator=Phi).deviation
            for path, Phi in zip(caminhos, propagadores)
        ]
        log.debug("I_x(t=%.2f): desvios %s", t, deviations[float(t)])

    pares = [(dev, t, k) for t, devs in deviations.items() for k, dev in enumerate(devs)]
    max_dev, t_max, k_max = max(pares)
    witness = (t_max, k_max) if max_dev > WITNESS_THRESHOLD else None
    if max_dev < limits.no_above:
        conclusion = "invariant-family"
        notes.append("Família invariante ⇒ não é testemunha pure-Landsberg.")
    elif witness is not None:
        conclusion = "non-invariant-family"
        notes.append(f"Família não invariante: desvio {max_dev:.3e} em t = {t_max:g}, caminho {k_max}.")
    else:
        conclusion = "inconclusive"
        notes.append(f"Desvio máximo {max_dev:.3e} entre os limiares de decisão.")
    return LandsbergDiagnostic(
        deviations=deviations, max_deviation=max_dev, witness=witness, conclusion=conclusion, notes=notes
    )
