"""
Trazas iniciales y de borde, masa y perfiles estacionarios.

Responsabilidades:
- estimate_traces: promedios por franjas de ancho eps_strip junto a t=0, x=0 y x=1.
- mass / mass_series: int_0^1 u(t, x) dx.
- stationary_profile: choque ascendente 1_{(1-m, 1)} de masa m.
- boundary_flux_diagnostic: corriente asimetrica promedio cerca de un borde (microscopico).
- trace_pass_fraction: fraccion de bins donde las trazas caen en el conjunto admisible.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from asep_hydro.model.core import ModelParams
from asep_hydro.model.entropy import check_trace_set
from asep_hydro.model.pde import DensityField, Perfil, _validar_rango, perfil_escalon

logger = logging.getLogger(__name__)

DatoBorde = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class TraceEstimate:
    x0: np.ndarray            # centros donde se estima u0
    u0: np.ndarray
    tiempos: np.ndarray
    u_minus: np.ndarray
    u_plus: np.ndarray
    var_minus: np.ndarray     # varianza del estimador por bin temporal
    var_plus: np.ndarray
    strip_width: float
    dx: float

    def __post_init__(self):
        if not 0.0 < self.strip_width < 0.25:
            raise ValueError(f"strip_width fuera de (0, 1/4): {self.strip_width}")
        for nombre in ("u0", "u_minus", "u_plus"):
            _validar_rango(getattr(self, nombre), nombre)

    def tolerancias(self, lado: str) -> np.ndarray:
        """tau por bin: 2 (dx^{1/2} + error estadistico)."""
        var = self.var_minus if lado == "left" else self.var_plus
        return 2.0 * (math.sqrt(self.dx) + np.sqrt(var))


def estimate_traces(field: DensityField, eps_strip: Optional[float] = None) -> TraceEstimate:
    dx = field.dx
    eps = max(2.0 * dx, math.sqrt(dx)) if eps_strip is None else float(eps_strip)
    if eps < 2.0 * dx * (1.0 - 1e-12):
        raise ValueError(f"eps_strip={eps} es menor que dos celdas (2 dx = {2 * dx})")

    izq = field.x <= eps
    der = field.x >= 1.0 - eps

    def franja(mascara):
        bloque = field.u[:, mascara]
        cuenta = bloque.shape[1]
        media = bloque.mean(axis=1)
        var = bloque.var(axis=1, ddof=1) / cuenta if cuenta > 1 else np.zeros(bloque.shape[0])
        return media, var

    u_minus, var_minus = franja(izq)
    u_plus, var_plus = franja(der)

    iniciales = field.tiempos <= eps * field.T
    iniciales[0] = True
    u0 = field.u[iniciales].mean(axis=0)

    logger.debug("estimate_traces: eps_strip=%g, celdas por franja=(%d, %d)", eps, izq.sum(), der.sum())
    return TraceEstimate(
        x0=field.x.copy(),
        u0=u0,
        tiempos=field.tiempos.copy(),
        u_minus=u_minus,
        u_plus=u_plus,
        var_minus=var_minus,
        var_plus=var_plus,
        strip_width=eps,
        dx=dx,
    )


def _dato(v: DatoBorde, t: float) -> float:
    return float(v(t)) if callable(v) else float(v)


def trace_pass_fraction(estimate: TraceEstimate, v_minus: DatoBorde, v_plus: DatoBorde,
                        tau: Optional[float] = None) -> float:
    """Fraccion de bins temporales donde ambas trazas estan en su conjunto admisible."""
    tau_izq = estimate.tolerancias("left") if tau is None else np.full(estimate.tiempos.size, tau)
    tau_der = estimate.tolerancias("right") if tau is None else np.full(estimate.tiempos.size, tau)
    pasa = [
        check_trace_set(float(np.clip(um, 0, 1)), _dato(v_minus, t), "left", ti)
        and check_trace_set(float(np.clip(up, 0, 1)), _dato(v_plus, t), "right", td)
        for t, um, up, ti, td in zip(estimate.tiempos, estimate.u_minus, estimate.u_plus, tau_izq, tau_der)
    ]
    return float(np.mean(pasa)) if pasa else 0.0


# -------------------------------------------------------
# Masa
# -------------------------------------------------------

def _masa_fila(x: np.ndarray, fila: np.ndarray) -> float:
    # extension constante hasta x=0 y x=1
    xs = np.concatenate([[0.0], x, [1.0]])
    us = np.concatenate([[fila[0]], fila, [fila[-1]]])
    return float(trapezoid(us, xs))


def mass(field: DensityField, t: float) -> float:
    return _masa_fila(field.x, field.fila(t))


def mass_series(field: DensityField) -> np.ndarray:
    return np.array([_masa_fila(field.x, fila) for fila in field.u])


def stationary_profile(m: float, x: Optional[np.ndarray] = None):
    """Perfil 1_{(1-m, 1)}; con x retorna los valores, sin x el perfil evaluable."""
    if not 0.0 <= m <= 1.0:
        raise ValueError(f"m fuera de [0,1] (m={m})")
    perfil: Perfil = perfil_escalon(1.0 - m)
    return perfil if x is None else perfil(np.asarray(x, dtype=float))


# -------------------------------------------------------
# Diagnostico de flujo de borde
# -------------------------------------------------------

def boundary_flux_diagnostic(snapshots, params: ModelParams, eps: float, side: str = "left") -> float:
    """
    Promedio espacio-tiempo de eta_i (1 - eta_{i+1}) sobre los primeros floor(eps n) enlaces
    (side='left') o los ultimos (side='right').
    """
    if not 0.0 < eps < 0.25:
        raise ValueError(f"eps fuera de (0, 1/4): {eps}")
    if side not in ("left", "right"):
        raise ValueError(f"side debe ser 'left' o 'right' (side={side})")
    snaps = getattr(snapshots, "snapshots", snapshots)
    if not snaps:
        raise ValueError("se requiere al menos un snapshot")
    ancho = math.floor(eps * params.n)
    if ancho < 1:
        raise ValueError(f"eps n < 1 (eps={eps}, n={params.n})")

    tiempos = np.array([s.t for s in snaps])
    promedios = []
    for s in snaps:
        eta = np.asarray(s.eta, dtype=float)
        corriente = eta[:-1] * (1.0 - eta[1:])
        bloque = corriente[:ancho] if side == "left" else corriente[-ancho:]
        promedios.append(bloque.mean())
    promedios = np.asarray(promedios)

    if tiempos.size > 1 and tiempos[-1] > tiempos[0]:
        return float(trapezoid(promedios, tiempos) / (tiempos[-1] - tiempos[0]))
    return float(promedios.mean())
