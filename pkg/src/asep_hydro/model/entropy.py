"""
Pares de entropia y funcionales de produccion de entropia.

Este modulo contiene:
- EntropyPair: (F, F', Q) con Q' = J' F' = (1 - 2u) F'.
  * kruzhkov_pair(c): F = |u - c|, Q = sgn(u - c)(J(u) - J(c))
  * smooth_pair(m, c): F_{m,c}(u) = F(m(u - c))/m con un molificador fijo F
- BoundaryEntropyFlux: Q_m(u, v) = int_v^u (1 - 2w) f_m(w, v) dw (familia separadora de trazas)
- TestFunction.bump y entropy_production (forma debil)
- check_trace_set / separating_m: conjuntos admisibles de trazas de borde

El factor p de la ecuacion solo multiplica a Q dentro de entropy_production.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad, trapezoid

from asep_hydro.config.settings import SETTINGS
from asep_hydro.model.pde import DensityField, _validar_rango

logger = logging.getLogger(__name__)


def _J(u):
    return u * (1.0 - u)


def _evaluar_por_valor(funcion: Callable[[float], float], u) -> np.ndarray:
    """Aplica una funcion escalar costosa solo sobre los valores distintos de u."""
    arr = np.asarray(u, dtype=float)
    unicos, inversa = np.unique(arr, return_inverse=True)
    valores = np.array([funcion(float(x)) for x in unicos])
    out = valores[inversa].reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


# ============================================================
# Pares de entropia interiores
# ============================================================

@dataclass(frozen=True)
class EntropyPair:
    F: Callable
    dF: Callable
    Q: Callable
    etiqueta: str
    # puntos donde F' no es suave (para las cuadraturas)
    quiebres: tuple[float, ...] = ()


def kruzhkov_pair(c: float) -> EntropyPair:
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c fuera de [0,1] (c={c})")
    Jc = _J(c)

    def F(u):
        return np.abs(np.asarray(u, dtype=float) - c)

    def dF(u):
        return np.sign(np.asarray(u, dtype=float) - c)

    def Q(u):
        u = np.asarray(u, dtype=float)
        return np.sign(u - c) * (_J(u) - Jc)

    return EntropyPair(F, dF, Q, etiqueta=f"kruzhkov c={c:g}", quiebres=(c,))


def molificador(z):
    """F(z) = 3/8 + 3/4 z^2 - 1/8 z^4 en |z| <= 1 y |z| fuera: C^2, convexa, F'(0) = 0."""
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) <= 1.0, 0.375 + 0.75 * z**2 - 0.125 * z**4, np.abs(z))


def molificador_derivada(z):
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) <= 1.0, 1.5 * z - 0.5 * z**3, np.sign(z))


def smooth_pair(m: int, c: float) -> EntropyPair:
    if int(m) != m or m < 1:
        raise ValueError(f"m debe ser entero >= 1 (m={m})")
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"c fuera de [0,1] (c={c})")
    quiebres = (c - 1.0 / m, c, c + 1.0 / m)

    def F(u):
        return molificador(m * (np.asarray(u, dtype=float) - c)) / m

    def dF(u):
        return molificador_derivada(m * (np.asarray(u, dtype=float) - c))

    def integrando(w):
        return (1.0 - 2.0 * w) * float(molificador_derivada(m * (w - c)))

    def Q_escalar(u: float) -> float:
        if u == c:
            return 0.0
        puntos = [q for q in quiebres if min(u, c) < q < max(u, c)]
        valor, _ = quad(integrando, c, u, points=puntos or None,
                        epsabs=SETTINGS.tol_cuadratura * 1e-2, epsrel=1e-12, limit=200)
        return valor

    def Q(u):
        return _evaluar_por_valor(Q_escalar, u)

    return EntropyPair(F, dF, Q, etiqueta=f"suave m={m} c={c:g}", quiebres=quiebres)


@dataclass(frozen=True)
class VerificacionPar:
    convexa: bool
    error_flujo: float

    @property
    def ok(self) -> bool:
        return self.convexa and self.error_flujo <= 1e-8


def verify_pair(pair: EntropyPair, puntos: int = 1000) -> VerificacionPar:
    """
    Chequeos sobre una malla de [0,1]:
    - convexidad: F(u_j) <= (F(u_{j-1}) + F(u_{j+1}))/2
    - relacion de flujo: Q(u_j) - Q(u_0) = int_{u_0}^{u_j} (1 - 2w) F'(w) dw
    """
    u = np.linspace(0.0, 1.0, puntos)
    Fu = np.asarray(pair.F(u), dtype=float)
    convexa = bool(np.all(Fu[1:-1] <= 0.5 * (Fu[:-2] + Fu[2:]) + 1e-12))

    def integrando(w):
        return (1.0 - 2.0 * w) * float(pair.dF(w))

    Qu = np.asarray(pair.Q(u), dtype=float)
    # integrales por tramo entre nodos consecutivos, luego acumuladas
    tramos = np.empty(puntos - 1)
    for j in range(puntos - 1):
        a, b = u[j], u[j + 1]
        internos = [q for q in pair.quiebres if a < q < b]
        tramos[j], _ = quad(integrando, a, b, points=internos or None, epsabs=1e-13, epsrel=1e-12)
    esperado = np.concatenate([[0.0], np.cumsum(tramos)])
    error = float(np.max(np.abs((Qu - Qu[0]) - esperado)))
    if not convexa or error > 1e-8:
        logger.warning("verify_pair(%s): convexa=%s error_flujo=%.3e", pair.etiqueta, convexa, error)
    return VerificacionPar(convexa=convexa, error_flujo=error)


# ============================================================
# Flujos de entropia de borde
# ============================================================

@dataclass(frozen=True)
class BoundaryEntropyFlux:
    """
    Seccion Q_m(., v) de la familia separadora.

    side='left' usa la meseta [min(1/2, v) - 1/m, v + 1/m]; side='right' la reflejada
    [v - 1/m, max(1/2, v) + 1/m], que separa las trazas del borde derecho con Q_m < 0.
    """

    m: int
    v: float
    side: str = "left"

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m debe ser entero >= 1 (m={self.m})")
        if self.side not in ("left", "right"):
            raise ValueError(f"side debe ser 'left' o 'right' (side={self.side})")
        _validar_rango(self.v, "v")

    @property
    def meseta(self) -> tuple[float, float]:
        h = 1.0 / self.m
        if self.side == "left":
            return min(0.5, self.v) - h, self.v + h
        return self.v - h, max(0.5, self.v) + h

    def rampa(self, w):
        """f_m(w, v): -1 bajo v_bajo - 1/m, 0 en la meseta, +1 sobre v_alto + 1/m, lineal entre medio."""
        bajo, alto = self.meseta
        h = 1.0 / self.m
        return np.interp(w, [bajo - h, bajo, alto, alto + h], [-1.0, 0.0, 0.0, 1.0])

    def _evaluar(self, u: float) -> float:
        if u == self.v:
            return 0.0
        bajo, alto = self.meseta
        h = 1.0 / self.m
        a, b = min(u, self.v), max(u, self.v)
        puntos = [q for q in (bajo - h, bajo, alto, alto + h, 0.5) if a < q < b]
        valor, _ = quad(lambda w: (1.0 - 2.0 * w) * float(self.rampa(w)), self.v, u,
                        points=puntos or None, epsabs=1e-13, epsrel=1e-12, limit=200)
        return valor

    def __call__(self, u):
        return _evaluar_por_valor(self._evaluar, _validar_rango(u, "u"))


def boundary_flux_Qm(m: int, v: float, side: str = "left") -> BoundaryEntropyFlux:
    return BoundaryEntropyFlux(m, v, side)


# ============================================================
# Conjuntos admisibles de trazas
# ============================================================

def check_trace_set(u_trace: float, v_data: float, side: str, tau: Optional[float] = None) -> bool:
    """
    left : u in {v} U [1 - min(1/2, v), 1]
    right: u in [0, 1 - max(1/2, v)] U {v}
    """
    if side not in ("left", "right"):
        raise ValueError(f"side debe ser 'left' o 'right' (side={side})")
    tau = SETTINGS.tol_traza if tau is None else tau
    _validar_rango([u_trace, v_data], "u_trace/v_data")
    if abs(u_trace - v_data) <= tau:
        return True
    if side == "left":
        return u_trace >= 1.0 - min(0.5, v_data) - tau
    return u_trace <= 1.0 - max(0.5, v_data) + tau


def separating_m(u: float, v: float, side: str, m_max: int = 64,
                 tau: Optional[float] = None) -> Optional[int]:
    """Menor m <= m_max con Q_m(u, v) > tau (left) o Q_m(u, v) < -tau (right); None si no hay."""
    tau = SETTINGS.tol_traza if tau is None else tau
    if side not in ("left", "right"):
        raise ValueError(f"side debe ser 'left' o 'right' (side={side})")
    for m in range(1, m_max + 1):
        q = boundary_flux_Qm(m, v, side)(u)
        if (side == "left" and q > tau) or (side == "right" and q < -tau):
            return m
    return None


# ============================================================
# Produccion de entropia (forma debil)
# ============================================================

def _bump_1d(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s**2) ** 3, 0.0)


@dataclass(frozen=True)
class TestFunction:
    """psi >= 0 de soporte compacto en [t0, t1] x [x0, x1]."""

    __test__ = False  # evita que pytest la recolecte

    t0: float
    t1: float
    x0: float
    x1: float

    def __post_init__(self):
        if not (self.t0 < self.t1 and self.x0 < self.x1):
            raise ValueError("soporte vacio")

    @classmethod
    def bump(cls, t0: float, t1: float, x0: float, x1: float) -> "TestFunction":
        """Producto de (1 - s^2)^3 en cada variable normalizada: C^2 y >= 0."""
        return cls(t0, t1, x0, x1)

    def __call__(self, t, x):
        st = (2.0 * np.asarray(t, dtype=float) - self.t0 - self.t1) / (self.t1 - self.t0)
        sx = (2.0 * np.asarray(x, dtype=float) - self.x0 - self.x1) / (self.x1 - self.x0)
        return _bump_1d(st) * _bump_1d(sx)


def _diferencia_centrada(psi: np.ndarray, axis: int) -> np.ndarray:
    """
    Pesos D_j = (psi_{j+1} - psi_{j-1})/2 (un lado en los extremos): sum_j G_j D_j aproxima
    int G d(psi) y suma exactamente psi_N - psi_0 cuando G es constante.
    """
    psi = np.moveaxis(psi, axis, 0)
    D = np.empty_like(psi)
    D[1:-1] = 0.5 * (psi[2:] - psi[:-2])
    D[0] = 0.5 * (psi[1] - psi[0])
    D[-1] = 0.5 * (psi[-1] - psi[-2])
    return np.moveaxis(D, 0, axis)


def entropy_production(field: DensityField, pair: EntropyPair, p: float, psi: TestFunction) -> float:
    """
    Cuadratura de  int int [F(u) d_t psi + p Q(u) d_x psi] dx dt  sobre la malla del campo.
    Para soluciones de entropia el valor es >= -tol(dx).
    """
    T = field.T
    if not (0.0 < psi.t0 and psi.t1 < T and 0.0 < psi.x0 and psi.x1 < 1.0):
        raise ValueError(
            f"psi debe tener soporte en el interior de (0,{T}) x (0,1): "
            f"[{psi.t0},{psi.t1}] x [{psi.x0},{psi.x1}]"
        )
    if field.tiempos.size < 3:
        raise ValueError("el campo necesita al menos 3 tiempos guardados")

    tt, xx = np.meshgrid(field.tiempos, field.x, indexing="ij")
    Psi = psi(tt, xx)
    Fu = np.asarray(pair.F(field.u), dtype=float)
    Qu = np.asarray(pair.Q(field.u), dtype=float)

    termino_t = trapezoid(np.sum(Fu * _diferencia_centrada(Psi, 0), axis=0), field.x)
    termino_x = trapezoid(np.sum(Qu * _diferencia_centrada(Psi, 1), axis=1), field.tiempos)
    return float(termino_t + p * termino_x)
