"""
Ecuaciones macroscopicas: ley de conservacion escalar y su perturbacion viscosa.

    d_t u + p d_x J(u) = 0,           J(u) = u (1 - u)
    d_t u = eps d_x^2 u - p d_x J(u)

Este modulo contiene:
- DensityField / BoundaryData: campos u(t, x) y datos iniciales/de borde.
- Flujo de Godunov y esquema de Godunov de primer orden con celdas fantasma (Dirichlet).
- Solucion exacta del problema de Riemann (oraculo).
- Esquema viscoso explicito con los tres regimenes de borde (fast / critical / slow).
- Calculadoras de datos de borde: reservorios fuertes, limite viscoso, relacion de Liggett.

Convencion de malla: celdas de ancho dx = 1/M con centros x_m = (m + 1/2) dx.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Callable, Optional

import numpy as np
from scipy.integrate import trapezoid

from asep_hydro.config.settings import SETTINGS
from asep_hydro.model.core import ErrorParametros, Grid, RateSchedule, Tasas, schedule_eval

logger = logging.getLogger(__name__)

Perfil = Callable[[np.ndarray], np.ndarray]


class ErrorCFL(ValueError):
    """Paso de tiempo que viola la condicion CFL del esquema."""


class ErrorRegimen(ValueError):
    """Regimen de borde incompatible con las tasas entregadas."""


class Regimen(str, Enum):
    FAST = "fast"
    CRITICAL = "critical"
    SLOW = "slow"


# -------------------------------------------------------
# Utilidades de rango
# -------------------------------------------------------

def _validar_rango(valores, nombre: str) -> np.ndarray:
    arr = np.asarray(valores, dtype=float)
    tol = SETTINGS.tol_rango
    if arr.size and (np.nanmin(arr) < -tol or np.nanmax(arr) > 1.0 + tol or np.isnan(arr).any()):
        raise ValueError(f"{nombre} fuera de [0,1]")
    return arr


def muestrear_perfil(v0, x: np.ndarray) -> np.ndarray:
    """Evalua un perfil (callable o arreglo ya muestreado) en los puntos x."""
    if callable(v0):
        valores = np.broadcast_to(np.asarray(v0(x), dtype=float), x.shape).copy()
    else:
        valores = np.asarray(v0, dtype=float).copy()
        if valores.shape != x.shape:
            # arreglo de otra resolucion: interpolacion a celdas
            xs = (np.arange(valores.size) + 0.5) / valores.size
            valores = np.interp(x, xs, valores)
    return _validar_rango(valores, "v0")


# ============================================================
# Tipos
# ============================================================

def _constante(c: float, t: float) -> float:
    return c


def _borde_fuerte(schedule: RateSchedule, lado: int, t: float) -> float:
    return boundary_values_fast(schedule_eval(schedule, t))[lado]


def _borde_viscoso(schedule: RateSchedule, p: float, lado: int, t: float) -> float:
    return boundary_values_viscous_limit(p, schedule_eval(schedule, t))[lado]


@dataclass(frozen=True)
class BoundaryData:
    v0: Perfil
    v_minus: Callable[[float], float]
    v_plus: Callable[[float], float]

    @classmethod
    def constantes(cls, v0: Perfil, v_minus: float, v_plus: float) -> "BoundaryData":
        _validar_rango([v_minus, v_plus], "v_minus/v_plus")
        return cls(v0, partial(_constante, float(v_minus)), partial(_constante, float(v_plus)))

    @classmethod
    def lentas(cls, v0: Perfil) -> "BoundaryData":
        """Datos de borde de los reservorios debiles: v_- = 0, v_+ = 1."""
        return cls.constantes(v0, 0.0, 1.0)

    @classmethod
    def fuertes(cls, v0: Perfil, schedule: RateSchedule) -> "BoundaryData":
        """v_- = alpha/(alpha+gamma), v_+ = delta/(beta+delta) tramo a tramo."""
        for tasas in schedule.values:
            boundary_values_fast(tasas)
        return cls(v0, partial(_borde_fuerte, schedule, 0), partial(_borde_fuerte, schedule, 1))

    @classmethod
    def limite_viscoso(cls, v0: Perfil, p: float, schedule: RateSchedule) -> "BoundaryData":
        """Datos del limite de viscosidad evanescente (formula con radicales) tramo a tramo."""
        for tasas in schedule.values:
            boundary_values_viscous_limit(p, tasas)
        return cls(
            v0,
            partial(_borde_viscoso, schedule, p, 0),
            partial(_borde_viscoso, schedule, p, 1),
        )


@dataclass(frozen=True)
class DensityField:
    tiempos: np.ndarray
    x: np.ndarray
    u: np.ndarray
    grid: Grid
    # flujos de Godunov en las caras de borde por paso (solo solve_entropy)
    flujo_izq: Optional[np.ndarray] = None
    flujo_der: Optional[np.ndarray] = None
    t_pasos: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.u.shape != (self.tiempos.size, self.x.size):
            raise ValueError(
                f"forma de u {self.u.shape} no coincide con ({self.tiempos.size}, {self.x.size})"
            )
        _validar_rango(self.u, "u")

    @property
    def dx(self) -> float:
        return 1.0 / self.x.size

    @property
    def T(self) -> float:
        return float(self.tiempos[-1])

    def indice_tiempo(self, t: float, exacto: bool = True) -> int:
        j = int(np.argmin(np.abs(self.tiempos - t)))
        if exacto and not math.isclose(self.tiempos[j], t, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(f"t={t} no esta en la malla temporal del campo")
        return j

    def fila(self, t: float, exacto: bool = True) -> np.ndarray:
        return self.u[self.indice_tiempo(t, exacto)]

    def fila_interpolada(self, t: float) -> np.ndarray:
        """Interpolacion lineal en el tiempo entre filas guardadas (constante fuera del rango)."""
        j = int(np.searchsorted(self.tiempos, t))
        if j <= 0:
            return self.u[0]
        if j >= self.tiempos.size:
            return self.u[-1]
        t0, t1 = self.tiempos[j - 1], self.tiempos[j]
        w = (t - t0) / (t1 - t0)
        return (1.0 - w) * self.u[j - 1] + w * self.u[j]


# ============================================================
# Flujos
# ============================================================

def flux_J(u, p: float = 1.0):
    """p J(u) = p u (1 - u)."""
    return p * u * (1.0 - u)


def _godunov(a, b, p):
    ja = a * (1.0 - a)
    jb = b * (1.0 - b)
    subida = np.minimum(ja, jb)
    sonico = (b <= 0.5) & (a >= 0.5)
    bajada = np.where(sonico, 0.25, np.maximum(ja, jb))
    return p * np.where(a <= b, subida, bajada)


def godunov_flux(a, b, p: float):
    """
    Flujo de Godunov para J concava:
    - a <= b: min de J en [a, b] = min(J(a), J(b))
    - a > b : max de J en [b, a] (J(1/2) si 1/2 esta en [b, a])
    """
    a_arr = _validar_rango(a, "a")
    b_arr = _validar_rango(b, "b")
    out = _godunov(a_arr, b_arr, p)
    return float(out) if out.ndim == 0 else out


# ============================================================
# Mallas con CFL
# ============================================================

def dt_max_entropia(dx: float, p: float) -> float:
    return dx / p


def dt_max_viscoso(dx: float, p: float, epsilon: float, suma_tasas: float = 0.0) -> float:
    """dt (p/dx + 2 eps/dx^2 + R/dx) <= 1, que implica dt <= min(dx/p, dx^2/(2 eps))."""
    return 1.0 / (p / dx + 2.0 * epsilon / dx**2 + suma_tasas / dx)


def grid_entropia(cells: int, T: float, p: float) -> Grid:
    return Grid(cells=cells, dt=SETTINGS.fraccion_cfl * dt_max_entropia(1.0 / cells, p), T=T)


def grid_viscoso(cells: int, T: float, p: float, epsilon: float, tasas: Tasas = (0, 0, 0, 0)) -> Grid:
    suma = _suma_tasas_borde(tasas)
    return Grid(cells=cells, dt=SETTINGS.fraccion_cfl * dt_max_viscoso(1.0 / cells, p, epsilon, suma), T=T)


def _suma_tasas_borde(tasas: Tasas) -> float:
    alpha, beta, gamma, delta = tasas
    return max(alpha + gamma, beta + delta)


# ============================================================
# Esquema de Godunov (solucion de entropia)
# ============================================================

def solve_entropy(bd: BoundaryData, p: float, grid: Grid, guardar_cada: int = 1) -> DensityField:
    """
    Godunov de primer orden con celdas fantasma que llevan v_-(t) y v_+(t).

    Las trazas de borde no se imponen: emergen del flujo numerico en las caras de borde.
    """
    dx = grid.dx
    if grid.dt > dt_max_entropia(dx, p) * (1.0 + 1e-12):
        raise ErrorCFL(f"dt={grid.dt} excede dx/p={dt_max_entropia(dx, p)}")

    x = grid.centros
    u = muestrear_perfil(bd.v0, x)
    t_pasos = grid.tiempos_paso()
    n_pasos = t_pasos.size - 1

    guardados = [u.copy()]
    tiempos = [0.0]
    flujo_izq = np.empty(n_pasos)
    flujo_der = np.empty(n_pasos)

    ext = np.empty(grid.cells + 2)
    for j in range(n_pasos):
        t = t_pasos[j]
        dt = t_pasos[j + 1] - t
        ext[0] = _validar_rango(bd.v_minus(t), "v_minus")
        ext[-1] = _validar_rango(bd.v_plus(t), "v_plus")
        ext[1:-1] = u

        F = _godunov(ext[:-1], ext[1:], p)
        u = u - (dt / dx) * (F[1:] - F[:-1])
        flujo_izq[j] = F[0]
        flujo_der[j] = F[-1]

        if (j + 1) % guardar_cada == 0 or j + 1 == n_pasos:
            guardados.append(u.copy())
            tiempos.append(t_pasos[j + 1])

    logger.debug("solve_entropy: M=%d, pasos=%d", grid.cells, n_pasos)
    return DensityField(
        tiempos=np.asarray(tiempos),
        x=x,
        u=np.vstack(guardados),
        grid=grid,
        flujo_izq=flujo_izq,
        flujo_der=flujo_der,
        t_pasos=t_pasos,
    )


# ============================================================
# Problema de Riemann exacto
# ============================================================

class SolucionRiemann:
    """
    Solucion de entropia de d_t u + p d_x[u(1-u)] = 0 con dato u_l | u_r en x0.
    - u_l < u_r: choque con velocidad s = p (1 - u_l - u_r)
    - u_l > u_r: rarefaccion u = (1 - xi/p)/2 en [p(1-2u_l), p(1-2u_r)]
    """

    def __init__(self, u_l: float, u_r: float, p: float, x0: float = 0.0):
        _validar_rango([u_l, u_r], "u_l/u_r")
        self.u_l = float(u_l)
        self.u_r = float(u_r)
        self.p = float(p)
        self.x0 = float(x0)
        self.velocidad_choque = p * (1.0 - u_l - u_r) if u_l < u_r else None

    def __call__(self, t: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = x - self.x0
        if self.u_l == self.u_r:
            return np.full_like(x, self.u_l)
        if t <= 0.0:
            return np.where(y < 0.0, self.u_l, self.u_r)
        if self.u_l < self.u_r:
            return np.where(y < self.velocidad_choque * t, self.u_l, self.u_r)
        xi = y / t
        abanico = 0.5 * (1.0 - xi / self.p)
        return np.clip(abanico, self.u_r, self.u_l)


def riemann_exact(u_l: float, u_r: float, p: float, x0: float = 0.0) -> SolucionRiemann:
    return SolucionRiemann(u_l, u_r, p, x0)


# ============================================================
# Distancias L1
# ============================================================

def l1_error_vs_exact(field: DensityField, exacta: Callable[[float, np.ndarray], np.ndarray], t: float) -> float:
    """Error L1 en x al tiempo t contra los promedios de celda de la solucion exacta."""
    fila = field.fila(t)
    S = SETTINGS.subpuntos_celda
    dx = field.dx
    offsets = ((np.arange(S) + 0.5) / S - 0.5) * dx
    puntos = field.x[:, None] + offsets[None, :]
    valores = exacta(t, puntos)
    return float(dx * np.sum(np.mean(np.abs(fila[:, None] - valores), axis=1)))


def _l1_fila(xa, ua, xb, ub, x_min, x_max) -> float:
    # se compara sobre la malla mas gruesa
    if xa.size > xb.size:
        xa, ua, xb, ub = xb, ub, xa, ua
    mascara = (xa >= x_min) & (xa <= x_max)
    if not mascara.any():
        return 0.0
    diferencia = np.abs(ua[mascara] - np.interp(xa[mascara], xb, ub))
    return float(np.mean(diferencia) * (x_max - x_min))


def l1_distance_at(a: DensityField, b: DensityField, t: float,
                   x_min: float = 0.0, x_max: float = 1.0) -> float:
    """Distancia L1 espacial al tiempo t (cada campo interpolado linealmente en el tiempo)."""
    return _l1_fila(a.x, a.fila_interpolada(t), b.x, b.fila_interpolada(t), x_min, x_max)


def l1_distance(a: DensityField, b: DensityField, t_min: float = 0.0,
                x_min: float = 0.0, x_max: float = 1.0) -> float:
    """
    Distancia L1 espacio-tiempo sobre [t_min, T] x [x_min, x_max].

    Usa los tiempos guardados de `a`; `b` se interpola en el tiempo.
    """
    tiempos = a.tiempos[a.tiempos >= t_min - 1e-12]
    if tiempos.size == 0:
        raise ValueError("no hay tiempos del campo en la ventana pedida")
    valores = np.array([l1_distance_at(a, b, t, x_min, x_max) for t in tiempos])
    if tiempos.size == 1:
        return float(valores[0])
    return float(trapezoid(valores, tiempos))


# ============================================================
# Esquema viscoso
# ============================================================

def solve_viscous(v0: Perfil, schedule: RateSchedule, epsilon: float, p: float,
                  grid: Grid, regime, guardar_cada: int = 1) -> DensityField:
    """
    Diferencias finitas explicitas en forma conservativa para
        d_t u = -d_x Phi,    Phi = p J(u) - eps d_x u

    Cierre de borde por regimen:
    - fast    : celdas de borde fijadas en alpha/(alpha+gamma) y delta/(beta+delta)
    - critical: Phi(0) = alpha - (alpha+gamma) u_0 ;  Phi(1) = (beta+delta) u_{M-1} - delta
    - slow    : Phi(0) = Phi(1) = 0 (sin flujo)
    """
    regime = Regimen(regime)
    if epsilon <= 0.0:
        raise ValueError("epsilon debe ser > 0")
    if not schedule.es_constante():
        raise ErrorRegimen("solve_viscous requiere tasas constantes en el tiempo")
    tasas = schedule.values[0]
    alpha, beta, gamma, delta = tasas

    dx = grid.dx
    suma = _suma_tasas_borde(tasas) if regime == Regimen.CRITICAL else 0.0
    dt_max = dt_max_viscoso(dx, p, epsilon, suma)
    if grid.dt > dt_max * (1.0 + 1e-12):
        raise ErrorCFL(f"dt={grid.dt} excede el maximo monotono {dt_max}")

    fijos = None
    if regime == Regimen.FAST:
        try:
            fijos = boundary_values_fast(tasas)
        except ValueError as e:
            raise ErrorRegimen(f"regimen fast con tasas invalidas: {e}") from e

    x = grid.centros
    u = muestrear_perfil(v0, x)
    if fijos is not None:
        u[0], u[-1] = fijos

    t_pasos = grid.tiempos_paso()
    n_pasos = t_pasos.size - 1
    guardados = [u.copy()]
    tiempos = [0.0]
    Phi = np.empty(grid.cells + 1)

    for j in range(n_pasos):
        dt = t_pasos[j + 1] - t_pasos[j]
        Phi[1:-1] = _godunov(u[:-1], u[1:], p) - epsilon * (u[1:] - u[:-1]) / dx
        if regime == Regimen.CRITICAL:
            Phi[0] = alpha - (alpha + gamma) * u[0]
            Phi[-1] = (beta + delta) * u[-1] - delta
        else:
            Phi[0] = 0.0
            Phi[-1] = 0.0
        u = u - (dt / dx) * (Phi[1:] - Phi[:-1])
        if fijos is not None:
            u[0], u[-1] = fijos

        if (j + 1) % guardar_cada == 0 or j + 1 == n_pasos:
            guardados.append(u.copy())
            tiempos.append(t_pasos[j + 1])

    logger.debug("solve_viscous: regimen=%s eps=%g M=%d pasos=%d", regime.value, epsilon, grid.cells, n_pasos)
    return DensityField(tiempos=np.asarray(tiempos), x=x, u=np.vstack(guardados), grid=grid, t_pasos=t_pasos)


# ============================================================
# Datos de borde en forma cerrada
# ============================================================

def boundary_values_fast(rates: Tasas) -> tuple[float, float]:
    """Reservorios fuertes: (alpha/(alpha+gamma), delta/(beta+delta))."""
    alpha, beta, gamma, delta = rates
    if alpha + gamma <= 0.0 or beta + delta <= 0.0:
        raise ErrorParametros("alpha+gamma y beta+delta deben ser > 0")
    return alpha / (alpha + gamma), delta / (beta + delta)


def _acotar(v: float, nombre: str) -> float:
    tol = 1e-9
    if v < -tol or v > 1.0 + tol:
        raise ValueError(f"{nombre}={v} fuera de [0,1]")
    return min(1.0, max(0.0, v))


def boundary_values_viscous_limit(p: float, rates: Tasas) -> tuple[float, float]:
    """
    Limite de viscosidad evanescente del regimen critico:
        v_- = (p + a + g - sqrt((p - a + g)^2 + 4 a g)) / (2p)
        v_+ = (p - b - d + sqrt((p - b + d)^2 + 4 b d)) / (2p)
    """
    if p <= 0.0:
        raise ErrorParametros("p debe ser > 0")
    alpha, beta, gamma, delta = rates
    v_minus = (p + alpha + gamma - math.sqrt((p - alpha + gamma) ** 2 + 4.0 * alpha * gamma)) / (2.0 * p)
    v_plus = (p - beta - delta + math.sqrt((p - beta + delta) ** 2 + 4.0 * beta * delta)) / (2.0 * p)
    return _acotar(v_minus, "v_-"), _acotar(v_plus, "v_+")


def liggett_check(p: float, sigma: float, rates: Tasas) -> tuple[bool, Optional[tuple[float, float]]]:
    """
    Relacion de Liggett: alpha/(p+sigma) + gamma/sigma = 1 y beta/(p+sigma) + delta/sigma = 1.
    Si se cumple, retorna v_- = alpha/(p+sigma), v_+ = delta/sigma.
    """
    if p <= 0.0 or sigma <= 0.0:
        raise ErrorParametros("p y sigma deben ser > 0")
    alpha, beta, gamma, delta = rates
    tol = SETTINGS.tol_liggett
    izq = alpha / (p + sigma) + gamma / sigma - 1.0
    der = beta / (p + sigma) + delta / sigma - 1.0
    if abs(izq) > tol or abs(der) > tol:
        return False, None

    valores = (alpha / (p + sigma), delta / sigma)
    radicales = boundary_values_viscous_limit(p, rates)
    if max(abs(valores[0] - radicales[0]), abs(valores[1] - radicales[1])) > SETTINGS.tol_consistencia:
        raise RuntimeError(f"Liggett {valores} no coincide con la formula con radicales {radicales}")
    return True, valores


# ============================================================
# Perfiles con nombre
# ============================================================

def _escalon(y: float, bajada: bool, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where(x < y, 1.0, 0.0) if bajada else np.where(x > y, 1.0, 0.0)


def _valor_constante(c: float, x) -> np.ndarray:
    return np.full(np.shape(x), c)


def _riemann_inicial(u_l: float, u_r: float, x0: float, x) -> np.ndarray:
    return np.where(np.asarray(x, dtype=float) < x0, u_l, u_r)


def perfil_constante(c: float) -> Perfil:
    _validar_rango(c, "c")
    return partial(_valor_constante, float(c))


def perfil_escalon(y: float) -> Perfil:
    """1_{(y,1)}: choque ascendente."""
    return partial(_escalon, float(y), False)


def perfil_escalon_bajada(y: float) -> Perfil:
    """1_{(0,y)}: choque descendente."""
    return partial(_escalon, float(y), True)


def perfil_riemann(u_l: float, u_r: float, x0: float) -> Perfil:
    _validar_rango([u_l, u_r], "u_l/u_r")
    return partial(_riemann_inicial, float(u_l), float(u_r), float(x0))
