"""
Tipos base compartidos por todos los modulos.

Este modulo contiene:
- ModelParams: constantes de escala microscopicas (n, p, sigma, kappa, theta, kappa').
- RateSchedule: tasas de reservorio (alpha, beta, gamma, delta) constantes por tramos.
- Grid: malla espacio-tiempo para los resolvedores de EDP.
- RngStream: semilla + id de stream, genera numpy.random.Generator reproducibles.

Todas las clases son inmutables (dataclass congelada) y se pueden compartir entre procesos.

Convencion de tasas: siempre la 4-tupla (alpha, beta, gamma, delta).
- alpha: creacion en el sitio 1      gamma: destruccion en el sitio 1
- delta: creacion en el sitio n      beta:  destruccion en el sitio n
"""

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

Tasas = tuple[float, float, float, float]


class ErrorParametros(ValueError):
    """Parametros del modelo fuera de su dominio."""


# -------------------------------------------------------
# Ventanas de exponentes
# -------------------------------------------------------

def ventana_kappa_prime(kappa: float) -> tuple[float, float]:
    """
    Intervalo abierto admisible para kappa':
        ( min{2 kappa - 1, (1 + kappa)/3}, kappa )
    """
    return min(2.0 * kappa - 1.0, (1.0 + kappa) / 3.0), kappa


@dataclass(frozen=True)
class ModelParams:
    n: int
    p: float
    sigma: float
    kappa: float
    theta: float
    kappa_prime: Optional[float] = None
    # (theta_-1, theta_-2, theta_+1, theta_+2) -> exponentes de alpha, gamma, beta, delta
    theta_split: Optional[tuple[float, float, float, float]] = None
    # relaja las ventanas probadas (p=0 permitido, kappa libre); solo para oraculos
    unsafe: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ErrorParametros(f"n debe ser entero >= 2 (n={self.n})")
        if self.sigma <= 0.0:
            raise ErrorParametros(f"sigma debe ser > 0 (sigma={self.sigma})")
        if self.p < 0.0 or (self.p == 0.0 and not self.unsafe):
            raise ErrorParametros(f"p debe ser > 0 (p={self.p})")
        if self.theta_split is not None and len(self.theta_split) != 4:
            raise ErrorParametros("theta_split debe tener 4 exponentes")

        # kappa' por defecto: punto medio de la ventana
        if self.kappa_prime is None:
            lo, hi = ventana_kappa_prime(self.kappa)
            object.__setattr__(self, "kappa_prime", 0.5 * (lo + hi))

        if not self.unsafe:
            self.validar_kappa_prime()

    def validar_kappa_prime(self) -> None:
        lo, hi = ventana_kappa_prime(self.kappa)
        if not (lo < self.kappa_prime < hi):
            raise ErrorParametros(
                f"kappa'={self.kappa_prime} fuera de la ventana ({lo:.4f}, {hi:.4f}) "
                f"para kappa={self.kappa}"
            )

    def validar_kappa(self, minimo: float) -> None:
        """Exige kappa en (minimo, 1). Los experimentos llaman con 1/2 o 5/7."""
        if self.unsafe:
            return
        if not (minimo < self.kappa < 1.0):
            raise ErrorParametros(
                f"kappa={self.kappa} fuera de ({minimo:.4f}, 1); usa --unsafe-params para forzar"
            )

    def exponentes_reservorio(self) -> tuple[float, float, float, float]:
        """Exponentes de (alpha, gamma, beta, delta)."""
        if self.theta_split is not None:
            return tuple(float(x) for x in self.theta_split)
        return (self.theta,) * 4

    def escalas_reservorio(self) -> tuple[float, float, float, float]:
        """n^{1+theta} para (alpha, beta, gamma, delta), en el orden de las tasas."""
        ta, tg, tb, td = self.exponentes_reservorio()
        n = float(self.n)
        return n ** (1.0 + ta), n ** (1.0 + tb), n ** (1.0 + tg), n ** (1.0 + td)

    @property
    def tasa_derecha(self) -> float:
        """Salto a la derecha por enlace: p n + sigma n^{1+kappa}."""
        return self.p * self.n + self.tasa_izquierda

    @property
    def tasa_izquierda(self) -> float:
        """Salto a la izquierda por enlace: sigma n^{1+kappa}."""
        return self.sigma * float(self.n) ** (1.0 + self.kappa)


def mesoscopic_k(params: ModelParams) -> int:
    """
    Escala mesoscopica k = [n^{kappa'}], acotada a [2, n/4] (la cota inferior manda).
    """
    if not params.unsafe:
        params.validar_kappa_prime()
    k = math.floor(params.n ** params.kappa_prime + 1e-9)
    return max(2, min(k, params.n // 4))


# -------------------------------------------------------
# Tasas de reservorio constantes por tramos
# -------------------------------------------------------

@dataclass(frozen=True)
class RateSchedule:
    breakpoints: tuple[float, ...]
    values: tuple[Tasas, ...]

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(tuple(float(x) for x in v) for v in self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

        if len(bps) == 0 or bps[0] != 0.0:
            raise ErrorParametros("breakpoints debe comenzar en 0")
        if len(bps) != len(vals):
            raise ErrorParametros("breakpoints y values deben tener el mismo largo")
        if any(b1 <= b0 for b0, b1 in zip(bps, bps[1:])):
            raise ErrorParametros("breakpoints debe ser estrictamente creciente")
        for v in vals:
            if len(v) != 4:
                raise ErrorParametros("cada tramo debe ser (alpha, beta, gamma, delta)")
            if not all(math.isfinite(x) and x >= 0.0 for x in v):
                raise ErrorParametros(f"tasas deben ser finitas y >= 0: {v}")

    @classmethod
    def constante(cls, alpha: float, beta: float, gamma: float, delta: float) -> "RateSchedule":
        return cls(breakpoints=(0.0,), values=((alpha, beta, gamma, delta),))

    def evaluar(self, t: float) -> Tasas:
        return schedule_eval(self, t)

    def siguiente_quiebre(self, t: float) -> float:
        """Primer breakpoint estrictamente mayor que t (inf si no hay)."""
        j = bisect.bisect_right(self.breakpoints, t)
        return self.breakpoints[j] if j < len(self.breakpoints) else math.inf

    def es_constante(self) -> bool:
        return len(set(self.values)) == 1

    def maximo(self) -> float:
        return max(max(v) for v in self.values)

    def algun_tramo(self, indices: tuple[int, ...], condicion) -> bool:
        """True si algun tramo cumple condicion(valor) para alguna de las tasas indicadas."""
        return any(condicion(v[j]) for v in self.values for j in indices)


def schedule_eval(s: RateSchedule, t: float) -> Tasas:
    """Busqueda continua por la derecha del tramo que contiene t."""
    if t < 0.0:
        raise ErrorParametros(f"t debe ser >= 0 (t={t})")
    j = bisect.bisect_right(s.breakpoints, t) - 1
    return s.values[j]


# -------------------------------------------------------
# Malla de los resolvedores
# -------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    cells: int
    dt: float
    T: float

    def __post_init__(self):
        if int(self.cells) != self.cells or self.cells < 2:
            raise ErrorParametros(f"cells debe ser entero >= 2 (cells={self.cells})")
        if not self.dt > 0.0:
            raise ErrorParametros(f"dt debe ser > 0 (dt={self.dt})")
        if not self.T > 0.0:
            raise ErrorParametros(f"T debe ser > 0 (T={self.T})")

    @property
    def dx(self) -> float:
        return 1.0 / self.cells

    @property
    def centros(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    @property
    def n_pasos(self) -> int:
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    def tiempos_paso(self) -> np.ndarray:
        """Tiempos t_0=0, ..., t_N=T; el ultimo paso se acorta para terminar en T."""
        t = np.minimum(np.arange(self.n_pasos + 1) * self.dt, self.T)
        t[-1] = self.T
        return t


# -------------------------------------------------------
# Aleatoriedad reproducible
# -------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    seed: int
    stream: int = 0
    _semilla: np.random.SeedSequence = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ErrorParametros("seed debe ser un entero de 64 bits no negativo")
        object.__setattr__(
            self, "_semilla", np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        )

    def generador(self) -> np.random.Generator:
        """Mismo (seed, stream) => misma secuencia de sorteos."""
        return np.random.Generator(np.random.PCG64(self._semilla))

    def hijo(self, stream: int) -> "RngStream":
        """Stream independiente para replicas (seed comun, id distinto)."""
        return RngStream(self.seed, (self.stream + 1) * 1_000_003 + stream)
