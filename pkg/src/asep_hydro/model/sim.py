"""
Simulacion exacta del ASEP abierto y observables microscopicos.

Generador (tiempo macroscopico, escala hiperbolica):
    L = p n L_ta + sigma n^{1+kappa} L_ss + n^{1+theta} (L_- + L_+)

descompuesto en saltos dirigidos por enlace:
- derecha:   p n + sigma n^{1+kappa}   si eta_i = 1, eta_{i+1} = 0
- izquierda: sigma n^{1+kappa}         si eta_i = 0, eta_{i+1} = 1
y flips de borde:
- sitio 1: n^{1+theta} [alpha (1 - eta_1) + gamma eta_1]
- sitio n: n^{1+theta} [delta (1 - eta_n) + beta eta_n]

Responsabilidades:
- LatticeState / EventTable / Snapshot / Trayectoria
- step (un evento, util para tests) y simulate (kernel numba por lotes)
- promedios por bloques, corriente microscopica, aplicacion del generador
- densidad gruesa (DensityField), NESS exacto y empirico, diagnostico de equilibrio local

Sitios en la documentacion: 1-based (como en las formulas). En los arreglos: 0-based.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import spsolve

from asep_hydro.config.settings import SETTINGS
from asep_hydro.model import cinetica
from asep_hydro.model.core import (
    ErrorParametros,
    Grid,
    ModelParams,
    RateSchedule,
    RngStream,
    Tasas,
    mesoscopic_k,
    schedule_eval,
)
from asep_hydro.model.pde import DensityField, muestrear_perfil

logger = logging.getLogger(__name__)

Aleatorio = Union[RngStream, np.random.Generator]


class CadenaReducibleError(RuntimeError):
    """La cadena no es irreducible: el estado estacionario no es unico."""


class ErrorPresupuesto(RuntimeError):
    """El presupuesto de eventos no alcanza para el experimento pedido."""


def _generador(rng: Aleatorio) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generador()


# ============================================================
# Tipos
# ============================================================

@dataclass(frozen=True)
class LatticeState:
    eta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        eta = np.array(self.eta, dtype=np.int8, copy=True)
        if eta.ndim != 1 or eta.size < 2:
            raise ValueError("eta debe ser un vector de largo >= 2")
        if not np.isin(eta, (0, 1)).all():
            raise ValueError("eta solo admite valores 0 y 1")
        if self.t < 0.0:
            raise ValueError(f"t debe ser >= 0 (t={self.t})")
        eta.setflags(write=False)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return int(self.eta.size)

    @property
    def particulas(self) -> int:
        return int(self.eta.sum())


@dataclass(frozen=True)
class EventTable:
    derecha: np.ndarray      # (n-1,) tasa de salto a la derecha por enlace
    izquierda: np.ndarray    # (n-1,) tasa de salto a la izquierda por enlace
    flip_izq: float
    flip_der: float
    total: float

    def como_slots(self) -> np.ndarray:
        """Vector de tasas en el orden de slots del kernel."""
        return np.concatenate([self.derecha, self.izquierda, [self.flip_izq, self.flip_der]])


@dataclass(frozen=True)
class Snapshot:
    t: float
    eta: np.ndarray
    inyectadas_izq: int = 0
    removidas_izq: int = 0
    inyectadas_der: int = 0
    removidas_der: int = 0

    @property
    def balance(self) -> int:
        """Particulas netas que entraron por ambos bordes desde t=0."""
        return (self.inyectadas_izq - self.removidas_izq) + (self.inyectadas_der - self.removidas_der)

    def estado(self) -> LatticeState:
        return LatticeState(self.eta, self.t)


@dataclass
class Trayectoria:
    snapshots: list[Snapshot] = field(default_factory=list)
    truncada: bool = False
    eventos: int = 0
    particulas_iniciales: int = 0

    @property
    def tiempos(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def densidades(self) -> np.ndarray:
        return np.array([particle_density(s) for s in self.snapshots])

    def deriva_masa(self) -> np.ndarray:
        """densidad(t) - densidad(0) en cada snapshot."""
        if not self.snapshots:
            return np.zeros(0)
        n = self.snapshots[0].eta.size
        return self.densidades() - self.particulas_iniciales / n

    def balance_ok(self) -> bool:
        return all(int(s.eta.sum()) - self.particulas_iniciales == s.balance for s in self.snapshots)


# ============================================================
# Tabla de eventos
# ============================================================

def _reservorios(params: ModelParams, tasas: Tasas) -> np.ndarray:
    """Tasas de reservorio escaladas [alpha, beta, gamma, delta] * n^{1+theta}."""
    return np.asarray(params.escalas_reservorio(), dtype=float) * np.asarray(tasas, dtype=float)


def build_event_table(state: LatticeState, params: ModelParams, schedule: RateSchedule) -> EventTable:
    if state.n != params.n:
        raise ValueError(f"estado de largo {state.n} no coincide con n={params.n}")
    eta = state.eta
    izq, der = eta[:-1], eta[1:]
    derecha = np.where((izq == 1) & (der == 0), params.tasa_derecha, 0.0)
    izquierda = np.where((izq == 0) & (der == 1), params.tasa_izquierda, 0.0)

    a, b, g, d = _reservorios(params, schedule_eval(schedule, state.t))
    flip_izq = a * (1 - eta[0]) + g * eta[0]
    flip_der = d * (1 - eta[-1]) + b * eta[-1]
    total = float(derecha.sum() + izquierda.sum() + flip_izq + flip_der)
    return EventTable(derecha, izquierda, float(flip_izq), float(flip_der), total)


def _aplicar(eta: np.ndarray, slot: int) -> np.ndarray:
    nuevo = np.array(eta, dtype=np.int8, copy=True)
    cinetica.aplicar_evento(nuevo, slot, np.zeros(4, dtype=np.int64))
    return nuevo


def step(state: LatticeState, table: EventTable, rng: Aleatorio,
         horizonte: float = math.inf) -> tuple[LatticeState, float]:
    """
    Un paso de la cadena. `horizonte` es el siguiente quiebre del schedule (o el fin de la
    corrida): si el reloj exponencial lo supera, el evento se descarta y el estado queda
    congelado en el horizonte.
    """
    gen = _generador(rng)
    if table.total <= 0.0:
        if math.isinf(horizonte):
            raise ValueError("tasa total nula y sin horizonte: la cadena queda congelada")
        return LatticeState(state.eta, horizonte), horizonte - state.t

    tau = gen.exponential(1.0 / table.total)
    if state.t + tau >= horizonte:
        return LatticeState(state.eta, horizonte), horizonte - state.t

    slots = table.como_slots()
    acumuladas = np.cumsum(slots)
    s = int(np.searchsorted(acumuladas, gen.random() * table.total, side="right"))
    s = min(s, int(np.flatnonzero(slots > 0.0)[-1]))
    return LatticeState(_aplicar(state.eta, s), state.t + tau), tau


# ============================================================
# Simulacion por lotes (kernel numba)
# ============================================================

class _MotorCinetico:
    """Estado mutable de una corrida: buffers del kernel, uniformes y contadores."""

    def __init__(self, params: ModelParams, eta: np.ndarray, gen: np.random.Generator,
                 presupuesto: Optional[int] = None):
        n = params.n
        self.params = params
        self.eta = np.array(eta, dtype=np.int8, copy=True)
        self.tasas = np.zeros(2 * n)
        self.arbol = np.zeros(2 * n + 1)
        self.contadores = np.zeros(4, dtype=np.int64)
        self.gen = gen
        self.uniformes = gen.random(SETTINGS.lote_uniformes)
        self.pos = 0
        self.eventos = 0
        self.presupuesto = int(presupuesto if presupuesto is not None else SETTINGS.presupuesto_eventos)

    def avanzar_hasta(self, t: float, t_fin: float, schedule: RateSchedule,
                      ocupacion: Optional[np.ndarray] = None, indice: int = 0) -> tuple[float, int, bool]:
        """Avanza respetando los quiebres del schedule. Retorna (t, indice, truncada)."""
        if ocupacion is None:
            ocupacion = np.zeros(1)
        while t < t_fin:
            t_tramo = min(t_fin, schedule.siguiente_quiebre(t))
            res = _reservorios(self.params, schedule_eval(schedule, t))
            while True:
                t, self.pos, self.eventos, indice, estado = cinetica.avanzar(
                    self.eta, self.tasas, self.arbol, res,
                    self.params.tasa_derecha, self.params.tasa_izquierda,
                    t, t_tramo, self.uniformes, self.pos, self.contadores,
                    self.eventos, self.presupuesto, ocupacion, indice,
                )
                if estado == cinetica.SIN_UNIFORMES:
                    self.uniformes = self.gen.random(SETTINGS.lote_uniformes)
                    self.pos = 0
                    continue
                break
            if estado == cinetica.SIN_PRESUPUESTO:
                return t, indice, True
        return t, indice, False

    def snapshot(self, t: float) -> Snapshot:
        c = self.contadores
        return Snapshot(t, self.eta.copy(), int(c[0]), int(c[1]), int(c[2]), int(c[3]))


def simulate(params: ModelParams, schedule: RateSchedule, initial: LatticeState, T: float,
             observe_at: Sequence[float], rng: Aleatorio,
             presupuesto: Optional[int] = None) -> Trayectoria:
    """
    Trayectoria exacta con snapshots en observe_at. Si se agota el presupuesto de eventos
    la trayectoria queda marcada como truncada y contiene solo los snapshots alcanzados.
    """
    obs = np.asarray(observe_at, dtype=float)
    if obs.size and (np.any(np.diff(obs) < 0) or obs[0] < initial.t or obs[-1] > T):
        raise ValueError("observe_at debe estar ordenado y contenido en [t0, T]")
    if initial.n != params.n:
        raise ValueError(f"estado inicial de largo {initial.n} no coincide con n={params.n}")

    motor = _MotorCinetico(params, initial.eta, _generador(rng), presupuesto)
    tray = Trayectoria(particulas_iniciales=initial.particulas)
    t = initial.t

    for t_obs in obs:
        t, _, truncada = motor.avanzar_hasta(t, float(t_obs), schedule)
        if truncada:
            tray.truncada = True
            logger.warning(
                "Presupuesto de eventos agotado en t=%.6f (%d eventos); trayectoria truncada",
                t, motor.eventos,
            )
            break
        tray.snapshots.append(motor.snapshot(float(t_obs)))

    tray.eventos = motor.eventos
    logger.debug("simulate: n=%d, eventos=%d, snapshots=%d", params.n, tray.eventos, len(tray.snapshots))
    return tray


def sample_initial(v0, n: int, rng: Aleatorio) -> LatticeState:
    """Bernoulli producto con marginal v0(i/n), i = 1..n."""
    x = np.arange(1, n + 1) / n
    probs = muestrear_perfil(v0, x)
    eta = (_generador(rng).random(n) < probs).astype(np.int8)
    return LatticeState(eta, 0.0)


# ============================================================
# Promedios por bloques
# ============================================================

def _eta(state) -> np.ndarray:
    return state.eta if hasattr(state, "eta") else np.asarray(state)


def bar_eta(state, i: int, k: int) -> float:
    """(1/k) sum_{i'=0}^{k-1} eta_{i-i'}."""
    eta = _eta(state)
    if not (1 <= k <= i <= eta.size):
        raise IndexError(f"bar_eta requiere 1 <= k <= i <= n (i={i}, k={k}, n={eta.size})")
    return float(eta[i - k:i].mean())


def pesos_triangulares(k: int) -> np.ndarray:
    """w_{i'} = (k - |i'|)/k^2 para i' = -k+1..k-1."""
    j = np.arange(-k + 1, k)
    return (k - np.abs(j)) / float(k * k)


def hat_eta(state, i: int, k: int) -> float:
    """sum_{i'} w_{i'} eta_{i-i'}; equivale al promedio de bar_eta(i+i', k), i'=0..k-1."""
    eta = _eta(state)
    n = eta.size
    if not (1 <= k <= i <= n - k + 1):
        raise IndexError(f"hat_eta requiere k <= i <= n-k+1 (i={i}, k={k}, n={n})")
    return float(np.dot(pesos_triangulares(k), eta[i - k:i + k - 1]))


def hat_eta_perfil(eta: np.ndarray, k: int) -> np.ndarray:
    """hat_eta(i, k) para i = k..n-k+1 (largo n-2k+2)."""
    return np.convolve(np.asarray(eta, dtype=float), pesos_triangulares(k), mode="valid")


def _perfil_grueso(eta: np.ndarray, k: int) -> np.ndarray:
    n = eta.size
    u = np.empty(n)
    u[k - 1:n - k + 1] = hat_eta_perfil(eta, k)
    # relleno de borde con promedios unilaterales
    u[:k - 1] = eta[:k].mean()
    u[n - k + 1:] = eta[n - k:].mean()
    return u


def coarse_density(snapshots, params: ModelParams) -> DensityField:
    """
    u(t, x_i) = hat_eta(i, k); bar_eta unilateral cerca del borde.

    El sitio i se ubica en el centro de celda x_i = (i - 1/2)/n y no en i/n: asi el campo
    comparte malla con solve_entropy y solve_viscous (Grid.centros) y las distancias L1
    no interpolan. El corrimiento es de media celda, O(1/n).
    """
    snaps = snapshots.snapshots if isinstance(snapshots, Trayectoria) else list(snapshots)
    if not snaps:
        raise ValueError("coarse_density requiere al menos un snapshot")
    k = mesoscopic_k(params)
    tiempos = np.array([s.t for s in snaps])
    u = np.vstack([_perfil_grueso(np.asarray(s.eta), k) for s in snaps])

    T = float(tiempos[-1]) if tiempos[-1] > 0.0 else 1.0
    dt = float(np.min(np.diff(tiempos))) if tiempos.size > 1 else T
    grid = Grid(cells=params.n, dt=max(dt, 1e-12), T=T)
    return DensityField(tiempos=tiempos, x=grid.centros, u=u, grid=grid)


# ============================================================
# Corriente microscopica y generador
# ============================================================

def micro_current(state: LatticeState, params: ModelParams, schedule: RateSchedule, i: int) -> float:
    """
    j_{i,i+1}:
    - i = 0: n^{1+th_a} alpha (1 - eta_1) - n^{1+th_g} gamma eta_1
    - 1 <= i <= n-1: p n eta_i (1 - eta_{i+1}) + sigma n^{1+kappa} (eta_i - eta_{i+1})
    - i = n: n^{1+th_b} beta eta_n - n^{1+th_d} delta (1 - eta_n)
    """
    eta = state.eta
    n = params.n
    if not (0 <= i <= n):
        raise IndexError(f"i fuera de [0, n] (i={i})")
    a, b, g, d = _reservorios(params, schedule_eval(schedule, state.t))
    if i == 0:
        return float(a * (1 - eta[0]) - g * eta[0])
    if i == n:
        return float(b * eta[-1] - d * (1 - eta[-1]))
    izq, der = int(eta[i - 1]), int(eta[i])
    return float(params.p * n * izq * (1 - der) + params.tasa_izquierda * (izq - der))


def generator_apply(state: LatticeState, params: ModelParams, schedule: RateSchedule,
                    f: Callable[[np.ndarray], float]) -> float:
    """L f(eta) = sum sobre transiciones activas de tasa * (f(eta^e) - f(eta))."""
    slots = build_event_table(state, params, schedule).como_slots()
    base = f(state.eta)
    return float(sum(slots[s] * (f(_aplicar(state.eta, s)) - base) for s in np.flatnonzero(slots > 0.0)))


# ============================================================
# Estado estacionario
# ============================================================

def _tasas_constantes(rates) -> Tasas:
    if isinstance(rates, RateSchedule):
        if not rates.es_constante():
            raise ErrorParametros("se requieren tasas constantes en el tiempo")
        return rates.values[0]
    return tuple(float(x) for x in rates)


def _indice_estado(eta: np.ndarray) -> int:
    return int(np.dot(eta.astype(np.int64), 1 << np.arange(eta.size, dtype=np.int64)))


def _generador_denso(params: ModelParams, tasas: Tasas) -> sparse.csr_matrix:
    """Tasas fuera de la diagonal entre los 2^n estados (bit j = sitio j+1)."""
    n = params.n
    N = 1 << n
    estados = np.arange(N, dtype=np.int64)
    bits = (estados[:, None] >> np.arange(n)) & 1
    a, b, g, d = _reservorios(params, tasas)

    filas, columnas, valores = [], [], []

    def agregar(mascara, destino, tasa):
        tasa = np.broadcast_to(np.asarray(tasa, dtype=float), mascara.shape)
        sel = mascara & (tasa > 0.0)
        filas.append(estados[sel])
        columnas.append(destino[sel])
        valores.append(tasa[sel])

    for j in range(n - 1):
        par = estados ^ (1 << j) ^ (1 << (j + 1))
        agregar((bits[:, j] == 1) & (bits[:, j + 1] == 0), par, params.tasa_derecha)
        agregar((bits[:, j] == 0) & (bits[:, j + 1] == 1), par, params.tasa_izquierda)

    todos = np.ones(N, dtype=bool)
    agregar(todos, estados ^ 1, np.where(bits[:, 0] == 0, a, g))
    agregar(todos, estados ^ (1 << (n - 1)), np.where(bits[:, n - 1] == 0, d, b))

    return sparse.coo_matrix(
        (np.concatenate(valores), (np.concatenate(filas), np.concatenate(columnas))), shape=(N, N)
    ).tocsr()


def exact_stationary(params: ModelParams, rates) -> np.ndarray:
    """Resuelve pi Q = 0, sum pi = 1 sobre {0,1}^n (indice = sum_j eta_j 2^j)."""
    if params.n > SETTINGS.n_max_exacto:
        raise ErrorParametros(f"exact_stationary admite n <= {SETTINGS.n_max_exacto} (n={params.n})")
    A = _generador_denso(params, _tasas_constantes(rates))

    componentes, _ = csgraph.connected_components(A, directed=True, connection="strong")
    if componentes > 1:
        raise CadenaReducibleError(f"cadena reducible: {componentes} clases comunicantes")

    N = A.shape[0]
    Q = A - sparse.diags(np.asarray(A.sum(axis=1)).ravel())
    M = Q.T.tolil()
    M[0, :] = np.ones(N)
    b = np.zeros(N)
    b[0] = 1.0
    pi = spsolve(M.tocsc(), b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def empirical_stationary(params: ModelParams, rates, T: float, rng: Aleatorio,
                         t_burn: float = 0.0, initial: Optional[LatticeState] = None,
                         presupuesto: Optional[int] = None) -> np.ndarray:
    """Frecuencias de ocupacion ponderadas por tiempo sobre [t_burn, t_burn + T]."""
    if params.n > SETTINGS.n_max_exacto:
        raise ErrorParametros(f"empirical_stationary admite n <= {SETTINGS.n_max_exacto}")
    schedule = RateSchedule.constante(*_tasas_constantes(rates))
    eta0 = initial.eta if initial is not None else np.zeros(params.n, dtype=np.int8)
    motor = _MotorCinetico(params, eta0, _generador(rng), presupuesto)

    t, _, truncada = motor.avanzar_hasta(0.0, t_burn, schedule)
    ocupacion = np.zeros(1 << params.n)
    if not truncada:
        _, _, truncada = motor.avanzar_hasta(t, t_burn + T, schedule, ocupacion, _indice_estado(motor.eta))
    if truncada:
        logger.warning("empirical_stationary truncada tras %d eventos", motor.eventos)
    total = ocupacion.sum()
    if total <= 0.0:
        raise ErrorPresupuesto("no se acumulo tiempo de ocupacion")
    return ocupacion / total


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distribuciones de distinto tamano")
    return float(0.5 * np.abs(p - q).sum())


# ============================================================
# Diagnosticos
# ============================================================

def particle_density(snapshot) -> float:
    return float(np.mean(_eta(snapshot)))


def local_equilibrium_gap(snapshots, params: ModelParams) -> float:
    """
    Promedio espacio-tiempo de |f_{i,k} - hat(1 - hat)| con f = eta_1 (1 - eta_2),
    f_{i,k} el promedio de f sobre 2k-2 traslaciones, i = k..n-k.
    """
    snaps = snapshots.snapshots if isinstance(snapshots, Trayectoria) else list(snapshots)
    if not snaps:
        raise ValueError("se requiere al menos un snapshot")
    k = mesoscopic_k(params)
    largo = params.n - 2 * k + 1
    if largo < 1:
        raise ValueError(f"n={params.n} demasiado chico para k={k}")
    ventana = np.ones(2 * k - 2) / (2 * k - 2)

    brechas = []
    for s in snaps:
        eta = np.asarray(s.eta, dtype=float)
        f = eta[:-1] * (1.0 - eta[1:])
        f_bloque = np.convolve(f, ventana, mode="valid")[:largo]
        rho = hat_eta_perfil(eta, k)[:largo]
        brechas.append(np.mean(np.abs(f_bloque - rho * (1.0 - rho))))
    return float(np.mean(brechas))
