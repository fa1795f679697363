"""
Este modulo define las fuentes de campos de densidad para el controller.

Una fuente es un componente que entrega un DensityField:
- FuenteEntropia: esquema de Godunov (solucion de entropia).
- FuenteViscosa: esquema viscoso en uno de los tres regimenes de borde.
- FuenteParticulas: simulacion exacta + densidad gruesa.
- FuenteCSV: campo leido desde un CSV `t, x, u` ya generado.

Idea de arquitectura:
- El Controller solo conoce el contrato FuenteDensidad.obtener_campo().
- Asi los experimentos de trazas y comparaciones L1 no dependen de donde vino el campo.
"""

import math
from pathlib import Path
from typing import Optional

import numpy as np

from asep_hydro.config.settings import SETTINGS
from asep_hydro.controller.decodificador import ConfigExperimento, ErrorConfiguracion, decodificar_perfil
from asep_hydro.model.almacenamiento import leer_densidad_csv
from asep_hydro.model.core import Grid, ModelParams, RateSchedule, RngStream
from asep_hydro.model.pde import (
    BoundaryData,
    DensityField,
    Perfil,
    Regimen,
    grid_entropia,
    grid_viscoso,
    solve_entropy,
    solve_viscous,
)
from asep_hydro.model.sim import Trayectoria, coarse_density, sample_initial, simulate

# filas guardadas aproximadas por corrida de EDP
_FILAS_OBJETIVO = 200


def guardar_cada(grid: Grid) -> int:
    return max(1, grid.n_pasos // _FILAS_OBJETIVO)


# ============================================================
# 0) CONTRATO BASE (interfaz)
# ============================================================

class FuenteDensidad:
    """
    Contrato que deben cumplir todas las fuentes.

    El controller trabajara con objetos que implementen:
    - obtener_campo() -> DensityField
    """

    def obtener_campo(self) -> DensityField:
        raise NotImplementedError


# ============================================================
# 1) EDP
# ============================================================

class FuenteEntropia(FuenteDensidad):
    def __init__(self, bd: BoundaryData, p: float, grid: Grid, cada: Optional[int] = None):
        self.bd = bd
        self.p = p
        self.grid = grid
        self.cada = cada if cada is not None else guardar_cada(grid)

    def obtener_campo(self) -> DensityField:
        return solve_entropy(self.bd, self.p, self.grid, self.cada)


class FuenteViscosa(FuenteDensidad):
    def __init__(self, v0: Perfil, schedule: RateSchedule, epsilon: float, p: float,
                 grid: Grid, regimen, cada: Optional[int] = None):
        self.v0 = v0
        self.schedule = schedule
        self.epsilon = epsilon
        self.p = p
        self.grid = grid
        self.regimen = Regimen(regimen)
        self.cada = cada if cada is not None else guardar_cada(grid)

    def obtener_campo(self) -> DensityField:
        return solve_viscous(self.v0, self.schedule, self.epsilon, self.p, self.grid, self.regimen, self.cada)


# ============================================================
# 2) PARTICULAS
# ============================================================

class FuenteParticulas(FuenteDensidad):
    """
    Simula desde un Bernoulli producto con marginal v0 y entrega la densidad gruesa.
    La trayectoria queda disponible en `trayectoria` despues de obtener_campo().
    """

    def __init__(self, params: ModelParams, schedule: RateSchedule, v0: Perfil, T: float,
                 rng: RngStream, observaciones: Optional[int] = None,
                 presupuesto: Optional[int] = None):
        self.params = params
        self.schedule = schedule
        self.v0 = v0
        self.T = T
        self.rng = rng
        self.observaciones = observaciones or max(
            3, int(math.ceil(SETTINGS.observaciones_por_unidad * T)) + 1
        )
        self.presupuesto = presupuesto
        self.trayectoria: Optional[Trayectoria] = None

    def tiempos_observacion(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.observaciones)

    def obtener_campo(self) -> DensityField:
        inicial = sample_initial(self.v0, self.params.n, self.rng.hijo(0))
        self.trayectoria = simulate(
            self.params, self.schedule, inicial, self.T,
            self.tiempos_observacion(), self.rng.hijo(1), self.presupuesto,
        )
        return coarse_density(self.trayectoria, self.params)


# ============================================================
# 3) CSV
# ============================================================

class FuenteCSV(FuenteDensidad):
    def __init__(self, ruta_csv: str):
        self.ruta = Path(ruta_csv)

    def obtener_campo(self) -> DensityField:
        if not self.ruta.exists():
            raise FileNotFoundError(f"No existe el CSV de densidad: {self.ruta}")
        return leer_densidad_csv(self.ruta)


# ============================================================
# 4) Construccion desde la configuracion
# ============================================================

def datos_de_borde(tipo, v0: Perfil, p: float, schedule: Optional[RateSchedule]) -> BoundaryData:
    """
    tipo: "fast" | "slow" | "viscous-limit" | [v_minus, v_plus]
    """
    if isinstance(tipo, list):
        if len(tipo) != 2:
            raise ErrorConfiguracion("boundary como lista debe ser [v_minus, v_plus]")
        return BoundaryData.constantes(v0, float(tipo[0]), float(tipo[1]))
    if tipo == "slow":
        return BoundaryData.lentas(v0)
    if schedule is None:
        raise ErrorConfiguracion(f"boundary '{tipo}' requiere 'schedule'")
    if tipo == "fast":
        return BoundaryData.fuertes(v0, schedule)
    if tipo == "viscous-limit":
        return BoundaryData.limite_viscoso(v0, p, schedule)
    raise ErrorConfiguracion(f"boundary desconocido: {tipo!r}")


def crear_fuente_solve(cfg: ConfigExperimento, bloque: Optional[dict] = None) -> FuenteDensidad:
    """Fuente de EDP a partir de un bloque tipo 'solve' (por defecto cfg.experimento)."""
    exp = cfg.experimento if bloque is None else bloque
    if cfg.p is None:
        raise ErrorConfiguracion("se requiere 'model.p' para resolver la EDP")
    v0 = decodificar_perfil(exp.get("v0", "constant:0.5"))
    cells = int(cfg.grid.get("cells", 400))
    T = float(cfg.grid.get("T", SETTINGS.T_convergencia))
    esquema = exp.get("scheme", "entropy")

    if esquema == "entropy":
        grid = grid_entropia(cells, T, cfg.p)
        if "dt" in cfg.grid:
            grid = Grid(cells, float(cfg.grid["dt"]), T)
        bd = datos_de_borde(exp.get("boundary", "slow"), v0, cfg.p, cfg.schedule)
        return FuenteEntropia(bd, cfg.p, grid, exp.get("guardar"))

    if esquema == "viscous":
        if cfg.schedule is None:
            raise ErrorConfiguracion("el esquema viscoso requiere 'schedule'")
        if "epsilon" not in exp:
            raise ErrorConfiguracion("el esquema viscoso requiere 'epsilon'")
        eps = float(exp["epsilon"])
        regimen = Regimen(exp.get("regime", "critical"))
        tasas = cfg.schedule.values[0] if regimen == Regimen.CRITICAL else (0.0, 0.0, 0.0, 0.0)
        grid = grid_viscoso(cells, T, cfg.p, eps, tasas)
        if "dt" in cfg.grid:
            grid = Grid(cells, float(cfg.grid["dt"]), T)
        return FuenteViscosa(v0, cfg.schedule, eps, cfg.p, grid, regimen, exp.get("guardar"))

    raise ErrorConfiguracion(f"scheme desconocido: {esquema!r}")
