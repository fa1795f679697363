"""
Controller del sistema asep-hydro.

Este modulo corresponde a la capa Controller del patron MVC.

Responsabilidades:
- Recibir una configuracion ya decodificada (ConfigExperimento)
- Despachar al experimento segun su tipo (simulate, solve, converge, ...)
- Gestionar el estado del experimento y los errores
- Exportar resultados (CSV de campos, tablas, report.json)
"""

# ------------------------------------------------------------
# Imports estandar
# ------------------------------------------------------------

import copy
import logging
from enum import Enum
from pathlib import Path
from typing import Optional

# ------------------------------------------------------------
# Imports del proyecto
# ------------------------------------------------------------

import numpy as np

from asep_hydro.config.settings import SETTINGS
from asep_hydro.controller.decodificador import ConfigExperimento, ErrorConfiguracion, decodificar_perfil
from asep_hydro.controller.experimentos import (
    Reporte,
    run_converge,
    run_stationary,
    run_viscous_sweep,
)
from asep_hydro.controller.fuentes import (
    FuenteCSV,
    FuenteEntropia,
    FuenteParticulas,
    crear_fuente_solve,
)
from asep_hydro.model.almacenamiento import (
    escribir_json,
    exportar_densidad_csv,
    exportar_snapshots_csv,
    exportar_tabla_csv,
    exportar_trazas_json,
)
from asep_hydro.model.core import RngStream
from asep_hydro.model.entropy import check_trace_set
from asep_hydro.model.pde import boundary_values_viscous_limit, liggett_check
from asep_hydro.model.traces import estimate_traces, mass_series

logger = logging.getLogger(__name__)


# ------------------------------------------------------------
# Enumeraciones de estado
# ------------------------------------------------------------

class EstadoController(str, Enum):
    IDLE = "IDLE"
    READY = "READY"
    RUNNING = "RUNNING"
    FINISHED = "FINISHED"
    ERROR = "ERROR"


# ------------------------------------------------------------
# Controller principal
# ------------------------------------------------------------

class HidroController:

    def __init__(self, carpeta_salida: Optional[str] = None, workers: Optional[int] = None,
                 progreso: bool = True, settings=SETTINGS):
        self.settings = settings
        self.carpeta = Path(carpeta_salida or settings.carpeta_salida)
        self.workers = workers if workers is not None else settings.workers
        self.progreso = progreso

        self._estado = EstadoController.IDLE
        self._cfg: Optional[ConfigExperimento] = None
        self._reporte: Optional[Reporte] = None
        self._archivos: list[Path] = []
        self._error_msg: Optional[str] = None

    # --------------------------------------------------------
    # Getters
    # --------------------------------------------------------

    def get_estado(self) -> EstadoController:
        return self._estado

    def get_error_msg(self) -> Optional[str]:
        return self._error_msg

    def get_reporte(self) -> Optional[Reporte]:
        return self._reporte

    def get_archivos(self) -> list[Path]:
        return list(self._archivos)

    # --------------------------------------------------------
    # Ciclo del experimento
    # --------------------------------------------------------

    def cargar(self, cfg: ConfigExperimento) -> None:
        if self._estado == EstadoController.RUNNING:
            raise RuntimeError("Hay un experimento en curso.")
        self._cfg = cfg
        self._reporte = None
        self._archivos = []
        self._error_msg = None
        self._estado = EstadoController.READY

    def ejecutar(self) -> Optional[Reporte]:
        """
        Corre el experimento cargado. Los errores de dominio dejan el controller en ERROR
        (con mensaje) en vez de propagarse; retorna el reporte o None.
        """
        if self._estado != EstadoController.READY or self._cfg is None:
            raise RuntimeError("Controller no esta en estado READY.")

        cfg = self._cfg
        self._estado = EstadoController.RUNNING
        logger.info("Inicio experimento '%s' (seed=%d) -> %s", cfg.kind, cfg.seed, self.carpeta)
        try:
            self.carpeta.mkdir(parents=True, exist_ok=True)
            reporte = self._despachar(cfg)
        except (ValueError, RuntimeError, FileNotFoundError) as e:
            self._estado = EstadoController.ERROR
            self._error_msg = f"{type(e).__name__}: {e}"
            logger.error("Experimento '%s' abortado: %s", cfg.kind, self._error_msg)
            return None

        self._reporte = reporte
        self._finalizar(cfg, reporte)
        return reporte

    def reset(self) -> None:
        self._cfg = None
        self._reporte = None
        self._archivos = []
        self._error_msg = None
        self._estado = EstadoController.IDLE

    # --------------------------------------------------------
    # Despacho por tipo
    # --------------------------------------------------------

    def _despachar(self, cfg: ConfigExperimento) -> Reporte:
        tabla = {
            "simulate": self._simulate,
            "solve": self._solve,
            "traces": self._traces,
            "liggett": self._liggett,
            "converge": self._converge,
            "viscous-sweep": self._viscous_sweep,
            "stationary": self._stationary,
        }
        return tabla[cfg.kind](cfg)

    def _simulate(self, cfg: ConfigExperimento) -> Reporte:
        exp = cfg.experimento
        T = float(exp.get("T", self.settings.T_convergencia))
        fuente = FuenteParticulas(
            cfg.params, cfg.schedule, decodificar_perfil(exp.get("v0", "constant:0.5")), T,
            RngStream(cfg.seed), exp.get("observaciones"), exp.get("presupuesto"),
        )
        campo = fuente.obtener_campo()
        tray = fuente.trayectoria

        self._archivos.append(exportar_snapshots_csv(tray, self.carpeta / "snapshots.csv"))
        self._archivos.append(exportar_densidad_csv(campo, self.carpeta / "densidad.csv"))

        rep = Reporte(kind="simulate")
        rep.resultados.update({
            "n": cfg.params.n,
            "T": T,
            "eventos": tray.eventos,
            "truncada": tray.truncada,
            "densidad": tray.densidades(),
            "t": tray.tiempos,
        })
        rep.afirmar("sin truncamiento", not tray.truncada)
        rep.afirmar("balance de particulas", tray.balance_ok())
        return rep

    def _solve(self, cfg: ConfigExperimento) -> Reporte:
        fuente = crear_fuente_solve(cfg)
        campo = fuente.obtener_campo()
        self._archivos.append(exportar_densidad_csv(campo, self.carpeta / "densidad.csv"))

        masas = mass_series(campo)
        rep = Reporte(kind="solve")
        rep.resultados.update({
            "scheme": cfg.experimento.get("scheme", "entropy"),
            "cells": campo.grid.cells,
            "dt": campo.grid.dt,
            "masa_inicial": masas[0],
            "masa_final": masas[-1],
        })
        if isinstance(fuente, FuenteEntropia):
            # contabilidad discreta: masa(T) - masa(0) = sum dt (F_izq - F_der)
            dt = np.diff(campo.t_pasos)
            esperado = masas[0] + float(np.sum(dt * (campo.flujo_izq - campo.flujo_der)))
            error = abs(masas[-1] - esperado)
            rep.resultados["error_contabilidad_masa"] = error
            rep.afirmar("conservacion discreta de masa", error <= 1e-10, f"{error:.3e}")
        return rep

    def _traces(self, cfg: ConfigExperimento) -> Reporte:
        exp = cfg.experimento
        if "csv" in exp:
            fuente = FuenteCSV(exp["csv"])
        elif "solve" in exp:
            fuente = crear_fuente_solve(cfg, exp["solve"])
        else:
            raise ErrorConfiguracion("'traces' requiere 'csv' o un bloque 'solve'")
        campo = fuente.obtener_campo()
        est = estimate_traces(campo, exp.get("eps_strip"))

        rep = Reporte(kind="traces")
        rep.resultados.update({"strip_width": est.strip_width, "bins": int(est.tiempos.size)})
        pasa = None
        if "v_minus" in exp and "v_plus" in exp:
            vm, vp = float(exp["v_minus"]), float(exp["v_plus"])
            tau_izq, tau_der = est.tolerancias("left"), est.tolerancias("right")
            pasa = [
                check_trace_set(float(np.clip(um, 0, 1)), vm, "left", ti)
                and check_trace_set(float(np.clip(up, 0, 1)), vp, "right", td)
                for um, up, ti, td in zip(est.u_minus, est.u_plus, tau_izq, tau_der)
            ]
            fraccion = float(np.mean(pasa))
            umbral = float(exp.get("umbral_paso", 0.95))
            rep.resultados["fraccion_trazas"] = fraccion
            rep.afirmar(f"trazas admisibles en >= {umbral:.0%} de bins", fraccion >= umbral, f"{fraccion:.3f}")
        self._archivos.append(exportar_trazas_json(est, self.carpeta / "trazas.json", pasa))
        return rep

    def _liggett(self, cfg: ConfigExperimento) -> Reporte:
        if not cfg.schedule.es_constante():
            raise ErrorConfiguracion("'liggett' requiere tasas constantes")
        tasas = cfg.schedule.values[0]
        cumple, valores = liggett_check(cfg.p, cfg.sigma, tasas)
        rep = Reporte(kind="liggett")
        rep.resultados.update({
            "cumple": cumple,
            "v_liggett": valores,
            "v_radicales": boundary_values_viscous_limit(cfg.p, tasas),
        })
        # liggett_check ya lanza si las dos formulas discrepan
        rep.afirmar("consistencia Liggett vs radicales", True, f"cumple={cumple}")
        return rep

    def _converge(self, cfg: ConfigExperimento) -> Reporte:
        exp = cfg.experimento
        if "scenario" not in exp or "n_list" not in exp:
            raise ErrorConfiguracion("'converge' requiere 'scenario' y 'n_list'")
        return run_converge(
            cfg.params, cfg.schedule, exp["n_list"], int(exp.get("replicas", self.settings.replicas)),
            exp["scenario"], decodificar_perfil(exp.get("v0", "step:0.5")), cfg.seed,
            T=exp.get("T"), cells_ref=int(cfg.grid.get("cells", 800)), workers=self.workers,
            umbral_l1=exp.get("umbral_l1"), verificar_trazas=exp.get("verificar_trazas"),
            eps_flujo=tuple(exp.get("eps_flujo", (0.05, 0.025))),
            presupuesto=exp.get("presupuesto"), progreso=self.progreso,
        )

    def _viscous_sweep(self, cfg: ConfigExperimento) -> Reporte:
        exp = cfg.experimento
        if "eps_list" not in exp:
            raise ErrorConfiguracion("'viscous-sweep' requiere 'eps_list'")
        return run_viscous_sweep(
            exp["eps_list"], cfg.schedule, cfg.p, cfg.sigma,
            decodificar_perfil(exp.get("v0", "step:0.5")),
            int(cfg.grid.get("cells", 400)), float(cfg.grid.get("T", 1.0)),
            tuple(exp.get("regimes", ("critical", "slow"))),
        )

    def _stationary(self, cfg: ConfigExperimento) -> Reporte:
        exp = cfg.experimento
        if "m" not in exp:
            raise ErrorConfiguracion("'stationary' requiere 'm'")
        return run_stationary(
            cfg.params, cfg.schedule, float(exp["m"]), cfg.seed, T=exp.get("T"),
            T_ocupacion=exp.get("T_ocupacion"), t_burn=float(exp.get("t_burn", 1.0)),
            umbral_l1=exp.get("umbral_l1"), umbral_tv=float(exp.get("umbral_tv", 0.02)),
            presupuesto=exp.get("presupuesto"),
        )

    # --------------------------------------------------------
    # Finalizacion
    # --------------------------------------------------------

    def _finalizar(self, cfg: ConfigExperimento, reporte: Reporte) -> None:
        for nombre, filas in reporte.tablas.items():
            if filas:
                self._archivos.append(exportar_tabla_csv(filas, self.carpeta / f"{nombre}.csv"))

        resuelta = copy.deepcopy(cfg.crudo)
        resuelta["seed"] = cfg.seed
        datos = reporte.a_dict()
        datos["config"] = resuelta
        datos["unsafe_params"] = cfg.unsafe
        datos["archivos"] = [p.name for p in self._archivos]
        self._archivos.append(escribir_json(datos, self.carpeta / "report.json"))

        self._estado = EstadoController.FINISHED
        logger.info(
            "Fin experimento '%s': %d/%d aserciones OK",
            cfg.kind, sum(a["ok"] for a in reporte.aserciones), len(reporte.aserciones),
        )
