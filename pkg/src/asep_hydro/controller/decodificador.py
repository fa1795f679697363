"""
Este modulo decodifica la configuracion JSON de un experimento.

Objetivo:
- Convertir el JSON de entrada en objetos tipados (ModelParams, RateSchedule, perfiles).
- Rechazar claves desconocidas con ErrorConfiguracion.

Contrato esperado (archivo JSON):
  {
    "model":    {"n": 1024, "p": 1.0, "sigma": 1.0, "kappa": 0.75, "theta": -0.5,
                 "kappa_prime": 0.6, "theta_split": [..4..]},
    "schedule": {"breakpoints": [0, 0.5], "values": [[a, b, g, d], [a, b, g, d]]}
                o {"constant": [a, b, g, d]},
    "grid":     {"cells": 800, "dt": 0.001, "T": 1.0},
    "seed":     12345,
    "experiment": {... campos propios de cada tipo ...}
  }

Perfiles (v0):
- "constant:c"        -> u = c
- "step:y"            -> 1_{(y,1)}
- "downstep:y"        -> 1_{(0,y)}
- "riemann:ul,ur,x0"  -> ul a la izquierda de x0, ur a la derecha
- lista de numeros    -> valores por celda (se interpolan a la malla)
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from asep_hydro.model.core import ErrorParametros, ModelParams, RateSchedule
from asep_hydro.model.pde import (
    Perfil,
    perfil_constante,
    perfil_escalon,
    perfil_escalon_bajada,
    perfil_riemann,
)


class ErrorConfiguracion(ValueError):
    """Configuracion de experimento invalida (claves desconocidas, tipos, faltantes)."""


TIPOS = ("simulate", "solve", "viscous-sweep", "converge", "stationary", "traces", "liggett")

CLAVES_RAIZ = {"model", "schedule", "grid", "seed", "experiment"}
CLAVES_MODELO = {"n", "p", "sigma", "kappa", "theta", "kappa_prime", "theta_split"}
CLAVES_SCHEDULE = {"breakpoints", "values", "constant"}
CLAVES_GRID = {"cells", "dt", "T"}

# Claves permitidas en "experiment" por tipo
CLAVES_EXPERIMENTO = {
    "simulate": {"v0", "T", "observaciones", "presupuesto"},
    "solve": {"scheme", "v0", "boundary", "epsilon", "regime", "guardar"},
    "viscous-sweep": {"eps_list", "v0", "regimes"},
    "converge": {"scenario", "n_list", "replicas", "v0", "T", "umbral_l1", "verificar_trazas",
                 "eps_flujo", "presupuesto"},
    "stationary": {"m", "T", "T_ocupacion", "t_burn", "umbral_l1", "umbral_tv", "presupuesto"},
    "traces": {"csv", "solve", "eps_strip", "v_minus", "v_plus", "umbral_paso"},
    "liggett": set(),
}

# Campos obligatorios de la raiz por tipo
REQUERIDOS = {
    "simulate": {"model", "schedule"},
    "solve": {"model", "grid"},
    "viscous-sweep": {"model", "schedule", "grid"},
    "converge": {"model", "schedule"},
    "stationary": {"model", "schedule"},
    "traces": set(),
    "liggett": {"model", "schedule"},
}


@dataclass
class ConfigExperimento:
    kind: str
    crudo: dict
    seed: int = 0
    params: Optional[ModelParams] = None
    p: Optional[float] = None
    sigma: Optional[float] = None
    schedule: Optional[RateSchedule] = None
    grid: dict = field(default_factory=dict)
    experimento: dict = field(default_factory=dict)
    unsafe: bool = False


# ------------------------------------------------------------
# Utilidades
# ------------------------------------------------------------

def _rechazar_desconocidas(bloque: dict, permitidas: set, nombre: str) -> None:
    if not isinstance(bloque, dict):
        raise ErrorConfiguracion(f"'{nombre}' debe ser un objeto JSON")
    extra = set(bloque) - permitidas
    if extra:
        raise ErrorConfiguracion(f"claves desconocidas en '{nombre}': {sorted(extra)}")


def decodificar_perfil(desc: Any) -> Perfil:
    """Convierte la descripcion de un perfil inicial en un callable (o arreglo muestreado)."""
    if isinstance(desc, (int, float)):
        return perfil_constante(float(desc))
    if isinstance(desc, list):
        try:
            valores = np.asarray(desc, dtype=float)
        except ValueError as e:
            raise ErrorConfiguracion("perfil como lista debe contener solo numeros") from e
        if valores.ndim != 1 or valores.size < 2:
            raise ErrorConfiguracion("perfil como lista requiere al menos 2 valores")
        return valores
    if not isinstance(desc, str) or ":" not in desc:
        raise ErrorConfiguracion(f"perfil invalido: {desc!r}")

    nombre, _, args = desc.partition(":")
    try:
        numeros = [float(a) for a in args.split(",")]
    except ValueError as e:
        raise ErrorConfiguracion(f"perfil invalido: {desc!r}") from e

    try:
        if nombre == "constant" and len(numeros) == 1:
            return perfil_constante(numeros[0])
        if nombre == "step" and len(numeros) == 1:
            return perfil_escalon(numeros[0])
        if nombre == "downstep" and len(numeros) == 1:
            return perfil_escalon_bajada(numeros[0])
        if nombre == "riemann" and len(numeros) == 3:
            return perfil_riemann(*numeros)
    except ValueError as e:
        raise ErrorConfiguracion(f"perfil invalido: {desc!r} ({e})") from e
    raise ErrorConfiguracion(f"perfil desconocido: {desc!r}")


def decodificar_schedule(bloque: dict) -> RateSchedule:
    _rechazar_desconocidas(bloque, CLAVES_SCHEDULE, "schedule")
    try:
        if "constant" in bloque:
            if set(bloque) != {"constant"}:
                raise ErrorConfiguracion("'schedule.constant' no se combina con otras claves")
            return RateSchedule.constante(*bloque["constant"])
        return RateSchedule(tuple(bloque["breakpoints"]), tuple(tuple(v) for v in bloque["values"]))
    except KeyError as e:
        raise ErrorConfiguracion(f"falta la clave {e} en 'schedule'") from e
    except (TypeError, ErrorParametros) as e:
        raise ErrorConfiguracion(f"schedule invalido: {e}") from e


def decodificar_modelo(bloque: dict, unsafe: bool = False) -> tuple[Optional[ModelParams], float, float]:
    """
    Retorna (params, p, sigma). Si faltan n/kappa/theta (experimentos solo macroscopicos)
    params es None pero p y sigma se entregan igual.
    """
    _rechazar_desconocidas(bloque, CLAVES_MODELO, "model")
    if "p" not in bloque:
        raise ErrorConfiguracion("falta la clave 'p' en 'model'")
    p = float(bloque["p"])
    sigma = float(bloque.get("sigma", 1.0))

    if not {"n", "kappa", "theta"} <= set(bloque):
        return None, p, sigma
    split = bloque.get("theta_split")
    try:
        params = ModelParams(
            n=int(bloque["n"]),
            p=p,
            sigma=sigma,
            kappa=float(bloque["kappa"]),
            theta=float(bloque["theta"]),
            kappa_prime=bloque.get("kappa_prime"),
            theta_split=tuple(split) if split is not None else None,
            unsafe=unsafe,
        )
    except (TypeError, ErrorParametros) as e:
        raise ErrorConfiguracion(f"modelo invalido: {e}") from e
    return params, p, sigma


# ------------------------------------------------------------
# Entrada principal
# ------------------------------------------------------------

def decodificar_config(kind: str, crudo: dict, seed: Optional[int] = None,
                       unsafe: bool = False) -> ConfigExperimento:
    if kind not in TIPOS:
        raise ErrorConfiguracion(f"tipo de experimento desconocido: {kind}")
    _rechazar_desconocidas(crudo, CLAVES_RAIZ, "raiz")
    faltan = REQUERIDOS[kind] - set(crudo)
    if faltan:
        raise ErrorConfiguracion(f"'{kind}' requiere las claves {sorted(faltan)}")

    experimento = crudo.get("experiment", {})
    _rechazar_desconocidas(experimento, CLAVES_EXPERIMENTO[kind], "experiment")
    if kind == "traces" and "solve" in experimento:
        _rechazar_desconocidas(experimento["solve"], CLAVES_EXPERIMENTO["solve"], "experiment.solve")
    grid = crudo.get("grid", {})
    _rechazar_desconocidas(grid, CLAVES_GRID, "grid")

    cfg = ConfigExperimento(
        kind=kind,
        crudo=crudo,
        seed=int(seed if seed is not None else crudo.get("seed", 0)),
        grid=dict(grid),
        experimento=dict(experimento),
        unsafe=unsafe,
    )
    if "model" in crudo:
        cfg.params, cfg.p, cfg.sigma = decodificar_modelo(crudo["model"], unsafe)
    if "schedule" in crudo:
        cfg.schedule = decodificar_schedule(crudo["schedule"])

    if kind in ("simulate", "converge", "stationary") and cfg.params is None:
        raise ErrorConfiguracion(f"'{kind}' requiere n, kappa y theta en 'model'")
    return cfg


def leer_config(ruta, kind: str, seed: Optional[int] = None, unsafe: bool = False) -> ConfigExperimento:
    path = Path(ruta)
    try:
        crudo = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ErrorConfiguracion(f"JSON invalido en {path}: {e}") from e
    # un report.json previo trae la configuracion resuelta: se re-ejecuta tal cual
    if isinstance(crudo, dict) and {"kind", "config"} <= set(crudo):
        crudo = crudo["config"]
    return decodificar_config(kind, crudo, seed=seed, unsafe=unsafe)
