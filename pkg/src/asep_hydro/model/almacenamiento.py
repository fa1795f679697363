"""
Almacenamiento de resultados (CSV y JSON).

Idea:
- Los experimentos producen trayectorias (snapshots), campos de densidad y trazas.
- El Controller llama a estas funciones al terminar cada experimento.
- Los CSV quedan en formato largo, listos para graficar (pandas / Streamlit).

Formatos:
- snapshots: t, site, eta        (+ sidecar JSON con contadores de flujo de borde)
- densidad : t, x, u
- trazas   : JSON con u0, u_minus, u_plus, ancho de franja y pass/fail por bin
- reporte  : report.json con la configuracion resuelta, semilla y aserciones
"""

import csv
import json
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pandas as pd

from asep_hydro.model.core import Grid
from asep_hydro.model.pde import DensityField
from asep_hydro.model.sim import Trayectoria
from asep_hydro.model.traces import TraceEstimate

SNAPSHOT_HEADERS = ["t", "site", "eta"]
DENSIDAD_HEADERS = ["t", "x", "u"]


def _fmt(v):
    """
    Formatea valores para escritura en CSV.
    - None -> ""
    - float -> 10 cifras significativas (suficiente para releer campos sin perder la traza)
    """
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return v


def _preparar(ruta) -> Path:
    path = Path(ruta)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _a_json(obj: Any):
    """Convierte numpy y tuplas a tipos serializables."""
    if isinstance(obj, dict):
        return {str(k): _a_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_a_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _a_json(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def escribir_json(datos: dict, ruta) -> Path:
    path = _preparar(ruta)
    with path.open(mode="w", encoding="utf-8") as f:
        json.dump(_a_json(datos), f, indent=2, ensure_ascii=False)
    return path


# -------------------------------------------------------
# Snapshots
# -------------------------------------------------------

def exportar_snapshots_csv(tray: Trayectoria, ruta_csv) -> Path:
    """Escribe la trayectoria en formato largo y el sidecar de flujos `<ruta>.flujos.json`."""
    path = _preparar(ruta_csv)
    with path.open(mode="w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=SNAPSHOT_HEADERS)
        writer.writeheader()
        for s in tray.snapshots:
            t = _fmt(s.t)
            for i, e in enumerate(s.eta, start=1):
                writer.writerow({"t": t, "site": i, "eta": int(e)})

    exportar_flujos_json(tray, path.with_suffix(".flujos.json"))
    return path


def exportar_flujos_json(tray: Trayectoria, ruta) -> Path:
    return escribir_json(
        {
            "particulas_iniciales": tray.particulas_iniciales,
            "truncada": tray.truncada,
            "eventos": tray.eventos,
            "snapshots": [
                {
                    "t": s.t,
                    "particulas": int(np.sum(s.eta)),
                    "inyectadas_izq": s.inyectadas_izq,
                    "removidas_izq": s.removidas_izq,
                    "inyectadas_der": s.inyectadas_der,
                    "removidas_der": s.removidas_der,
                }
                for s in tray.snapshots
            ],
        },
        ruta,
    )


# -------------------------------------------------------
# Campos de densidad
# -------------------------------------------------------

def exportar_densidad_csv(field: DensityField, ruta_csv) -> Path:
    path = _preparar(ruta_csv)
    with path.open(mode="w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=DENSIDAD_HEADERS)
        writer.writeheader()
        for t, fila in zip(field.tiempos, field.u):
            tt = _fmt(t)
            for x, u in zip(field.x, fila):
                writer.writerow({"t": tt, "x": _fmt(x), "u": _fmt(u)})
    return path


def leer_densidad_csv(ruta_csv) -> DensityField:
    """Reconstruye un DensityField desde un CSV `t, x, u` (malla rectangular)."""
    df = pd.read_csv(ruta_csv)
    faltantes = set(DENSIDAD_HEADERS) - set(df.columns)
    if faltantes:
        raise ValueError(f"CSV de densidad sin columnas {sorted(faltantes)}")

    tabla = df.pivot_table(index="t", columns="x", values="u", aggfunc="mean").sort_index()
    if tabla.isna().any().any():
        raise ValueError("CSV de densidad no forma una malla rectangular t x x")
    tiempos = tabla.index.to_numpy(dtype=float)
    x = tabla.columns.to_numpy(dtype=float)
    u = np.clip(tabla.to_numpy(dtype=float), 0.0, 1.0)

    T = float(tiempos[-1]) if tiempos[-1] > 0.0 else 1.0
    dt = float(np.min(np.diff(tiempos))) if tiempos.size > 1 else T
    grid = Grid(cells=x.size, dt=dt, T=T)
    return DensityField(tiempos=tiempos, x=x, u=u, grid=grid)


# -------------------------------------------------------
# Trazas y reportes
# -------------------------------------------------------

def exportar_trazas_json(est: TraceEstimate, ruta, pasa_por_bin: Optional[list[bool]] = None) -> Path:
    return escribir_json(
        {
            "strip_width": est.strip_width,
            "x0": est.x0,
            "u0": est.u0,
            "t": est.tiempos,
            "u_minus": est.u_minus,
            "u_plus": est.u_plus,
            "var_minus": est.var_minus,
            "var_plus": est.var_plus,
            "pasa": pasa_por_bin,
        },
        ruta,
    )


def exportar_tabla_csv(filas: list[dict], ruta_csv) -> Path:
    """Tabla de reporte (errores L1 por n, por eps, etc) via pandas."""
    path = _preparar(ruta_csv)
    pd.DataFrame(filas).to_csv(path, index=False, float_format="%.10g")
    return path
