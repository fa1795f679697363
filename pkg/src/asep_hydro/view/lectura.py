"""
Lectura de las salidas de un experimento como DataFrames.

La vista Streamlit solo usa estas funciones; no importa nada del modelo.
"""

import json
from pathlib import Path
from typing import Optional

import pandas as pd


def listar_corridas(base: Path) -> list[Path]:
    """Carpetas bajo `base` (incluida ella misma) que contienen un report.json."""
    base = Path(base)
    if not base.exists():
        return []
    return sorted({p.parent for p in base.rglob("report.json")})


def leer_reporte(carpeta: Path) -> dict:
    with (Path(carpeta) / "report.json").open(encoding="utf-8") as f:
        return json.load(f)


def tabla_aserciones(reporte: dict) -> pd.DataFrame:
    return pd.DataFrame(reporte.get("aserciones", []), columns=["nombre", "ok", "detalle"])


def leer_tabla(carpeta: Path, nombre: str) -> Optional[pd.DataFrame]:
    path = Path(carpeta) / f"{nombre}.csv"
    if not path.exists():
        return None
    return pd.read_csv(path)


def leer_densidad(carpeta: Path) -> Optional[pd.DataFrame]:
    """Densidad en formato ancho: filas = t, columnas = x."""
    df = leer_tabla(carpeta, "densidad")
    if df is None:
        return None
    return df.pivot_table(index="t", columns="x", values="u").sort_index()


def resumen_l1_por_n(replicas: pd.DataFrame) -> pd.DataFrame:
    """Media y error estandar del L1 por n a partir de la tabla de replicas."""
    g = replicas.groupby("n")["l1"]
    out = pd.DataFrame({"l1_media": g.mean(), "l1_error_estandar": g.sem()})
    return out.fillna(0.0)


def leer_trazas(carpeta: Path) -> Optional[pd.DataFrame]:
    path = Path(carpeta) / "trazas.json"
    if not path.exists():
        return None
    with path.open(encoding="utf-8") as f:
        datos = json.load(f)
    return pd.DataFrame({"t": datos["t"], "u_minus": datos["u_minus"], "u_plus": datos["u_plus"]})
