"""
Visor Streamlit de salidas de asep-hydro (MVC)

Esta vista NO ejecuta experimentos ni implementa el modelo.
Solo:
- lista las corridas (carpetas con report.json)
- muestra aserciones, tablas L1 y mapas u(t, x) ya exportados

Ejecucion (desde la raiz del repo):
    python -m streamlit run src/asep_hydro/view/vista_streamlit.py
"""

import os
import sys
from pathlib import Path


def _asegurar_src_en_syspath() -> None:
    """Agrega /src al sys.path cuando Streamlit ejecuta este archivo como script."""
    src_dir = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    if src_dir not in sys.path:
        sys.path.insert(0, src_dir)


_asegurar_src_en_syspath()

import streamlit as st  # noqa: E402

from asep_hydro.config.settings import SETTINGS  # noqa: E402
from asep_hydro.view import lectura  # noqa: E402


# ============================================================
# Secciones
# ============================================================

def _seccion_aserciones(reporte: dict) -> None:
    st.subheader("Aserciones")
    df = lectura.tabla_aserciones(reporte)
    if df.empty:
        st.info("El reporte no tiene aserciones")
        return
    if reporte.get("ok"):
        st.success("Todas las aserciones pasaron")
    else:
        st.error("Hay aserciones que fallaron")
    st.dataframe(df, use_container_width=True)


def _seccion_converge(carpeta: Path) -> None:
    replicas = lectura.leer_tabla(carpeta, "replicas")
    if replicas is None:
        return
    st.subheader("Error L1 por n")
    resumen = lectura.resumen_l1_por_n(replicas)
    st.line_chart(resumen[["l1_media"]])
    st.dataframe(resumen, use_container_width=True)


def _seccion_viscosa(carpeta: Path) -> None:
    for regimen in ("critical", "slow"):
        df = lectura.leer_tabla(carpeta, f"viscoso_{regimen}")
        if df is None:
            continue
        st.subheader(f"Distancia L1 vs eps ({regimen})")
        st.line_chart(df.set_index("eps")[["l1"]])


def _seccion_estacionaria(carpeta: Path) -> None:
    df = lectura.leer_tabla(carpeta, "perfil_terminal")
    if df is None:
        return
    st.subheader("Perfil terminal vs perfil estacionario")
    st.line_chart(df.set_index("x")[["u", "perfil"]])


def _seccion_densidad(carpeta: Path) -> None:
    ancho = lectura.leer_densidad(carpeta)
    if ancho is None:
        return
    st.subheader("Densidad u(t, x)")
    tiempos = list(ancho.index)
    j = st.slider("Indice de tiempo", 0, len(tiempos) - 1, len(tiempos) - 1)
    st.write(f"t = {tiempos[j]:.4f}")
    st.line_chart(ancho.iloc[j])


def _seccion_trazas(carpeta: Path) -> None:
    df = lectura.leer_trazas(carpeta)
    if df is None:
        return
    st.subheader("Trazas de borde")
    st.line_chart(df.set_index("t"))


# ============================================================
# Entrada
# ============================================================

def iniciar() -> None:
    st.set_page_config(page_title="asep-hydro", layout="wide")
    st.title("asep-hydro: visor de resultados")

    base = Path(st.sidebar.text_input("Carpeta de salidas", value=SETTINGS.carpeta_salida))
    corridas = lectura.listar_corridas(base)
    if not corridas:
        st.info(f"No hay corridas con report.json bajo '{base}'")
        return

    carpeta = st.sidebar.selectbox("Corrida", corridas, format_func=lambda p: str(p))
    reporte = lectura.leer_reporte(carpeta)

    st.header(f"Experimento: {reporte.get('kind', '?')}")
    with st.expander("Configuracion resuelta"):
        st.json(reporte.get("config", {}))
    with st.expander("Resultados"):
        st.json(reporte.get("resultados", {}))

    _seccion_aserciones(reporte)
    _seccion_converge(carpeta)
    _seccion_viscosa(carpeta)
    _seccion_estacionaria(carpeta)
    _seccion_densidad(carpeta)
    _seccion_trazas(carpeta)


if __name__ == "__main__":
    iniciar()
