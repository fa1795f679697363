"""
Configuracion central del proyecto asep-hydro.

Idea:
- Aqui van los parametros fijos del sistema (presupuestos, tolerancias, horizontes).
- El Controller usa estos valores para validar y ejecutar los experimentos.
- Los modulos del modelo leen las tolerancias desde aqui para que todos los chequeos
  usen los mismos umbrales.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    # -------------------------------
    # Simulacion microscopica (CTMC exacta)
    # -------------------------------
    presupuesto_eventos: int = 1_000_000_000   # limite duro de eventos por corrida
    lote_uniformes: int = 1 << 20              # uniformes pre-sorteadas por llamada al kernel
    n_max_exacto: int = 12                     # n maximo para el NESS por solucion lineal

    # -------------------------------
    # Tolerancias
    # -------------------------------
    tol_liggett: float = 1e-12                 # relacion de Liggett
    tol_consistencia: float = 1e-10            # Liggett vs formula con radicales
    tol_cuadratura: float = 1e-10              # cuadraturas de flujos de entropia
    tol_rango: float = 1e-12                   # holgura al chequear valores en [0,1]
    tol_traza: float = 1e-6                    # tau por defecto para conjuntos de trazas

    # -------------------------------
    # Comparaciones macroscopicas
    # -------------------------------
    fraccion_capa_inicial: float = 0.05        # se descarta t < 0.05 T en L1 espacio-tiempo
    subpuntos_celda: int = 16                  # submuestreo para promedios de celda exactos
    fraccion_cfl: float = 0.9                  # dt = 0.9 * dt_max al construir mallas

    # -------------------------------
    # Diagnosticos de convergencia
    # -------------------------------
    umbral_flujo_borde: float = 0.05           # flujo de borde maximo a eps = max(eps_flujo)
    holgura_razon_flujo: float = 0.15          # |razon - eps'/eps| minima admitida
    piso_flujo_borde: float = 1e-3             # bajo este valor la razon no se evalua
    holgura_deriva: float = 2.0                # factor sobre C ajustado en el n mas grueso

    # -------------------------------
    # Horizontes por defecto
    # -------------------------------
    T_convergencia: float = 1.0                # horizonte de las corridas de convergencia
    factor_T_estacionario: float = 8.0         # T = 8 / m en corridas estacionarias
    observaciones_por_unidad: int = 40         # snapshots por unidad de tiempo macroscopico

    # -------------------------------
    # Orquestacion
    # -------------------------------
    workers: int = 1                           # procesos por defecto para replicas
    replicas: int = 8                          # replicas por defecto en converge

    # -------------------------------
    # Salida de datos
    # -------------------------------
    carpeta_salida: str = "salidas"            # carpeta por defecto de reportes


# Instancia global utilizada por el resto del proyecto
SETTINGS = Settings()
