"""
Experimentos de verificacion (convergencia, viscosidad evanescente, estacionario).

Cada experimento retorna un Reporte con:
- resultados: numeros crudos (por n, por eps, por replica)
- aserciones: lista de (nombre, ok, detalle); el CLI sale con codigo 0 solo si todas pasan
- tablas: filas listas para CSV

Las replicas corren en un multiprocessing.Pool; cada (n, replica) tiene su propio RngStream
y los resultados se ordenan por (n, replica) antes de agregarse.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Optional, Sequence

import numpy as np
from tqdm import tqdm

from asep_hydro.config.settings import SETTINGS
from asep_hydro.controller.decodificador import ErrorConfiguracion
from asep_hydro.controller.fuentes import FuenteEntropia, FuenteParticulas, FuenteViscosa
from asep_hydro.model.core import ErrorParametros, ModelParams, RateSchedule, RngStream, mesoscopic_k
from asep_hydro.model.pde import (
    BoundaryData,
    DensityField,
    ErrorRegimen,
    Perfil,
    grid_entropia,
    grid_viscoso,
    l1_distance,
    l1_distance_at,
    liggett_check,
    perfil_constante,
)
from asep_hydro.model.sim import (
    ErrorPresupuesto,
    empirical_stationary,
    exact_stationary,
    local_equilibrium_gap,
    total_variation,
)
from asep_hydro.model.traces import (
    boundary_flux_diagnostic,
    estimate_traces,
    stationary_profile,
    trace_pass_fraction,
)

logger = logging.getLogger(__name__)

ESCENARIOS = ("thm-fast", "thm-slow-1", "thm-slow-2", "conjecture-critical")


# ============================================================
# Reporte
# ============================================================

@dataclass
class Reporte:
    kind: str
    resultados: dict = field(default_factory=dict)
    aserciones: list = field(default_factory=list)
    tablas: dict = field(default_factory=dict)

    def afirmar(self, nombre: str, ok: bool, detalle: str = "") -> bool:
        ok = bool(ok)
        self.aserciones.append({"nombre": nombre, "ok": ok, "detalle": detalle})
        if ok:
            logger.info("[OK] %s %s", nombre, detalle)
        else:
            logger.warning("[FALLA] %s %s", nombre, detalle)
        return ok

    @property
    def ok(self) -> bool:
        return all(a["ok"] for a in self.aserciones)

    def a_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ok": self.ok,
            "resultados": self.resultados,
            "aserciones": self.aserciones,
        }


def decreciente(valores: Sequence[float], piso: float = 1e-10) -> bool:
    """Estrictamente decreciente, salvo pares que ya estan ambos bajo el piso numerico."""
    return all(b < a or (a <= piso and b <= piso) for a, b in zip(valores, valores[1:]))


def eventos_esperados(params: ModelParams, T: float) -> float:
    """Estimacion de eventos con densidad 1/2 en el bulk (cada enlace activo con prob. 1/4)."""
    return T * (params.n - 1) * (params.tasa_derecha + params.tasa_izquierda) / 4.0


def ventana_gruesa(params: ModelParams) -> tuple[float, float]:
    """Rango en x de los sitios i = k+1..n-k (sin relleno de borde)."""
    k = mesoscopic_k(params)
    n = params.n
    return (k + 0.5) / n, (n - k - 0.5) / n


def _media_y_error(valores: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(valores, dtype=float)
    if arr.size == 0:
        raise ValueError("se requiere al menos un valor")
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), se


def razon_flujo(grande: Sequence[float], chico: Sequence[float]) -> tuple[float, float]:
    """
    Razon media(chico) / media(grande) entre replicas y su error estandar
    (propagacion a primer orden, muestras independientes).
    """
    m_g, se_g = _media_y_error(grande)
    m_c, se_c = _media_y_error(chico)
    if m_g <= 0.0:
        return math.inf, math.inf
    r = m_c / m_g
    return r, math.sqrt(se_c ** 2 + (r * se_g) ** 2) / m_g


def chequear_flujo_borde(rep: "Reporte", muestras: dict[float, list[float]]) -> None:
    """
    Flujo de borde bajo el umbral en el eps mas ancho, y al achicar la franja
    razon flujo(eps')/flujo(eps) = eps'/eps dentro de max(3 SE, holgura).
    Pares con ambas medias bajo SETTINGS.piso_flujo_borde se aceptan sin razon.
    """
    epsilones = sorted(muestras, reverse=True)
    eps0 = epsilones[0]
    media0 = float(np.mean(muestras[eps0]))
    rep.afirmar(
        f"flujo de borde (eps={eps0:g}) < {SETTINGS.umbral_flujo_borde:g}",
        media0 < SETTINGS.umbral_flujo_borde,
        f"{media0:.4g}",
    )

    razones = {}
    for ea, eb in zip(epsilones, epsilones[1:]):
        ma, mb = float(np.mean(muestras[ea])), float(np.mean(muestras[eb]))
        nombre = f"flujo de borde escala con eps ({eb:g}/{ea:g})"
        if max(ma, mb) <= SETTINGS.piso_flujo_borde:
            rep.afirmar(nombre, True, f"bajo el piso ({ma:.2g}, {mb:.2g})")
            continue
        r, se = razon_flujo(muestras[ea], muestras[eb])
        esperada = eb / ea
        tol = max(3.0 * se, SETTINGS.holgura_razon_flujo)
        razones[f"{eb:g}/{ea:g}"] = {"razon": r, "error_estandar": se, "esperada": esperada}
        rep.afirmar(nombre, abs(r - esperada) <= tol, f"razon={r:.3g} esperada={esperada:.3g} tol={tol:.3g}")
    if razones:
        rep.resultados["razon_flujo_borde"] = razones


def cota_deriva(n_list: Sequence[int], theta: float, T: float,
                derivas: dict[int, list[float]]) -> tuple[float, list[dict]]:
    """
    Ajusta C en el n mas grueso (media + 3 SE, por SETTINGS.holgura_deriva) y
    verifica media(n) <= C n^theta T + 3 SE(n) en los n mas finos.
    """
    n0 = n_list[0]
    m0, se0 = _media_y_error(derivas[n0])
    C = SETTINGS.holgura_deriva * (m0 + 3.0 * se0) / (n0 ** theta * T)
    filas = []
    for n in n_list[1:]:
        m, se = _media_y_error(derivas[n])
        cota = C * n ** theta * T + 3.0 * se
        filas.append({"n": n, "deriva_media": m, "cota": cota, "ok": m <= cota})
    return C, filas


# ============================================================
# Convergencia (particulas vs solucion de entropia)
# ============================================================

def validar_escenario(scenario: str, params: ModelParams, schedule: RateSchedule) -> None:
    if scenario not in ESCENARIOS:
        raise ErrorConfiguracion(f"escenario desconocido: {scenario}")
    if scenario == "thm-fast":
        params.validar_kappa(5.0 / 7.0)
        if params.theta <= 0.0:
            raise ErrorRegimen(f"thm-fast requiere theta > 0 (theta={params.theta})")
        if schedule.algun_tramo((0, 1, 2, 3), lambda x: x <= 0.0):
            raise ErrorRegimen("thm-fast requiere alpha, beta, gamma, delta > 0 en todo tramo")
        return

    params.validar_kappa(0.5)
    if scenario == "thm-slow-1" and params.theta >= 0.0:
        raise ErrorRegimen(f"thm-slow-1 requiere theta < 0 (theta={params.theta})")
    if scenario in ("thm-slow-2", "conjecture-critical") and params.theta != 0.0:
        raise ErrorRegimen(f"{scenario} requiere theta = 0 (theta={params.theta})")
    if scenario == "thm-slow-2" and schedule.algun_tramo((0, 1), lambda x: x != 0.0):
        raise ErrorRegimen("thm-slow-2 requiere alpha = beta = 0 en todo tramo")


def datos_escenario(scenario: str, v0: Perfil, p: float, schedule: RateSchedule) -> BoundaryData:
    if scenario == "thm-fast":
        return BoundaryData.fuertes(v0, schedule)
    if scenario == "conjecture-critical":
        return BoundaryData.limite_viscoso(v0, p, schedule)
    return BoundaryData.lentas(v0)


@dataclass(frozen=True)
class TrabajoReplica:
    params: ModelParams
    schedule: RateSchedule
    v0: Perfil
    T: float
    seed: int
    replica: int
    referencia: DensityField
    bd: BoundaryData
    calcular_trazas: bool
    eps_flujo: tuple[float, ...]
    presupuesto: Optional[int]


def correr_replica(tr: TrabajoReplica) -> dict:
    """Una replica de la corrida de convergencia (se ejecuta dentro de un worker)."""
    n = tr.params.n
    rng = RngStream(tr.seed, n).hijo(tr.replica)
    fuente = FuenteParticulas(tr.params, tr.schedule, tr.v0, tr.T, rng, presupuesto=tr.presupuesto)
    campo = fuente.obtener_campo()
    tray = fuente.trayectoria

    x_min, x_max = ventana_gruesa(tr.params)
    fila = {
        "n": n,
        "replica": tr.replica,
        "l1": l1_distance(campo, tr.referencia, SETTINGS.fraccion_capa_inicial * tr.T, x_min, x_max),
        "l1_final": l1_distance_at(campo, tr.referencia, tr.T, x_min, x_max),
        "truncada": tray.truncada,
        "eventos": tray.eventos,
        "balance_ok": tray.balance_ok(),
        "deriva_masa_max": float(np.max(np.abs(tray.deriva_masa()))) if tray.snapshots else 0.0,
        "brecha_equilibrio_local": local_equilibrium_gap(tray, tr.params) if tray.snapshots else math.nan,
    }
    if tr.calcular_trazas:
        est = estimate_traces(campo)
        fila["fraccion_trazas"] = trace_pass_fraction(est, tr.bd.v_minus, tr.bd.v_plus)
    for eps in tr.eps_flujo:
        if math.floor(eps * n) >= 1:
            fila[f"flujo_borde_{eps:g}"] = boundary_flux_diagnostic(tray, tr.params, eps)
    return fila


def _mapear(trabajos: list, workers: int, progreso: bool, descripcion: str) -> list[dict]:
    barra = tqdm(total=len(trabajos), desc=descripcion, disable=not progreso)
    resultados = []
    if workers <= 1:
        for tr in trabajos:
            resultados.append(correr_replica(tr))
            barra.update(1)
    else:
        with Pool(processes=workers) as pool:
            for fila in pool.imap(correr_replica, trabajos):
                resultados.append(fila)
                barra.update(1)
    barra.close()
    return resultados


def run_converge(params: ModelParams, schedule: RateSchedule, n_list: Sequence[int], replicas: int,
                 scenario: str, v0: Perfil, seed: int, T: Optional[float] = None,
                 cells_ref: int = 800, workers: int = 1, umbral_l1: Optional[float] = None,
                 verificar_trazas: Optional[bool] = None, eps_flujo: Sequence[float] = (0.05, 0.025),
                 presupuesto: Optional[int] = None, progreso: bool = True) -> Reporte:
    """
    Para cada n: simula, engruesa y compara en L1 espacio-tiempo con la solucion de entropia
    del escenario (sobre i = k+1..n-k y t >= 0.05 T).
    """
    validar_escenario(scenario, params, schedule)
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ErrorConfiguracion("n_list debe ser estrictamente creciente")
    if replicas < 1:
        raise ErrorConfiguracion("replicas debe ser >= 1")
    T = SETTINGS.T_convergencia if T is None else float(T)
    tope = presupuesto if presupuesto is not None else SETTINGS.presupuesto_eventos

    por_n = [dataclasses.replace(params, n=n) for n in n_list]
    for pn in por_n:
        estimados = eventos_esperados(pn, T)
        if estimados > tope:
            raise ErrorPresupuesto(
                f"n={pn.n}: ~{estimados:.3g} eventos esperados superan el presupuesto {tope:.3g}"
            )

    bd = datos_escenario(scenario, v0, params.p, schedule)
    grid_ref = grid_entropia(cells_ref, T, params.p)
    referencia = FuenteEntropia(bd, params.p, grid_ref).obtener_campo()
    if verificar_trazas is None:
        verificar_trazas = scenario in ("thm-slow-1", "thm-slow-2")

    trabajos = [
        TrabajoReplica(
            params=pn, schedule=schedule, v0=v0, T=T, seed=seed, replica=r,
            referencia=referencia, bd=bd,
            calcular_trazas=verificar_trazas and pn.n == n_list[-1],
            eps_flujo=tuple(eps_flujo) if pn.n == n_list[-1] else (),
            presupuesto=presupuesto,
        )
        for pn in por_n
        for r in range(replicas)
    ]
    logger.info("converge %s: n=%s, replicas=%d, workers=%d", scenario, n_list, replicas, workers)
    filas = _mapear(trabajos, workers, progreso, f"converge {scenario}")
    filas.sort(key=lambda f: (f["n"], f["replica"]))

    rep = Reporte(kind="converge")
    rep.tablas["replicas"] = filas
    medias, errores = [], []
    for n in n_list:
        valores = np.array([f["l1"] for f in filas if f["n"] == n])
        medias.append(float(valores.mean()))
        errores.append(float(valores.std(ddof=1) / math.sqrt(valores.size)) if valores.size > 1 else 0.0)
    rep.resultados.update({
        "scenario": scenario,
        "n_list": n_list,
        "T": T,
        "l1_media": medias,
        "l1_error_estandar": errores,
        "deriva_masa_max": {n: max(f["deriva_masa_max"] for f in filas if f["n"] == n) for n in n_list},
        "brecha_equilibrio_local": {
            n: float(np.nanmean([f["brecha_equilibrio_local"] for f in filas if f["n"] == n])) for n in n_list
        },
    })

    rep.afirmar("sin truncamiento", not any(f["truncada"] for f in filas))
    rep.afirmar("balance de particulas", all(f["balance_ok"] for f in filas))
    if scenario.startswith("thm-"):
        rep.afirmar("L1 decreciente en n", decreciente(medias), f"{medias}")
    if umbral_l1 is not None:
        rep.afirmar(f"L1(n={n_list[-1]}) <= {umbral_l1}", medias[-1] <= umbral_l1, f"{medias[-1]:.4g}")

    theta_max = max(params.exponentes_reservorio())
    if theta_max < 0.0 and len(n_list) >= 2:
        derivas = {n: [f["deriva_masa_max"] for f in filas if f["n"] == n] for n in n_list}
        C, cotas = cota_deriva(n_list, theta_max, T, derivas)
        rep.resultados["cota_deriva"] = {"C": C, "por_n": cotas}
        rep.afirmar(
            "deriva de masa <= C n^theta T",
            all(c["ok"] for c in cotas),
            ", ".join(f"n={c['n']}: {c['deriva_media']:.3g} <= {c['cota']:.3g}" for c in cotas),
        )

    ultimas = [f for f in filas if f["n"] == n_list[-1]]
    if verificar_trazas:
        fraccion = float(np.mean([f["fraccion_trazas"] for f in ultimas]))
        rep.resultados["fraccion_trazas"] = fraccion
        rep.afirmar("trazas en el conjunto admisible (>= 95% de bins)", fraccion >= 0.95, f"{fraccion:.3f}")

    muestras = {}
    for eps in eps_flujo:
        clave = f"flujo_borde_{eps:g}"
        if all(clave in f for f in ultimas):
            muestras[eps] = [f[clave] for f in ultimas]
    if muestras:
        rep.resultados["flujo_borde"] = {f"{eps:g}": float(np.mean(v)) for eps, v in muestras.items()}
        if scenario == "thm-slow-1":
            chequear_flujo_borde(rep, muestras)
    return rep


# ============================================================
# Viscosidad evanescente
# ============================================================

def run_viscous_sweep(eps_list: Sequence[float], schedule: RateSchedule, p: float, sigma: float,
                      v0: Perfil, cells: int, T: float = 1.0,
                      regimenes: Sequence[str] = ("critical", "slow")) -> Reporte:
    """
    Distancias L1 entre solve_viscous(eps) y la solucion de entropia con los datos del limite:
    - critical: formula con radicales (limite viscoso)
    - slow: v_- = 0, v_+ = 1
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ErrorConfiguracion("eps_list debe ser estrictamente decreciente")
    if eps_list[0] >= 1.0 or eps_list[-1] <= 0.0:
        raise ErrorParametros("eps debe estar en (0, 1)")
    dx = 1.0 / cells
    if dx > eps_list[-1] / 4.0:
        raise ErrorParametros(f"la malla no resuelve eps={eps_list[-1]} (dx={dx:g} > eps/4)")
    if not schedule.es_constante():
        raise ErrorRegimen("viscous-sweep requiere tasas constantes")
    tasas = schedule.values[0]

    rep = Reporte(kind="viscous-sweep")
    cumple, valores = liggett_check(p, sigma, tasas)
    rep.resultados["liggett"] = {"cumple": cumple, "v": valores}
    grid_ref = grid_entropia(cells, T, p)

    for regimen in regimenes:
        if regimen == "critical":
            bd = BoundaryData.limite_viscoso(v0, p, schedule)
        elif regimen == "slow":
            bd = BoundaryData.lentas(v0)
        else:
            raise ErrorConfiguracion(f"regimen no soportado en el barrido: {regimen}")
        referencia = FuenteEntropia(bd, p, grid_ref).obtener_campo()

        distancias = []
        for eps in eps_list:
            grid = grid_viscoso(cells, T, p, eps, tasas if regimen == "critical" else (0, 0, 0, 0))
            campo = FuenteViscosa(v0, schedule, eps, p, grid, regimen).obtener_campo()
            distancias.append(l1_distance(campo, referencia))
            logger.info("viscous-sweep %s eps=%g: L1=%.4e", regimen, eps, distancias[-1])

        rep.resultados[regimen] = {
            "eps": eps_list,
            "l1": distancias,
            "v_minus": bd.v_minus(0.0),
            "v_plus": bd.v_plus(0.0),
        }
        rep.tablas[f"viscoso_{regimen}"] = [
            {"regimen": regimen, "eps": e, "l1": d} for e, d in zip(eps_list, distancias)
        ]
        rep.afirmar(f"L1 decreciente en eps ({regimen})", decreciente(distancias), f"{distancias}")
    return rep


# ============================================================
# Estacionario
# ============================================================

def run_stationary(params: ModelParams, schedule: RateSchedule, m: float, seed: int,
                   T: Optional[float] = None, T_ocupacion: Optional[float] = None,
                   t_burn: float = 1.0, umbral_l1: Optional[float] = None,
                   umbral_tv: float = 0.02, presupuesto: Optional[int] = None) -> Reporte:
    """
    Corrida larga desde v0 = m y comparacion del perfil terminal con 1_{(1-m,1)}.
    Para n <= 10 compara ademas las frecuencias de ocupacion con el NESS exacto.
    """
    if not 0.0 <= m <= 1.0:
        raise ErrorParametros(f"m fuera de [0,1] (m={m})")
    if not schedule.es_constante():
        raise ErrorRegimen("stationary requiere tasas constantes")
    params.validar_kappa(0.5)
    if not (params.theta < 0.0 or (params.theta == 0.0 and not schedule.algun_tramo((0, 1), lambda x: x != 0.0))):
        raise ErrorRegimen("stationary requiere theta < 0, o theta = 0 con alpha = beta = 0")
    if T is None:
        T = SETTINGS.factor_T_estacionario / m if m > 0.0 else SETTINGS.factor_T_estacionario

    rng = RngStream(seed)
    fuente = FuenteParticulas(params, schedule, perfil_constante(m), T, rng, observaciones=2,
                              presupuesto=presupuesto)
    campo = fuente.obtener_campo()

    x_min, x_max = ventana_gruesa(params)
    mascara = (campo.x >= x_min) & (campo.x <= x_max)
    perfil = stationary_profile(m, campo.x)
    l1 = float(np.mean(np.abs(campo.u[-1][mascara] - perfil[mascara])) * (x_max - x_min))

    rep = Reporte(kind="stationary")
    rep.resultados.update({
        "m": m,
        "T": T,
        "l1_perfil_terminal": l1,
        "eventos": fuente.trayectoria.eventos,
        "densidad_final": float(np.mean(campo.u[-1])),
    })
    rep.tablas["perfil_terminal"] = [
        {"x": float(x), "u": float(u), "perfil": float(v)} for x, u, v in zip(campo.x, campo.u[-1], perfil)
    ]
    rep.afirmar("sin truncamiento", not fuente.trayectoria.truncada)
    if umbral_l1 is not None:
        rep.afirmar(f"L1 al choque estacionario <= {umbral_l1}", l1 <= umbral_l1, f"{l1:.4g}")

    if params.n <= 10:
        if T_ocupacion is None:
            T_ocupacion = max(10.0, 2e6 / max(eventos_esperados(params, 1.0), 1.0))
        exacta = exact_stationary(params, schedule)
        empirica = empirical_stationary(params, schedule, T_ocupacion, rng.hijo(2), t_burn=t_burn,
                                        presupuesto=presupuesto)
        tv = total_variation(exacta, empirica)
        rep.resultados["tv_exacta_vs_mc"] = tv
        rep.resultados["T_ocupacion"] = T_ocupacion
        rep.afirmar(f"TV(exacta, Monte Carlo) <= {umbral_tv}", tv <= umbral_tv, f"{tv:.4g}")
    return rep
