import pytest

from asep_hydro.controller.decodificador import ErrorConfiguracion
from asep_hydro.controller.experimentos import (
    Reporte,
    chequear_flujo_borde,
    cota_deriva,
    decreciente,
    razon_flujo,
    run_converge,
    run_stationary,
    run_viscous_sweep,
    validar_escenario,
    ventana_gruesa,
)
from asep_hydro.model.core import ErrorParametros, ModelParams, RateSchedule
from asep_hydro.model.pde import ErrorRegimen, perfil_constante, perfil_escalon
from asep_hydro.model.sim import ErrorPresupuesto

TASAS_LIGGETT = RateSchedule.constante(1.0, 1.0, 0.5, 0.5)


def _params(**kw):
    base = dict(n=32, p=1.0, sigma=1.0, kappa=0.75, theta=-0.5)
    base.update(kw)
    return ModelParams(**base)


def test_reporte_aserciones():
    rep = Reporte(kind="x")
    assert rep.ok
    rep.afirmar("a", True)
    rep.afirmar("b", False, "detalle")
    assert not rep.ok
    assert rep.a_dict()["aserciones"][1] == {"nombre": "b", "ok": False, "detalle": "detalle"}


def test_decreciente_con_piso():
    assert decreciente([0.3, 0.2, 0.1])
    assert not decreciente([0.3, 0.3, 0.1])
    assert decreciente([1e-13, 1e-14, 2e-13])


def test_ventana_gruesa():
    params = _params(n=100, kappa_prime=0.6)
    x_min, x_max = ventana_gruesa(params)
    # k = 15
    assert x_min == pytest.approx(0.155)
    assert x_max == pytest.approx(0.845)


@pytest.mark.parametrize(
    "scenario, params, schedule",
    [
        ("thm-fast", dict(kappa=0.75, theta=0.5), RateSchedule.constante(1, 1, 0, 1)),
        ("thm-fast", dict(kappa=0.75, theta=-0.5), RateSchedule.constante(1, 1, 1, 1)),
        ("thm-slow-1", dict(kappa=0.75, theta=0.0), RateSchedule.constante(1, 1, 1, 1)),
        ("thm-slow-2", dict(kappa=0.75, theta=0.0), RateSchedule.constante(1, 0, 1, 1)),
        ("conjecture-critical", dict(kappa=0.75, theta=0.2), RateSchedule.constante(1, 1, 1, 1)),
    ],
)
def test_validar_escenario_rechaza(scenario, params, schedule):
    with pytest.raises(ErrorRegimen):
        validar_escenario(scenario, _params(**params), schedule)


def test_validar_escenario_kappa_fuera_de_ventana():
    with pytest.raises(ErrorParametros):
        validar_escenario("thm-fast", _params(kappa=0.6, theta=0.5), RateSchedule.constante(1, 1, 1, 1))
    with pytest.raises(ErrorConfiguracion):
        validar_escenario("otro", _params(), RateSchedule.constante(1, 1, 1, 1))


def test_run_converge_estructura():
    rep = run_converge(
        _params(), RateSchedule.constante(1, 1, 1, 1), [16, 32], 2, "thm-slow-1",
        perfil_escalon(0.5), seed=3, T=0.2, cells_ref=100, progreso=False,
    )
    assert len(rep.tablas["replicas"]) == 4
    assert [f["n"] for f in rep.tablas["replicas"]] == [16, 16, 32, 32]
    assert len(rep.resultados["l1_media"]) == 2
    assert "fraccion_trazas" in rep.resultados
    nombres = [a["nombre"] for a in rep.aserciones]
    assert "sin truncamiento" in nombres
    assert next(a for a in rep.aserciones if a["nombre"] == "balance de particulas")["ok"]
    assert "deriva de masa <= C n^theta T" in nombres
    assert set(rep.resultados["brecha_equilibrio_local"]) == {16, 32}
    assert rep.resultados["cota_deriva"]["por_n"][0]["n"] == 32


def test_run_converge_reproducible():
    kw = dict(seed=11, T=0.1, cells_ref=50, progreso=False)
    a = run_converge(_params(), RateSchedule.constante(1, 1, 1, 1), [32], 2, "thm-slow-1",
                     perfil_escalon(0.5), **kw)
    b = run_converge(_params(), RateSchedule.constante(1, 1, 1, 1), [32], 2, "thm-slow-1",
                     perfil_escalon(0.5), **kw)
    assert a.resultados["l1_media"] == b.resultados["l1_media"]


def test_run_converge_presupuesto_insuficiente():
    with pytest.raises(ErrorPresupuesto):
        run_converge(_params(), RateSchedule.constante(1, 1, 1, 1), [32], 1, "thm-slow-1",
                     perfil_escalon(0.5), seed=1, T=1.0, presupuesto=10, progreso=False)


def test_run_converge_n_no_creciente():
    with pytest.raises(ErrorConfiguracion):
        run_converge(_params(), RateSchedule.constante(1, 1, 1, 1), [32, 16], 1, "thm-slow-1",
                     perfil_escalon(0.5), seed=1, progreso=False)


def test_viscous_sweep_liggett():
    rep = run_viscous_sweep([0.1, 0.05], TASAS_LIGGETT, 1.0, 1.0, perfil_constante(0.5), cells=100, T=0.3,
                            regimenes=("critical",))
    assert rep.resultados["liggett"]["cumple"]
    assert rep.resultados["critical"]["v_minus"] == pytest.approx(0.5)
    assert max(rep.resultados["critical"]["l1"]) < 1e-10
    assert rep.ok


def test_viscous_sweep_lento_decrece():
    rep = run_viscous_sweep([0.08, 0.04, 0.02], RateSchedule.constante(1, 1, 1, 1), 1.0, 1.0,
                            perfil_escalon(0.5), cells=200, T=0.3, regimenes=("slow",))
    distancias = rep.resultados["slow"]["l1"]
    assert distancias[0] > distancias[1] > distancias[2]
    assert len(rep.tablas["viscoso_slow"]) == 3


@pytest.mark.parametrize(
    "eps_list, cells",
    [([0.05, 0.1], 200), ([1.5, 0.1], 200), ([0.1, 0.05], 40)],
)
def test_viscous_sweep_argumentos(eps_list, cells):
    with pytest.raises((ErrorConfiguracion, ErrorParametros)):
        run_viscous_sweep(eps_list, TASAS_LIGGETT, 1.0, 1.0, perfil_constante(0.5), cells=cells)


def test_run_stationary_chico():
    params = _params(n=6, kappa_prime=0.6, theta=-0.5)
    rep = run_stationary(params, RateSchedule.constante(1, 1, 1, 1), 0.5, seed=2, T=1.0,
                         T_ocupacion=5000.0, t_burn=1.0, umbral_tv=0.1)
    assert "tv_exacta_vs_mc" in rep.resultados
    assert len(rep.tablas["perfil_terminal"]) == 6
    assert rep.ok


def test_run_stationary_regimen_invalido():
    with pytest.raises(ErrorRegimen):
        run_stationary(_params(theta=0.5), RateSchedule.constante(1, 1, 1, 1), 0.5, seed=1)
    with pytest.raises(ErrorRegimen):
        run_stationary(_params(theta=0.0), RateSchedule.constante(1, 1, 1, 1), 0.5, seed=1)


def test_razon_flujo_y_error():
    r, se = razon_flujo([0.04, 0.06], [0.02, 0.03])
    assert r == pytest.approx(0.5)
    assert se == pytest.approx(0.1414, abs=1e-3)


def test_flujo_de_borde_que_se_reduce_a_la_mitad():
    rep = Reporte(kind="converge")
    chequear_flujo_borde(rep, {0.05: [0.030, 0.031, 0.029, 0.030], 0.025: [0.015, 0.016, 0.014, 0.015]})
    assert rep.ok
    assert rep.resultados["razon_flujo_borde"]["0.025/0.05"]["razon"] == pytest.approx(0.5)


def test_flujo_de_borde_que_no_escala_con_eps():
    rep = Reporte(kind="converge")
    chequear_flujo_borde(rep, {0.05: [0.040, 0.041, 0.039, 0.040], 0.025: [0.036, 0.037, 0.035, 0.036]})
    escala = next(a for a in rep.aserciones if a["nombre"] == "flujo de borde escala con eps (0.025/0.05)")
    assert rep.aserciones[0]["ok"]
    assert not escala["ok"]
    assert not rep.ok


def test_flujo_de_borde_bajo_el_piso():
    rep = Reporte(kind="converge")
    chequear_flujo_borde(rep, {0.05: [1e-4, 2e-4], 0.025: [1e-4, 1e-4]})
    assert rep.ok
    assert "razon_flujo_borde" not in rep.resultados


def test_cota_deriva_ajustada_en_el_n_grueso():
    C, filas = cota_deriva([64, 256, 1024], -0.5, 1.0,
                           {64: [0.1, 0.1], 256: [0.05, 0.05], 1024: [0.3, 0.3]})
    assert C == pytest.approx(1.6)
    assert filas[0]["cota"] == pytest.approx(0.1)
    assert filas[0]["ok"]
    assert not filas[1]["ok"]


def test_run_converge_razon_de_flujo_en_el_reporte():
    rep = run_converge(
        _params(), RateSchedule.constante(1, 1, 1, 1), [64], 2, "thm-slow-1",
        perfil_escalon(0.5), seed=5, T=0.1, cells_ref=50, progreso=False,
    )
    nombres = [a["nombre"] for a in rep.aserciones]
    assert set(rep.resultados["flujo_borde"]) == {"0.05", "0.025"}
    assert "flujo de borde (eps=0.05) < 0.05" in nombres
    assert "flujo de borde escala con eps (0.025/0.05)" in nombres
