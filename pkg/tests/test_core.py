import math

import numpy as np
import pytest

from asep_hydro.model.core import (
    ErrorParametros,
    Grid,
    ModelParams,
    RateSchedule,
    RngStream,
    mesoscopic_k,
    schedule_eval,
    ventana_kappa_prime,
)


def test_mesoscopic_k_escala_grande():
    params = ModelParams(n=10_000, p=1.0, sigma=1.0, kappa=0.75, theta=0.0, kappa_prime=0.7)
    assert mesoscopic_k(params) == 630


def test_mesoscopic_k_cota_inferior_manda():
    params = ModelParams(n=4, p=1.0, sigma=1.0, kappa=0.75, theta=0.0, kappa_prime=0.7)
    assert mesoscopic_k(params) == 2


def test_kappa_prime_fuera_de_ventana():
    with pytest.raises(ErrorParametros):
        ModelParams(n=100, p=1.0, sigma=1.0, kappa=0.75, theta=0.0, kappa_prime=0.8)


def test_kappa_prime_por_defecto_es_punto_medio():
    params = ModelParams(n=100, p=1.0, sigma=1.0, kappa=0.75, theta=0.0)
    lo, hi = ventana_kappa_prime(0.75)
    assert params.kappa_prime == pytest.approx(0.5 * (lo + hi))


def test_p_cero_solo_con_unsafe():
    with pytest.raises(ErrorParametros):
        ModelParams(n=4, p=0.0, sigma=1.0, kappa=0.75, theta=0.0)
    ModelParams(n=4, p=0.0, sigma=1.0, kappa=0.75, theta=0.0, unsafe=True)


def test_tasas_de_salto():
    params = ModelParams(n=100, p=2.0, sigma=0.5, kappa=0.75, theta=0.0)
    assert params.tasa_izquierda == pytest.approx(0.5 * 100 ** 1.75)
    assert params.tasa_derecha == pytest.approx(200.0 + 0.5 * 100 ** 1.75)


def test_theta_split_ordena_escalas():
    params = ModelParams(n=10, p=1.0, sigma=1.0, kappa=0.75, theta=0.0,
                         theta_split=(0.0, 1.0, -0.5, 0.5))
    # exponentes de (alpha, gamma, beta, delta) -> escalas en orden (alpha, beta, gamma, delta)
    a, b, g, d = params.escalas_reservorio()
    assert a == pytest.approx(10.0)
    assert g == pytest.approx(100.0)
    assert b == pytest.approx(10 ** 0.5)
    assert d == pytest.approx(10 ** 1.5)


def test_schedule_eval_continua_por_la_derecha():
    s = RateSchedule((0.0, 0.5), ((1, 1, 1, 1), (2, 2, 2, 2)))
    assert schedule_eval(s, 0.0) == (1.0, 1.0, 1.0, 1.0)
    assert schedule_eval(s, 0.4999) == (1.0, 1.0, 1.0, 1.0)
    assert schedule_eval(s, 0.5) == (2.0, 2.0, 2.0, 2.0)
    assert schedule_eval(s, 10.0) == (2.0, 2.0, 2.0, 2.0)
    assert s.siguiente_quiebre(0.2) == 0.5
    assert math.isinf(s.siguiente_quiebre(0.5))


@pytest.mark.parametrize(
    "breakpoints, values",
    [
        ((0.5,), ((1, 1, 1, 1),)),
        ((0.0, 0.0), ((1, 1, 1, 1), (1, 1, 1, 1))),
        ((0.0,), ((1, 1, 1),)),
        ((0.0,), ((1, -1, 1, 1),)),
    ],
)
def test_schedule_invalido(breakpoints, values):
    with pytest.raises(ErrorParametros):
        RateSchedule(breakpoints, values)


def test_schedule_eval_tiempo_negativo():
    with pytest.raises(ErrorParametros):
        schedule_eval(RateSchedule.constante(1, 1, 1, 1), -0.1)


def test_grid_tiempos_terminan_en_T():
    g = Grid(cells=10, dt=0.3, T=1.0)
    t = g.tiempos_paso()
    assert g.n_pasos == 4
    assert t[0] == 0.0 and t[-1] == 1.0
    assert np.all(np.diff(t) > 0)
    assert g.centros[0] == pytest.approx(0.05)


def test_rng_stream_reproducible():
    a = RngStream(42, 3).generador().random(5)
    b = RngStream(42, 3).generador().random(5)
    c = RngStream(42, 4).generador().random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert RngStream(42).hijo(1) != RngStream(42).hijo(2)
