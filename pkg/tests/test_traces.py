import numpy as np
import pytest

from asep_hydro.model.core import Grid, ModelParams
from asep_hydro.model.pde import BoundaryData, DensityField, grid_entropia, solve_entropy
from asep_hydro.model.sim import Snapshot
from asep_hydro.model.traces import (
    boundary_flux_diagnostic,
    estimate_traces,
    mass,
    mass_series,
    stationary_profile,
    trace_pass_fraction,
)


def _campo(filas, tiempos=None):
    filas = np.atleast_2d(np.asarray(filas, dtype=float))
    cells = filas.shape[1]
    tiempos = np.linspace(0.0, 1.0, filas.shape[0]) if tiempos is None else np.asarray(tiempos)
    grid = Grid(cells=cells, dt=1.0 / max(1, filas.shape[0] - 1), T=1.0)
    return DensityField(tiempos, grid.centros, filas, grid)


def _escalon(cells=400, nt=21, y=0.5, izq=0.0, der=1.0):
    x = (np.arange(cells) + 0.5) / cells
    fila = np.where(x < y, izq, der)
    return _campo(np.tile(fila, (nt, 1)))


# ------------------------------------------------------------
# Trazas
# ------------------------------------------------------------

def test_trazas_de_un_escalon():
    est = estimate_traces(_escalon())
    assert est.strip_width == pytest.approx(np.sqrt(1 / 400))
    assert np.allclose(est.u_minus, 0.0)
    assert np.allclose(est.u_plus, 1.0)
    assert np.allclose(est.var_minus, 0.0)
    assert est.u0[0] == 0.0 and est.u0[-1] == 1.0


def test_trazas_campo_constante():
    est = estimate_traces(_campo(np.full((5, 100), 0.3)), eps_strip=0.1)
    assert np.allclose(est.u_minus, 0.3)
    assert np.allclose(est.u_plus, 0.3)
    assert np.allclose(est.u0, 0.3)


def test_trazas_se_estabilizan_al_achicar_la_franja():
    cells = 400
    x = (np.arange(cells) + 0.5) / cells
    bd = BoundaryData.constantes(0.3 + 0.4 * x, 0.3, 0.7)
    campo = solve_entropy(bd, 1.0, grid_entropia(cells, 0.5, 1.0), guardar_cada=20)
    estimaciones = [estimate_traces(campo, eps_strip=eps) for eps in (0.2, 0.1, 0.05)]

    for lado, dato in (("u_minus", 0.3), ("u_plus", 0.7)):
        series = [getattr(est, lado) for est in estimaciones]
        d1 = np.max(np.abs(series[1] - series[0]))
        d2 = np.max(np.abs(series[2] - series[1]))
        assert d2 < d1
        assert np.max(np.abs(series[2] - dato)) < 0.03


def test_franja_menor_a_dos_celdas():
    with pytest.raises(ValueError):
        estimate_traces(_campo(np.full((3, 100), 0.5)), eps_strip=0.01)


def test_fraccion_de_trazas_admisibles():
    est = estimate_traces(_escalon())
    # trazas {0} y {1} son admisibles para datos lentos v_- = 0, v_+ = 1
    assert trace_pass_fraction(est, 0.0, 1.0) == pytest.approx(1.0)
    # con datos v_- = 0.3 la traza izquierda 0 no es admisible
    assert trace_pass_fraction(est, 0.3, 1.0) == pytest.approx(0.0)
    # los datos pueden depender del tiempo
    assert trace_pass_fraction(est, lambda t: 0.0, lambda t: 1.0) == pytest.approx(1.0)


# ------------------------------------------------------------
# Masa
# ------------------------------------------------------------

def test_masa_constante_y_escalon():
    assert mass(_campo(np.full((2, 50), 0.4)), 1.0) == pytest.approx(0.4)
    assert mass(_escalon(cells=100, y=0.25), 0.0) == pytest.approx(0.75)


def test_masa_simetrica():
    gen = np.random.default_rng(0)
    fila = gen.random(64)
    a = mass(_campo(np.vstack([fila, fila])), 0.0)
    b = mass(_campo(np.vstack([fila[::-1], fila[::-1]])), 0.0)
    c = mass(_campo(np.vstack([1.0 - fila, 1.0 - fila])), 0.0)
    assert a == pytest.approx(b)
    assert a + c == pytest.approx(1.0)


def test_mass_series_largo():
    campo = _campo(np.full((7, 10), 0.5))
    serie = mass_series(campo)
    assert serie.shape == (7,)
    assert np.allclose(serie, 0.5)


def test_stationary_profile():
    x = np.array([0.1, 0.5, 0.9])
    assert stationary_profile(0.3, x).tolist() == [0.0, 0.0, 1.0]
    assert stationary_profile(0.0, x).tolist() == [0.0, 0.0, 0.0]
    perfil = stationary_profile(0.6)
    assert perfil(x).tolist() == [0.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        stationary_profile(1.5)


# ------------------------------------------------------------
# Flujo de borde microscopico
# ------------------------------------------------------------

def test_boundary_flux_diagnostic_redes_llenas_y_vacias():
    params = ModelParams(n=100, p=1.0, sigma=1.0, kappa=0.75, theta=-0.5)
    llenas = [Snapshot(t, np.ones(100, dtype=np.int8)) for t in (0.0, 0.5, 1.0)]
    vacias = [Snapshot(t, np.zeros(100, dtype=np.int8)) for t in (0.0, 0.5, 1.0)]
    for side in ("left", "right"):
        assert boundary_flux_diagnostic(llenas, params, 0.05, side) == 0.0
        assert boundary_flux_diagnostic(vacias, params, 0.05, side) == 0.0


def test_boundary_flux_diagnostic_alternada():
    params = ModelParams(n=100, p=1.0, sigma=1.0, kappa=0.75, theta=-0.5)
    eta = np.tile([1, 0], 50).astype(np.int8)
    snaps = [Snapshot(0.0, eta), Snapshot(1.0, eta)]
    # 5 enlaces: 1-0, 0-1, 1-0, 0-1, 1-0
    assert boundary_flux_diagnostic(snaps, params, 0.05, "left") == pytest.approx(0.6)


def test_boundary_flux_diagnostic_argumentos():
    params = ModelParams(n=10, p=1.0, sigma=1.0, kappa=0.75, theta=-0.5)
    snaps = [Snapshot(0.0, np.ones(10, dtype=np.int8))]
    with pytest.raises(ValueError):
        boundary_flux_diagnostic(snaps, params, 0.05)
    with pytest.raises(ValueError):
        boundary_flux_diagnostic(snaps, params, 0.2, side="abajo")
