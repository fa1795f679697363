import numpy as np
import pytest

from asep_hydro.model.core import ErrorParametros, Grid, RateSchedule
from asep_hydro.model.pde import (
    BoundaryData,
    DensityField,
    ErrorCFL,
    ErrorRegimen,
    boundary_values_fast,
    boundary_values_viscous_limit,
    godunov_flux,
    grid_entropia,
    grid_viscoso,
    l1_distance,
    l1_error_vs_exact,
    liggett_check,
    muestrear_perfil,
    perfil_constante,
    perfil_escalon,
    perfil_riemann,
    riemann_exact,
    solve_entropy,
    solve_viscous,
)

TASAS_LIGGETT = (1.0, 1.0, 0.5, 0.5)


def _riemann(u_l, u_r, x0, cells, T=0.25):
    bd = BoundaryData.constantes(perfil_riemann(u_l, u_r, x0), u_l, u_r)
    return solve_entropy(bd, 1.0, grid_entropia(cells, T, 1.0))


# ------------------------------------------------------------
# Flujo de Godunov
# ------------------------------------------------------------

@pytest.mark.parametrize(
    "a, b, esperado",
    [
        (0.2, 0.8, 0.16),     # subida: min(J(a), J(b))
        (0.1, 0.3, 0.09),
        (0.8, 0.2, 0.25),     # bajada con punto sonico
        (0.9, 0.7, 0.21),     # bajada sin punto sonico: max
        (0.3, 0.1, 0.21),
        (0.5, 0.5, 0.25),
    ],
)
def test_godunov_flux_valores(a, b, esperado):
    assert godunov_flux(a, b, 1.0) == pytest.approx(esperado)


def test_godunov_flux_escala_con_p():
    assert godunov_flux(0.8, 0.2, 2.0) == pytest.approx(0.5)


def test_godunov_flux_consistente():
    u = np.linspace(0, 1, 21)
    assert np.allclose(godunov_flux(u, u, 1.0), u * (1 - u))


def test_godunov_flux_fuera_de_rango():
    with pytest.raises(ValueError):
        godunov_flux(1.2, 0.5, 1.0)


def test_godunov_flux_monotono():
    u = np.linspace(0.0, 1.0, 41)
    a, b = np.meshgrid(u, u, indexing="ij")
    G = godunov_flux(a, b, 1.0)
    # no decreciente en a, no creciente en b
    assert np.all(np.diff(G, axis=0) >= -1e-15)
    assert np.all(np.diff(G, axis=1) <= 1e-15)


# ------------------------------------------------------------
# Problema de Riemann
# ------------------------------------------------------------

def test_riemann_exacto_choque_y_rarefaccion():
    choque = riemann_exact(0.1, 0.6, 1.0, x0=1 / 3)
    assert choque.velocidad_choque == pytest.approx(0.3)
    assert choque(0.25, [0.40, 0.42]).tolist() == [0.1, 0.6]

    raref = riemann_exact(0.8, 0.2, 1.0)
    assert raref(1.0, 0.0) == pytest.approx(0.5)
    assert raref(1.0, -1.0) == pytest.approx(0.8)
    assert raref(1.0, 1.0) == pytest.approx(0.2)


@pytest.mark.parametrize("u_l, u_r", [(0.1, 0.6), (0.8, 0.2)])
def test_godunov_converge_a_riemann(u_l, u_r):
    x0, T = 1 / 3, 0.25
    exacta = riemann_exact(u_l, u_r, 1.0, x0)
    errores = []
    for cells in (200, 400, 800):
        campo = _riemann(u_l, u_r, x0, cells, T)
        errores.append(l1_error_vs_exact(campo, exacta, T))
    assert errores[0] > errores[1] > errores[2]
    for cells, e in zip((200, 400, 800), errores):
        assert e <= np.sqrt(1.0 / cells)


@pytest.mark.parametrize("u_l, u_r", [(0.0, 1.0), (1.0, 0.0)])
def test_riemann_extremos_con_constante_de_la_malla_gruesa(u_l, u_r):
    x0, T = 0.5, 0.25
    exacta = riemann_exact(u_l, u_r, 1.0, x0)
    mallas = (200, 400, 800)
    errores = [l1_error_vs_exact(_riemann(u_l, u_r, x0, cells, T), exacta, T) for cells in mallas]
    C = errores[0] / np.sqrt(1.0 / mallas[0])
    for cells, e in zip(mallas[1:], errores[1:]):
        assert e <= C * np.sqrt(1.0 / cells) + 1e-12
    if u_l > u_r:
        assert errores[0] > errores[1] > errores[2]
    else:
        # choque estacionario 0 | 1 alineado con una cara: G(0, 1) = 0
        assert max(errores) < 1e-12


def test_choque_estacionario_es_punto_fijo():
    campo = _riemann(0.2, 0.8, 0.5, 100, T=1.0)
    assert np.max(np.abs(campo.u[-1] - campo.u[0])) < 1e-12


def test_solve_entropy_principio_del_maximo():
    cells = 200
    x = (np.arange(cells) + 0.5) / cells
    v0 = 0.55 + 0.35 * np.sin(12.0 * np.pi * x) * np.cos(3.0 * np.pi * x)
    bd = BoundaryData.constantes(v0, 0.25, 0.85)
    campo = solve_entropy(bd, 1.0, grid_entropia(cells, 0.5, 1.0))
    lo = min(v0.min(), 0.25)
    hi = max(v0.max(), 0.85)
    assert campo.u.min() >= lo - 1e-12
    assert campo.u.max() <= hi + 1e-12


def test_contabilidad_discreta_de_masa():
    bd = BoundaryData.constantes(perfil_escalon(0.5), 0.3, 0.9)
    campo = solve_entropy(bd, 1.0, grid_entropia(100, 0.5, 1.0))
    dx = campo.dx
    masas = campo.u.sum(axis=1) * dx
    dt = np.diff(campo.t_pasos)
    esperado = masas[0] + np.sum(dt * (campo.flujo_izq - campo.flujo_der))
    assert masas[-1] == pytest.approx(esperado, abs=1e-12)


def test_solve_entropy_rechaza_cfl():
    bd = BoundaryData.lentas(perfil_constante(0.5))
    with pytest.raises(ErrorCFL):
        solve_entropy(bd, 1.0, Grid(cells=100, dt=0.02, T=1.0))


def test_solve_entropy_guarda_cada():
    bd = BoundaryData.lentas(perfil_constante(0.5))
    grid = grid_entropia(50, 1.0, 1.0)
    campo = solve_entropy(bd, 1.0, grid, guardar_cada=10)
    assert campo.tiempos[0] == 0.0
    assert campo.tiempos[-1] == pytest.approx(1.0)
    assert campo.u.shape[0] == len(campo.tiempos)


def test_datos_de_borde_fuertes_dependen_del_tiempo():
    schedule = RateSchedule((0.0, 0.5), ((1, 1, 1, 1), (3, 1, 1, 1)))
    bd = BoundaryData.fuertes(perfil_constante(0.5), schedule)
    assert bd.v_minus(0.0) == pytest.approx(0.5)
    assert bd.v_minus(0.7) == pytest.approx(0.75)
    assert bd.v_plus(0.7) == pytest.approx(0.5)


# ------------------------------------------------------------
# Distancias L1
# ------------------------------------------------------------

def test_l1_distance_campos_constantes():
    grid = Grid(cells=10, dt=0.5, T=1.0)
    t = np.array([0.0, 0.5, 1.0])
    a = DensityField(t, grid.centros, np.full((3, 10), 0.2), grid)
    b = DensityField(t, grid.centros, np.full((3, 10), 0.5), grid)
    assert l1_distance(a, b) == pytest.approx(0.3)
    assert l1_distance(a, a) == 0.0


def test_density_field_forma_invalida():
    grid = Grid(cells=10, dt=0.5, T=1.0)
    with pytest.raises(ValueError):
        DensityField(np.array([0.0, 1.0]), grid.centros, np.zeros((3, 10)), grid)


def test_muestrear_perfil_interpola_arreglos():
    x = (np.arange(4) + 0.5) / 4
    assert np.allclose(muestrear_perfil(np.array([0.0, 1.0]), np.array([0.25, 0.75])), [0.0, 1.0])
    assert muestrear_perfil(perfil_constante(0.3), x).shape == (4,)


# ------------------------------------------------------------
# Esquema viscoso
# ------------------------------------------------------------

def test_viscoso_estado_de_liggett_es_estacionario():
    schedule = RateSchedule.constante(*TASAS_LIGGETT)
    grid = grid_viscoso(100, 0.5, 1.0, 0.05, TASAS_LIGGETT)
    campo = solve_viscous(perfil_constante(0.5), schedule, 0.05, 1.0, grid, "critical")
    assert np.max(np.abs(campo.u[-1] - 0.5)) < 1e-12


def test_viscoso_lento_conserva_masa():
    schedule = RateSchedule.constante(1.0, 1.0, 1.0, 1.0)
    grid = grid_viscoso(100, 0.5, 1.0, 0.02)
    campo = solve_viscous(perfil_escalon(0.3), schedule, 0.02, 1.0, grid, "slow")
    masas = campo.u.sum(axis=1) * campo.dx
    assert np.allclose(masas, masas[0], atol=1e-12)
    assert campo.u.min() >= 0.0 and campo.u.max() <= 1.0


def test_viscoso_rapido_fija_celdas_de_borde():
    schedule = RateSchedule.constante(1.0, 3.0, 3.0, 1.0)
    grid = grid_viscoso(80, 0.3, 1.0, 0.02)
    campo = solve_viscous(perfil_constante(0.5), schedule, 0.02, 1.0, grid, "fast")
    assert np.allclose(campo.u[:, 0], 0.25)
    assert np.allclose(campo.u[:, -1], 0.25)


def test_viscoso_rapido_con_tasas_nulas():
    schedule = RateSchedule.constante(0.0, 1.0, 0.0, 1.0)
    grid = grid_viscoso(50, 0.1, 1.0, 0.05)
    with pytest.raises(ErrorRegimen):
        solve_viscous(perfil_constante(0.5), schedule, 0.05, 1.0, grid, "fast")


def test_viscoso_requiere_tasas_constantes():
    schedule = RateSchedule((0.0, 0.5), ((1, 1, 1, 1), (2, 1, 1, 1)))
    grid = grid_viscoso(50, 0.1, 1.0, 0.05)
    with pytest.raises(ErrorRegimen):
        solve_viscous(perfil_constante(0.5), schedule, 0.05, 1.0, grid, "slow")


def test_viscoso_rechaza_cfl():
    schedule = RateSchedule.constante(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ErrorCFL):
        solve_viscous(perfil_constante(0.5), schedule, 0.05, 1.0, Grid(100, 1e-3, 0.1), "slow")


# ------------------------------------------------------------
# Datos de borde
# ------------------------------------------------------------

def test_boundary_values_fast():
    assert boundary_values_fast((1.0, 1.0, 1.0, 3.0)) == pytest.approx((0.5, 0.75))
    with pytest.raises(ErrorParametros):
        boundary_values_fast((0.0, 1.0, 0.0, 1.0))


def test_boundary_values_viscous_limit_liggett():
    assert boundary_values_viscous_limit(1.0, TASAS_LIGGETT) == pytest.approx((0.5, 0.5))


def test_boundary_values_viscous_limit_rango():
    for tasas in [(0.0, 0.0, 0.0, 0.0), (5.0, 0.1, 0.1, 5.0), (0.1, 5.0, 5.0, 0.1)]:
        vm, vp = boundary_values_viscous_limit(1.0, tasas)
        assert 0.0 <= vm <= 1.0 and 0.0 <= vp <= 1.0


def test_liggett_check():
    cumple, valores = liggett_check(1.0, 1.0, TASAS_LIGGETT)
    assert cumple
    assert valores == pytest.approx((0.5, 0.5))

    cumple, valores = liggett_check(1.0, 1.0, (1.0, 1.0, 1.0, 1.0))
    assert not cumple and valores is None
