# nullwave/tests/test_profiles.py
import math

import numpy as np
import pytest

from exceptions import DomainError
from profiles import WaveProfile, bump_shape, default_profile, holder_half_seminorm, verify_travelling_wave


def test_bump_suporte_e_pico():
    u = np.array([-1.5, -1.0, 0.0, 0.5, 1.0, 2.0])
    f = bump_shape(u)
    assert f[2] == pytest.approx(1.0)
    assert f[0] == f[1] == f[4] == f[5] == 0.0
    assert 0.0 < f[3] < 1.0


def test_derivadas_do_bump_contra_diferencas_finitas():
    """Derivadas analíticas até ordem 3 contra diferenças centradas."""
    u = np.linspace(-0.9, 0.9, 37)
    h = 1e-5
    for ordem in (1, 2, 3):
        numerica = (bump_shape(u + h, ordem - 1) - bump_shape(u - h, ordem - 1)) / (2 * h)
        np.testing.assert_allclose(bump_shape(u, ordem), numerica, rtol=1e-5, atol=1e-5)

    with pytest.raises(DomainError):
        bump_shape(u, 4)


def test_perfil_vetorial():
    perfil = default_profile(3, 1, amplitude=2.0)
    assert perfil.N == 3
    assert perfil.active_components() == {1}
    assert perfil.is_compact

    valores = perfil.eval(np.array([0.0, 0.5]))
    assert valores.shape == (2, 3)
    assert valores[0, 1] == pytest.approx(2.0)
    assert not valores[:, [0, 2]].any()
    assert perfil.eval(0.0).shape == (3,)


def test_perfil_bump_poly_usa_leibniz():
    """(p * bump)' = p' bump + p bump' com p(u) = 1 + 2u."""
    perfil = WaveProfile((1.0,), shape="bump_poly", poly=(1.0, 2.0))
    u = np.linspace(-0.8, 0.8, 9)
    esperado = 2.0 * bump_shape(u) + (1.0 + 2.0 * u) * bump_shape(u, 1)
    np.testing.assert_allclose(perfil.eval(u, 1)[:, 0], esperado, rtol=1e-12, atol=1e-14)


def test_perfil_invalido():
    with pytest.raises(DomainError):
        WaveProfile((1.0,), shape="gauss")
    with pytest.raises(DomainError):
        WaveProfile((1.0,), h_u=0.0)
    with pytest.raises(DomainError):
        default_profile(2, 0).eval(0.0, order=5)


def test_seminorma_holder_meio():
    # 1. Para f(u) = u o supremo é sqrt(2), atingido nas pontas
    linear = WaveProfile((1.0,), shape="linear", h_u=1e-2)
    resultado = holder_half_seminorm(linear, 0)
    assert resultado.value == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert (resultado.u0, resultado.u1) == (pytest.approx(-1.0), pytest.approx(1.0))

    # 2. O bump suave tem seminorma finita e positiva
    bump = default_profile(1, 0)
    resultado = holder_half_seminorm(bump, 0, h_u=1e-2)
    assert 0.0 < resultado.value < 10.0
    assert resultado.u0 < resultado.u1

    # 3. Perfil nulo dá zero
    zero = WaveProfile((1.0,), shape="zero", h_u=1e-2)
    assert holder_half_seminorm(zero, 0).value == 0.0

    with pytest.raises(DomainError):
        holder_half_seminorm(bump, 1)
    print("\n Teste de Seminorma de Hölder: OK")


def test_onda_plana_resolve_o_sistema(exemplo1, exemplo2, perfil_padrao):
    """f(t - x) é solução exata: box f = 0 e Q(df) = 0 para formas nulas."""
    amostras = np.linspace(-1.2, 1.2, 241)
    assert verify_travelling_wave(exemplo1, perfil_padrao, amostras) <= 1e-12
    assert verify_travelling_wave(exemplo2, perfil_padrao, amostras) <= 1e-12

    with pytest.raises(DomainError):
        verify_travelling_wave(exemplo1, default_profile(3, 0), amostras)


def test_seminorma_e_homogenea():
    """|lambda f|_{1/2} = |lambda| |f|_{1/2}."""
    base = holder_half_seminorm(WaveProfile((1.0,)), 0, h_u=2e-3)
    for lam in (-2.5, 0.3, 4.0):
        escalado = holder_half_seminorm(WaveProfile((lam,)), 0, h_u=2e-3)
        assert escalado.value == pytest.approx(abs(lam) * base.value, rel=1e-12)


def test_seminorma_estavel_no_refinamento():
    """Malhas de 1e-3 e 1e-4 dão a mesma seminorma do bump."""
    bump = default_profile(1, 0)
    grossa = holder_half_seminorm(bump, 0, h_u=1e-3)
    fina = holder_half_seminorm(bump, 0, h_u=1e-4, bloco=128)
    assert fina.value >= grossa.value - 1e-12
    assert fina.value == pytest.approx(grossa.value, rel=1e-4)
