# nullwave/tests/test_diagnostics.py
import math

import numpy as np
import pytest

from diagnostics import (
    GridFunction, apply_field, commutator, commutator_ratio, field_coefficients, fit_power_decay,
    fit_sqrt_exponential, good_derivative, in_region, linear_fit, region_volume, region_volume_exact,
    sphere_cap_exact, sphere_cap_measure, trend_slope, weight_growth_check,
)
from exceptions import DomainError, FitError
from profiles import default_profile


def _malha(f, n=9, h=0.25, nt=1):
    """Função de grade em (t, x, y, z) centrada na origem espacial."""
    eixo = h * (np.arange(n) - n // 2)
    origem = (0.0, float(eixo[0]), float(eixo[0]), float(eixo[0]))
    T, X, Y, Z = np.meshgrid(np.arange(nt) * h, eixo, eixo, eixo, indexing="ij")
    return GridFunction(f(T, X, Y, Z), origem, (h, h, h, h))


def test_ajustes_recuperam_os_expoentes():
    t = np.linspace(5.0, 50.0, 30)

    # 1. exp(K sqrt(t)) com K = 0.7
    ajuste = fit_sqrt_exponential(t, 3.0 * np.exp(0.7 * np.sqrt(t)))
    assert ajuste.exponent == pytest.approx(0.7, rel=1e-10)
    assert ajuste.r2 == pytest.approx(1.0)
    assert ajuste.window == (5.0, 50.0)

    # 2. a mesma série passada já em log
    ajuste = fit_sqrt_exponential(t, log_y=math.log(3.0) + 0.7 * np.sqrt(t))
    assert ajuste.intercept == pytest.approx(math.log(3.0), rel=1e-10)

    # 3. decaimento (1 + t)^-1.5
    ajuste = fit_power_decay(t, 2.0 * (1.0 + t) ** -1.5)
    assert ajuste.exponent == pytest.approx(-1.5, rel=1e-10)
    print("\n Teste de Ajustes: OK")


def test_ajustes_rejeitam_series_ruins():
    t = np.linspace(0.0, 10.0, 11)
    with pytest.raises(FitError):
        fit_sqrt_exponential(t, np.ones_like(t), t_min=8.0)
    with pytest.raises(FitError):
        fit_power_decay(t, -np.ones_like(t), t_min=0.0)
    with pytest.raises(FitError):
        linear_fit([1.0, 1.0], [2.0, 3.0])


def test_inclinacao_robusta():
    t = np.linspace(0.0, 20.0, 201)
    assert trend_slope(t, 2.0 * t + 0.3 * np.sin(7.0 * t)) == pytest.approx(2.0, abs=0.05)


def test_volume_da_regiao_de_interacao():
    """Monte Carlo contra pi (4t + 4/3), dentro de cinco erros padrão."""
    estimativa = region_volume(10.0, samples=200_000, seed=7)
    exato = region_volume_exact(10.0)
    assert abs(estimativa.value - exato) <= 5.0 * estimativa.stderr
    assert estimativa.samples == 200_000 and estimativa.seed == 7

    # mesma semente, mesmo resultado
    assert region_volume(10.0, samples=200_000, seed=7).value == estimativa.value

    with pytest.raises(DomainError):
        region_volume(10.0, samples=1000)
    with pytest.raises(DomainError):
        region_volume(0.5)


def test_regiao_de_interacao_pontual():
    assert in_region(10.0, np.array([10.0]), np.array([0.0]), np.array([0.0]))[0]
    assert not in_region(10.0, np.array([8.0]), np.array([0.0]), np.array([0.0]))[0]
    assert not in_region(10.0, np.array([10.0]), np.array([6.0]), np.array([0.0]))[0]


def test_calota_esferica():
    for t, r in [(5.0, 5.5), (5.0, 4.5), (20.0, 19.2)]:
        assert sphere_cap_measure(t, r) == pytest.approx(sphere_cap_exact(t, r), abs=1e-3)
    assert sphere_cap_measure(5.0, 10.0) == 0.0 == sphere_cap_exact(5.0, 10.0)
    with pytest.raises(DomainError):
        sphere_cap_measure(1.0, 1.0)
    print("\n Teste de Calota Esférica: OK")


def test_coeficientes_dos_campos():
    assert field_coefficients("Oxy", 0.0, 2.0, 3.0, 0.0) == (0.0, -3.0, 2.0, 0.0)
    assert field_coefficients("S", 1.0, 2.0, 3.0, 4.0) == (1.0, 2.0, 3.0, 4.0)


def test_comutador_de_translacao_com_rotacao():
    """[dx, Oxy] = dy, exato em diferenças centradas para polinômios de grau 2."""
    gf = _malha(lambda T, X, Y, Z: X * Y + Y * Y + Z)
    resultado = commutator("dx", "Oxy", gf)
    _, X, Y, _ = np.broadcast_arrays(*resultado.coords())
    np.testing.assert_allclose(resultado.values, X + 2.0 * Y, atol=1e-12)

    # translações comutam
    assert np.abs(commutator("dx", "dy", gf).values).max() <= 1e-12


def test_campo_em_pontos_de_borda():
    gf = _malha(lambda T, X, Y, Z: X)
    valores, pulados = apply_field("dx", gf, pontos=[(0, 4, 4, 4), (0, 0, 4, 4)])
    assert valores[0] == pytest.approx(1.0)
    assert pulados.tolist() == [False, True] and np.isnan(valores[1])

    # dt precisa de pelo menos três nós no tempo
    with pytest.raises(DomainError):
        apply_field("dt", gf)


def test_derivada_boa_de_funcao_radial():
    """Rotações sobre r anulam r^2, sem erro de truncamento."""
    gf = _malha(lambda T, X, Y, Z: X * X + Y * Y + Z * Z, n=11, h=0.2)
    assert np.abs(good_derivative(gf, "exy").values).max() <= 1e-12
    with pytest.raises(DomainError):
        good_derivative(gf, "w")


def test_crescimento_dos_pesos():
    """Gamma (t - x) cresce como sqrt(t) em S_t; translações não crescem."""
    relatorio = weight_growth_check(default_profile(1, 0), 0, 1, [4.0, 8.0, 16.0, 32.0], samples=100_000, seed=3)
    assert relatorio["dentro_do_limite"]
    assert relatorio["limite"] == pytest.approx(0.6)
    assert relatorio["expoente_translacoes"] < 0.1
    assert len(relatorio["maximos"]) == 4

    with pytest.raises(DomainError):
        weight_growth_check(default_profile(1, 0), 0, 3, [4.0, 8.0])


def test_comutador_de_rotacao_e_controlado(rng):
    """||[Omega, dbar] h|| fica abaixo de 5 vezes as derivadas boas para dados suaves."""
    c = rng.normal(size=4)
    gf = _malha(lambda T, X, Y, Z: c[0] * X * Y + c[1] * Y * Z + c[2] * X * X + c[3] * np.sin(Z), n=17)
    for rotacao, boa in [("Oxy", "eyz"), ("Oyz", "exy"), ("Oxz", "exy"), ("Oxy", "exy")]:
        assert commutator_ratio(rotacao, boa, gf) <= 5.0
