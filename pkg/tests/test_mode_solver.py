# nullwave/tests/test_mode_solver.py
import numpy as np
import pytest
import scipy.special

from exceptions import DomainError, ResolutionError
from mode_solver import (
    BoundaryData, GoursatGrid, bessel_I0, closed_form_scalar, goursat_solve, nirenberg_blowup_scan,
    TransverseMode, solve_modes, sup_growth_profile,
)
from profiles import bump_shape
from renormalize import LinearizedCoefficients, growth_rate_estimate


def _coeficientes_escalares(beta: float = 1.0, n: int = 2101) -> LinearizedCoefficients:
    """B(u) = beta (1 - u^2) em [-1, 1], zero fora."""
    u = np.linspace(-1.05, 1.05, n)
    return LinearizedCoefficients.from_functions(u, lambda s: np.where(np.abs(s) < 1.0, beta * (1.0 - s * s), 0.0))


def _coeficientes_nulos(N: int = 1) -> LinearizedCoefficients:
    u = np.linspace(-1.05, 1.05, 43)
    return LinearizedCoefficients(u, np.zeros((u.size, N, N)), np.zeros((u.size, N, N)))


def test_bessel_contra_scipy():
    """Série, correção escalonada e assintótica batem com scipy.special.iv."""
    z = np.array([0.0, 1.5, 3.0 + 4.0j, 12.0j, -7.0 + 2.0j, 25.0 - 10.0j])
    np.testing.assert_allclose(bessel_I0(z), scipy.special.iv(0, z), rtol=1e-10)

    # ramo assintótico, comparado em log
    grandes = np.array([50.0, 40.0 + 30.0j, 80.0 - 5.0j])
    esperado = np.log(scipy.special.ive(0, grandes)) + np.abs(grandes.real)
    obtido = bessel_I0(grandes, scaled=True)
    np.testing.assert_allclose(obtido.real, esperado.real, rtol=1e-10)
    assert complex(bessel_I0(0.0)) == 1.0


def test_malha_de_goursat():
    grid = GoursatGrid(u_min=-1.05, h_u=0.01, v_max=3.0, h_v=0.1)
    assert grid.u[0] == -1.05 and grid.u[-1] == 1.0
    assert grid.v[0] == 1.0 and grid.v[-1] == 3.0
    assert grid.du <= 0.01 + 1e-12

    with pytest.raises(DomainError):
        GoursatGrid(u_min=-2.0, h_u=0.01, v_max=3.0, h_v=0.1)
    with pytest.raises(DomainError):
        GoursatGrid(u_min=-1.0, h_u=0.01, v_max=0.5, h_v=0.1)


def test_goursat_sem_acoplamento_e_bessel_j0():
    """Com B = 0 e dados 1 a solução é J_0(|xi| sqrt((v'-1)(u'-u0))); esquema de segunda ordem."""
    coeffs = _coeficientes_nulos()
    erros = []
    for h in (0.02, 0.01):
        grid = GoursatGrid(u_min=-1.05, h_u=h, v_max=11.0, h_v=h)
        modo = goursat_solve(coeffs, 2.0, 0.0, grid)
        exato = closed_form_scalar(None, 2.0, grid.u[0], 1.0, grid.v, scaled=False)
        erros.append(float(np.abs(modo.q_final[:, 0] * np.exp(modo.log_escala_final) - exato).max()))
    assert erros[1] < 5e-3
    assert erros[0] / erros[1] > 3.0
    print("\n Teste de Goursat contra J0: OK")


def test_balanco_de_energia_com_fluxo():
    """Sem acoplamento a energia por linha muda só pelo fluxo nas pontas."""
    grid = GoursatGrid(u_min=-1.05, h_u=0.01, v_max=11.0, h_v=0.01)
    modo = goursat_solve(_coeficientes_nulos(2), 3.0, 1.0, grid, balanco_energia=True)
    assert modo.residuo_energia is not None
    assert modo.residuo_energia <= 1e-8


def test_goursat_contra_forma_fechada_com_acoplamento():
    """B(u) = 1 - u^2: o campo em u' = 1 segue I_0 da integral de a."""
    coeffs = _coeficientes_escalares()
    grid = GoursatGrid(u_min=-1.05, h_u=0.005, v_max=21.0, h_v=0.005)
    modo = goursat_solve(coeffs, 1.0, 0.0, grid)
    exato = closed_form_scalar(coeffs, 1.0, grid.u[0], 1.0, grid.v, scaled=False)
    obtido = modo.q_final[:, 0] * np.exp(modo.log_escala_final)
    assert np.abs(obtido - exato).max() <= 2e-3 * np.abs(exato).max()
    np.testing.assert_allclose(modo.log_abs_final(), np.log(np.abs(obtido)), atol=1e-12)

    # o perfil de crescimento é finito e cobre t até (1 + v_max) / 2
    perfil = sup_growth_profile(modo)
    assert np.isfinite(perfil.log_max).all()
    assert perfil.t[-1] <= 11.0 + grid.dv


def test_campo_guardado_e_perfil():
    coeffs = _coeficientes_escalares()
    grid = GoursatGrid(u_min=-1.05, h_u=0.02, v_max=11.0, h_v=0.02)
    modo = goursat_solve(coeffs, 1.0, 0.0, grid, guardar_campo=True)
    assert modo.campo.shape == (grid.u.size, grid.v.size, 1)
    # o perfil recalculado a partir do campo coincide com o acumulado na marcha
    recalculado = sup_growth_profile(modo)
    np.testing.assert_allclose(recalculado.log_max, modo.perfil.log_max, atol=1e-12)

    # empacotar o campo já reescalado dá o mesmo perfil
    empacotado = TransverseMode.from_field(grid, modo.campo[:, :, 0] * np.exp(modo.escalas)[:, None], 1.0, 0.0)
    np.testing.assert_allclose(empacotado.perfil.log_max, modo.perfil.log_max, atol=1e-9)


def test_resolucao_insuficiente():
    grid = GoursatGrid(u_min=-1.05, h_u=0.01, v_max=21.0, h_v=0.5)
    with pytest.raises(ResolutionError) as erro:
        goursat_solve(_coeficientes_nulos(), 10.0, 0.0, grid)
    assert erro.value.exit_code == 3


def test_dados_de_contorno_incompativeis():
    grid = GoursatGrid(u_min=-1.05, h_u=0.05, v_max=3.0, h_v=0.05)
    dados = BoundaryData(np.ones((3, 1)), np.ones((3, 1)))
    with pytest.raises(DomainError):
        goursat_solve(_coeficientes_nulos(), 1.0, 0.0, grid, dados)


def test_varios_modos_preservam_a_ordem():
    coeffs = _coeficientes_escalares()
    grid = GoursatGrid(u_min=-1.05, h_u=0.02, v_max=11.0, h_v=0.02)
    frequencias = [(1.0, 0.0), (0.5, 0.0), (2.0, 0.0)]
    modos = solve_modes(coeffs, frequencias, grid, threads=2)
    assert [(m.xi_y, m.xi_z) for m in modos] == frequencias
    sozinho = goursat_solve(coeffs, 0.5, 0.0, grid)
    np.testing.assert_allclose(modos[1].q_final, sozinho.q_final)


def test_forma_fechada_exige_u_maior_que_u0():
    with pytest.raises(DomainError):
        closed_form_scalar(None, 1.0, 0.5, 0.0, np.array([1.0, 2.0]))


def test_varredura_de_explosao():
    """T(delta) cresce quando delta diminui e o ajuste de sqrt(T) tem inclinação positiva."""
    coeffs = _coeficientes_escalares()
    grid = GoursatGrid(u_min=-1.05, h_u=0.01, v_max=300.0, h_v=0.05)
    varredura = nirenberg_blowup_scan(coeffs, 2.0, [3e-1, 1e-1, 3e-2], grid)
    tempos = [T for _, T in varredura.entries]
    assert all(T is not None for T in tempos)
    # entradas em delta decrescente
    assert tempos == sorted(tempos)
    assert varredura.ajuste().exponent > 0.0

    with pytest.raises(DomainError):
        nirenberg_blowup_scan(_coeficientes_nulos(2), 4.0, [1e-1], grid)
    print("\n Teste de Varredura de Explosão: OK")


def _coeficientes_de_perfil(amplitude: float = 2.0) -> LinearizedCoefficients:
    """B = f' para f = amplitude * bump."""
    u = np.linspace(-1.05, 1.05, 4201)
    return LinearizedCoefficients.from_functions(u, lambda s: amplitude * bump_shape(s, 1))


def test_goursat_contra_bessel_com_b_igual_a_derivada_do_perfil():
    """Linhas u' = 0 (integral de B máxima) e u' = 1 (integral nula) contra I_0, para xi = 5, 20, 50."""
    coeffs = _coeficientes_de_perfil()
    grid = GoursatGrid(u_min=-1.0, h_u=2e-3, v_max=2.0, h_v=5e-4)
    linhas = (int(np.argmin(np.abs(grid.u))), grid.u.size - 1)
    for xi in (5.0, 20.0, 50.0):
        modo = goursat_solve(coeffs, xi, 0.0, grid, guardar_campo=True)
        for i in linhas:
            obtido = modo.campo[i, :, 0] * np.exp(modo.escalas[i])
            exato = closed_form_scalar(coeffs, xi, grid.u[0], grid.u[i], grid.v, scaled=False)
            assert np.abs(obtido - exato).max() <= 3e-2 * np.abs(exato).max(), f"xi={xi}, u'={grid.u[i]:.3f}"
    print("\n Teste de Goursat contra Bessel: OK")


def test_conjugacao_nao_muda_o_crescimento():
    """S B S^-1 com dados S q0: o campo vira S q e o K previsto não muda."""
    u = np.linspace(-1.05, 1.05, 841)
    M = np.array([[0.5, 1.0], [1.0, -0.5]])
    S = np.array([[2.0, 1.0], [0.0, 1.0]])
    by = bump_shape(u, 1)[:, None, None] * M
    coeffs = LinearizedCoefficients(u, by, np.zeros_like(by))
    conjugado = LinearizedCoefficients(u, S @ by @ np.linalg.inv(S), np.zeros_like(by))

    K = growth_rate_estimate(coeffs, n_theta=16, max_nos=u.size)
    K_conjugado = growth_rate_estimate(conjugado, n_theta=16, max_nos=u.size)
    assert K.positive
    assert K_conjugado.K == pytest.approx(K.K, rel=1e-8)

    grid = GoursatGrid(u_min=-1.05, h_u=0.01, v_max=6.0, h_v=0.01)
    q0 = np.array([1.0, 0.5])
    modo = goursat_solve(coeffs, 2.0, 0.0, grid, BoundaryData.constante(q0, grid))
    modo_conjugado = goursat_solve(conjugado, 2.0, 0.0, grid, BoundaryData.constante(S @ q0, grid))
    q = modo.q_final * np.exp(modo.log_escala_final)
    q_conjugado = modo_conjugado.q_final * np.exp(modo_conjugado.log_escala_final)
    np.testing.assert_allclose(q_conjugado, q @ S.T, rtol=1e-8, atol=1e-10 * np.abs(q).max())


def test_inclinacao_da_explosao_e_o_inverso_de_k():
    """sqrt(T) contra log(1/delta): inclinação vezes K perto de 1."""
    coeffs = _coeficientes_escalares()
    K = growth_rate_estimate(coeffs, n_theta=8).K
    grid = GoursatGrid(u_min=-1.0, h_u=4e-3, v_max=1500.0, h_v=0.1)
    varredura = nirenberg_blowup_scan(coeffs, 2.0, [1e-2, 1e-3, 1e-4, 1e-5], grid)
    assert all(T is not None for _, T in varredura.entries)
    ajuste = varredura.ajuste()
    assert 0.8 <= ajuste.exponent * K <= 1.4
