# nullwave/tests/test_geoptics.py
import math

import numpy as np
import pytest

from exceptions import DomainError
from geoptics import (
    ComparisonODE, RayBundle, comparison_ode_check, frequencia_padrao, integral_abscissa, null_vector,
    perturbation_operator, transport_defect, transport_solve, ansatz_residual,
)
from nullform_algebra import coupling_tensors
from renormalize import LinearizedCoefficients, linearized_coefficients, solve_renormalizer


def _escalar(beta: float) -> LinearizedCoefficients:
    """B(u) = beta (1 - u^2) em [-1, 1]."""
    u = np.linspace(-1.05, 1.05, 2101)
    return LinearizedCoefficients.from_functions(u, lambda s: np.where(np.abs(s) < 1.0, beta * (1.0 - s * s), 0.0))


def test_vetor_nulo():
    direcao = null_vector(0.2, 0.8, 1e3)
    assert abs(direcao.minkowski_norm) <= 1e-14
    assert direcao.transversalidade == pytest.approx(2.0)
    assert direcao.L[1] == pytest.approx(1.0 - 0.6 / 1e3)
    assert direcao.L[2] < 0.0
    assert direcao.taxa_exponencial == pytest.approx(math.sqrt(0.6 * 1e3 / 2.0), rel=1e-3)

    with pytest.raises(DomainError):
        null_vector(0.5, 0.2, 10.0)
    with pytest.raises(DomainError):
        null_vector(-1.0, 1.0, 1.5)


def test_feixe_de_raios():
    direcao = null_vector(-0.5, 0.5, 100.0)
    feixe = RayBundle.construir(direcao, mu=1e4, M=1, n_s=200)
    assert feixe.a.size == 7 and feixe.c.size == 1
    assert feixe.espacamento == pytest.approx(1e-3)
    # o raio central vai de u_1 a u_2
    assert feixe.u_linha(0.0, 0.0) == pytest.approx(-0.5)
    assert feixe.u_linha(100.0, 0.0) == pytest.approx(0.5)

    a, b, c = feixe.offsets_nivel(1)
    assert a.size == 5 and b.size == 5 and c.size == 1

    largo = RayBundle.construir(direcao, mu=10.0, M=0, n_s=200, transversal_z=True)
    assert largo.espacamento == pytest.approx(2 * math.pi / 200.0)
    assert largo.c.size == 5


def test_operador_de_perturbacao_em_funcao_linear():
    """Para phi = y - L_y t a caixa some e sobra -B_y."""
    coeffs = _escalar(1.0)
    direcao = null_vector(-0.5, 0.5, 100.0)
    feixe = RayBundle.construir(direcao, mu=10.0, M=1, n_s=100)
    phi = np.broadcast_to(feixe.b[None, None, :, None, None],
                          (feixe.s.size, feixe.a.size, feixe.b.size, 1, 1)).astype(complex)
    resultado = perturbation_operator(phi, feixe, coeffs, 0)
    a, _, _ = feixe.offsets_nivel(1)
    esperado = -coeffs.by_at(feixe.u_linha(feixe.s[:, None], a[None, :]))[..., 0, 0]
    np.testing.assert_allclose(resultado[..., 0], esperado[:, :, None, None] * np.ones_like(resultado[..., 0]),
                               atol=1e-9)


def test_transporte_escalar_tem_forma_fechada():
    """log |phi_0(T)| = 1/2 sqrt(2T/kappa - 1) int B, e a EDO de comparação concorda."""
    coeffs = _escalar(1.0)
    T = 1e3
    direcao = null_vector(-0.5, 0.5, T)
    feixe = RayBundle.construir(direcao, frequencia_padrao(T), M=0, n_s=4000)
    solucao = transport_solve(coeffs, feixe, 0)
    obtido = math.log(solucao.crescimento()[-1])
    esperado = 0.5 * math.sqrt(2 * T / direcao.kappa - 1.0) * (11.0 / 12.0)
    assert obtido == pytest.approx(esperado, rel=1e-8)

    # validação cruzada com a EDO ao longo do raio central
    ode = ComparisonODE.de_coeficientes(coeffs, direcao)
    R = ode.integrar(np.array([1.0]), np.array([0.0, T]))
    assert math.log(abs(R[-1, 0])) == pytest.approx(obtido, rel=1e-8)

    assert transport_defect(solucao, coeffs)[0] <= 1e-6
    print("\n Teste de Transporte Escalar: OK")


def test_residuo_do_ansatz_escala_com_mu():
    """Dobrar mu divide o resíduo por 2^M."""
    coeffs = _escalar(0.1)
    direcao = null_vector(-0.5, 0.5, 100.0)
    feixe = RayBundle.construir(direcao, 1e4, M=2, n_s=400)
    solucao = transport_solve(coeffs, feixe, 2, mu=1e4)
    assert len(solucao.termos) == 3
    r1 = ansatz_residual(solucao, coeffs, mu=1e4)
    r2 = ansatz_residual(solucao, coeffs, mu=2e4)
    assert r1 / r2 == pytest.approx(4.0, rel=1e-2)

    defeitos = transport_defect(solucao, coeffs)
    assert len(defeitos) == 3 and all(math.isfinite(d) for d in defeitos)


def test_feixe_pequeno_para_m():
    direcao = null_vector(-0.5, 0.5, 100.0)
    feixe = RayBundle.construir(direcao, 10.0, M=0, n_s=50)
    with pytest.raises(DomainError):
        transport_solve(_escalar(1.0), feixe, 1)


def test_comparacao_diagonal():
    """P = diag(1, 1/2): crescimento previsto pela integral da abscissa e status ok."""
    direcao = null_vector(0.0, 1.0, 1e3)
    ode = ComparisonODE(lambda a: np.diag([1.0, 0.5]), 1e3, direcao.L[2], direcao.kappa)
    assert integral_abscissa(ode) == pytest.approx(1.0)

    relatorio = comparison_ode_check(ode, amostras=4)
    assert relatorio.status == "ok"
    assert relatorio.cota_superior_ok and relatorio.limite_inferior_ok
    assert relatorio.constante == pytest.approx(1.0)
    previsto = math.sqrt(direcao.kappa * 1e3 / 2.0)
    assert relatorio.log_crescimento_construido == pytest.approx(previsto, rel=0.1)


def test_comparacao_com_rotacao_e_inconclusiva():
    """Autovalores +-i: sem lacuna espectral, só a cota superior é verificada."""
    direcao = null_vector(0.0, 1.0, 1e3)
    ode = ComparisonODE(lambda a: np.array([[0.0, 1.0], [-1.0, 0.0]]), 1e3, direcao.L[2], direcao.kappa)
    relatorio = comparison_ode_check(ode, amostras=3)
    assert relatorio.status == "inconclusivo"
    assert relatorio.cota_superior_ok
    assert relatorio.limite_inferior_ok is None


def test_comparacao_no_exemplo_2(exemplo2, perfil_padrao):
    ren = solve_renormalizer(exemplo2, perfil_padrao, h=1e-3)
    coeffs = linearized_coefficients(ren, coupling_tensors(exemplo2), perfil_padrao)
    direcao = null_vector(0.2, 0.8, 1e3)
    relatorio = comparison_ode_check(ComparisonODE.de_coeficientes(coeffs, direcao), amostras=4)
    assert relatorio.status == "ok"
    assert relatorio.integral_lambda > 0.0

    with pytest.raises(DomainError):
        comparison_ode_check(ComparisonODE.de_coeficientes(coeffs, null_vector(0.2, 0.8, 100.0)))
    print("\n Teste da EDO de Comparação (exemplo 2): OK")
