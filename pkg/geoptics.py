# nullwave/geoptics.py

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from exceptions import DomainError, NumericalBlowup
from notification_manager import add_notification
from renormalize import LinearizedCoefficients

TOL_NULO = 1e-14
MU_MAXIMO = 1e6
ESPACAMENTO_MINIMO = 1e-3
LACUNA_MINIMA = 1e-3
T_MINIMO_COMPARACAO = 1e3


# --- Direção nula ---

@dataclass(frozen=True)
class NullDirection:
    """
    L = (1, L_x, L_y, L_z) nulo e L_bar = (1, -L_x, -L_y, -L_z), usado na fase
    mu * (t - L_x x - L_y y - L_z z). Um raio que sai de x = -u_1 em t = 0 tem
    u' = t - x indo de u_1 a u_2 em t = T.
    """

    L: tuple[float, float, float, float]
    u_1: float
    u_2: float
    T: float

    @property
    def L_bar(self) -> tuple[float, float, float, float]:
        return (self.L[0], -self.L[1], -self.L[2], -self.L[3])

    @property
    def kappa(self) -> float:
        return self.u_2 - self.u_1

    @property
    def minkowski_norm(self) -> float:
        Lt, Lx, Ly, Lz = self.L
        return Lt * Lt - Lx * Lx - Ly * Ly - Lz * Lz

    @property
    def transversalidade(self) -> float:
        """m(L, L_bar) = 1 + |L_espacial|^2, nunca nulo."""
        Lt, Lx, Ly, Lz = self.L
        return Lt * Lt + Lx * Lx + Ly * Ly + Lz * Lz

    @property
    def taxa_exponencial(self) -> float:
        """1/2 |L_y| T, que vale sqrt((u_2 - u_1) T / 2) a menos de O(1/T)."""
        return 0.5 * abs(self.L[2]) * self.T


def null_vector(u_1: float, u_2: float, T: float) -> NullDirection:
    kappa = u_2 - u_1
    if not (kappa > 0 and T > kappa):
        raise DomainError(f"Precisa de T > u_2 - u_1 > 0; recebido u_1={u_1}, u_2={u_2}, T={T}.")
    r = kappa / T
    direcao = NullDirection((1.0, 1.0 - r, -math.sqrt(2.0 * r - r * r), 0.0), float(u_1), float(u_2), float(T))
    if abs(direcao.minkowski_norm) > TOL_NULO:
        raise DomainError(f"Vetor não nulo: |L|^2 = {direcao.minkowski_norm:.3e}.")
    return direcao


def frequencia_padrao(T: float, delta: float = 0.1) -> float:
    """mu = exp(delta sqrt(T)), limitado a 1e6."""
    return min(math.exp(delta * math.sqrt(T)), MU_MAXIMO)


# --- Feixe de raios ---

@dataclass(frozen=True)
class RayBundle:
    """
    Raios paralelos a L saindo de (0, -u_1 + a, b, c). Nas coordenadas móveis
    (s, a, b, c) vale d_s = d_L e d_t = d_s - L_x d_a - L_y d_b - L_z d_c.
    """

    direcao: NullDirection
    s: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    espacamento: float

    @classmethod
    def construir(cls, direcao: NullDirection, mu: float, M: int, n_s: int = 1000,
                  transversal_z: bool = False) -> "RayBundle":
        if M < 0 or n_s < 4:
            raise DomainError("Precisa de M >= 0 e pelo menos 4 passos em s.")
        d = max(2.0 * math.pi / (20.0 * mu), ESPACAMENTO_MINIMO)
        lado = M + 2
        offsets = d * np.arange(-lado, lado + 1)
        return cls(direcao, np.linspace(0.0, direcao.T, n_s + 1), offsets, offsets.copy(),
                   offsets.copy() if transversal_z else np.zeros(1), d)

    @property
    def ds(self) -> float:
        return float(self.s[1] - self.s[0])

    def u_linha(self, s, a) -> np.ndarray:
        return self.direcao.u_1 - a + self.direcao.kappa / self.direcao.T * s

    def offsets_nivel(self, j: int):
        """Offsets ativos no nível j: cada termo perde uma camada de raios por eixo."""
        def cortar(o):
            return o[j:o.size - j] if o.size > 1 else o
        return cortar(self.a), cortar(self.b), cortar(self.c)


# --- Operadores no feixe ---

def _fatia(phi: np.ndarray, deslocamentos: dict[int, int]) -> np.ndarray:
    idx = [slice(None)] * phi.ndim
    for eixo in (1, 2, 3):
        n = phi.shape[eixo]
        if n >= 3:
            k = deslocamentos.get(eixo, 0)
            idx[eixo] = slice(1 + k, n - 1 + k)
    return phi[tuple(idx)]


def _d1(phi, eixo, d):
    if phi.shape[eixo] < 3:
        return np.zeros_like(_fatia(phi, {}))
    return (_fatia(phi, {eixo: 1}) - _fatia(phi, {eixo: -1})) / (2 * d)


def _d2(phi, eixo, d):
    if phi.shape[eixo] < 3:
        return np.zeros_like(_fatia(phi, {}))
    return (_fatia(phi, {eixo: 1}) - 2 * _fatia(phi, {}) + _fatia(phi, {eixo: -1})) / (d * d)


def _dmisto(phi, e1, e2, d):
    if phi.shape[e1] < 3 or phi.shape[e2] < 3:
        return np.zeros_like(_fatia(phi, {}))
    return (_fatia(phi, {e1: 1, e2: 1}) - _fatia(phi, {e1: 1, e2: -1})
            - _fatia(phi, {e1: -1, e2: 1}) + _fatia(phi, {e1: -1, e2: -1})) / (4 * d * d)


def _coeficientes_no_feixe(coeffs: LinearizedCoefficients, bundle: RayBundle, s, a):
    U = bundle.u_linha(np.asarray(s)[:, None], np.asarray(a)[None, :])
    return coeffs.by_at(U), coeffs.bz_at(U)


def perturbation_operator(phi: np.ndarray, bundle: RayBundle, coeffs: LinearizedCoefficients,
                          j: int) -> np.ndarray:
    """
    box phi - B_y d_y phi - B_z d_z phi para phi no nível j (forma (n_s+1, na, nb, nc, N)),
    devolvido nos offsets do nível j + 1.
    """
    _, Lx, Ly, Lz = bundle.direcao.L
    d, ds = bundle.espacamento, bundle.ds
    centro = _fatia(phi, {})
    primeira = {e: _d1(phi, e, d) for e in (1, 2, 3)}
    coef = {1: Lx, 2: Ly, 3: Lz}

    phi_s = np.gradient(centro, ds, axis=0, edge_order=2)
    phi_ss = np.gradient(phi_s, ds, axis=0, edge_order=2)
    dt2 = phi_ss.copy()
    for e in (1, 2, 3):
        if coef[e]:
            dt2 -= 2 * coef[e] * np.gradient(primeira[e], ds, axis=0, edge_order=2)
    for e1 in (1, 2, 3):
        for e2 in (1, 2, 3):
            if coef[e1] and coef[e2]:
                termo = _d2(phi, e1, d) if e1 == e2 else _dmisto(phi, e1, e2, d)
                dt2 += coef[e1] * coef[e2] * termo
    caixa = dt2 - _d2(phi, 1, d) - _d2(phi, 2, d) - _d2(phi, 3, d)

    a, _, _ = bundle.offsets_nivel(j + 1)
    By, Bz = _coeficientes_no_feixe(coeffs, bundle, bundle.s, a)
    return (caixa - np.einsum("saij,sabcj->sabci", By, primeira[2])
            - np.einsum("saij,sabcj->sabci", Bz, primeira[3]))


def _meio_passo(F: np.ndarray) -> np.ndarray:
    """Interpolação cúbica de 4 pontos nos pontos médios de uma malha uniforme (eixo 0)."""
    n = F.shape[0]
    meio = np.empty((n - 1,) + F.shape[1:], dtype=F.dtype)
    if n < 4:
        meio[:] = 0.5 * (F[:-1] + F[1:])
        return meio
    meio[1:-1] = (-F[:-3] + 9 * F[1:-2] + 9 * F[2:-1] - F[3:]) / 16
    meio[0] = (5 * F[0] + 15 * F[1] - 5 * F[2] + F[3]) / 16
    meio[-1] = (5 * F[-1] + 15 * F[-2] - 5 * F[-3] + F[-4]) / 16
    return meio


# --- Transporte ---

@dataclass
class GeoOpticsSolution:
    bundle: RayBundle
    mu: float
    M: int
    termos: list[np.ndarray] = field(default_factory=list)
    R0: np.ndarray | None = None

    @property
    def N(self) -> int:
        return self.termos[0].shape[-1]

    def raio_central(self, j: int) -> np.ndarray:
        """phi_j ao longo do raio a = b = c = 0, forma (n_s+1, N)."""
        phi = self.termos[j]
        return phi[:, phi.shape[1] // 2, phi.shape[2] // 2, phi.shape[3] // 2]

    def ansatz_central(self, mu: float | None = None) -> np.ndarray:
        mu = self.mu if mu is None else mu
        return sum(self.raio_central(j) / (1j * mu) ** j for j in range(self.M + 1))

    def crescimento(self) -> np.ndarray:
        """|phi_0| no raio central ao longo de t."""
        return np.linalg.norm(self.raio_central(0), axis=1)


def _vetor_inicial(coeffs: LinearizedCoefficients, direcao: NullDirection) -> np.ndarray:
    _, _, Ly, Lz = direcao.L
    C = -0.5 * (Ly * coeffs.by_at(direcao.u_1) + Lz * coeffs.bz_at(direcao.u_1))
    autovalores, autovetores = np.linalg.eig(C)
    v = autovetores[:, int(np.argmax(autovalores.real))]
    return v / np.linalg.norm(v)


def transport_solve(coeffs: LinearizedCoefficients, bundle: RayBundle, M: int, R0=None,
                    largura: float = math.inf, mu: float | None = None) -> GeoOpticsSolution:
    """
    2 d_L phi_j + (B_y L_y + B_z L_z) phi_j = -(box phi_{j-1} - B_y d_y phi_{j-1} - B_z d_z phi_{j-1})
    por RK4 em cada raio (vetorizado sobre o feixe), phi_j(0) = 0 para j >= 1.
    """
    if bundle.a.size < 2 * M + 5:
        raise DomainError(f"Feixe com {bundle.a.size} raios por direção não resolve M={M}.")
    _, _, Ly, Lz = bundle.direcao.L
    N = coeffs.N
    R0 = _vetor_inicial(coeffs, bundle.direcao) if R0 is None else np.asarray(R0, dtype=complex)
    s, ds = bundle.s, bundle.ds
    s_meio = np.linspace(s[0], s[-1], 2 * s.size - 1)
    solucao = GeoOpticsSolution(bundle, mu if mu is not None else frequencia_padrao(bundle.direcao.T), M, R0=R0)

    for j in range(M + 1):
        a, b, c = bundle.offsets_nivel(j)
        By, Bz = _coeficientes_no_feixe(coeffs, bundle, s_meio, a)
        C = -0.5 * (Ly * By + Lz * Bz)  # (2 n_s + 1, na, N, N)
        phi = np.zeros((s.size, a.size, b.size, c.size, N), dtype=complex)
        if j == 0:
            envelope = np.exp(-(a[:, None, None] ** 2 + b[None, :, None] ** 2 + c[None, None, :] ** 2)
                              / (2 * largura**2))
            phi[0] = envelope[..., None] * R0
            F = Fm = None
        else:
            F = -0.5 * perturbation_operator(solucao.termos[j - 1], bundle, coeffs, j - 1)
            Fm = _meio_passo(F)

        def campo(Ck, Fk, y):
            derivada = np.einsum("aij,abcj->abci", Ck, y)
            return derivada if Fk is None else derivada + Fk

        for k in range(s.size - 1):
            y = phi[k]
            C0, Cm, C1 = C[2 * k], C[2 * k + 1], C[2 * k + 2]
            F0, Fk, F1 = (None, None, None) if F is None else (F[k], Fm[k], F[k + 1])
            k1 = campo(C0, F0, y)
            k2 = campo(Cm, Fk, y + 0.5 * ds * k1)
            k3 = campo(Cm, Fk, y + 0.5 * ds * k2)
            k4 = campo(C1, F1, y + ds * k3)
            phi[k + 1] = y + ds / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(phi).all():
            raise NumericalBlowup(f"Termo phi_{j} não finito no transporte.", float(s[-1]))
        solucao.termos.append(phi)

    add_notification(f"Transporte resolvido: M={M}, {bundle.a.size * bundle.b.size * bundle.c.size} raios, "
                     f"{s.size - 1} passos, |phi_0(T)|={solucao.crescimento()[-1]:.4e}.")
    return solucao


def ansatz_residual(solucao: GeoOpticsSolution, coeffs: LinearizedCoefficients, mu: float | None = None) -> float:
    """
    sup |box eta - B_y d_y eta - B_z d_z eta| / sup |eta| no feixe. Com a
    hierarquia satisfeita resta só o termo (i mu)^{-M} e^{i mu fase} P phi_M,
    medido por diferenças com a fase fatorada.
    """
    mu = solucao.mu if mu is None else mu
    M = solucao.M
    topo = perturbation_operator(solucao.termos[M], solucao.bundle, coeffs, M)
    numerador = float(np.abs(topo).max()) * mu ** (-M)

    ansatz = np.zeros_like(topo)
    for j, phi in enumerate(solucao.termos):
        recorte = phi
        for _ in range(M + 1 - j):
            recorte = _fatia(recorte, {})
        ansatz = ansatz + recorte / (1j * mu) ** j
    denominador = float(np.linalg.norm(ansatz, axis=-1).max())
    if denominador == 0.0:
        return 0.0
    return numerador / denominador


def transport_defect(solucao: GeoOpticsSolution, coeffs: LinearizedCoefficients) -> list[float]:
    """
    |2 d_s phi_j + (L_y B_y + L_z B_z) phi_j + P phi_{j-1}| / sup |phi_j| por nível,
    com d_s de 4ª ordem nos nós internos em s.
    """
    bundle = solucao.bundle
    _, _, Ly, Lz = bundle.direcao.L
    ds = bundle.ds
    defeitos = []
    for j, phi in enumerate(solucao.termos):
        if phi.shape[0] < 5:
            defeitos.append(math.nan)
            continue
        a, _, _ = bundle.offsets_nivel(j)
        By, Bz = _coeficientes_no_feixe(coeffs, bundle, bundle.s[2:-2], a)
        derivada = (-phi[4:] + 8 * phi[3:-1] - 8 * phi[1:-3] + phi[:-4]) / (12 * ds)
        residuo = 2 * derivada + np.einsum("saij,sabcj->sabci", Ly * By + Lz * Bz, phi[2:-2])
        if j > 0:
            residuo = residuo + perturbation_operator(solucao.termos[j - 1], bundle, coeffs, j - 1)[2:-2]
        escala = float(np.abs(phi).max())
        defeitos.append(float(np.abs(residuo).max()) / escala if escala > 0 else 0.0)
    return defeitos


# --- EDO de comparação ---

@dataclass(frozen=True)
class ComparisonODE:
    """R' = 1/2 P(t/T) (-L_y) R em [0, T]."""

    P: Callable[[float], np.ndarray]
    T: float
    L_y: float
    kappa: float

    @classmethod
    def de_coeficientes(cls, coeffs: LinearizedCoefficients, direcao: NullDirection) -> "ComparisonODE":
        u_1, u_2 = direcao.u_1, direcao.u_2
        return cls(lambda a: coeffs.by_at(a * u_2 + (1.0 - a) * u_1), direcao.T, direcao.L[2], direcao.kappa)

    def integrar(self, R0, t_eval, rtol: float = 1e-11, atol: float = 1e-14) -> np.ndarray:
        R0 = np.asarray(R0, dtype=complex)
        fator = -0.5 * self.L_y

        def rhs(t, R):
            return fator * (np.asarray(self.P(t / self.T)) @ R)

        sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), R0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
        if not sol.success or not np.isfinite(sol.y).all():
            raise NumericalBlowup(f"Integração da EDO de comparação falhou: {sol.message}", float(t_eval[-1]))
        return sol.y.T


@dataclass
class ComparisonReport:
    status: str                      # ok | violado | inconclusivo
    integral_lambda: float
    constante: float
    cota_superior_ok: bool
    razao_superior_max: float
    lacuna_min: float
    log_crescimento_construido: float | None
    log_cota_inferior: float | None
    limite_inferior_ok: bool | None


def _espectro(ode: ComparisonODE, n_tau: int):
    tau = np.linspace(0.0, 1.0, n_tau)
    pilha = np.stack([np.atleast_2d(ode.P(a)) for a in tau])
    autovalores, autovetores = np.linalg.eig(pilha)
    reais = np.sort(autovalores.real, axis=1)
    lam = reais[:, -1]
    lacuna = (reais[:, -1] - reais[:, -2]) if reais.shape[1] > 1 else np.full(n_tau, np.inf)
    cond = np.linalg.cond(autovetores)
    return tau, lam, float(lacuna.min()), float(np.nanmax(cond))


def integral_abscissa(ode: ComparisonODE, n_tau: int = 2001) -> float:
    """int_0^1 lambda(P(tau)) d tau; sqrt(kappa T / 2) vezes isso prevê log sup |phi_0|."""
    tau, lam, _, _ = _espectro(ode, n_tau)
    return float(cumulative_simpson(lam, x=tau, initial=0.0)[-1])


def comparison_ode_check(ode: ComparisonODE, amostras: int = 8, seed: int = 0, eps: float = 0.1,
                         n_tau: int = 2001, n_t: int = 201) -> ComparisonReport:
    """
    Cota superior |R(t)| <= C exp(sqrt(kappa T / 2)(int_0^{t/T} lambda + eps)) |R(0)|
    para dados aleatórios, C = max cond(V)^2, e cota inferior para o autovetor
    superior de P(0), só quando a lacuna espectral fica acima de 1e-3.
    """
    if ode.T < T_MINIMO_COMPARACAO:
        raise DomainError(f"A verificação da EDO de comparação pede T >= {T_MINIMO_COMPARACAO:g}.")
    tau, lam, lacuna, cond = _espectro(ode, n_tau)
    acumulada = cumulative_simpson(lam, x=tau, initial=0.0)
    escala = math.sqrt(ode.kappa * ode.T / 2.0)
    C = cond**2 if np.isfinite(cond) else math.inf
    t = np.linspace(0.0, ode.T, n_t)
    log_cota = math.log(C) + escala * (np.interp(t / ode.T, tau, acumulada) + eps)

    rng = np.random.default_rng(seed)
    N = np.atleast_2d(ode.P(0.0)).shape[0]
    razao = 0.0
    for _ in range(amostras):
        R0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        R0 /= np.linalg.norm(R0)
        R = ode.integrar(R0, t)
        razao = max(razao, float(np.max(np.log(np.linalg.norm(R, axis=1)) - log_cota)))
    superior_ok = razao <= 0.0

    construido = cota_inferior = inferior_ok = None
    if lacuna >= LACUNA_MINIMA:
        autovalores, autovetores = np.linalg.eig(np.atleast_2d(ode.P(0.0)))
        v = autovetores[:, int(np.argmax(autovalores.real))]
        v = v / np.linalg.norm(v)
        R = ode.integrar(v, t)
        construido = float(np.log(np.linalg.norm(R[-1])))
        cota_inferior = escala * (float(acumulada[-1]) - eps)
        inferior_ok = construido >= cota_inferior

    if not superior_ok or inferior_ok is False:
        status = "violado"
    elif inferior_ok is None:
        status = "inconclusivo"
    else:
        status = "ok"
    add_notification(f"EDO de comparação: status={status}, int lambda={acumulada[-1]:.4g}, lacuna={lacuna:.3g}.")
    return ComparisonReport(status, float(acumulada[-1]), C, superior_ok, float(math.exp(min(razao, 700.0))),
                            lacuna, construido, cota_inferior, inferior_ok)
