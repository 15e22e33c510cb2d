# nullwave/renormalize.py

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import minimize_scalar

from exceptions import DomainError, EigenvalueError, NumericalFailure, StepSizeRejected
from notification_manager import add_notification
from nullform_algebra import CouplingTensors, SemilinearSystem, contract, coupling_tensors
from profiles import WaveProfile

PAD = 0.05
TOL_PASSO = 1e-8
LIMIAR_CONDICAO_DOIS = 1e-8


# --- Renormalizador A(u) ---

@dataclass(frozen=True)
class Renormalizer:
    """Tabelas de A, A^-1 e derivadas em nós crescentes de u; A = I à direita de u = 1."""

    u: np.ndarray
    h: float
    A: np.ndarray
    A_inv: np.ndarray
    dA: np.ndarray
    dA_inv: np.ndarray
    det: np.ndarray

    @property
    def N(self) -> int:
        return self.A.shape[1]

    def _hermite(self, valores, derivadas) -> CubicHermiteSpline:
        n = self.u.size
        return CubicHermiteSpline(self.u, valores.reshape(n, -1), derivadas.reshape(n, -1), axis=0)

    @cached_property
    def _interp_A(self):
        return self._hermite(self.A, self.dA)

    @cached_property
    def _interp_A_inv(self):
        return self._hermite(self.A_inv, self.dA_inv)

    def _avaliar(self, interp, tabela, u, derivada: int) -> np.ndarray:
        uu = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
        N = self.N
        dentro = np.clip(uu, self.u[0], self.u[-1])
        saida = interp(dentro, derivada).reshape(uu.size, N, N)
        # fora da malha A é constante
        fora = (uu < self.u[0]) | (uu > self.u[-1])
        if derivada == 0:
            saida[uu > self.u[-1]] = tabela[-1]
            saida[uu < self.u[0]] = tabela[0]
        else:
            saida[fora] = 0.0
        return saida.reshape(np.shape(u) + (N, N))

    def A_at(self, u, derivada: int = 0) -> np.ndarray:
        return self._avaliar(self._interp_A, self.A, u, derivada)

    def A_inv_at(self, u, derivada: int = 0) -> np.ndarray:
        return self._avaliar(self._interp_A_inv, self.A_inv, u, derivada)


def _passo_rk4(G0, Gm, G1, A, passo):
    """Um passo RK4 de A' = -1/2 A G(u) com G nos pontos inicial, médio e final."""
    k1 = -0.5 * A @ G0
    k2 = -0.5 * (A + 0.5 * passo * k1) @ Gm
    k3 = -0.5 * (A + 0.5 * passo * k2) @ Gm
    k4 = -0.5 * (A + passo * k3) @ G1
    return A + passo / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def solve_renormalizer(system: SemilinearSystem, profile: WaveProfile, h: float = 1e-3,
                       pad: float = PAD, tol: float | None = TOL_PASSO,
                       couplings: CouplingTensors | None = None) -> Renormalizer:
    """
    Integra A' = -1/2 A (a f') de u = 1 (A = I) até u = -1 - pad com RK4 de
    passo h. O erro local é estimado por passo duplo; `tol=None` desliga a rejeição.
    """
    if not 0 < h <= 1e-2:
        raise DomainError(f"Passo do renormalizador precisa estar em (0, 1e-2], recebido {h}.")
    if profile.N != system.N:
        raise DomainError(f"Perfil com N={profile.N} e sistema com N={system.N}.")
    couplings = couplings or coupling_tensors(system)
    N = system.N
    n_esq = math.ceil((2.0 + pad) / h - 1e-9)
    n_dir = math.ceil(pad / h - 1e-9)

    # a f' em múltiplos de h/4 a partir de u = 1 (nós, meios e quartos de passo)
    u_quartos = 1.0 - np.arange(4 * n_esq + 1) * (h / 4.0)
    G = contract(couplings.a, profile.eval(u_quartos, 1))

    A = np.eye(N)
    tabela = [A]
    for k in range(n_esq):
        i = 4 * k
        cheio = _passo_rk4(G[i], G[i + 2], G[i + 4], A, -h)
        if tol is not None and (G[i:i + 5].any()):
            meio = _passo_rk4(G[i], G[i + 1], G[i + 2], A, -h / 2)
            duplo = _passo_rk4(G[i + 2], G[i + 3], G[i + 4], meio, -h / 2)
            erro = float(np.abs(cheio - duplo).max()) * 16.0 / 15.0
            if erro > tol:
                raise StepSizeRejected(
                    f"Passo rejeitado em u={1.0 - k * h:.4f}: erro local estimado {erro:.2e} > {tol:.0e}; reduza h.",
                    {"u": 1.0 - k * h, "erro": erro, "h": h},
                )
        A = cheio
        tabela.append(A)

    u_esq = 1.0 - np.arange(n_esq + 1) * h
    u = np.concatenate([u_esq[::-1], 1.0 + np.arange(1, n_dir + 1) * h])
    A_nos = np.concatenate([np.array(tabela[::-1]), np.broadcast_to(np.eye(N), (n_dir, N, N))])
    G_nos = np.concatenate([G[::4][::-1], np.zeros((n_dir, N, N))])

    det = np.linalg.det(A_nos)
    if not np.all(det > 0):
        raise NumericalFailure("det A deixou de ser positivo; a integração perdeu a invertibilidade.")
    A_inv = np.linalg.inv(A_nos)
    dA = -0.5 * A_nos @ G_nos
    dA_inv = 0.5 * G_nos @ A_inv
    add_notification(f"Renormalizador resolvido: {u.size} nós, h={h:g}, det A em [{det.min():.4g}, {det.max():.4g}].")
    return Renormalizer(u=u, h=h, A=A_nos, A_inv=A_inv, dA=dA, dA_inv=dA_inv, det=det)


def liouville_residual(ren: Renormalizer, couplings: CouplingTensors, profile: WaveProfile) -> float:
    """
    Erro relativo máximo de det A(u) contra exp(1/2 int_u^1 tr(a f')),
    com a integral exata t . (f(1) - f(u)) e t_j = sum_i a_iji.
    """
    traco = np.einsum("iji->j", couplings.a)
    f = profile.eval(ren.u, 0)
    f1 = profile.eval(1.0, 0)
    esperado = np.exp(0.5 * (f1[None, :] - f) @ traco)
    return float(np.abs(ren.det / esperado - 1.0).max())


# --- Coeficientes linearizados B_y, B_z ---

@dataclass(frozen=True)
class LinearizedCoefficients:
    u: np.ndarray
    By: np.ndarray
    Bz: np.ndarray
    suporte: tuple[float, float] | None = (-1.0, 1.0)

    @property
    def N(self) -> int:
        return self.By.shape[1]

    @classmethod
    def from_functions(cls, u, by, bz=None, suporte=(-1.0, 1.0)) -> "LinearizedCoefficients":
        """Monta a partir de arrays ou funções de u; escalares viram blocos 1x1."""
        u = np.asarray(u, dtype=float)

        def tabela(valor):
            if valor is None:
                return None
            v = np.asarray(valor(u) if callable(valor) else valor, dtype=float)
            if v.ndim == 1:
                v = v[:, None, None]
            return v

        By = tabela(by)
        Bz = tabela(bz) if bz is not None else np.zeros_like(By)
        return cls(u, By, Bz, suporte)

    @cached_property
    def _splines(self):
        n = self.u.size
        return (CubicSpline(self.u, self.By.reshape(n, -1), axis=0),
                CubicSpline(self.u, self.Bz.reshape(n, -1), axis=0))

    def _avaliar(self, qual: int, u) -> np.ndarray:
        uu = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
        N = self.N
        saida = self._splines[qual](np.clip(uu, self.u[0], self.u[-1])).reshape(uu.size, N, N)
        fora = (uu < self.u[0]) | (uu > self.u[-1])
        if self.suporte is not None:
            fora |= (uu <= self.suporte[0]) | (uu >= self.suporte[1])
        saida[fora] = 0.0
        return saida.reshape(np.shape(u) + (N, N))

    def by_at(self, u) -> np.ndarray:
        return self._avaliar(0, u)

    def bz_at(self, u) -> np.ndarray:
        return self._avaliar(1, u)

    def pencil(self, theta: float) -> np.ndarray:
        return math.cos(theta) * self.By + math.sin(theta) * self.Bz

    def is_zero(self, tol: float = 1e-14) -> bool:
        return bool(np.abs(self.By).max(initial=0.0) <= tol and np.abs(self.Bz).max(initial=0.0) <= tol)

    def restrict(self, componentes) -> "LinearizedCoefficients":
        c = list(componentes)
        return LinearizedCoefficients(self.u, self.By[:, c][:, :, c], self.Bz[:, c][:, :, c], self.suporte)

    def rotate(self, phi: float) -> "LinearizedCoefficients":
        """(B_y, B_z) -> (cos B_y + sin B_z, -sin B_y + cos B_z); o pencil em theta vira o de theta + phi."""
        co, si = math.cos(phi), math.sin(phi)
        return LinearizedCoefficients(self.u, co * self.By + si * self.Bz, -si * self.By + co * self.Bz, self.suporte)

    def max_norm(self) -> float:
        """max_u ||B_y|| + ||B_z|| em norma de operador."""
        ny = np.linalg.norm(self.By, ord=2, axis=(1, 2))
        nz = np.linalg.norm(self.Bz, ord=2, axis=(1, 2))
        return float((ny + nz).max(initial=0.0))

    def multiplier_weight(self) -> np.ndarray:
        """Q(u) = int_{u_min}^u (||B_y||^2 + ||B_z||^2) nos nós."""
        densidade = (np.linalg.norm(self.By, ord=2, axis=(1, 2)) ** 2
                     + np.linalg.norm(self.Bz, ord=2, axis=(1, 2)) ** 2)
        return np.maximum(cumulative_simpson(densidade, x=self.u, initial=0.0), 0.0)


def linearized_coefficients(ren: Renormalizer, couplings: CouplingTensors, profile: WaveProfile,
                            identidade: bool = False) -> LinearizedCoefficients:
    """B_y = A (b f') A^-1 e B_z = A (c f') A^-1 nos nós do renormalizador."""
    fp = profile.eval(ren.u, 1)
    bf = contract(couplings.b, fp)
    cf = contract(couplings.c, fp)
    if identidade:
        return LinearizedCoefficients(ren.u, bf, cf, (-1.0, 1.0) if profile.is_compact else None)
    By = ren.A @ bf @ ren.A_inv
    Bz = ren.A @ cf @ ren.A_inv
    return LinearizedCoefficients(ren.u, By, Bz, (-1.0, 1.0) if profile.is_compact else None)


# --- Espectro e condição 2 ---

def spectral_abscissa(M) -> float:
    m = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.isfinite(m).all():
        raise DomainError("Matriz com entradas não finitas.")
    try:
        autovalores = scipy.linalg.eigvals(m, check_finite=False)
    except scipy.linalg.LinAlgError as erro:
        raise EigenvalueError(f"Autovalores não convergiram: {erro}")
    return float(autovalores.real.max())


def _autovalores(pilha: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvals(pilha)
    except np.linalg.LinAlgError as erro:
        raise EigenvalueError(f"Autovalores não convergiram: {erro}")


@dataclass(frozen=True)
class ConditionTwoVerdict:
    satisfied: bool
    u0: float | None
    theta: float | None
    eigenvalue: complex | None
    value: float


def check_condition_two(coeffs: LinearizedCoefficients, n_theta: int = 360,
                        passo_u: int = 1) -> ConditionTwoVerdict:
    """
    Varre u0 nos nós e theta em [0, pi) procurando max |Re autovalor| de
    cos(theta) B_y + sin(theta) B_z; depois um refinamento local em theta.
    """
    if n_theta < 1 or coeffs.u.size == 0:
        raise DomainError("Malhas de theta e u precisam ser não vazias.")
    idx = np.arange(0, coeffs.u.size, passo_u)
    By, Bz = coeffs.By[idx], coeffs.Bz[idx]
    melhor, k_melhor, th_melhor = -1.0, 0, 0.0
    for th in np.arange(n_theta) * (math.pi / n_theta):
        ev = _autovalores(math.cos(th) * By + math.sin(th) * Bz)
        valores = np.abs(ev.real).max(axis=1)
        k = int(np.argmax(valores))
        if valores[k] > melhor:
            melhor, k_melhor, th_melhor = float(valores[k]), k, float(th)

    def objetivo(th):
        return -float(np.abs(_autovalores(math.cos(th) * By[k_melhor] + math.sin(th) * Bz[k_melhor]).real).max())

    largura = math.pi / n_theta
    refinado = minimize_scalar(objetivo, bounds=(th_melhor - largura, th_melhor + largura),
                               method="bounded", options={"xatol": 1e-6})
    if -refinado.fun > melhor:
        melhor, th_melhor = -float(refinado.fun), float(refinado.x)

    P = math.cos(th_melhor) * By[k_melhor] + math.sin(th_melhor) * Bz[k_melhor]
    ev = _autovalores(P)
    testemunha = complex(ev[int(np.argmax(np.abs(ev.real)))])
    satisfeita = melhor > LIMIAR_CONDICAO_DOIS
    return ConditionTwoVerdict(
        satisfied=satisfeita,
        u0=float(coeffs.u[idx[k_melhor]]) if satisfeita else None,
        theta=float(th_melhor % math.pi) if satisfeita else None,
        eigenvalue=testemunha if satisfeita else None,
        value=melhor,
    )


# --- Taxa de crescimento K ---

@dataclass(frozen=True)
class GrowthRateEstimate:
    K: float
    theta: float | None
    u1: float | None
    u2: float | None
    method: str
    positive: bool


def _melhor_intervalo(u: np.ndarray, S: np.ndarray, bloco: int = 256) -> tuple[float, int, int]:
    """sup_{i<j} (S_j - S_i) / (sqrt(2) sqrt(u_j - u_i)) por busca exaustiva em blocos."""
    n = u.size
    melhor, par = -np.inf, (0, 0)
    for inicio in range(0, max(n - 1, 0), bloco):
        linhas = np.arange(inicio, min(inicio + bloco, n - 1))
        du = u[None, :] - u[linhas, None]
        dS = S[None, :] - S[linhas, None]
        razao = np.where(du > 0, dS / np.sqrt(2.0 * np.where(du > 0, du, 1.0)), -np.inf)
        k = int(np.argmax(razao))
        a, b = divmod(k, n)
        if razao[a, b] > melhor:
            melhor, par = float(razao[a, b]), (int(linhas[a]), int(b))
    return melhor, par[0], par[1]


def _k_escalar(coeffs: LinearizedCoefficients) -> GrowthRateEstimate:
    S = cumulative_simpson(coeffs.By[:, 0, 0], x=coeffs.u, initial=0.0)
    K, i, j = _melhor_intervalo(coeffs.u, S)
    positivo = K > 0
    return GrowthRateEstimate(max(K, 0.0), 0.0 if positivo else None,
                              float(coeffs.u[i]) if positivo else None,
                              float(coeffs.u[j]) if positivo else None,
                              "scalar-integral", positivo)


def _k_direcao(coeffs: LinearizedCoefficients, theta: float, amostra: np.ndarray) -> tuple[float, float, float]:
    lam = _autovalores(coeffs.pencil(theta)).real.max(axis=1)
    if not (lam > 0).any():
        return 0.0, math.nan, math.nan
    S = cumulative_simpson(lam, x=coeffs.u, initial=0.0)
    positivo = lam > 0
    # trechos maximais com lambda > 0
    bordas = np.flatnonzero(np.diff(np.concatenate([[0], positivo.astype(np.int8), [0]])))
    melhor = (0.0, math.nan, math.nan)
    for ini, fim in zip(bordas[::2], bordas[1::2]):
        # inclui os vizinhos de lambda <= 0 para fechar o intervalo no cruzamento
        a, b = max(ini - 1, 0), min(fim, coeffs.u.size - 1)
        nos = np.union1d(amostra[(amostra >= a) & (amostra <= b)], [a, b])
        K, i, j = _melhor_intervalo(coeffs.u[nos], S[nos])
        if K > melhor[0]:
            melhor = (K, float(coeffs.u[nos[i]]), float(coeffs.u[nos[j]]))
    return melhor


def growth_rate_estimate(coeffs: LinearizedCoefficients, n_theta: int = 360,
                         max_nos: int = 600) -> GrowthRateEstimate:
    """
    K previsto. Via escalar (N=1, B_z = 0): integral com sinal de B. Via
    matricial: intervalos com lambda_theta > 0 para theta em [0, 2 pi).
    Retorna a maior das duas, com a testemunha.
    """
    candidatos = []
    if coeffs.N == 1 and not np.abs(coeffs.Bz).any():
        candidatos.append(_k_escalar(coeffs))

    amostra = np.unique(np.linspace(0, coeffs.u.size - 1, min(coeffs.u.size, max_nos)).astype(int))
    passo = 2 * math.pi / n_theta
    melhor = (0.0, math.nan, math.nan, 0.0)
    for th in np.arange(n_theta) * passo:
        K, u1, u2 = _k_direcao(coeffs, th, amostra)
        if K > melhor[0]:
            melhor = (K, u1, u2, float(th))
    if melhor[0] > 0:
        refinado = minimize_scalar(lambda th: -_k_direcao(coeffs, th, amostra)[0],
                                   bounds=(melhor[3] - passo, melhor[3] + passo),
                                   method="bounded", options={"xatol": 1e-5})
        if -refinado.fun > melhor[0]:
            K, u1, u2 = _k_direcao(coeffs, float(refinado.x), amostra)
            melhor = (K, u1, u2, float(refinado.x))
        candidatos.append(GrowthRateEstimate(melhor[0], melhor[3] % (2 * math.pi), melhor[1], melhor[2],
                                             "spectral-abscissa", True))

    positivos = [c for c in candidatos if c.positive]
    if not positivos:
        add_notification("Nenhuma taxa de crescimento positiva encontrada.")
        return GrowthRateEstimate(0.0, None, None, None, "none", False)
    return max(positivos, key=lambda c: c.K)
