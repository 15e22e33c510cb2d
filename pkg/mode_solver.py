# nullwave/mode_solver.py

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.special
from scipy.integrate import quad
from scipy.signal import lfilter

from diagnostics import FitResult, linear_fit
from exceptions import DomainError, ResolutionError
from notification_manager import add_notification
from renormalize import PAD, LinearizedCoefficients

NOS_POR_ONDA = 20
LIMITE_SERIE = 30.0
COND_AUTOVETORES = 1e8


# --- Malha característica ---

@dataclass(frozen=True)
class GoursatGrid:
    """u' em [u_min, 1] e v' em [1, v_max]; os passos efetivos cabem exatamente nos intervalos."""

    u_min: float
    h_u: float
    v_max: float
    h_v: float

    def __post_init__(self):
        if self.h_u <= 0 or self.h_v <= 0:
            raise DomainError("h_u e h_v precisam ser positivos.")
        if self.u_min < -1.0 - PAD - 1e-12 or self.u_min >= 1.0:
            raise DomainError(f"u_min={self.u_min} fora de [-1-{PAD}, 1).")
        if self.v_max <= 1.0:
            raise DomainError("v_max precisa ser maior que 1.")

    @cached_property
    def u(self) -> np.ndarray:
        n = math.ceil((1.0 - self.u_min) / self.h_u - 1e-9) + 1
        return np.linspace(self.u_min, 1.0, n)

    @cached_property
    def v(self) -> np.ndarray:
        n = math.ceil((self.v_max - 1.0) / self.h_v - 1e-9) + 1
        return np.linspace(1.0, self.v_max, n)

    @property
    def du(self) -> float:
        return float(self.u[1] - self.u[0])

    @property
    def dv(self) -> float:
        return float(self.v[1] - self.v[0])


@dataclass(frozen=True)
class BoundaryData:
    """Dados de Goursat: linha u' = u_min (n_v, N) e coluna v' = 1 (n_u, N), com o canto comum."""

    linha: np.ndarray
    coluna: np.ndarray

    @classmethod
    def constante(cls, q0, grid: GoursatGrid) -> "BoundaryData":
        q0 = np.asarray(q0, dtype=complex).reshape(-1)
        return cls(np.tile(q0, (grid.v.size, 1)), np.tile(q0, (grid.u.size, 1)))


# --- Perfil de crescimento por faixas de t ---

@dataclass(frozen=True)
class GrowthProfile:
    t: np.ndarray
    log_max: np.ndarray


class _AcumuladorPerfil:
    def __init__(self, grid: GoursatGrid):
        self.t0 = 0.5 * (grid.u[0] + 1.0)
        self.largura = grid.dv
        n = math.ceil((0.5 * (1.0 + grid.v[-1]) - self.t0) / self.largura) + 2
        self.valores = np.full(n, -np.inf)

    def acumular(self, u: float, v: np.ndarray, log_abs: np.ndarray):
        t = 0.5 * (u + v)
        idx = np.clip(np.floor((t - self.t0) / self.largura + 1e-9).astype(int), 0, self.valores.size - 1)
        inicios = np.flatnonzero(np.diff(idx, prepend=-1))
        maximos = np.maximum.reduceat(log_abs, inicios)
        faixas = idx[inicios]
        self.valores[faixas] = np.maximum(self.valores[faixas], maximos)

    def perfil(self) -> GrowthProfile:
        ok = np.isfinite(self.valores)
        centros = self.t0 + (np.arange(self.valores.size) + 0.5) * self.largura
        return GrowthProfile(centros[ok], self.valores[ok])


@dataclass
class TransverseMode:
    xi_y: float
    xi_z: float
    grid: GoursatGrid
    q_final: np.ndarray          # linha u' = 1 em escala exp(log_escala_final)
    log_escala_final: float
    perfil: GrowthProfile
    campo: np.ndarray | None = None     # (n_u, n_v, N), linha i em escala exp(escalas[i])
    escalas: np.ndarray | None = None
    residuo_energia: float | None = None
    eventos: list[str] = field(default_factory=list)

    def log_abs_final(self) -> np.ndarray:
        """log |q| em u' = 1 para cada v' (norma euclidiana das componentes)."""
        with np.errstate(divide="ignore"):
            return np.log(np.linalg.norm(self.q_final, axis=1)) + self.log_escala_final

    @classmethod
    def from_field(cls, grid: GoursatGrid, q: np.ndarray, xi_y: float = 0.0, xi_z: float = 0.0) -> "TransverseMode":
        """Empacota um campo já calculado (n_u, n_v) ou (n_u, n_v, N) sem escala."""
        q = np.asarray(q, dtype=complex)
        if q.ndim == 2:
            q = q[:, :, None]
        acumulador = _AcumuladorPerfil(grid)
        with np.errstate(divide="ignore"):
            for i, u in enumerate(grid.u):
                acumulador.acumular(u, grid.v, np.log(np.linalg.norm(q[i], axis=1)))
        return cls(xi_y, xi_z, grid, q[-1], 0.0, acumulador.perfil(), q, np.zeros(grid.u.size))


def _checar_resolucao(coeffs: LinearizedCoefficients, xi_y: float, xi_z: float, grid: GoursatGrid):
    modulo = math.hypot(xi_y, xi_z)
    c_max = modulo**2 + modulo * coeffs.max_norm()
    if c_max == 0.0:
        return
    onda = 8.0 * math.pi**2 / (c_max * (1.0 - grid.u_min))
    if grid.dv > onda / NOS_POR_ONDA:
        raise ResolutionError(
            f"Oscilação em v' com comprimento de onda {onda:.4g} exige h_v <= {onda / NOS_POR_ONDA:.4g} "
            f"(recebido {grid.dv:.4g}, |xi|={modulo:g}).",
            {"comprimento_onda": onda, "h_v": grid.dv, "xi": modulo},
        )


def _recorrencia(R: np.ndarray, C: np.ndarray, inicio: np.ndarray, s: np.ndarray) -> np.ndarray:
    """w_0 = inicio, w_{j+1} = R w_j + s_j, resolvida nas coordenadas próprias de C."""
    N = R.shape[0]
    saida = np.empty((s.shape[0] + 1, N), dtype=complex)
    saida[0] = inicio
    _, V = np.linalg.eig(C)
    if np.linalg.cond(V) < COND_AUTOVETORES:
        Vinv = np.linalg.inv(V)
        lam = np.diag(Vinv @ R @ V)
        y0 = Vinv @ inicio
        sigma = s @ Vinv.T
        y = np.empty_like(sigma)
        for k in range(N):
            y[:, k] = lfilter([1.0], [1.0, -lam[k]], sigma[:, k], zi=[lam[k] * y0[k]])[0]
        saida[1:] = y @ V.T
        return saida
    # autovetores quase paralelos: marcha sequencial
    for j in range(s.shape[0]):
        saida[j + 1] = R @ saida[j] + s[j]
    return saida


def goursat_solve(coeffs: LinearizedCoefficients, xi_y: float, xi_z: float, grid: GoursatGrid,
                  data: BoundaryData | None = None, guardar_campo: bool = False,
                  balanco_energia: bool = False) -> TransverseMode:
    """
    Esquema de caixa para 4 q_{u'v'} = c(u') q, c = -(|xi|^2 I + i xi_y B_y + i xi_z B_z):
    q11 = R (q10 + q01) - q00 com R = (I - kC)^-1 (I + kC), k = h_u h_v / 16,
    C avaliado no meio da célula em u'. Marcha linha a linha em u'.
    """
    N = coeffs.N
    _checar_resolucao(coeffs, xi_y, xi_z, grid)
    data = data or BoundaryData.constante(np.ones(N), grid)
    if data.linha.shape != (grid.v.size, N) or data.coluna.shape != (grid.u.size, N):
        raise DomainError("Dados de contorno incompatíveis com a malha.")

    u, v = grid.u, grid.v
    k2 = xi_y**2 + xi_z**2
    kappa = grid.du * grid.dv / 16.0
    u_medio = 0.5 * (u[:-1] + u[1:])
    By, Bz = coeffs.by_at(u_medio), coeffs.bz_at(u_medio)
    identidade = np.eye(N)
    checar_energia = balanco_energia and coeffs.is_zero()

    linha = np.array(data.linha, dtype=complex)
    escala = 0.0
    acumulador = _AcumuladorPerfil(grid)
    with np.errstate(divide="ignore"):
        acumulador.acumular(u[0], v, np.log(np.linalg.norm(linha, axis=1)))
    campo = [linha.copy()] if guardar_campo else None
    escalas = [0.0]
    pior_energia = 0.0

    for i in range(u.size - 1):
        C = -(k2 * identidade + 1j * xi_y * By[i] + 1j * xi_z * Bz[i])
        R = np.linalg.solve(identidade - kappa * C, identidade + kappa * C)
        s = linha[1:] @ R.T - linha[:-1]
        nova = _recorrencia(R, C, data.coluna[i + 1] * math.exp(-escala), s)

        if checar_energia:
            e_antes = float(np.sum(np.abs(np.diff(linha, axis=0)) ** 2))
            e_depois = float(np.sum(np.abs(np.diff(nova, axis=0)) ** 2))
            soma = nova + linha
            fluxo = -kappa * k2 * (np.sum(np.abs(soma[-1]) ** 2) - np.sum(np.abs(soma[0]) ** 2))
            referencia = max(e_antes, e_depois, 1e-300)
            pior_energia = max(pior_energia, abs(e_depois - e_antes - fluxo) / referencia)

        m = float(np.abs(nova).max())
        if m > 1e100 or 0.0 < m < 1e-100:
            nova /= m
            escala += math.log(m)
        linha = nova
        with np.errstate(divide="ignore"):
            acumulador.acumular(u[i + 1], v, np.log(np.linalg.norm(linha, axis=1)) + escala)
        if guardar_campo:
            campo.append(linha.copy())
            escalas.append(escala)

    return TransverseMode(
        xi_y=xi_y, xi_z=xi_z, grid=grid, q_final=linha, log_escala_final=escala,
        perfil=acumulador.perfil(),
        campo=np.array(campo) if guardar_campo else None,
        escalas=np.array(escalas) if guardar_campo else None,
        residuo_energia=pior_energia if checar_energia else None,
    )


def solve_modes(coeffs: LinearizedCoefficients, frequencias, grid: GoursatGrid,
                data: BoundaryData | None = None, threads: int = 1) -> list[TransverseMode]:
    """Resolve vários (xi_y, xi_z) independentes; a ordem da saída segue a da entrada."""
    frequencias = [tuple(f) for f in frequencias]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        modos = list(executor.map(lambda f: goursat_solve(coeffs, f[0], f[1], grid, data), frequencias))
    add_notification(f"{len(modos)} modo(s) transversal(is) resolvido(s) em {grid.u.size}x{grid.v.size} nós.")
    return modos


def sup_growth_profile(mode: TransverseMode) -> GrowthProfile:
    """Máximo em u' de log|q| por faixa de t = (u' + v')/2."""
    if mode.campo is None:
        return mode.perfil
    acumulador = _AcumuladorPerfil(mode.grid)
    with np.errstate(divide="ignore"):
        for i, u in enumerate(mode.grid.u):
            acumulador.acumular(u, mode.grid.v, np.log(np.linalg.norm(mode.campo[i], axis=1)) + mode.escalas[i])
    return acumulador.perfil()


# --- Bessel I_0 e forma fechada ---

def _serie_I0(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Soma de (z^2/4)^k / (k!)^2; devolve também a soma dos módulos (mede o cancelamento)."""
    q = 0.25 * z * z
    termo = np.ones_like(z)
    soma = np.ones_like(z)
    modulos = np.ones(z.shape)
    for k in range(1, 400):
        termo = termo * q / (k * k)
        soma = soma + termo
        modulos = modulos + np.abs(termo)
        if np.all(np.abs(termo) <= 1e-17 * np.abs(soma)):
            break
    return soma, modulos


def _log_assintotico_I0(z: np.ndarray) -> np.ndarray:
    """
    log I_0(z) para Re z >= 0 pelas duas exponenciais:
    e^z/sqrt(2 pi z) sum p_k/z^k  +/-  i e^-z/sqrt(2 pi z) sum (-1)^k p_k/z^k,
    p_k = prod (2m-1)^2 / (k! 8^k), truncadas no menor termo.
    """
    s1 = np.ones_like(z)
    s2 = np.ones_like(z)
    termo = np.ones_like(z)
    ativo = np.ones(z.shape, dtype=bool)
    for k in range(1, 200):
        novo = termo * (2 * k - 1) ** 2 / (8.0 * k * z)
        ativo &= (np.abs(novo) < np.abs(termo)) & (np.abs(termo) > 1e-17)
        if not ativo.any():
            break
        termo = np.where(ativo, novo, termo)
        s1 = s1 + np.where(ativo, novo, 0.0)
        s2 = s2 + np.where(ativo, (-1) ** k * novo, 0.0)
    sinal = np.where(z.imag >= 0, 1.0, -1.0)
    return z - 0.5 * np.log(2.0 * np.pi * z) + np.log(s1 + sinal * 1j * np.exp(-2.0 * z) * s2)


def bessel_I0(z, scaled: bool = False):
    """
    I_0(z) complexo: série para |z| <= 30 e expansão assintótica acima.
    Com `scaled=True` devolve log I_0(z) (parte real = log|I_0|, imaginária = fase).
    """
    zz = np.asarray(z, dtype=complex)
    escalar = zz.ndim == 0
    w = np.atleast_1d(np.where(zz.real < 0, -zz, zz))  # I_0 é par
    log_valor = np.empty(w.shape, dtype=complex)

    pequeno = np.abs(w) <= LIMITE_SERIE
    if pequeno.any():
        soma, modulos = _serie_I0(w[pequeno])
        with np.errstate(divide="ignore"):
            log_valor[pequeno] = np.log(soma)
        # perto do eixo imaginário a série cancela; usa a rotina escalonada do scipy
        perdido = modulos > 1e8 * np.abs(soma)
        if perdido.any():
            alvo = w[pequeno][perdido]
            corrigido = np.log(scipy.special.ive(0, alvo)) + np.abs(alvo.real)
            parcial = log_valor[pequeno]
            parcial[perdido] = corrigido
            log_valor[pequeno] = parcial
    if (~pequeno).any():
        log_valor[~pequeno] = _log_assintotico_I0(w[~pequeno])

    if escalar:
        log_valor = log_valor[0]
    if scaled:
        return log_valor
    with np.errstate(over="ignore"):
        return np.exp(log_valor)


def _funcao_escalar(B):
    if B is None:
        return lambda u: 0.0
    if isinstance(B, LinearizedCoefficients):
        return lambda u: float(B.by_at(u)[0, 0])
    return B


def closed_form_scalar(B, xi_y: float, u0: float, u: float, v, xi_z: float = 0.0,
                       Bz=None, scaled: bool = True):
    """
    I_0(2 sqrt((v'-1) int_{u0}^{u'} a)) com a = -(|xi|^2 + i xi_y B + i xi_z B_z)/4.
    B é uma função escalar de u' ou coeficientes 1x1; a integral usa quadratura adaptativa.
    """
    if u < u0:
        raise DomainError(f"Forma fechada exige u' >= u0 (u'={u}, u0={u0}).")
    fy, fz = _funcao_escalar(B), _funcao_escalar(Bz)
    int_y = quad(fy, u0, u, epsabs=1e-12, epsrel=1e-10, limit=200)[0] if u > u0 else 0.0
    int_z = quad(fz, u0, u, epsabs=1e-12, epsrel=1e-10, limit=200)[0] if (u > u0 and Bz is not None) else 0.0
    integral_a = -((xi_y**2 + xi_z**2) * (u - u0) + 1j * (xi_y * int_y + xi_z * int_z)) / 4.0
    z = 2.0 * np.sqrt((np.asarray(v, dtype=float) - 1.0) * integral_a + 0j)
    return bessel_I0(z, scaled=scaled)


# --- Varredura de explosão ---

@dataclass(frozen=True)
class BlowupScan:
    entries: tuple[tuple[float, float | None], ...]
    xi: float

    def ajuste(self) -> FitResult:
        """sqrt(T) contra -log(delta); a inclinação estima 1/K."""
        pares = [(d, T) for d, T in self.entries if T is not None]
        x = np.array([-math.log(d) for d, _ in pares])
        y = np.sqrt(np.array([T for _, T in pares]))
        return linear_fit(x, y, "sqrt-blowup")


def nirenberg_blowup_scan(coeffs: LinearizedCoefficients, xi: float, deltas, grid: GoursatGrid) -> BlowupScan:
    """
    phi = delta Re(q e^{-i xi y}) tem mínimo em y igual a -delta |q|; o primeiro t
    com delta max|q| >= 1 é o instante em que eta = -log(1 + phi) explode.
    """
    if coeffs.N != 1:
        raise DomainError("A varredura de Nirenberg vale só para N=1 (restrinja as componentes).")
    deltas = sorted({float(d) for d in deltas}, reverse=True)
    if not deltas or deltas[-1] <= 0:
        raise DomainError("Os valores de delta precisam ser positivos.")
    perfil = sup_growth_profile(goursat_solve(coeffs, xi, 0.0, grid))
    entradas = []
    for d in deltas:
        acima = np.flatnonzero(math.log(d) + perfil.log_max >= 0.0)
        entradas.append((d, float(perfil.t[acima[0]]) if acima.size else None))
    add_notification(f"Varredura de explosão: {sum(T is not None for _, T in entradas)}/{len(entradas)} valores de delta explodem.")
    return BlowupScan(tuple(entradas), xi)
