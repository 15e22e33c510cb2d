# nullwave/fdtd3d.py

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from diagnostics import FIELDS, GridFunction, apply_field
from exceptions import DomainError, NumericalBlowup
from notification_manager import add_notification
from nullform_algebra import SemilinearSystem, contract, coupling_tensors, quadratic_rhs
from profiles import WaveProfile, bump_shape
from renormalize import LinearizedCoefficients, Renormalizer

CFL_PADRAO = 0.45
DELTA_PADRAO = 0.05
DELTA_ESTRITO = 0.009
NIVEIS_JANELA = 7


# --- Malha e estado ---

@dataclass(frozen=True)
class GridSpec:
    """
    Cubo [-L, L]^3 com espaçamento h, ou faixa periódica em (y, z) com
    n_y x n_z nós transversais (n = 1 reduz a dados planares).
    """

    L: float
    h: float
    t_max: float
    cfl: float = CFL_PADRAO
    periodic_yz: bool = False
    n_y: int = 1
    n_z: int = 1
    checar_dominio: bool = True

    def __post_init__(self):
        if self.h <= 0 or self.L <= 0 or self.t_max < 0:
            raise DomainError("L e h precisam ser positivos e t_max não negativo.")
        if not 0 < self.cfl <= 1.0:
            raise DomainError(f"CFL {self.cfl} fora de (0, 1].")
        if self.checar_dominio and self.L < self.t_max + 2.0:
            raise DomainError(f"L={self.L} precisa ser >= t_max + 2 = {self.t_max + 2.0} (cone de dependência).")
        if self.periodic_yz and (self.n_y < 1 or self.n_z < 1):
            raise DomainError("A faixa periódica precisa de pelo menos 1 nó em y e z.")

    @cached_property
    def x(self) -> np.ndarray:
        return self.h * (np.arange(int(round(2 * self.L / self.h)) + 1) - int(round(self.L / self.h)))

    def _transversal(self, n: int) -> np.ndarray:
        if not self.periodic_yz:
            return self.x
        return self.h * (np.arange(n) - n // 2)

    @cached_property
    def y(self) -> np.ndarray:
        return self._transversal(self.n_y)

    @cached_property
    def z(self) -> np.ndarray:
        return self._transversal(self.n_z)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.x.size, self.y.size, self.z.size

    @property
    def n_passos(self) -> int:
        return math.ceil(self.t_max / (self.cfl * self.h / math.sqrt(3.0)) - 1e-9) if self.t_max > 0 else 0

    @property
    def dt(self) -> float:
        """Passo efetivo: n_passos * dt = t_max e dt <= CFL h / sqrt(3)."""
        n = self.n_passos
        return self.t_max / n if n else self.cfl * self.h / math.sqrt(3.0)

    @property
    def volume_celula(self) -> float:
        return self.h**3

    def malha(self):
        return np.meshgrid(self.x, self.y, self.z, indexing="ij", sparse=True)


@dataclass
class FieldState:
    psi: np.ndarray        # (N, nx, ny, nz)
    pi: np.ndarray         # d_t psi
    t: float
    passo: int = 0
    pi_meio: np.ndarray | None = None
    psi_anterior: np.ndarray | None = None
    acel: np.ndarray | None = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.psi.shape[0]

    def snapshot(self) -> "FieldState":
        psi, pi = self.psi.copy(), self.pi.copy()
        psi.setflags(write=False)
        pi.setflags(write=False)
        return FieldState(psi, pi, self.t, self.passo)


def initial_bump(eps: float, N: int, componentes, grid: GridSpec, tipo: str = "ball",
                 k_y: float = 0.0) -> FieldState:
    """psi = eps * bump em cada componente pedida (0-based), pi = 0."""
    if eps < 0:
        raise DomainError("eps precisa ser não negativo.")
    X, Y, Z = grid.malha()
    if tipo == "ball":
        forma = bump_shape(np.sqrt(X * X + Y * Y + Z * Z))
    elif tipo == "planar":
        forma = np.broadcast_to(bump_shape(X), grid.shape)
    elif tipo == "mode":
        forma = bump_shape(X) * np.cos(k_y * Y) * np.ones_like(Z)
    else:
        raise DomainError(f"Dados iniciais desconhecidos '{tipo}'.")
    psi = np.zeros((N,) + grid.shape)
    for c in componentes:
        if not 0 <= c < N:
            raise DomainError(f"Componente {c} fora de 0..{N - 1}.")
        psi[c] = eps * forma
    _zerar_parede(psi, grid)
    return FieldState(psi, np.zeros_like(psi), 0.0)


def _zerar_parede(a: np.ndarray, grid: GridSpec):
    a[:, 0] = 0.0
    a[:, -1] = 0.0
    if not grid.periodic_yz:
        a[:, :, 0] = 0.0
        a[:, :, -1] = 0.0
        a[:, :, :, 0] = 0.0
        a[:, :, :, -1] = 0.0


# --- Operador discreto ---

class WaveOperator:
    """
    Lado direito F(psi, pi, t) = Laplaciano de 7 pontos + Q(dpsi + df) - Q(df),
    com df avaliado em u' = t - x no nó. `linear=True` mantém só a parte linear.
    """

    def __init__(self, system: SemilinearSystem, profile: WaveProfile, grid: GridSpec,
                 linear: bool = False, threads: int = 1):
        if profile.N != system.N:
            raise DomainError(f"Perfil com N={profile.N} e sistema com N={system.N}.")
        self.system = system
        self.profile = profile
        self.grid = grid
        self.linear = linear
        self.threads = max(1, threads)
        self.couplings = coupling_tensors(system)
        nx = grid.x.size
        limites = np.linspace(0, nx, min(self.threads, nx) + 1).astype(int)
        self.fatias = [(int(a), int(b)) for a, b in zip(limites[:-1], limites[1:]) if b > a]

    def _com_halo(self, psi: np.ndarray) -> np.ndarray:
        N, nx, ny, nz = psi.shape
        P = np.zeros((N, nx + 2, ny + 2, nz + 2))
        P[:, 1:-1, 1:-1, 1:-1] = psi
        if self.grid.periodic_yz:
            P[:, :, 0, :] = P[:, :, -2, :]
            P[:, :, -1, :] = P[:, :, 1, :]
            P[:, :, :, 0] = P[:, :, :, -2]
            P[:, :, :, -1] = P[:, :, :, 1]
        return P

    def gradientes(self, P: np.ndarray, a: int, b: int):
        h2 = 2.0 * self.grid.h
        gx = (P[:, a + 2:b + 2, 1:-1, 1:-1] - P[:, a:b, 1:-1, 1:-1]) / h2
        gy = (P[:, a + 1:b + 1, 2:, 1:-1] - P[:, a + 1:b + 1, :-2, 1:-1]) / h2
        gz = (P[:, a + 1:b + 1, 1:-1, 2:] - P[:, a + 1:b + 1, 1:-1, :-2]) / h2
        return gx, gy, gz

    def fonte(self, p, gx, gy, gz, t: float, x: np.ndarray, linear: bool | None = None) -> np.ndarray:
        fp = self.profile.eval(t - x, 1)
        af = contract(self.couplings.a, fp)
        bf = contract(self.couplings.b, fp)
        cf = contract(self.couplings.c, fp)
        saida = (np.einsum("xil,lxyz->ixyz", af, p + gx)
                 + np.einsum("xil,lxyz->ixyz", bf, gy)
                 + np.einsum("xil,lxyz->ixyz", cf, gz))
        if not (self.linear if linear is None else linear):
            saida = saida + quadratic_rhs(self.system, np.stack([p, gx, gy, gz], axis=1))
        return saida

    def _fatia(self, P, pi, t, intervalo, saida):
        a, b = intervalo
        h2 = self.grid.h**2
        c = P[:, a + 1:b + 1, 1:-1, 1:-1]
        lap = (P[:, a + 2:b + 2, 1:-1, 1:-1] + P[:, a:b, 1:-1, 1:-1]
               + P[:, a + 1:b + 1, 2:, 1:-1] + P[:, a + 1:b + 1, :-2, 1:-1]
               + P[:, a + 1:b + 1, 1:-1, 2:] + P[:, a + 1:b + 1, 1:-1, :-2] - 6.0 * c) / h2
        gx, gy, gz = self.gradientes(P, a, b)
        saida[:, a:b] = lap + self.fonte(pi[:, a:b], gx, gy, gz, t, self.grid.x[a:b])

    def aceleracao(self, psi: np.ndarray, pi: np.ndarray, t: float, executor=None) -> np.ndarray:
        P = self._com_halo(psi)
        saida = np.empty_like(psi)
        if executor is not None and len(self.fatias) > 1:
            list(executor.map(lambda ab: self._fatia(P, pi, t, ab, saida), self.fatias))
        else:
            for ab in self.fatias:
                self._fatia(P, pi, t, ab, saida)
        _zerar_parede(saida, self.grid)
        return saida


def step_leapfrog(state: FieldState, op: WaveOperator, dt: float, executor=None) -> FieldState:
    """
    Leapfrog na forma de Verlet com pi nos passos inteiros:
    pi^{n+1/2} = pi^n + dt/2 F^n, psi^{n+1} = psi^n + dt pi^{n+1/2},
    pi^{n+1} = pi^{n+1/2} + dt/2 F(psi^{n+1}, pi*) com pi* de um preditor.
    """
    F0 = state.acel if state.acel is not None else op.aceleracao(state.psi, state.pi, state.t, executor)
    pi_meio = state.pi + 0.5 * dt * F0
    psi1 = state.psi + dt * pi_meio
    t1 = state.t + dt
    preditor = pi_meio + 0.5 * dt * op.aceleracao(psi1, pi_meio, t1, executor)
    F1 = op.aceleracao(psi1, preditor, t1, executor)
    pi1 = pi_meio + 0.5 * dt * F1
    if not (np.isfinite(psi1).all() and np.isfinite(pi1).all()):
        raise NumericalBlowup(f"Valores não finitos no FDTD em t={t1:.6g}.", t1)
    return FieldState(psi1, pi1, t1, state.passo + 1, pi_meio=pi_meio, psi_anterior=state.psi, acel=F1)


# --- Energias e normas ---

def _diferenca_frente(a: np.ndarray, eixo: int, periodico: bool, h: float) -> np.ndarray:
    if periodico:
        return (np.roll(a, -1, axis=eixo) - a) / h
    return np.diff(a, axis=eixo) / h


def _produto_gradientes(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    total = 0.0
    for eixo in (1, 2, 3):
        periodico = grid.periodic_yz and eixo > 1
        total += float(np.sum(_diferenca_frente(a, eixo, periodico, grid.h)
                              * _diferenca_frente(b, eixo, periodico, grid.h)))
    return total


def flat_energy(psi: np.ndarray, pi: np.ndarray, grid: GridSpec) -> float:
    return 0.5 * (float(np.sum(pi * pi)) + _produto_gradientes(psi, psi, grid)) * grid.volume_celula


def staggered_energy(state: FieldState, grid: GridSpec) -> float:
    """1/2 |pi^{n-1/2}|^2 + 1/2 grad psi^n . grad psi^{n-1}: conservada exatamente pelo leapfrog linear."""
    if state.pi_meio is None:
        return flat_energy(state.psi, state.pi, grid)
    return 0.5 * (float(np.sum(state.pi_meio**2))
                  + _produto_gradientes(state.psi, state.psi_anterior, grid)) * grid.volume_celula


def _gradientes_centrados(op: WaveOperator, psi: np.ndarray):
    return op.gradientes(op._com_halo(psi), 0, psi.shape[1])


def _derivadas_boas(pi, gx, gy, gz, X, Y, Z, r):
    """|dbar psi|^2 = |(d_t + d_r) psi|^2 + sum |Omega_ij psi / r|^2, somado nas componentes."""
    radial = pi + (X * gx + Y * gy + Z * gz) / r
    exy = (X * gy - Y * gx) / r
    exz = (X * gz - Z * gx) / r
    eyz = (Y * gz - Z * gy) / r
    return np.sum(radial**2 + exy**2 + exz**2 + eyz**2, axis=0)


def pointwise_norms(state: FieldState, op: WaveOperator, delta: float = DELTA_PADRAO) -> dict:
    grid = op.grid
    X, Y, Z = grid.malha()
    r = np.maximum(np.sqrt(X * X + Y * Y + Z * Z), 0.5 * grid.h)
    t = state.t
    gx, gy, gz = _gradientes_centrados(op, state.psi)
    modulo = np.sqrt(np.sum(state.pi**2 + gx**2 + gy**2 + gz**2, axis=0))
    boas = _derivadas_boas(state.pi, gx, gy, gz, X, Y, Z, r)
    u = t - r
    return {
        "sup_psi": float(np.abs(state.psi).max()),
        "sup_dpsi": float(modulo.max()),
        "sup_decaimento": float(((1 + t + r) ** (1 - delta) * np.sqrt(1 + np.abs(u)) * modulo).max()),
        "sup_bom": float(((1 + t + r) ** (1.5 - delta) * np.sqrt(boas)).max()),
        "norma_boa": float(np.sum((1 + np.abs(u)) ** (-1 - delta) * boas) * grid.volume_celula),
    }


def gamma_energy(state: FieldState, op: WaveOperator, ren: Renormalizer) -> float:
    """Energia plana de gamma = A(t - x) psi, com d_t gamma = A' psi + A pi."""
    u = state.t - op.grid.x
    A, dA = ren.A_at(u), ren.A_at(u, 1)
    gama = np.einsum("xil,lxyz->ixyz", A, state.psi)
    dt_gama = np.einsum("xil,lxyz->ixyz", dA, state.psi) + np.einsum("xil,lxyz->ixyz", A, state.pi)
    return flat_energy(gama, dt_gama, op.grid)


def multiplier_energy(state: FieldState, op: WaveOperator, coeffs: LinearizedCoefficients,
                      ren: Renormalizer | None = None) -> float:
    """
    int e^{-g} (|d_y eta|^2 + |d_z eta|^2 + 4 |d_v' eta|^2)/2 sobre {u' >= -1, v' >= -1},
    g = sqrt(Q(u')) sqrt(v' + 1), 2 d_v' = d_t + d_x e eta = gamma (ou psi sem renormalizador).
    """
    grid = op.grid
    t = state.t
    x = grid.x
    if ren is not None:
        A, dA = ren.A_at(t - x), ren.A_at(t - x, 1)
        eta = np.einsum("xil,lxyz->ixyz", A, state.psi)
        dt_eta = np.einsum("xil,lxyz->ixyz", dA, state.psi) + np.einsum("xil,lxyz->ixyz", A, state.pi)
    else:
        eta, dt_eta = state.psi, state.pi
    gx, gy, gz = _gradientes_centrados(op, eta)
    Q = coeffs.multiplier_weight()
    u_linha = t - x
    Qx = np.interp(u_linha, coeffs.u, Q, left=0.0, right=Q[-1])
    v_linha = t + x
    regiao = (u_linha >= -1.0) & (v_linha >= -1.0)
    g = np.sqrt(Qx) * np.sqrt(np.maximum(v_linha + 1.0, 0.0))
    peso = np.where(regiao, np.exp(-g), 0.0)[None, :, None, None]
    densidade = 0.5 * (gy**2 + gz**2 + (dt_eta + gx) ** 2)
    return float(np.sum(peso * densidade) * grid.volume_celula)


def _energia_plana_4d(gf: GridFunction) -> float:
    """Energia plana no nível central de uma janela (t, x, y, z), diferenças centradas."""
    v = gf.values
    c = v.shape[0] // 2
    dt, h = gf.spacing[0], gf.spacing[1:]
    espaco = tuple(slice(1, -1) if n >= 3 else slice(None) for n in v.shape[1:])
    total = ((v[c + 1] - v[c - 1]) / (2 * dt))[espaco] ** 2
    centro = v[c]
    for eixo in range(3):
        if centro.shape[eixo] < 3:
            continue
        mais = list(espaco)
        menos = list(espaco)
        mais[eixo], menos[eixo] = slice(2, None), slice(None, -2)
        total = total + ((centro[tuple(mais)] - centro[tuple(menos)]) / (2 * h[eixo])) ** 2
    return 0.5 * float(np.sum(total)) * float(np.prod(h))


def weighted_norms(janela, grid: GridSpec, ordem: int = 2) -> dict:
    """
    E_1/E_2 substitutos: energias planas de Gamma^alpha psi no nível central de
    uma janela de estados consecutivos (3, 5 ou 7 níveis para ordem 0, 1, 2).
    """
    necessarios = 2 * ordem + 3
    if len(janela) < necessarios:
        return {"E0": math.nan, "E1": math.nan, "E2": math.nan}
    estados = list(janela)[len(janela) // 2 - ordem - 1: len(janela) // 2 + ordem + 2]
    dt = estados[1].t - estados[0].t
    N = estados[0].N
    resultado = {"E0": 0.0, "E1": math.nan, "E2": math.nan}
    parcial_1, parcial_2 = 0.0, 0.0
    for comp in range(N):
        valores = np.stack([e.psi[comp] for e in estados])
        gf = GridFunction(valores, (estados[0].t, grid.x[0], grid.y[0], grid.z[0]), (dt, grid.h, grid.h, grid.h))
        resultado["E0"] += _energia_plana_4d(GridFunction(valores[ordem:-ordem or None], gf.origin, gf.spacing))
        if ordem >= 1:
            primeiros = {}
            for campo in FIELDS:
                if _campo_aplicavel(campo, gf):
                    primeiros[campo] = apply_field(campo, gf)
                    nucleo = primeiros[campo]
                    if ordem == 2:
                        nucleo = GridFunction(nucleo.values[1:-1], nucleo.origin, nucleo.spacing)
                    parcial_1 += _energia_plana_4d(nucleo)
            if ordem == 2:
                for g1 in FIELDS:
                    for g2, base in primeiros.items():
                        if _campo_aplicavel(g1, base):
                            parcial_2 += _energia_plana_4d(apply_field(g1, base))
    if ordem >= 1:
        resultado["E1"] = resultado["E0"] + parcial_1
    if ordem == 2:
        resultado["E2"] = resultado["E1"] + parcial_2
    return resultado


def _campo_aplicavel(campo: str, gf: GridFunction) -> bool:
    C = FIELDS[campo]
    return all(gf.values.shape[mu] >= 3 or not C[mu].any() for mu in range(4))


# --- Oráculos ---

def transform_residual(estados, op: WaveOperator, ren: Renormalizer, coeffs: LinearizedCoefficients) -> float:
    """
    max |box_h gamma - (B_y d_y gamma + B_z d_z gamma + A Q(dpsi))| no interior,
    com gamma = A(t - x) psi em três níveis consecutivos.
    """
    anterior, atual, seguinte = estados
    grid = op.grid
    dt = atual.t - anterior.t

    def gama(e):
        return np.einsum("xil,lxyz->ixyz", ren.A_at(e.t - grid.x), e.psi)

    g0, g1, g2 = gama(anterior), gama(atual), gama(seguinte)
    P = op._com_halo(g1)
    N, nx = g1.shape[0], g1.shape[1]
    lap = np.empty_like(g1)
    h2 = grid.h**2
    c = P[:, 1:-1, 1:-1, 1:-1]
    lap[:] = (P[:, 2:, 1:-1, 1:-1] + P[:, :-2, 1:-1, 1:-1] + P[:, 1:-1, 2:, 1:-1] + P[:, 1:-1, :-2, 1:-1]
              + P[:, 1:-1, 1:-1, 2:] + P[:, 1:-1, 1:-1, :-2] - 6.0 * c) / h2
    caixa = (g2 - 2.0 * g1 + g0) / dt**2 - lap

    _, gy, gz = op.gradientes(P, 0, nx)
    u = atual.t - grid.x
    lado_direito = (np.einsum("xil,lxyz->ixyz", coeffs.by_at(u), gy)
                    + np.einsum("xil,lxyz->ixyz", coeffs.bz_at(u), gz))
    if not op.linear:
        # pi^n do Verlet é exatamente a diferença centrada dos níveis vizinhos
        pi = (seguinte.psi - anterior.psi) / (2.0 * dt)
        px, py, pz = _gradientes_centrados(op, atual.psi)
        quad = quadratic_rhs(op.system, np.stack([pi, px, py, pz], axis=1))
        lado_direito = lado_direito + np.einsum("xil,lxyz->ixyz", ren.A_at(u), quad)
    interior = (slice(None), slice(2, -2)) + ((slice(None),) * 2 if grid.periodic_yz else (slice(2, -2),) * 2)
    return float(np.abs((caixa - lado_direito)[interior]).max())


def linearization_response(op: WaveOperator, psi: np.ndarray, pi: np.ndarray, t: float,
                           eps: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """
    Parte linear do lado direito não linear por Richardson em (eps, eps/2),
    ao lado da montagem pelos tensores de acoplamento.
    """
    nx = psi.shape[1]
    x = op.grid.x

    def resposta(e):
        gx, gy, gz = op.gradientes(op._com_halo(e * psi), 0, nx)
        return op.fonte(e * pi, gx, gy, gz, t, x, linear=False)

    oraculo = (4.0 * resposta(eps / 2) - resposta(eps)) / eps
    gx, gy, gz = op.gradientes(op._com_halo(psi), 0, nx)
    montagem = op.fonte(pi, gx, gy, gz, t, x, linear=True)
    return oraculo, montagem


def planar_reference(system: SemilinearSystem, profile: WaveProfile, eps: float, componentes,
                     L: float, h: float, t_end: float, linear: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """
    Solver 1+1 independente para dados planares: diferenças centradas de 4ª
    ordem em x, RK4 no tempo e paredes de Dirichlet. Devolve (x, psi(t_end)).
    """
    N = system.N
    n = int(round(2 * L / h)) + 1
    x = np.linspace(-L, L, n)
    tensores = coupling_tensors(system)
    psi = np.zeros((N, n))
    for c in componentes:
        psi[c] = eps * bump_shape(x)
    pi = np.zeros_like(psi)

    def dx(a):
        p = np.pad(a, ((0, 0), (2, 2)))
        return (-p[:, 4:] + 8 * p[:, 3:-1] - 8 * p[:, 1:-3] + p[:, :-4]) / (12 * h)

    def dxx(a):
        p = np.pad(a, ((0, 0), (2, 2)))
        return (-p[:, 4:] + 16 * p[:, 3:-1] - 30 * p[:, 2:-2] + 16 * p[:, 1:-3] - p[:, :-4]) / (12 * h * h)

    def rhs(t, ps, pp):
        gx = dx(ps)
        af = contract(tensores.a, profile.eval(t - x, 1))
        acel = dxx(ps) + np.einsum("xil,lx->ix", af, pp + gx)
        if not linear:
            zeros = np.zeros_like(ps)
            acel = acel + quadratic_rhs(system, np.stack([pp, gx, zeros, zeros], axis=1))
        acel[:, 0] = acel[:, -1] = 0.0
        return pp, acel

    passos = max(1, math.ceil(t_end / (0.25 * h)))
    dt = t_end / passos
    t = 0.0
    for _ in range(passos):
        k1 = rhs(t, psi, pi)
        k2 = rhs(t + dt / 2, psi + dt / 2 * k1[0], pi + dt / 2 * k1[1])
        k3 = rhs(t + dt / 2, psi + dt / 2 * k2[0], pi + dt / 2 * k2[1])
        k4 = rhs(t + dt, psi + dt * k3[0], pi + dt * k3[1])
        psi = psi + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        pi = pi + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        t += dt
    return x, psi


def support_leak(state: FieldState, grid: GridSpec, margem: float) -> float:
    """max |psi| fora de r <= t + 1 + margem, relativo ao max global."""
    X, Y, Z = grid.malha()
    fora = np.sqrt(X * X + Y * Y + Z * Z) > state.t + 1.0 + margem
    maximo = float(np.abs(state.psi).max())
    if maximo == 0.0:
        return 0.0
    return float(np.abs(state.psi[:, fora]).max(initial=0.0)) / maximo


# --- Evolução ---

@dataclass(frozen=True)
class PsiLevel:
    """Um nível de tempo guardado na janela: só psi, sem pi nem estados intermediários."""

    psi: np.ndarray
    t: float
    passo: int

    @property
    def N(self) -> int:
        return self.psi.shape[0]

    @classmethod
    def de(cls, estado: FieldState) -> "PsiLevel":
        return cls(estado.psi, estado.t, estado.passo)


@dataclass
class DiagnosticsLedger:
    linhas: list[dict] = field(default_factory=list)

    def registrar(self, linha: dict):
        if self.linhas and linha["t"] <= self.linhas[-1]["t"]:
            raise DomainError("Instantes do registro precisam ser estritamente crescentes.")
        self.linhas.append(linha)

    def coluna(self, nome: str) -> np.ndarray:
        return np.array([l.get(nome, math.nan) for l in self.linhas], dtype=float)


@dataclass
class EvolutionResult:
    ledger: DiagnosticsLedger
    final: FieldState
    janela: list[PsiLevel]


def evolve(system: SemilinearSystem, profile: WaveProfile, grid: GridSpec, eps: float, componentes,
           dados: str = "ball", k_y: float = 0.0, linear: bool = False, dt_out: float = 0.5,
           ren: Renormalizer | None = None, coeffs: LinearizedCoefficients | None = None,
           delta: float = DELTA_PADRAO, ordem_normas: int = -1, reter: int = 0,
           threads: int = 1, estado_inicial: FieldState | None = None) -> EvolutionResult:
    """
    Avança até t_max registrando diagnósticos a cada dt_out. `ordem_normas` >= 0
    liga os substitutos E_1/E_2 (atrasados de ordem+1 passos); `reter` guarda os
    últimos estados para oráculos que precisam de vários níveis.
    """
    op = WaveOperator(system, profile, grid, linear=linear, threads=threads)
    estado = estado_inicial or initial_bump(eps, system.N, componentes, grid, dados, k_y)
    dt, n = grid.dt, grid.n_passos
    saidas = sorted({0, n} | {min(n, int(round(j * dt_out / dt))) for j in range(int(grid.t_max / dt_out) + 1)}) \
        if dt_out > 0 else [0, n]
    saidas = set(saidas)
    ledger = DiagnosticsLedger()
    niveis = 2 * ordem_normas + 3 if ordem_normas >= 0 else 0
    janela = deque(maxlen=max(niveis, reter, 1))
    pendentes: dict[int, dict] = {}

    def diagnosticar(e: FieldState) -> dict:
        linha = {"t": e.t, "energia": flat_energy(e.psi, e.pi, grid), "energia_escalonada": staggered_energy(e, grid)}
        linha.update(pointwise_norms(e, op, delta))
        if ren is not None:
            linha["energia_gama"] = gamma_energy(e, op, ren)
        if coeffs is not None:
            linha["energia_multiplicador"] = multiplier_energy(e, op, coeffs, ren)
        return linha

    def completar_normas():
        for passo in list(pendentes):
            if passo + ordem_normas + 1 <= estado.passo or estado.passo == n:
                lista = [e for e in janela if abs(e.passo - passo) <= ordem_normas + 1]
                centrada = len(lista) == niveis and lista[len(lista) // 2].passo == passo
                pendentes.pop(passo).update(weighted_norms(lista, grid, ordem_normas) if centrada
                                            else {"E0": math.nan, "E1": math.nan, "E2": math.nan})

    executor = ThreadPoolExecutor(max_workers=op.threads) if op.threads > 1 else None
    try:
        janela.append(PsiLevel.de(estado))
        linha = diagnosticar(estado)
        ledger.registrar(linha)
        if niveis:
            pendentes[0] = linha
        for _ in range(n):
            estado = step_leapfrog(estado, op, dt, executor)
            janela.append(PsiLevel.de(estado))
            if niveis:
                completar_normas()
            if estado.passo in saidas:
                linha = diagnosticar(estado)
                ledger.registrar(linha)
                if niveis:
                    pendentes[estado.passo] = linha
        if niveis:
            completar_normas()
    finally:
        if executor is not None:
            executor.shutdown()
    add_notification(f"FDTD concluído: {n} passos, dt={dt:.4g}, malha {grid.shape}, t={estado.t:.4g}.")
    return EvolutionResult(ledger, estado.snapshot(), list(janela)[-reter:] if reter else [])
