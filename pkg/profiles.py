# nullwave/profiles.py

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from exceptions import DomainError
from nullform_algebra import DU, SemilinearSystem, quadratic_rhs

SHAPES = ("bump", "bump_poly", "linear", "zero")


def bump_shape(u, order: int = 0) -> np.ndarray:
    """
    exp(1 - 1/(1-u^2)) em |u| < 1 e zero fora, com pico 1 em u = 0.
    Derivadas analíticas até ordem 3 por Faà di Bruno sobre g = 1 - 1/s, s = 1 - u^2.
    """
    u = np.asarray(u, dtype=float)
    saida = np.zeros_like(u)
    dentro = np.abs(u) < 1.0
    x = u[dentro]
    s = 1.0 - x * x
    f = np.exp(1.0 - 1.0 / s)
    if order == 0:
        saida[dentro] = f
        return saida
    g1 = -2.0 * x / s**2
    g2 = -2.0 / s**2 - 8.0 * x * x / s**3
    g3 = -24.0 * x / s**3 - 48.0 * x**3 / s**4
    if order == 1:
        saida[dentro] = g1 * f
    elif order == 2:
        saida[dentro] = (g2 + g1 * g1) * f
    elif order == 3:
        saida[dentro] = (g3 + 3.0 * g1 * g2 + g1**3) * f
    else:
        raise DomainError(f"Derivadas disponíveis até ordem 3, pedida {order}.")
    return saida


@dataclass(frozen=True)
class HolderHalf:
    value: float
    u0: float
    u1: float


@dataclass(frozen=True)
class WaveProfile:
    """Perfil vetorial f(u) = c_i * forma(u); `poly` só vale para bump_poly (potências crescentes)."""

    amplitudes: tuple[float, ...]
    shape: str = "bump"
    poly: tuple[float, ...] = (1.0,)
    h_u: float = 1e-3

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise DomainError(f"Forma de perfil desconhecida: '{self.shape}'. Opções: {SHAPES}.")
        if self.h_u <= 0:
            raise DomainError("h_u precisa ser positivo.")
        object.__setattr__(self, "amplitudes", tuple(float(c) for c in self.amplitudes))
        object.__setattr__(self, "poly", tuple(float(c) for c in self.poly))

    @property
    def N(self) -> int:
        return len(self.amplitudes)

    @property
    def is_compact(self) -> bool:
        return self.shape != "linear"

    def active_components(self) -> set[int]:
        if self.shape == "zero":
            return set()
        return {i for i, c in enumerate(self.amplitudes) if c != 0.0}

    def _forma(self, u: np.ndarray, order: int) -> np.ndarray:
        if self.shape == "zero":
            return np.zeros_like(u)
        if self.shape == "bump":
            return bump_shape(u, order)
        if self.shape == "linear":
            return u.copy() if order == 0 else (np.ones_like(u) if order == 1 else np.zeros_like(u))
        # bump_poly: regra de Leibniz
        p = Polynomial(self.poly)
        binomiais = {0: (1,), 1: (1, 1), 2: (1, 2, 1), 3: (1, 3, 3, 1)}[order]
        total = np.zeros_like(u)
        for k, coef in enumerate(binomiais):
            total += coef * p.deriv(k)(u) * bump_shape(u, order - k)
        return total

    def eval(self, u, order: int = 0) -> np.ndarray:
        """f^(order)(u); forma (N,) para u escalar e (n, N) para um vetor de u."""
        if order not in (0, 1, 2, 3):
            raise DomainError(f"Ordem {order} fora de 0..3.")
        escalar = np.ndim(u) == 0
        uu = np.atleast_1d(np.asarray(u, dtype=float))
        valores = self._forma(uu, order)[:, None] * np.asarray(self.amplitudes)[None, :]
        return valores[0] if escalar else valores


def default_profile(N: int, componente: int, amplitude: float = 1.0) -> WaveProfile:
    amplitudes = [0.0] * N
    amplitudes[componente] = amplitude
    return WaveProfile(tuple(amplitudes))


def holder_half_seminorm(profile: WaveProfile, i: int, h_u: float | None = None,
                         bloco: int = 256) -> HolderHalf:
    """
    Busca exaustiva O(n^2) do sup de |f_i(u1) - f_i(u0)| / sqrt(u1 - u0) nos
    pares da malha de [-1, 1], em blocos de linhas para limitar a memória.
    """
    if not 0 <= i < profile.N:
        raise DomainError(f"Componente {i} fora de 0..{profile.N - 1}.")
    h = h_u or profile.h_u
    n = int(round(2.0 / h)) + 1
    u = np.linspace(-1.0, 1.0, n)
    f = profile.eval(u, 0)[:, i]

    melhor, par = 0.0, (-1.0, 1.0)
    for inicio in range(0, n - 1, bloco):
        fim = min(inicio + bloco, n - 1)
        linhas = np.arange(inicio, fim)
        du = u[None, :] - u[linhas, None]
        df = np.abs(f[None, :] - f[linhas, None])
        with np.errstate(invalid="ignore", divide="ignore"):
            razao = np.where(du > 0, df / np.sqrt(np.where(du > 0, du, 1.0)), -1.0)
        k = int(np.argmax(razao))
        a, b = divmod(k, n)
        if razao[a, b] > melhor:
            melhor, par = float(razao[a, b]), (float(u[linhas[a]]), float(u[b]))
    return HolderHalf(melhor, *par)


def verify_travelling_wave(system: SemilinearSystem, profile: WaveProfile, samples) -> float:
    """max |box f(t-x) - Q(df)| nas amostras de u, com df = f' (dt - dx)."""
    u = np.atleast_1d(np.asarray(samples, dtype=float))
    if profile.N != system.N:
        raise DomainError(f"Perfil com N={profile.N} e sistema com N={system.N}.")
    fp = profile.eval(u, 1)
    fpp = profile.eval(u, 2)
    # box f(t-x) = f''(u)*1 - f''(u)*(-1)^2
    caixa = fpp - fpp
    df = fp.T[:, None, :] * DU[None, :, None]  # (N, 4, n)
    q = quadratic_rhs(system, df).T
    if u.size == 0:
        return 0.0
    return float(np.abs(caixa - q).max())
