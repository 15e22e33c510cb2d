# nullwave/diagnostics.py

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from exceptions import DomainError, FitError
from profiles import WaveProfile


# --- Ajustes de curvas ---

@dataclass(frozen=True)
class FitResult:
    model: str
    exponent: float
    intercept: float
    r2: float
    window: tuple[float, float]


def linear_fit(x, y, model: str = "linear") -> FitResult:
    """Mínimos quadrados y = exponent * x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise FitError(f"Ajuste '{model}' precisa de pelo menos dois valores distintos de x.")
    r = stats.linregress(x, y)
    r2 = float(r.rvalue**2) if np.isfinite(r.rvalue) else 1.0
    return FitResult(model, float(r.slope), float(r.intercept), min(max(r2, 0.0), 1.0),
                     (float(x.min()), float(x.max())))


def _serie_log(t, y, log_y, t_min: float, minimo: int, nome: str):
    t = np.asarray(t, dtype=float)
    if log_y is None:
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise FitError(f"Ajuste '{nome}' rejeita valores não positivos de y.")
        log_y = np.log(y)
    log_y = np.asarray(log_y, dtype=float)
    janela = t >= t_min
    if janela.sum() < minimo:
        raise FitError(f"Ajuste '{nome}' precisa de {minimo} pontos com t >= {t_min}; há {int(janela.sum())}.")
    return t[janela], log_y[janela]


def fit_sqrt_exponential(t, y=None, log_y=None, t_min: float = 5.0, minimo: int = 8) -> FitResult:
    """log y contra sqrt(t); a inclinação é K. Aceita log y direto para séries que estourariam."""
    tt, ly = _serie_log(t, y, log_y, t_min, minimo, "exp-sqrt")
    ajuste = linear_fit(np.sqrt(tt), ly, "exp-sqrt")
    return FitResult("exp-sqrt", ajuste.exponent, ajuste.intercept, ajuste.r2, (float(tt.min()), float(tt.max())))


def fit_power_decay(t, y=None, log_y=None, t_min: float = 5.0, minimo: int = 8) -> FitResult:
    """log y contra log(1 + t)."""
    tt, ly = _serie_log(t, y, log_y, t_min, minimo, "power")
    ajuste = linear_fit(np.log1p(tt), ly, "power")
    return FitResult("power", ajuste.exponent, ajuste.intercept, ajuste.r2, (float(tt.min()), float(tt.max())))


def trend_slope(t, y) -> float:
    """Inclinação de Sen, robusta a oscilações."""
    return float(stats.theilslopes(np.asarray(y, dtype=float), np.asarray(t, dtype=float))[0])


# --- Região de interação S_t ---

@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    t: float
    samples: int
    seed: int


def in_region(t: float, x, y, z) -> np.ndarray:
    """S_t = {u >= -1} ∩ {|u'| <= 1} na fatia de tempo t, com u = t - r e u' = t - x."""
    r = np.sqrt(x * x + y * y + z * z)
    return (r <= t + 1.0) & (np.abs(t - x) <= 1.0)


def _amostrar_cilindro(t: float, n: int, rng: np.random.Generator):
    """Uniforme no cilindro x em [t-1, t+1], raio 2 sqrt(t) em (y, z)."""
    x = rng.uniform(t - 1.0, t + 1.0, n)
    rho = 2.0 * math.sqrt(t) * np.sqrt(rng.uniform(0.0, 1.0, n))
    ang = rng.uniform(0.0, 2.0 * math.pi, n)
    return x, rho * np.cos(ang), rho * np.sin(ang)


def region_volume(t: float, samples: int = 1_000_000, seed: int = 0, lote: int = 250_000) -> VolumeEstimate:
    if t < 1:
        raise DomainError("region_volume exige t >= 1.")
    if samples < 100_000:
        raise DomainError("region_volume exige pelo menos 1e5 amostras.")
    rng = np.random.default_rng(seed)
    dentro = 0
    restantes = samples
    while restantes > 0:
        n = min(lote, restantes)
        dentro += int(in_region(t, *_amostrar_cilindro(t, n, rng)).sum())
        restantes -= n
    volume_cilindro = 2.0 * math.pi * 4.0 * t
    p = dentro / samples
    return VolumeEstimate(volume_cilindro * p, volume_cilindro * math.sqrt(p * (1 - p) / samples), t, samples, seed)


def region_volume_exact(t: float) -> float:
    """int_{t-1}^{t+1} pi ((t+1)^2 - x^2) dx = pi (4t + 4/3), válido para t >= 1."""
    return math.pi * (4.0 * t + 4.0 / 3.0)


def sphere_cap_measure(t: float, r: float, n: int = 200_000) -> float:
    """
    Medida (na esfera unitária) de S(r) ∩ S_t por quadratura de ponto médio em
    cos(ângulo com o eixo x); a pertinência só depende de x = r cos.
    """
    if t < 2:
        raise DomainError("sphere_cap_measure exige t >= 2.")
    if r <= 0:
        raise DomainError("Raio precisa ser positivo.")
    mu = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    membros = in_region(t, r * mu, np.zeros(n), np.sqrt(np.maximum(r * r * (1 - mu * mu), 0.0)))
    return float(2.0 * math.pi * membros.sum() * (2.0 / n))


def sphere_cap_exact(t: float, r: float) -> float:
    if r > t + 1:
        return 0.0
    a, b = max((t - 1) / r, -1.0), min((t + 1) / r, 1.0)
    return 2.0 * math.pi * max(b - a, 0.0)


# --- Campos vetoriais de comutação ---

# c_mu = C[mu] . (1, t, x, y, z); linhas (c_t, c_x, c_y, c_z)
def _forma(*entradas) -> np.ndarray:
    m = np.zeros((4, 5))
    for mu, col, val in entradas:
        m[mu, col] = val
    m.setflags(write=False)
    return m


FIELDS = {
    "dt": _forma((0, 0, 1)),
    "dx": _forma((1, 0, 1)),
    "dy": _forma((2, 0, 1)),
    "dz": _forma((3, 0, 1)),
    "Oxy": _forma((2, 2, 1), (1, 3, -1)),
    "Oxz": _forma((3, 2, 1), (1, 4, -1)),
    "Oyz": _forma((3, 3, 1), (2, 4, -1)),
    "Otx": _forma((1, 1, 1), (0, 2, 1)),
    "Oty": _forma((2, 1, 1), (0, 3, 1)),
    "Otz": _forma((3, 1, 1), (0, 4, 1)),
    "S": _forma((0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 4, 1)),
}
TRANSLATIONS = ("dt", "dx", "dy", "dz")
WEIGHTED = tuple(k for k in FIELDS if k not in TRANSLATIONS)
ROTATIONS = {"exy": "Oxy", "exz": "Oxz", "eyz": "Oyz"}


def field_coefficients(campo: str, t, x, y, z) -> tuple:
    C = FIELDS[campo]
    P = (1.0, t, x, y, z)
    return tuple(sum(C[mu, k] * P[k] for k in range(5) if C[mu, k] != 0.0) for mu in range(4))


@dataclass(frozen=True)
class GridFunction:
    """Valores em malha (t, x, y, z) com origem e espaçamento por eixo."""

    values: np.ndarray
    origin: tuple[float, float, float, float]
    spacing: tuple[float, float, float, float]

    def coords(self):
        return np.meshgrid(*[o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.values.shape)],
                           indexing="ij", sparse=True)


def _interior(shape) -> list[slice]:
    return [slice(1, -1) if n >= 3 else slice(None) for n in shape]


def _derivada(v: np.ndarray, eixo: int, h: float) -> np.ndarray:
    mais, menos = _interior(v.shape), _interior(v.shape)
    mais[eixo], menos[eixo] = slice(2, None), slice(None, -2)
    return (v[tuple(mais)] - v[tuple(menos)]) / (2.0 * h)


def _encolher(gf: GridFunction, valores: np.ndarray) -> GridFunction:
    origem = tuple(o + (h if n >= 3 else 0.0) for o, h, n in zip(gf.origin, gf.spacing, gf.values.shape))
    return GridFunction(valores, origem, gf.spacing)


def _aplicar(op: str, gf: GridFunction) -> GridFunction:
    if op in FIELDS:
        return apply_field(op, gf)
    return good_derivative(gf, op)


def apply_field(campo: str, gf: GridFunction, pontos=None):
    """
    Aplica o campo com diferenças centradas no interior. Eixos com menos de 3
    nós só são aceitos se o campo não deriva nessa direção. Com `pontos`
    (índices (k, 4) na malha de entrada) devolve (valores, pulados), com NaN
    nos pontos de borda.
    """
    if campo not in FIELDS:
        raise DomainError(f"Campo desconhecido '{campo}'. Opções: {sorted(FIELDS)}.")
    v = gf.values
    C = FIELDS[campo]
    interior = tuple(_interior(v.shape))
    T, X, Y, Z = (c[interior] for c in np.broadcast_arrays(*gf.coords()))
    resultado = np.zeros(v[interior].shape, dtype=v.dtype)
    for mu in range(4):
        if not C[mu].any():
            continue
        if v.shape[mu] < 3:
            raise DomainError(f"Campo '{campo}' deriva no eixo {mu}, que tem só {v.shape[mu]} nó(s).")
        coef = C[mu, 0] + C[mu, 1] * T + C[mu, 2] * X + C[mu, 3] * Y + C[mu, 4] * Z
        resultado = resultado + coef * _derivada(v, mu, gf.spacing[mu])
    saida = _encolher(gf, resultado)
    if pontos is None:
        return saida
    pontos = np.atleast_2d(np.asarray(pontos, dtype=int))
    pulados = np.zeros(len(pontos), dtype=bool)
    valores = np.full(len(pontos), np.nan, dtype=resultado.dtype if resultado.dtype.kind == "c" else float)
    for k, p in enumerate(pontos):
        indice = []
        for eixo, n in enumerate(v.shape):
            if n >= 3:
                if p[eixo] <= 0 or p[eixo] >= n - 1:
                    pulados[k] = True
                    break
                indice.append(p[eixo] - 1)
            else:
                indice.append(p[eixo])
        if not pulados[k]:
            valores[k] = resultado[tuple(indice)]
    return valores, pulados


def good_derivative(gf: GridFunction, tipo: str) -> GridFunction:
    """'v' = (dt + dr)/2 e 'exy', 'exz', 'eyz' = Omega/r (derivadas tangentes aos cones de saída)."""
    interior = tuple(_interior(gf.values.shape))
    T, X, Y, Z = (c[interior] for c in np.broadcast_arrays(*gf.coords()))
    r = np.maximum(np.sqrt(X * X + Y * Y + Z * Z), min(h for h in gf.spacing[1:] if h > 0))
    if tipo == "v":
        dt = apply_field("dt", gf).values
        radial = (X * apply_field("dx", gf).values + Y * apply_field("dy", gf).values
                  + Z * apply_field("dz", gf).values) / r
        return _encolher(gf, 0.5 * (dt + radial))
    if tipo in ROTATIONS:
        return _encolher(gf, apply_field(ROTATIONS[tipo], gf).values / r)
    raise DomainError(f"Derivada boa desconhecida '{tipo}'.")


def commutator(op1: str, op2: str, gf: GridFunction) -> GridFunction:
    """[op1, op2] h = op1(op2 h) - op2(op1 h); ops são campos ou derivadas boas."""
    a = _aplicar(op1, _aplicar(op2, gf))
    b = _aplicar(op2, _aplicar(op1, gf))
    return GridFunction(a.values - b.values, a.origin, a.spacing)


def commutator_ratio(rotacao: str, boa: str, gf: GridFunction, r_min: float = 1.0) -> float:
    """||[Omega, dbar] h|| / sum ||dbar' h|| sobre os pontos com r >= r_min."""
    com = commutator(rotacao, boa, gf)
    _, X, Y, Z = np.broadcast_arrays(*com.coords())
    mascara = np.sqrt(X * X + Y * Y + Z * Z) >= r_min
    numerador = float(np.sqrt(np.sum(np.abs(com.values[mascara]) ** 2)))
    denominador = 0.0
    for tipo in ROTATIONS:
        d = good_derivative(gf, tipo).values
        # alinha com a malha do comutador, que perdeu mais uma camada
        aparado = d[tuple(slice(1, -1) if n >= 3 else slice(None) for n in d.shape)]
        denominador += float(np.sqrt(np.sum(np.abs(aparado[mascara]) ** 2)))
    return numerador / denominador if denominador > 0 else 0.0


# --- Crescimento dos pesos de Gamma^alpha F(t - x) ---

def _w(campo: str) -> np.ndarray:
    """Gamma u' como forma linear em (1, t, x, y, z)."""
    C = FIELDS[campo]
    return C[0] - C[1]


def _gamma_F(cadeia, P, F1, F2) -> np.ndarray:
    """Gamma^alpha F pela regra da cadeia; P tem forma (5, n)."""
    if len(cadeia) == 1:
        return (_w(cadeia[0]) @ P) * F1
    g1, g2 = cadeia
    w1, w2 = _w(g1), _w(g2)
    C1 = FIELDS[g1]
    derivada_w2 = sum((C1[mu] @ P) * w2[1 + mu] for mu in range(4))
    return derivada_w2 * F1 + (w2 @ P) * (w1 @ P) * F2


def cadeias_com_peso(k: int) -> list[tuple[str, ...]]:
    if k == 1:
        return [(g,) for g in WEIGHTED]
    if k == 2:
        return [c for c in itertools.product(FIELDS, repeat=2) if any(g in WEIGHTED for g in c)]
    raise DomainError("k precisa ser 1 ou 2.")


def weight_growth_check(profile: WaveProfile, componente: int, k: int, t_list,
                        samples: int = 200_000, seed: int = 0, cadeias=None) -> dict:
    """
    max sobre S_t de |Gamma^alpha F| para as cadeias de comprimento k e o
    expoente em t ajustado contra log(1 + t). O limite esperado é k/2 + 0.1.
    """
    if k not in (1, 2):
        raise DomainError("k precisa ser 1 ou 2.")
    cadeias = [tuple(c) for c in (cadeias or cadeias_com_peso(k))]
    if any(len(c) != k for c in cadeias):
        raise DomainError("Todas as cadeias precisam ter comprimento k.")
    translacoes = [c for c in itertools.product(TRANSLATIONS, repeat=k)]
    rng = np.random.default_rng(seed)
    maximos, maximos_transl = [], []
    for t in t_list:
        x, y, z = _amostrar_cilindro(float(t), samples, rng)
        dentro = in_region(float(t), x, y, z)
        x, y, z = x[dentro], y[dentro], z[dentro]
        P = np.vstack([np.ones_like(x), np.full_like(x, float(t)), x, y, z])
        u = float(t) - x
        F1 = profile.eval(u, 1)[:, componente]
        F2 = profile.eval(u, 2)[:, componente]
        maximos.append(max(float(np.abs(_gamma_F(c, P, F1, F2)).max(initial=0.0)) for c in cadeias))
        maximos_transl.append(max(float(np.abs(_gamma_F(c, P, F1, F2)).max(initial=0.0)) for c in translacoes))

    tt = np.asarray(t_list, dtype=float)
    expoente = linear_fit(np.log1p(tt), np.log(maximos), "power").exponent
    expoente_transl = linear_fit(np.log1p(tt), np.log(maximos_transl), "power").exponent
    return {
        "k": k,
        "t": [float(t) for t in tt],
        "maximos": maximos,
        "expoente": expoente,
        "expoente_translacoes": expoente_transl,
        "limite": k / 2 + 0.1,
        "dentro_do_limite": bool(expoente <= k / 2 + 0.1),
        "amostras": samples,
        "seed": seed,
    }
