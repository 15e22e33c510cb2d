# nullwave/nullform_algebra.py

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from exceptions import DomainError, InvalidSystemError
from notification_manager import add_notification

# Vetores e covetores vivem como arrays (t, x, y, z); assinatura (+,-,-,-).
Covector4 = npt.NDArray[np.float64]

METRICA = np.diag([1.0, -1.0, -1.0, -1.0])
DT = np.array([1.0, 0.0, 0.0, 0.0])
DX = np.array([0.0, 1.0, 0.0, 0.0])
DY = np.array([0.0, 0.0, 1.0, 0.0])
DZ = np.array([0.0, 0.0, 0.0, 1.0])
DU = DT - DX  # du' com u' = t - x
DV = DT + DX

TOL_NULA = 1e-10


def covector(t: float, x: float, y: float, z: float) -> Covector4:
    return np.array([t, x, y, z], dtype=float)


def _somente_leitura(array) -> np.ndarray:
    a = np.array(array, dtype=float)
    a.setflags(write=False)
    return a


# --- Formas bilineares ---

@dataclass(frozen=True)
class NullForm:
    """Forma bilinear m(xi, eta) = xi^T M eta em R^{3+1}."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (4, 4):
            raise DomainError(f"Forma precisa ser 4x4, recebido {m.shape}.")
        if not np.isfinite(m).all():
            raise DomainError("Forma com entradas não finitas.")
        object.__setattr__(self, "matrix", _somente_leitura(m))

    @classmethod
    def standard(cls) -> "NullForm":
        return cls(METRICA)

    @classmethod
    def wedge(cls, a: int, b: int) -> "NullForm":
        """Forma antissimétrica e_a ^ e_b (M[a][b] = 1, M[b][a] = -1)."""
        m = np.zeros((4, 4))
        m[a, b], m[b, a] = 1.0, -1.0
        return cls(m)

    @classmethod
    def zero(cls) -> "NullForm":
        return cls(np.zeros((4, 4)))

    def __call__(self, xi: Covector4, eta: Covector4) -> float:
        return eval_form(self, xi, eta)


def eval_form(form: NullForm, xi: Covector4, eta: Covector4) -> float:
    return float(np.asarray(xi, dtype=float) @ form.matrix @ np.asarray(eta, dtype=float))


def null_vector_witness(form: NullForm, samples: int = 10_000, seed: int = 0) -> float:
    """Maior |v^T M v| / (||M||_max ||v||^2) sobre vetores nulos v = (1, w) com |w| = 1."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(samples, 3))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    v = np.hstack([np.ones((samples, 1)), w])
    valores = np.einsum("sa,ab,sb->s", v, form.matrix, v)
    escala = max(1.0, float(np.abs(form.matrix).max()))
    # ||v||^2 euclidiano = 2 para v = (1, w)
    return float(np.abs(valores).max() / (escala * 2.0))


def is_null_form(form: NullForm, tol: float = TOL_NULA,
                 samples: int = 10_000, seed: int = 0) -> tuple[bool, float]:
    """
    Testa a condição nula pela parte simétrica: Sym(M) = c * diag(1,-1,-1,-1).
    Retorna (é_nula, c) com c de mínimos quadrados. O teste com vetores nulos
    aleatórios serve de segunda testemunha.
    """
    if tol <= 0:
        raise DomainError("tol precisa ser positiva.")
    m = form.matrix
    simetrica = 0.5 * (m + m.T)
    c = float(np.sum(simetrica * METRICA) / 4.0)
    residuo = float(np.abs(simetrica - c * METRICA).max())
    escala = max(1.0, float(np.abs(m).max()))
    nula = residuo <= tol * escala
    if nula:
        testemunha = null_vector_witness(form, samples, seed)
        if testemunha > 1e-8:
            # Parte simétrica passou mas algum v nulo não: tolerância frouxa demais.
            add_notification(f"Forma quase nula: |v^T M v| relativo chega a {testemunha:.2e}.")
    return nula, c


# --- Tensores de acoplamento ---

def simetrizar(entradas: np.ndarray) -> np.ndarray:
    """M[i][j][l] := (M[i][j][l] + M[i][l][j]^T) / 2."""
    return 0.5 * (entradas + entradas.transpose(0, 2, 1, 4, 3))


@dataclass(frozen=True)
class NullFormTensor:
    """Coeficientes m_ijl guardados já simetrizados, array (N, N, N, 4, 4)."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 5 or e.shape[0] != e.shape[1] or e.shape[1] != e.shape[2] or e.shape[3:] != (4, 4):
            raise DomainError(f"Tensor com forma inválida {e.shape}.")
        object.__setattr__(self, "entries", _somente_leitura(simetrizar(e)))

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    def form(self, i: int, j: int, l: int) -> NullForm:
        return NullForm(self.entries[i, j, l])

    @classmethod
    def from_forms(cls, N: int, formas: dict[tuple[int, int, int], np.ndarray]) -> "NullFormTensor":
        """Monta a partir de um dicionário (i, j, l) 0-based -> matriz 4x4; o resto é zero."""
        e = np.zeros((N, N, N, 4, 4))
        for (i, j, l), m in formas.items():
            e[i, j, l] += np.asarray(m, dtype=float)
        return cls(e)


@dataclass(frozen=True)
class SemilinearSystem:
    tensor: NullFormTensor
    label: str = "custom"

    @property
    def N(self) -> int:
        return self.tensor.N

    def __post_init__(self):
        violadas = formas_nao_nulas(self.tensor)
        if violadas:
            raise InvalidSystemError(
                f"Sistema '{self.label}' tem {len(violadas)} forma(s) que violam a condição nula.",
                [(i + 1, j + 1, l + 1) for i, j, l in violadas],
            )


@dataclass(frozen=True)
class CouplingTensors:
    """Tensores a, b, c com forma (N, N, N); o índice do meio é contraído com f'."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def N(self) -> int:
        return self.a.shape[0]


def formas_nao_nulas(tensor: NullFormTensor, tol: float = TOL_NULA) -> list[tuple[int, int, int]]:
    violadas = []
    N = tensor.N
    for i in range(N):
        for j in range(N):
            for l in range(N):
                nula, _ = is_null_form(tensor.form(i, j, l), tol)
                if not nula:
                    violadas.append((i, j, l))
    return violadas


def quadratic_rhs(system: SemilinearSystem, gradients: np.ndarray) -> np.ndarray:
    """
    Q_i = sum_{j,l} m_ijl(dphi_j, dphi_l).
    `gradients` tem forma (N, 4, ...) e o resultado (N, ...), o que permite
    avaliar em malhas inteiras de uma vez.
    """
    g = np.asarray(gradients, dtype=float)
    return np.einsum("ja...,ijlab,lb...->i...", g, system.tensor.entries, g, optimize=True)


def coupling_tensors(system: SemilinearSystem) -> CouplingTensors:
    """
    a_ijl = m_ijl(du', dv'), b_ijl = 2 m_ijl(du', dy), c_ijl = 2 m_ijl(du', dz)
    sobre o tensor simetrizado. A linearização em df_j = f'_j du' fica
    sum_{j,l} f'_j [a_ijl (dt + dx) + b_ijl dy + c_ijl dz] psi_l.
    """
    m = system.tensor.entries
    a = np.einsum("a,ijlab,b->ijl", DU, m, DV)
    b = 2.0 * np.einsum("a,ijlab,b->ijl", DU, m, DY)
    c = 2.0 * np.einsum("a,ijlab,b->ijl", DU, m, DZ)
    return CouplingTensors(_somente_leitura(a), _somente_leitura(b), _somente_leitura(c))


def contract(tensor: np.ndarray, fprime: np.ndarray) -> np.ndarray:
    """(T f')_il = sum_j T_ijl f'_j; aceita f' com forma (N,) ou (n, N)."""
    fp = np.asarray(fprime, dtype=float)
    if fp.ndim == 1:
        return np.einsum("ijl,j->il", tensor, fp)
    return np.einsum("ijl,nj->nil", tensor, fp)


def check_condition_one(system: SemilinearSystem, active: set[int],
                        tol: float = 1e-12) -> tuple[bool, list[tuple[int, int, int]]]:
    """
    Condição 1 com `active` 0-based. Retorna (ok, violações) com as triplas
    (i, j, l) também 0-based.
    """
    N = system.N
    if any(k < 0 or k >= N for k in active):
        raise DomainError(f"Componentes ativas {sorted(active)} fora de 0..{N - 1}.")
    tensores = coupling_tensors(system)
    violacoes = []
    for i in range(N):
        for j in range(N):
            for l in range(N):
                if j not in active and l not in active:
                    continue
                if abs(tensores.b[i, j, l]) > tol or abs(tensores.c[i, j, l]) > tol:
                    violacoes.append((i, j, l))
    return not violacoes, violacoes


def linearization_oracle(system: SemilinearSystem, fprime: np.ndarray, dpsi: np.ndarray,
                         eps: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """
    Linearização de Q em df = f' du' obtida por Richardson em (eps, eps/2) e a
    mesma linearização montada pelos tensores a, b, c.
    """
    fp = np.asarray(fprime, dtype=float)
    df = fp[:, None] * DU[None, :]
    dpsi = np.asarray(dpsi, dtype=float)
    base = quadratic_rhs(system, df)

    def resposta(e):
        return quadratic_rhs(system, df + e * dpsi) - base

    oraculo = (4.0 * resposta(eps / 2) - resposta(eps)) / eps
    t = coupling_tensors(system)
    montagem = (contract(t.a, fp) @ (dpsi[:, 0] + dpsi[:, 1])
                + contract(t.b, fp) @ dpsi[:, 2]
                + contract(t.c, fp) @ dpsi[:, 3])
    return oraculo, montagem


# --- Sistemas prontos ---

def _exemplo1() -> SemilinearSystem:
    # box phi_1 = 2 dphi_1 . dphi_2 ; box phi_2 = dphi_1 . dphi_1
    eta = METRICA
    return SemilinearSystem(
        NullFormTensor.from_forms(2, {(0, 0, 1): eta, (0, 1, 0): eta, (1, 0, 0): eta}),
        label="example1",
    )


def _exemplo2() -> SemilinearSystem:
    # box phi_1 = 2 (dt phi_1 dy phi_2 - dy phi_1 dt phi_2) ; box phi_2 = dphi_1 . dphi_1
    w = NullForm.wedge(0, 2).matrix
    return SemilinearSystem(
        NullFormTensor.from_forms(2, {(0, 0, 1): w, (0, 1, 0): w.T, (1, 0, 0): METRICA}),
        label="example2",
    )


EXEMPLOS = {"example1": _exemplo1, "example2": _exemplo2}


def example_system(nome: str) -> SemilinearSystem:
    try:
        return EXEMPLOS[nome]()
    except KeyError:
        raise DomainError(f"Sistema de exemplo desconhecido: '{nome}'. Opções: {sorted(EXEMPLOS)}.")


def random_null_form(rng: np.random.Generator, escala: float = 1.0) -> np.ndarray:
    """c * eta + parte antissimétrica aleatória."""
    c = rng.normal()
    anti = rng.normal(size=(4, 4))
    anti = anti - anti.T
    return escala * (c * METRICA + 0.5 * anti)


def random_null_system(N: int, rng: np.random.Generator, densidade: float = 1.0,
                       label: str = "random") -> SemilinearSystem:
    entradas = np.zeros((N, N, N, 4, 4))
    for i in range(N):
        for j in range(N):
            for l in range(N):
                if rng.random() < densidade:
                    entradas[i, j, l] = random_null_form(rng)
    return SemilinearSystem(NullFormTensor(entradas), label=label)


def load_system_document(documento: dict, label: str | None = None) -> SemilinearSystem:
    """
    Lê {"N": int, "forms": [{"i","j","l","matrix": [16 reais]}]} com índices
    1-based; entradas omitidas são zero.
    """
    N = int(documento["N"])
    formas = {}
    for entrada in documento.get("forms", []):
        chave = (int(entrada["i"]) - 1, int(entrada["j"]) - 1, int(entrada["l"]) - 1)
        if min(chave) < 0 or max(chave) >= N:
            raise DomainError(f"Índices {tuple(k + 1 for k in chave)} fora de 1..{N}.")
        formas[chave] = np.asarray(entrada["matrix"], dtype=float).reshape(4, 4)
    return SemilinearSystem(NullFormTensor.from_forms(N, formas),
                            label=label or documento.get("label", "custom"))
