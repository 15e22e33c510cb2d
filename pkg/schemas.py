# nullwave/schemas.py

# Schemas do Pydantic que definem o cenário de cada execução e o que é gravado de volta

from datetime import datetime
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator

from profiles import SHAPES

FIXTURES = ("example1", "example2")


# --- Schemas para o sistema e o perfil ---

class FormaIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    i: int = Field(ge=1)
    j: int = Field(ge=1)
    l: int = Field(ge=1)
    matrix: list[float]

    @field_validator("matrix")
    @classmethod
    def dezesseis_entradas(cls, valor):
        if len(valor) != 16:
            raise ValueError("a matriz da forma precisa de 16 entradas (4x4 por linhas)")
        return valor


class SystemDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(ge=1, le=8)
    forms: list[FormaIn] = []
    label: Optional[str] = None

    @model_validator(mode="after")
    def indices_no_intervalo(self):
        for forma in self.forms:
            if max(forma.i, forma.j, forma.l) > self.N:
                raise ValueError(f"forma ({forma.i},{forma.j},{forma.l}) fora de 1..{self.N}")
        return self


class ProfileSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    amplitudes: list[float] = Field(min_length=1)
    shape: str = "bump"
    poly: list[float] = [1.0]
    h_u: float = Field(default=1e-3, gt=0)

    @field_validator("shape")
    @classmethod
    def forma_conhecida(cls, valor):
        if valor not in SHAPES:
            raise ValueError(f"forma desconhecida '{valor}', opções: {list(SHAPES)}")
        return valor


# --- Schemas para os parâmetros de cada tarefa ---

class ClassifyParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h: float = Field(default=1e-3, gt=0, le=1e-2)
    n_theta: int = Field(default=360, ge=1)
    max_nos: int = Field(default=600, ge=10)


class MalhaCaracteristica(BaseModel):
    model_config = ConfigDict(extra="forbid")

    u_min: float = -1.05
    h_u: float = Field(default=2.5e-3, gt=0)
    v_max: float = Field(default=200.0, gt=1)
    h_v: float = Field(default=2.5e-3, gt=0)


class ModeParams(ClassifyParams):
    xi: list[float] = Field(default=[5.0], min_length=1)
    theta: Optional[float] = None
    components: Optional[list[int]] = None
    grid: MalhaCaracteristica = MalhaCaracteristica()
    fit_t_min: float = Field(default=5.0, ge=0)
    energy_check: bool = False


class FdtdParams(ClassifyParams):
    eps: float = Field(default=1e-2, ge=0)
    components: list[int] = [1]
    data: Literal["ball", "planar", "mode"] = "ball"
    k_y: float = 0.0
    L: float = Field(default=24.0, gt=0)
    grid_h: float = Field(default=0.5, gt=0)
    t_max: float = Field(default=20.0, ge=0)
    cfl: float = Field(default=0.45, gt=0, le=1)
    periodic_yz: bool = False
    n_y: int = Field(default=1, ge=1)
    n_z: int = Field(default=1, ge=1)
    linear: bool = False
    dt_out: float = Field(default=0.5, gt=0)
    delta: float = Field(default=0.05, gt=0, lt=0.5)
    norm_order: int = Field(default=-1, ge=-1, le=2)
    renormalize: bool = True
    snapshot: bool = True
    fit_t_min: float = Field(default=5.0, ge=0)


class GeopticsParams(ClassifyParams):
    u_1: float = -1.0
    u_2: float = 1.0
    T: float = Field(default=200.0, gt=0)
    M: int = Field(default=1, ge=0, le=4)
    mu: Optional[float] = Field(default=None, gt=0)
    n_s: int = Field(default=1000, ge=4)
    largura: Optional[float] = Field(default=None, gt=0)
    comparison: bool = True
    comparison_samples: int = Field(default=8, ge=1)
    comparison_eps: float = Field(default=0.1, gt=0)


class GeometryParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_list: list[float] = Field(default=[4.0, 16.0, 64.0, 256.0], min_length=1)
    samples: int = Field(default=1_000_000, ge=100_000)
    cap_t_list: list[float] = [16.0, 64.0, 256.0, 1024.0]
    cap_offsets: list[float] = [-1.5, -0.5, 0.0, 0.5, 1.5]
    weight_k: list[int] = [1, 2]
    weight_component: int = Field(default=1, ge=1)
    weight_t_list: list[float] = [4.0, 16.0, 64.0, 256.0]
    weight_samples: int = Field(default=200_000, ge=1000)

    @field_validator("t_list", "cap_t_list", "weight_t_list")
    @classmethod
    def tempos_validos(cls, valor):
        if any(t < 1 for t in valor):
            raise ValueError("os instantes precisam ser >= 1")
        return valor


class BlowupParams(ClassifyParams):
    xi: float = Field(default=20.0, gt=0)
    deltas: list[float] = Field(default=[1e-2, 1e-3, 1e-4], min_length=2)
    component: int = Field(default=1, ge=1)
    grid: MalhaCaracteristica = MalhaCaracteristica(v_max=800.0)

    @field_validator("deltas")
    @classmethod
    def deltas_positivos(cls, valor):
        if any(d <= 0 for d in valor):
            raise ValueError("os valores de delta precisam ser positivos")
        return valor


# --- Schemas para o cenário ---

class ScenarioBase(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: Union[Literal["example1", "example2"], SystemDocument]
    profile: ProfileSpec
    seed: int = 0
    output_dir: Optional[str] = None

    @property
    def N(self) -> int:
        return 2 if isinstance(self.system, str) else self.system.N

    @model_validator(mode="after")
    def perfil_compativel(self):
        N = self.N
        if len(self.profile.amplitudes) != N:
            raise ValueError(f"o perfil tem {len(self.profile.amplitudes)} amplitudes e o sistema N={N}")
        params = getattr(self, "params", None)
        indices = list(getattr(params, "components", None) or [])
        for nome in ("component", "weight_component"):
            if hasattr(params, nome):
                indices.append(getattr(params, nome))
        if any(not 1 <= k <= N for k in indices):
            raise ValueError(f"índices de componente {indices} fora de 1..{N}")
        return self


class ClassifyScenario(ScenarioBase):
    task: Literal["classify"]
    params: ClassifyParams = ClassifyParams()


class ModeScenario(ScenarioBase):
    task: Literal["mode"]
    params: ModeParams = ModeParams()


class FdtdScenario(ScenarioBase):
    task: Literal["fdtd"]
    params: FdtdParams = FdtdParams()


class GeopticsScenario(ScenarioBase):
    task: Literal["geoptics"]
    params: GeopticsParams = GeopticsParams()


class GeometryScenario(ScenarioBase):
    task: Literal["geometry"]
    params: GeometryParams = GeometryParams()


class BlowupScenario(ScenarioBase):
    task: Literal["blowup"]
    params: BlowupParams = BlowupParams()


Scenario = Annotated[
    Union[ClassifyScenario, ModeScenario, FdtdScenario, GeopticsScenario, GeometryScenario, BlowupScenario],
    Field(discriminator="task"),
]
scenario_adapter = TypeAdapter(Scenario)

TASKS = ("classify", "mode", "fdtd", "geoptics", "geometry", "blowup")


# --- Schemas para o manifesto e o registro ---

class RunManifest(BaseModel):
    tool_version: str
    task: str
    config_hash: str
    seed: int
    started_at: datetime
    wall_time_s: float
    output_dir: str
    outputs: list[str]
    events: list[str] = []


class ExecucaoOut(BaseModel):
    id: int
    tarefa: str
    config_hash: str
    diretorio: str
    status: str
    tempo_s: Optional[float] = None
    criado_em: datetime
    detalhe: Optional[str] = None

    # Permite que o Pydantic leia dados de um objeto SQLAlchemy
    model_config = ConfigDict(from_attributes=True)
