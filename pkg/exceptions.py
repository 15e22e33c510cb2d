# nullwave/exceptions.py

class NullwaveError(Exception):
    """Erro base do laboratório. Carrega um detalhe legível e o código de saída da CLI."""

    exit_code = 1

    def __init__(self, detail: str, diagnostico: dict | None = None):
        super().__init__(detail)
        self.detail = detail
        self.diagnostico = diagnostico or {}


# --- Erros de entrada (código 2) ---

class ConfigValidationError(NullwaveError):
    """Cenário inválido. `erros` traz todas as violações encontradas numa só passada."""

    exit_code = 2

    def __init__(self, detail: str, erros: list[str] | None = None):
        super().__init__(detail, {"erros": list(erros or [])})
        self.erros = list(erros or [])


class InvalidSystemError(ConfigValidationError):
    """Alguma forma m_ijl do sistema não satisfaz a condição nula."""

    def __init__(self, detail: str, formas: list[tuple[int, int, int]]):
        super().__init__(detail, [f"forma {f} não é nula" for f in formas])
        self.formas = formas


class DomainError(NullwaveError, ValueError):
    exit_code = 2


class FitError(NullwaveError, ValueError):
    exit_code = 2


# --- Falhas numéricas (código 3) ---

class NumericalFailure(NullwaveError):
    exit_code = 3


class StepSizeRejected(NumericalFailure):
    pass


class ResolutionError(NumericalFailure):
    pass


class NumericalBlowup(NumericalFailure):
    def __init__(self, detail: str, tempo: float):
        super().__init__(detail, {"tempo": tempo})
        self.tempo = tempo


class EigenvalueError(NumericalFailure):
    pass
