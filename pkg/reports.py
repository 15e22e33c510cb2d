# nullwave/reports.py

import dataclasses
import json
import math
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd
from fpdf import FPDF
from fpdf.enums import XPos, YPos

FORMATO_FLOAT = "%.12e"


class PDF(FPDF):
    """Relatório de uma execução: cabeçalho com tarefa, hash e versão em todas as páginas."""

    def __init__(self, tarefa: str, config_hash: str, versao: str = ""):
        super().__init__()
        self.tarefa = tarefa
        self.config_hash = config_hash
        self.versao = versao
        self.set_title(f"nullwave {tarefa} {config_hash[:12]}")

    def rotulo(self) -> str:
        versao = f" v{self.versao}" if self.versao else ""
        return f"nullwave{versao} | tarefa {self.tarefa} | config {self.config_hash[:12]}"

    def header(self):
        self.set_font("Helvetica", "B", 9)
        self.cell(0, 6, _latin1(self.rotulo()), border="B", new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="L")
        self.ln(3)

    def footer(self):
        self.set_y(-12)
        self.set_font("Helvetica", "I", 7)
        self.cell(0, 8, f"{self.config_hash} - p. {self.page_no()}/{{nb}}", align="R")


def _latin1(texto: str) -> str:
    # as fontes padrão do PDF só cobrem latin-1
    return str(texto).encode("latin-1", "replace").decode("latin-1")


def para_json(obj):
    """Converte resultados numéricos em tipos JSON; NaN e infinito viram null."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return para_json({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    if isinstance(obj, dict):
        return {str(k): para_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [para_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return para_json(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": para_json(float(obj.real)), "im": para_json(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        valor = float(obj)
        return valor if math.isfinite(valor) else None
    if isinstance(obj, datetime):
        return obj.isoformat()
    if isinstance(obj, Path):
        return str(obj)
    return obj


def escrever_json(caminho: Path, dados) -> Path:
    caminho = Path(caminho)
    caminho.write_text(json.dumps(para_json(dados), indent=2, ensure_ascii=False, allow_nan=False) + "\n",
                       encoding="utf-8")
    return caminho


def escrever_tabela_csv(caminho: Path, linhas) -> Path:
    """Séries temporais e tabelas em CSV com formato de ponto flutuante fixo."""
    caminho = Path(caminho)
    tabela = linhas if isinstance(linhas, pd.DataFrame) else pd.DataFrame(list(linhas))
    tabela.to_csv(caminho, index=False, float_format=FORMATO_FLOAT)
    return caminho


def escrever_snapshot(pasta: Path, nome: str, valores: np.ndarray, spacing, origin, tempo: float,
                      componentes: list[str]) -> tuple[Path, Path]:
    """Binário float64 little-endian em ordem C + sidecar JSON com as dimensões."""
    pasta = Path(pasta)
    binario = pasta / f"{nome}.bin"
    lateral = pasta / f"{nome}.json"
    valores = np.ascontiguousarray(valores, dtype="<f8")
    binario.write_bytes(valores.tobytes(order="C"))
    escrever_json(lateral, {
        "dims": list(valores.shape),
        "spacing": list(spacing),
        "origin": list(origin),
        "time": tempo,
        "components": componentes,
        "dtype": "float64",
        "endianness": "little",
        "order": "C",
    })
    return binario, lateral


def ler_snapshot(binario: Path) -> tuple[np.ndarray, dict]:
    binario = Path(binario)
    meta = json.loads(binario.with_suffix(".json").read_text(encoding="utf-8"))
    valores = np.frombuffer(binario.read_bytes(), dtype="<f8").reshape(meta["dims"])
    return valores, meta


def gerar_resumo_pdf(caminho: Path, tarefa: str, config_hash: str, resumo: dict, eventos: list[str],
                     versao: str = "") -> Path:
    """Uma página com os números principais da execução e o log de eventos."""
    pdf = PDF(tarefa, config_hash, versao)
    pdf.add_page()
    pdf.set_font("Helvetica", "B", 14)
    pdf.cell(0, 10, _latin1(f"Execução {tarefa}"), new_x=XPos.LMARGIN, new_y=YPos.NEXT, align="C")
    pdf.ln(5)

    pdf.set_font('Helvetica', 'B', 12)
    pdf.cell(0, 10, 'Resumo', new_x=XPos.LMARGIN, new_y=YPos.NEXT)
    pdf.set_font('Helvetica', '', 10)
    for chave, valor in resumo.items():
        if isinstance(valor, float):
            valor = f"{valor:.6g}"
        pdf.multi_cell(0, 6, _latin1(f"- {chave}: {valor}"), new_x=XPos.LMARGIN, new_y=YPos.NEXT)
    pdf.ln(5)

    pdf.set_font('Helvetica', 'B', 12)
    pdf.cell(0, 10, 'Eventos', new_x=XPos.LMARGIN, new_y=YPos.NEXT)
    if not eventos:
        pdf.set_font('Helvetica', 'I', 10)
        pdf.cell(0, 8, "Nenhum evento registrado.", new_x=XPos.LMARGIN, new_y=YPos.NEXT)
    else:
        pdf.set_font('Helvetica', '', 8)
        for evento in reversed(eventos):
            pdf.multi_cell(0, 5, _latin1(evento), new_x=XPos.LMARGIN, new_y=YPos.NEXT)

    pdf.output(str(caminho))
    return Path(caminho)
