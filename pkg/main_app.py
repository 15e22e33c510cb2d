# nullwave/main_app.py

import hashlib
import json
import logging
import shutil
import sys
import tempfile
import time
from datetime import datetime
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

import crud
import reports
import routes
import schemas
from database_config import criar_sessao, raiz_de_saida
from exceptions import ConfigValidationError, NullwaveError, NumericalFailure
from notification_manager import add_notification, get_notifications, limpar_notificacoes

__version__ = "0.1.0"


# --- Configuração ---

def carregar_cenario(documento: dict):
    """Valida o cenário inteiro numa passada; todas as violações vão na exceção."""
    try:
        return schemas.scenario_adapter.validate_python(documento)
    except ValidationError as erro:
        erros = [f"{'.'.join(str(p) for p in e['loc']) or '<raiz>'}: {e['msg']}" for e in erro.errors()]
        raise ConfigValidationError(f"Cenário inválido ({len(erros)} erro(s)).", erros)


def ler_configuracao(caminho) -> dict:
    try:
        return json.loads(Path(caminho).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as erro:
        raise ConfigValidationError(f"Não foi possível ler '{caminho}'.", [str(erro)])


def hash_configuracao(cenario) -> str:
    """SHA-256 do JSON canônico do cenário validado, sem o diretório de saída."""
    dados = cenario.model_dump(mode="json", exclude={"output_dir"})
    canonico = json.dumps(dados, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonico.encode("utf-8")).hexdigest()


# --- Execução ---

def _executar_tarefa(cenario, destino: Path, threads: int):
    """Erros numéricos de numpy/scipy viram NumericalFailure (código 3, arquivo de falha)."""
    try:
        return routes.TAREFAS[cenario.task](cenario, destino, threads)
    except NullwaveError:
        raise
    except (np.linalg.LinAlgError, ArithmeticError, ValueError) as erro:
        raise NumericalFailure(f"{type(erro).__name__}: {erro}", {"excecao": type(erro).__name__}) from erro


def _registrar(db, raiz, **campos):
    sessao = db if db is not None else criar_sessao(raiz)
    try:
        return crud.registrar_execucao(sessao, **campos)
    finally:
        if db is None:
            sessao.close()


def run_scenario(config, out=None, threads: int = 1, tarefa: str | None = None, db=None) -> schemas.RunManifest:
    """
    Valida, executa a tarefa num diretório temporário e renomeia ao final.
    Falhas numéricas deixam só o arquivo falha-<hash>-<instante>.json.
    """
    documento = config if isinstance(config, dict) else ler_configuracao(config)
    cenario = carregar_cenario(documento)
    if tarefa is not None and cenario.task != tarefa:
        raise ConfigValidationError(f"O cenário é da tarefa '{cenario.task}', não '{tarefa}'.",
                                    [f"task: esperado '{tarefa}'"])

    raiz = raiz_de_saida(out or cenario.output_dir)
    raiz.mkdir(parents=True, exist_ok=True)
    config_hash = hash_configuracao(cenario)
    inicio = datetime.now()
    carimbo = inicio.strftime("%Y%m%dT%H%M%S%f")
    relogio = time.perf_counter()
    limpar_notificacoes()
    add_notification(f"Início da tarefa '{cenario.task}' ({config_hash[:12]}), seed={cenario.seed}.")

    temporario = Path(tempfile.mkdtemp(prefix=".tmp-", dir=raiz))
    final = raiz / f"{cenario.task}-{config_hash[:12]}-{carimbo}"
    try:
        saidas, resumo = _executar_tarefa(cenario, temporario, threads)
        duracao = time.perf_counter() - relogio
        add_notification(f"Tarefa '{cenario.task}' concluída em {duracao:.2f} s.")
        manifesto = schemas.RunManifest(
            tool_version=__version__, task=cenario.task, config_hash=config_hash, seed=cenario.seed,
            started_at=inicio, wall_time_s=duracao, output_dir=str(final),
            outputs=saidas + ["relatorio.pdf", "manifest.json"], events=get_notifications(),
        )
        reports.gerar_resumo_pdf(temporario / "relatorio.pdf", cenario.task, config_hash,
                                 {"seed": cenario.seed, "wall_time_s": duracao, **resumo}, manifesto.events,
                                 versao=__version__)
        reports.escrever_json(temporario / "manifest.json", manifesto.model_dump(mode="json"))
        temporario.rename(final)
    except NullwaveError as erro:
        shutil.rmtree(temporario, ignore_errors=True)
        add_notification(f"Falha na tarefa '{cenario.task}': {erro.detail}", logging.ERROR)
        if isinstance(erro, NumericalFailure):
            reports.escrever_json(raiz / f"falha-{config_hash[:12]}-{carimbo}.json", {
                "task": cenario.task,
                "config_hash": config_hash,
                "erro": type(erro).__name__,
                "detail": erro.detail,
                "diagnostico": erro.diagnostico,
                "events": get_notifications(),
            })
        _registrar(db, raiz, tarefa=cenario.task, config_hash=config_hash, diretorio=str(raiz),
                   status="falha", tempo_s=time.perf_counter() - relogio, detalhe=erro.detail)
        raise
    except BaseException:
        shutil.rmtree(temporario, ignore_errors=True)
        raise

    _registrar(db, raiz, tarefa=cenario.task, config_hash=config_hash, diretorio=str(final),
               status="ok", tempo_s=manifesto.wall_time_s)
    return manifesto


# --- CLI ---

@click.group()
@click.version_option(__version__, prog_name="nullwave")
@click.option("-v", "--verbose", is_flag=True, help="Mostra também os eventos de depuração.")
def cli(verbose):
    """Laboratório numérico de estabilidade de ondas planas para sistemas com formas nulas."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _comando_tarefa(nome: str):
    @cli.command(name=nome, help=f"Executa um cenário da tarefa '{nome}'.")
    @click.option("--config", required=True, type=click.Path(exists=True, dir_okay=False), help="Cenário JSON.")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Raiz de saída.")
    @click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
    def comando(config, out, threads):
        try:
            manifesto = run_scenario(config, out=out, threads=threads, tarefa=nome)
        except NullwaveError as erro:
            click.echo(f"Erro: {erro.detail}", err=True)
            for detalhe in getattr(erro, "erros", []):
                click.echo(f"  - {detalhe}", err=True)
            sys.exit(erro.exit_code)
        click.echo(manifesto.output_dir)

    return comando


for _tarefa in schemas.TASKS:
    _comando_tarefa(_tarefa)


@cli.command()
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Raiz de saída.")
@click.option("--limit", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--hash", "config_hash", default=None, help="Filtra pelo prefixo do hash de configuração.")
def history(out, limit, config_hash):
    """Lista as execuções do registro."""
    db = criar_sessao(out)
    try:
        if config_hash:
            execucoes = crud.buscar_execucoes_por_hash(db, config_hash)[-limit:]
        else:
            execucoes = crud.listar_execucoes(db, limit=limit)
        if not execucoes:
            click.echo("Nenhuma execução registrada.")
        for e in execucoes:
            linha = schemas.ExecucaoOut.model_validate(e)
            tempo = f"{linha.tempo_s:.2f}s" if linha.tempo_s is not None else "-"
            click.echo(f"{linha.id:4d}  {linha.criado_em:%Y-%m-%d %H:%M:%S}  {linha.tarefa:9s}  "
                       f"{linha.config_hash[:12]}  {linha.status:5s}  {tempo:>9s}  {linha.diretorio}")
    finally:
        db.close()


if __name__ == "__main__":
    cli()
