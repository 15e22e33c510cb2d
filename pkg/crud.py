# nullwave/crud.py

from sqlalchemy.orm import Session

import models
from notification_manager import add_notification

# --- Funções CRUD para o registro de execuções ---

def registrar_execucao(db: Session, tarefa: str, config_hash: str, diretorio: str,
                       status: str = "ok", tempo_s: float | None = None, detalhe: str | None = None):
    """Grava uma execução (bem-sucedida ou não) no registro."""
    execucao = models.Execucao(tarefa=tarefa, config_hash=config_hash, diretorio=diretorio,
                               status=status, tempo_s=tempo_s, detalhe=detalhe)
    db.add(execucao)
    db.commit()
    db.refresh(execucao)
    add_notification(f"Execução '{tarefa}' registrada com status '{status}' ({config_hash[:12]}).")
    return execucao


def listar_execucoes(db: Session, skip: int = 0, limit: int = 50, tarefa: str | None = None):
    """Lista as execuções mais recentes primeiro."""
    consulta = db.query(models.Execucao)
    if tarefa:
        consulta = consulta.filter(models.Execucao.tarefa == tarefa)
    return consulta.order_by(models.Execucao.criado_em.desc(), models.Execucao.id.desc()).offset(skip).limit(limit).all()


def buscar_execucoes_por_hash(db: Session, config_hash: str):
    """Todas as execuções de uma mesma configuração (o prefixo do hash basta)."""
    return (db.query(models.Execucao)
            .filter(models.Execucao.config_hash.startswith(config_hash))
            .order_by(models.Execucao.id).all())


def buscar_execucao_por_id(db: Session, execucao_id: int):
    return db.query(models.Execucao).filter(models.Execucao.id == execucao_id).first()
