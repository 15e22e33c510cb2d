# nullwave/models.py

from datetime import datetime

from sqlalchemy import Column, DateTime, Float, Integer, String, Text

from database_config import Base


class Execucao(Base):
    __tablename__ = "execucoes"
    id = Column(Integer, primary_key=True, index=True)
    tarefa = Column(String, nullable=False, index=True)
    config_hash = Column(String(64), nullable=False, index=True)
    diretorio = Column(String, nullable=False)
    status = Column(String, default="ok")          # ok | falha
    tempo_s = Column(Float, nullable=True)
    criado_em = Column(DateTime, default=datetime.utcnow)
    detalhe = Column(Text, nullable=True)
