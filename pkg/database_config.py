# nullwave/database_config.py

import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

# Carrega as variáveis de ambiente do arquivo .env
load_dotenv()

OUT_ROOT = os.getenv("NULLWAVE_OUT_ROOT", "runs")
NOME_REGISTRO = "registro.db"

Base = declarative_base()


def raiz_de_saida(out: str | os.PathLike | None = None) -> Path:
    """A opção --out tem precedência sobre NULLWAVE_OUT_ROOT."""
    return Path(out or os.getenv("NULLWAVE_OUT_ROOT", OUT_ROOT))


@lru_cache(maxsize=8)
def _engine(caminho: str):
    return create_engine(f"sqlite:///{caminho}", connect_args={"check_same_thread": False})


def criar_sessao(raiz: str | os.PathLike | None = None):
    """Sessão ligada ao registro SQLite da raiz de saída; cria as tabelas na primeira vez."""
    import models  # noqa: F401

    pasta = raiz_de_saida(raiz)
    pasta.mkdir(parents=True, exist_ok=True)
    engine = _engine(str((pasta / NOME_REGISTRO).resolve()))
    Base.metadata.create_all(bind=engine)
    SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    return SessionLocal()
