# nullwave/tests/conftest.py

import os
import sys

import numpy as np
import pytest
from click.testing import CliRunner
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from sqlalchemy.pool import StaticPool

# Adiciona a raiz do projeto ao caminho de busca do Python para garantir que as importações funcionem
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from database_config import Base
import models  # noqa: F401
from nullform_algebra import example_system
from profiles import WaveProfile, default_profile

# Configura um banco de dados SQLite em memória para os testes
SQLALCHEMY_DATABASE_URL = "sqlite:///:memory:"

engine = create_engine(
    SQLALCHEMY_DATABASE_URL,
    connect_args={"check_same_thread": False},
    poolclass=StaticPool,
)
TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


@pytest.fixture()
def db_session():
    """Cria e destrói as tabelas para cada teste"""
    Base.metadata.create_all(bind=engine)
    db = TestingSessionLocal()
    try:
        yield db
    finally:
        db.close()
        Base.metadata.drop_all(bind=engine)


@pytest.fixture()
def exemplo1():
    return example_system("example1")


@pytest.fixture()
def exemplo2():
    return example_system("example2")


@pytest.fixture()
def perfil_padrao() -> WaveProfile:
    """Bump de amplitude 1 na segunda componente, a que carrega a onda plana nos exemplos."""
    return default_profile(2, 1)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def raiz_saida(tmp_path, monkeypatch):
    """Raiz de saída isolada por teste."""
    monkeypatch.setenv("NULLWAVE_OUT_ROOT", str(tmp_path / "runs"))
    return tmp_path / "runs"
