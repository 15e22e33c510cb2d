# nullwave/init_db.py

import sys

from database_config import Base, criar_sessao
import models  # noqa: F401  (registra as tabelas na Base)


def create_tables(raiz=None):
    """
    Cria o registro SQLite na raiz de saída com todas as tabelas definidas na Base.
    """
    print("A verificar/criar o registro de execuções...")
    db = criar_sessao(raiz)
    Base.metadata.create_all(bind=db.get_bind())
    db.close()
    print("Registro verificado/criado com sucesso!")


if __name__ == "__main__":
    create_tables(sys.argv[1] if len(sys.argv) > 1 else None)
