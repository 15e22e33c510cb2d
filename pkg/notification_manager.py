# nullwave/notification_manager.py

import logging
from collections import deque
from datetime import datetime

logger = logging.getLogger("nullwave")

# O deque descarta sozinho os eventos mais antigos quando enche.
notifications = deque(maxlen=500)


def add_notification(message: str, nivel: int = logging.INFO):
    """Registra um evento da execução e repassa ao logger do pacote."""
    timestamp = datetime.now().strftime("%H:%M:%S")
    notifications.appendleft(f"[{timestamp}] {message}")
    logger.log(nivel, message)


def get_notifications():
    """Retorna os eventos atuais, do mais recente para o mais antigo."""
    return list(notifications)


def limpar_notificacoes():
    notifications.clear()
