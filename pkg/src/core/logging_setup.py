import os
import logging
from logging.handlers import RotatingFileHandler

from .config import FLEXBEE_LOG_DIR

# Настройка логирования
FORMATTER = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")


def get_logger(name: str, filename: str) -> logging.Logger:
    """
    Description:
    ---------------
        Возвращает логгер компонента: файл с ротацией (DEBUG) и консоль (INFO).
        Обработчики добавляются один раз, повторный вызов отдает тот же логгер.

    Args:
    ---------------
        name: Имя логгера
        filename: Имя файла лога в каталоге FLEXBEE_LOG_DIR

    Returns:
    ---------------
        logging.Logger: Настроенный логгер

    Examples:
    ---------------
        >>> logger = get_logger("SimEngine", "sim_engine.log")
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    # Проверяем и создаем папку для логов
    os.makedirs(FLEXBEE_LOG_DIR, exist_ok=True)

    logger.setLevel(logging.DEBUG)

    file_handler = RotatingFileHandler(
        filename=os.path.join(FLEXBEE_LOG_DIR, filename),
        maxBytes=8*1024*1024,  # 8 MB
        backupCount=3,
        encoding='utf-8'
    )
    file_handler.setFormatter(FORMATTER)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(FORMATTER)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)
    return logger


def set_console_level(level: int) -> None:
    """Меняет уровень консольного вывода у всех логгеров проекта"""
    for logger in logging.Logger.manager.loggerDict.values():
        if not isinstance(logger, logging.Logger):
            continue
        for handler in logger.handlers:
            if type(handler) is logging.StreamHandler:
                handler.setLevel(level)
