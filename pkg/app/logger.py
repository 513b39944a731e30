import logging

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"

logger = logging.getLogger("app")


def configure_logging(level: str = "INFO") -> None:
    """Install the engine's stderr handler at ``level`` (idempotent)."""
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    if not any(getattr(h, "_reid_handler", False) for h in logger.handlers):
        log_handler = logging.StreamHandler()
        log_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        log_handler._reid_handler = True
        logger.addHandler(log_handler)
