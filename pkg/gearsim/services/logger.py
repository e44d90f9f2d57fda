import logging
import os


class AppLogger:
    _loggers = {}

    @staticmethod
    def get_logger(name="gearsim"):
        if name in AppLogger._loggers:
            return AppLogger._loggers[name]

        level = os.getenv("GEARSIM_LOG_LEVEL", "INFO").upper()
        logger = logging.getLogger(name)
        logger.setLevel(level)

        formatter = logging.Formatter(
            '%(asctime)s [%(levelname)s] %(name)s: %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S'
        )

        # stderr; stdout carries command output
        ch = logging.StreamHandler()
        ch.setLevel(level)
        ch.setFormatter(formatter)
        logger.addHandler(ch)

        logger.propagate = False
        AppLogger._loggers[name] = logger
        return logger
