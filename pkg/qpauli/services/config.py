import configparser
import logging
import os

logger = logging.getLogger("qpauli.config")

SECTION = "qpauli"
ENV_OUTPUT_DIR = "QPAULI_OUTPUT_DIR"


class ConfigService:
    """
    Run settings, lowest precedence first: config file, environment, CLI flags.
    """

    def __init__(
        self,
        output_dir: str | None = None,
        workers: int | None = None,
        log_level: str | None = None,
        path: str | None = None,
    ):
        cfg = configparser.ConfigParser()

        # 1) explicit --config, 2) ./qpauli.conf, 3) ~/.config/qpauli/qpauli.conf
        local_path = os.path.join(os.getcwd(), "qpauli.conf")
        user_path = os.path.expanduser("~/.config/qpauli/qpauli.conf")
        self.source = None
        if path and not os.path.exists(path):
            raise FileNotFoundError(f"config file {path} not found")
        for candidate in (path, local_path, user_path):
            if candidate and os.path.exists(candidate):
                cfg.read(candidate)
                self.source = candidate
                logger.info("using configuration %s", candidate)
                break

        # a scenario may still redirect output unless the flag was given
        self.output_dir_from_flag = output_dir is not None
        file_dir = cfg.get(SECTION, "output_dir", fallback=None)
        self.output_dir = output_dir or os.environ.get(ENV_OUTPUT_DIR) or file_dir or "."
        try:
            self.workers = int(workers if workers is not None else cfg.get(SECTION, "workers", fallback="4"))
        except ValueError:
            raise ValueError(f"[{SECTION}] workers must be an integer") from None
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        self.log_level = (log_level or cfg.get(SECTION, "log_level", fallback="WARNING")).upper()
