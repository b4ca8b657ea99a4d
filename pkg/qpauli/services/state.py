import json
import logging
import os
from contextlib import contextmanager

logger = logging.getLogger("qpauli.state")


class StateService:
    """
    Owns the output directory. Files are written as <name>.partial and renamed
    when the writer finishes; a failed run leaves the .partial file behind.
    state.json summarizes the run with sorted keys and no timestamps.
    """

    def __init__(self, cfg):
        self.dir = os.path.abspath(cfg.output_dir)
        self.path = os.path.join(self.dir, "state.json")
        self.data: dict = {}
        self.written: list[str] = []

    @contextmanager
    def open(self, name: str):
        os.makedirs(self.dir, exist_ok=True)
        final = os.path.join(self.dir, name)
        partial = final + ".partial"
        with open(partial, "w", newline="") as fh:
            yield fh
        os.replace(partial, final)
        self.written.append(name)
        logger.info("wrote %s", final)

    def use_dir(self, path: str):
        self.dir = os.path.abspath(path)
        self.path = os.path.join(self.dir, "state.json")

    def record(self, key: str, value):
        self.data[key] = value

    def save(self):
        os.makedirs(self.dir, exist_ok=True)
        summary = dict(self.data, outputs=sorted(self.written))
        with open(self.path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")


def _jsonable(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "value"):
        return value.value
    return str(value)
