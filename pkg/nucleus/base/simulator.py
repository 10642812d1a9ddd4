import argparse
import sys
from abc import ABC, abstractmethod
from typing import Optional

from loguru import logger

from nucleus.base.config import Config, add_args, check_config, config_from_args
from nucleus.handlers.handler import FileHandler


def _drop_default_sink():
    # loguru starts with a DEBUG-level stderr handler under id 0.
    try:
        logger.remove(0)
    except ValueError:
        pass


class BaseSimulator(ABC):
    """
    Base class for the command-line tools. It resolves the configuration, sets up logging and the
    output handler, and leaves the actual work to `run`, which returns the process exit code.
    """

    name: str = "simulator"

    @classmethod
    def check_config(cls, config: Config, out_dir: str, save_events: bool = False) -> Optional[int]:
        return check_config(cls, config, out_dir, save_events)

    @classmethod
    def add_args(cls, parser: argparse.ArgumentParser):
        add_args(cls, parser)

    @classmethod
    def config(cls, args: argparse.Namespace) -> Config:
        return config_from_args(args)

    def __init__(self, args: argparse.Namespace, config: Optional[Config] = None):
        self.args = args
        self.config = config or self.config(args)
        self.out_dir = args.out

        debug = getattr(args, "logging.debug", False)
        _drop_default_sink()
        self._stderr_sink = logger.add(sys.stderr, level="DEBUG" if debug else "INFO")
        self._events_sink = self.check_config(
            self.config, self.out_dir, getattr(args, "logging.save_events", False)
        )

        self.sys = self.config.spin_system()
        self.settings = self.config.run_settings()
        self.mode = self.config.experiment.mode
        self.handler = FileHandler(self.out_dir)

        logger.debug(f"{self.name} config: {self.config.model_dump()}")

    @abstractmethod
    def run(self) -> int:
        ...

    def close(self):
        for sink in (self._stderr_sink, self._events_sink):
            if sink is not None:
                logger.remove(sink)

    def __call__(self) -> int:
        try:
            return self.run()
        finally:
            self.close()
