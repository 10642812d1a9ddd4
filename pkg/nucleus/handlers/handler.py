import os
import tempfile
from abc import ABC, abstractmethod
from typing import Callable, Iterable, Optional, Sequence

from loguru import logger

from nucleus.utils import json_dumps, json_reader


class BaseHandler(ABC):
    @abstractmethod
    def get(self):
        pass

    @abstractmethod
    def put(self):
        pass


def format_csv(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    """Comma-separated text with every value in fixed-width scientific notation."""
    lines = [",".join(header)]
    lines.extend(",".join(f"{value:+.12e}" for value in row) for row in rows)
    return "\n".join(lines) + "\n"


class FileHandler(BaseHandler):
    """Stores run artifacts as files under one output directory.

    Every write lands in a temporary file first and is moved into place, so a reader
    never sees a partial artifact.
    """

    def __init__(self, out_dir: str):
        self.out_dir = os.path.expanduser(out_dir)

    def path(self, filename: str) -> str:
        return os.path.join(self.out_dir, filename)

    def put(self, content: str, filename: str) -> str:
        """Write text content (UTF-8, LF endings) to out_dir/filename.

        Args:
            content (str): The content to be written into the file.
            filename (str): Name of the file relative to the output directory.

        Returns:
            str: The path written.
        """
        os.makedirs(self.out_dir, exist_ok=True)
        target = self.path(filename)
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{filename}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                f.write(content)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.remove(tmp)
            raise
        logger.debug(f"wrote {target}")
        return target

    def put_json(self, data, filename: str) -> str:
        return self.put(json_dumps(data), filename)

    def put_csv(self, header: Sequence[str], rows: Iterable[Sequence[float]], filename: str) -> str:
        return self.put(format_csv(header, rows), filename)

    def get(self, filename: str, reader: Callable = json_reader) -> Optional[object]:
        """Read an artifact back.

        Args:
            filename (str): Name of the file relative to the output directory.
            reader (Callable, optional): Function that reads the stored datatype.
                Defaults to json_reader.

        Returns:
            content: The file's content, or None if it does not exist.
        """
        filepath = self.path(filename)
        if not os.path.exists(filepath):
            logger.error(f"File '{filepath}' not found.")
            return None
        return reader(filepath)
