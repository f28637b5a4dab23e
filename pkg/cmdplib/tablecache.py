"""On-disk cache of terminal tables

Fisher p-values and effect estimates depend on the horizon only, and at n = 200 take longer to build than
to read back. One file per horizon:

    header   <4sIQ          magic b"TTBL", cache format version, n
    payload  float64[2, m]  p-values then estimates over the terminal stage
"""

from __future__ import annotations

import logging
import os
import pathlib
import struct

import numpy as np

from trialapi import statespace
from trialapi.terminal import TerminalTable

logger = logging.getLogger(__name__)

MAGIC = b"TTBL"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIQ")


class TerminalTableCache:
    def __init__(self, cache_folder: pathlib.Path, version: str) -> None:
        self.cache_folder = cache_folder
        self.version_file = cache_folder / "cache_version.txt"
        self.version = version
        self._tables: dict[int, TerminalTable] = {}

        # verify that cache is from same version as this one
        data = ""
        try:
            data = self.version_file.read_text(encoding="utf-8")
        except Exception:
            pass
        if data != version:
            self.clear_cache()
            self.create_cache()

    def table_file(self, n: int) -> pathlib.Path:
        return self.cache_folder / f"terminal_n{n}.bin"

    def clear_cache(self) -> None:
        self._tables.clear()
        for path in self.cache_folder.glob("terminal_n*.bin"):
            try:
                os.unlink(path)
            except Exception:
                pass
        try:
            os.unlink(self.version_file)
        except Exception:
            pass

    def create_cache(self) -> None:
        self.cache_folder.mkdir(parents=True, exist_ok=True)
        self.version_file.write_text(self.version, encoding="utf-8")

    def _read(self, n: int) -> TerminalTable | None:
        path = self.table_file(n)
        try:
            data = path.read_bytes()
        except OSError:
            return None
        size = statespace.stage_size(n)
        if len(data) != HEADER.size + 16 * size:
            logger.info("ignoring truncated terminal table %s", path)
            return None
        magic, version, stored_n = HEADER.unpack_from(data)
        if magic != MAGIC or version != FORMAT_VERSION or stored_n != n:
            logger.info("ignoring stale terminal table %s", path)
            return None
        payload = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(np.float64).reshape(2, size)
        return TerminalTable(n, payload[0].copy(), payload[1].copy())

    def _write(self, table: TerminalTable) -> None:
        path = self.table_file(table.n)
        try:
            self.cache_folder.mkdir(parents=True, exist_ok=True)
            with open(path, "wb") as f:
                f.write(HEADER.pack(MAGIC, FORMAT_VERSION, table.n))
                f.write(table.pvalues.astype("<f8").tobytes())
                f.write(table.estimates.astype("<f8").tobytes())
        except OSError:
            logger.exception("failed to cache terminal table for n=%d", table.n)

    def get(self, n: int) -> TerminalTable:
        if n not in self._tables:
            table = self._read(n)
            if table is None:
                table = TerminalTable.build(n)
                self._write(table)
            else:
                logger.debug("loaded terminal table for n=%d from cache", n)
            self._tables[n] = table
        return self._tables[n]
