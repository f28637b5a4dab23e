from __future__ import annotations

import numpy as np

from cmdplib.tablecache import HEADER, TerminalTableCache
from trialapi import statespace


def test_cache_round_trip(table_cache):
    table = table_cache.get(6)
    assert table_cache.table_file(6).exists()
    assert table_cache.get(6) is table

    fresh = TerminalTableCache(table_cache.cache_folder, table_cache.version)
    cached = fresh.get(6)
    assert cached is not table
    np.testing.assert_array_equal(cached.pvalues, table.pvalues)
    np.testing.assert_array_equal(cached.estimates, table.estimates)


def test_version_change_clears(table_cache):
    table_cache.get(3)
    assert table_cache.table_file(3).exists()
    TerminalTableCache(table_cache.cache_folder, "2.0.0")
    assert not table_cache.table_file(3).exists()
    assert (table_cache.cache_folder / "cache_version.txt").read_text(encoding="utf-8") == "2.0.0"


def test_truncated_file_is_rebuilt(table_cache):
    table = table_cache.get(4)
    path = table_cache.table_file(4)
    path.write_bytes(path.read_bytes()[:-8])
    rebuilt = TerminalTableCache(table_cache.cache_folder, table_cache.version).get(4)
    np.testing.assert_array_equal(rebuilt.pvalues, table.pvalues)
    assert path.stat().st_size == HEADER.size + 2 * 8 * statespace.stage_size(4)
