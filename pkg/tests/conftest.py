from __future__ import annotations

import pathlib

import pytest

import cmdplib.ctversion
import cmdplib.trialsettings
from cmdplib.tablecache import TerminalTableCache
from testing import designs
from trialapi import statespace
from trialapi.terminal import TerminalTable


@pytest.fixture
def mock_version(monkeypatch):
    version = "1.0.0"
    monkeypatch.setattr(cmdplib.ctversion, "version", version)
    yield version


@pytest.fixture
def config(tmp_path):
    from cmdplib.main import App

    app = App()
    app.register_settings()

    defaults = app.parse_settings(cmdplib.trialsettings.TrialPaths(tmp_path / "config"), "selftest")
    defaults[0].Runtime_Options__settings_dir.user_config_dir.mkdir(parents=True, exist_ok=True)
    defaults[0].Runtime_Options__settings_dir.user_cache_dir.mkdir(parents=True, exist_ok=True)
    defaults[0].Runtime_Options__settings_dir.user_log_dir.mkdir(parents=True, exist_ok=True)
    defaults[0].Runtime_Options__out = tmp_path / "results"
    defaults[0].Evaluation__threads = 1
    yield defaults


@pytest.fixture
def table_cache(config, mock_version):
    yield TerminalTableCache(config[0].Runtime_Options__settings_dir.user_cache_dir / "terminal", mock_version)


@pytest.fixture(params=[1, 2, 3, 4])
def small_n(request) -> int:
    return request.param


@pytest.fixture
def indexer4() -> statespace.StateIndexer:
    return statespace.indexer(4)


@pytest.fixture
def table6() -> TerminalTable:
    return TerminalTable.build(6)


def _write(tmp_path: pathlib.Path, name: str, text: str) -> pathlib.Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def er_config_file(tmp_path) -> pathlib.Path:
    return _write(tmp_path, "er.yaml", designs.er_config)


@pytest.fixture
def robust_config_file(tmp_path) -> pathlib.Path:
    return _write(tmp_path, "robust.yaml", designs.robust_config)
