from __future__ import annotations

import json
import os

import pytest

from graphqa.backend import EmbeddedBackend
from tests.fixtures import fictional_graph, ifc_graph

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)


@pytest.fixture()
def fictional():
    return fictional_graph()


@pytest.fixture()
def fictional_backend():
    return EmbeddedBackend(fictional_graph())


@pytest.fixture()
def ifc():
    return ifc_graph()


@pytest.fixture()
def ifc_backend():
    return EmbeddedBackend(ifc_graph())


@pytest.fixture()
def write_json(tmp_path):
    def _write(name: str, payload) -> str:
        path = tmp_path / name
        path.write_text(json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8")
        return str(path)

    return _write
