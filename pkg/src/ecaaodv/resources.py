"""Access to files shipped in ``ecaaodv/data``."""

from __future__ import annotations

from importlib import resources


def data_path(name: str):
    return resources.files("ecaaodv.data").joinpath(name)


def read_data(name: str) -> str:
    return data_path(name).read_text(encoding="utf-8")
