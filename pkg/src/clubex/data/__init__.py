"""Bundled JSON fixtures."""

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent


def path(name: str) -> Path:
    return DATA_DIR / name
