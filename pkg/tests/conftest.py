"""Shared helpers for the test suite."""

from pathlib import Path

import pytest

MODELS_DIR = Path(__file__).resolve().parent.parent / "models"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS_DIR


def refines(fine, coarse) -> bool:
    """True when every cell of `fine` lies inside a single cell of `coarse`."""
    lookup = {}
    for i, cell in enumerate(coarse):
        for x in cell:
            lookup[x] = i
    return all(len({lookup[x] for x in cell}) == 1 for cell in fine)


def sorted_cells(partition):
    return tuple(sorted(tuple(sorted(c)) for c in partition))
