import os
from pathlib import Path

import pytest

from selberg_spectrum import spectrum

ROOT = Path(__file__).resolve().parent.parent
CACHE_DIR = Path(os.environ.get("SELBERG_TEST_CACHE", ROOT / ".test-cache"))

# every trace n <= 20000: enough for C(sigma) at N = 2e4 and x = T^3 with T = 400
BIG_X = 20001


def cached_table(X):
    CACHE_DIR.mkdir(parents=True, exist_ok=True)
    path = CACHE_DIR / f"spectrum-unity-{X}.csv"
    if path.exists():
        try:
            table = spectrum.read_cache(path)
            if table.X == X and not spectrum.check_table(table):
                return table
        except spectrum.CacheError:
            pass
    table = spectrum.build_table(X)
    spectrum.write_cache(table, path)
    return table


@pytest.fixture(scope="session")
def small_table():
    return spectrum.build_table(1001)


@pytest.fixture(scope="session")
def big_table():
    return cached_table(BIG_X)


def pytest_collection_modifyitems(items):
    for item in items:
        if "big_table" in getattr(item, "fixturenames", ()):
            item.add_marker(pytest.mark.slow)
