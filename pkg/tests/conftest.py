import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from contactlab import EvalContext, catalog_get


@pytest.fixture(scope="session")
def ctx_t3():
    return EvalContext(catalog_get("t3-flat").spec)


@pytest.fixture(scope="session")
def ctx_h3():
    return EvalContext(catalog_get("h3-upper-half").spec)


@pytest.fixture(scope="session")
def ctx_h3_curl():
    return EvalContext(catalog_get("h3-curl").spec)


@pytest.fixture(scope="session")
def ctx_rxh2():
    return EvalContext(catalog_get("r-x-h2").spec)


@pytest.fixture(scope="session")
def ctx_bessel():
    return EvalContext(catalog_get("r3-bessel-ot").spec)


@pytest.fixture(scope="session")
def ctx_s3():
    return EvalContext(catalog_get("s3-round").spec)


@pytest.fixture(scope="session")
def ctx_sasakian():
    return EvalContext(catalog_get("r3-sasakian").spec)


@pytest.fixture(scope="session")
def ctx_darboux():
    return EvalContext(catalog_get("r3-flat-darboux").spec)
