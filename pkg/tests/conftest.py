from __future__ import annotations

import pytest

from qiitc import bundled
from qiitc.model import build_model


@pytest.fixture(scope="session")
def sigs():
    return {name: bundled.signature(name) for name in bundled.SIGNATURES}


@pytest.fixture(scope="session")
def models(sigs):
    return {
        "interval": build_model(sigs["interval"], 1),
        "nat": build_model(sigs["nat"], 4),
        "trees2": build_model(sigs["trees2"], 2),
        "con_ty": build_model(sigs["con_ty"], 3),
    }
