import os
import sys

import pytest

# permite correr pytest sin instalar el paquete
SRC = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")
if SRC not in sys.path:
    sys.path.insert(0, SRC)

from asep_hydro.model.core import ModelParams, RateSchedule  # noqa: E402


@pytest.fixture
def params_chico():
    """n chico con kappa' valido; sirve para tests de estado y corriente."""
    return ModelParams(n=8, p=1.0, sigma=1.0, kappa=0.75, theta=0.0, kappa_prime=0.6)


@pytest.fixture
def schedule_uno():
    return RateSchedule.constante(1.0, 1.0, 1.0, 1.0)
