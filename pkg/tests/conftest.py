import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fcp.network import SIGMOID, Layer, Network

# Small 2-3-2 sigmoid network used across golden tests. The expected
# activations and compositions for the input [0.5, 0.8] are frozen in the
# tests that use it.
REF_W1 = [[-0.01, 0.3, 0.8], [0.4, -0.1, 0.6]]
REF_W2 = [[0.7, -0.5], [-0.2, 0.1], [0.3, 0.4]]
REF_X = [0.5, 0.8]


@pytest.fixture
def net232():
    return Network(
        2,
        (
            Layer(REF_W1, np.zeros(3), SIGMOID),
            Layer(REF_W2, np.zeros(2), SIGMOID),
        ),
    )


@pytest.fixture
def data_dir():
    return Path(__file__).parent.parent / "data"
