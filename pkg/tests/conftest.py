import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import make_cnnlf_tensors, make_intra_tensors  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240701)


@pytest.fixture
def zero_tail_cnnlf():
    """Random-body loop-filter weights whose tail is zero (identity filter)."""
    r = np.random.default_rng(11)
    return {
        **make_cnnlf_tensors("luma", rng=r, zero_tail=True),
        **make_cnnlf_tensors("chroma", rng=r, zero_tail=True),
    }


@pytest.fixture
def active_cnnlf():
    """Loop-filter weights with a small non-zero tail (not an identity)."""
    r = np.random.default_rng(12)
    return {
        **make_cnnlf_tensors("luma", rng=r, zero_tail=False),
        **make_cnnlf_tensors("chroma", rng=r, zero_tail=False),
    }


@pytest.fixture
def intra_16x16_tensors():
    r = np.random.default_rng(13)
    return make_intra_tensors(16, 16, 37, rng=r)
