import numpy as np
import pytest

import rismec


@pytest.fixture(scope="session")
def default_cfg():
    return rismec.load_config("")


@pytest.fixture(scope="session")
def perfect_cfg():
    """Error-free operating point used by most dynamics tests."""
    return rismec.load_config(
        "ce_mode = perfect\nrate_backoff = 1.0\nlyapunov_v = 2e14"
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


def make_tiny_cfg(**overrides):
    """1-UE, 2-element scenario small enough for exhaustive search."""
    base = dict(num_ues=1, num_antennas=2, num_elements=2, group_size=1,
                phase_bits=1, ap_codebook_size=2, ce_codebook_size=2,
                ce_mode="perfect", rate_backoff=1.0)
    base.update(overrides)
    text = "\n".join(f"{k} = {v}" for k, v in base.items())
    return rismec.load_config(text)
