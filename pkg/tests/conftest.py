import pytest

from putwriter.market_data import SynthSpec, synthesize_market


@pytest.fixture(scope="session")
def trending_market():
    """Two trading months with realized vol below implied (premium-rich)."""
    spec = SynthSpec(n_days=42, sigma=0.18, drift=0.04, implied_sigma=0.22,
                     s0=4000.0)
    return synthesize_market(spec, seed=7)


@pytest.fixture(scope="session")
def flat_market():
    """Deterministic flat index; options still quote positive premium."""
    spec = SynthSpec(n_days=30, sigma=0.0, drift=0.0, implied_sigma=0.2,
                     s0=4000.0)
    return synthesize_market(spec, seed=1)
