import numpy as np
import pytest

from gazekit.synth import ScenarioConfig, generate


def benchmark_scenario(seed: int) -> ScenarioConfig:
    """Frozen scenario for the cross-validated benchmark: the low end of the
    pursuit speed range overlaps the fixational drift band, and translation
    head speeds overlap pursuit speeds, so class ambiguity is genuine."""
    return ScenarioConfig(duration_s=8.0, rng_seed=seed,
                          pursuit_speed_dps=(2.0, 15.0),
                          pursuit_head_fraction=(0.0, 0.6),
                          fixation_drift_dps=(0.0, 4.0),
                          translation_head_speed_dps=(5.0, 25.0))


@pytest.fixture(scope="session")
def small_recording():
    """Short deterministic recording + exact labels shared by cheap tests."""
    return generate(ScenarioConfig(duration_s=4.0, rng_seed=7))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
