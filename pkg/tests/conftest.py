import numpy as np
import pytest

from deflect_stats.synth import CampaignSpec, generate

# Filled by tests/test_acceptance.py: criterion id -> (passed, description)
ACCEPTANCE_RESULTS = {}

# Four reference observation rows; xi and eta are not available for them, so
# those two columns hold placeholder values.
REFERENCE_CSV = """star,night,P,T,H,rms1,img,rms2,A,z,V,xi,eta
αCas,24-Mar,1002.1,8.6,50.0,0.15,161,0.2,322.28286,60.91284,8.27,0.41,-0.12
αOri,24-Mar,1002.3,8.0,50.0,0.21,312,0.16,231.03903,48.43744,14.87,0.52,0.03
γCep,24-Mar,1002.3,7.4,50.0,0.21,263,0.23,350.05359,55.17984,3.21,0.38,-0.25
αHya,24-Mar,1002.4,7.1,50.0,0.24,523,0.19,176.01978,53.27512,14.82,0.47,0.11
"""


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def campaign():
    return generate(CampaignSpec(seed=11))


@pytest.fixture
def reference_csv():
    return REFERENCE_CSV


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, text = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {key:>2}: {text}")
