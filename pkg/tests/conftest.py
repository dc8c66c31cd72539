import numpy as np
import pytest

from skyrx.cube import InsSample, LineMeta, RadianceCube


def pytest_runtest_logreport(report):
    # one pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[{'PASS' if report.passed else 'FAIL'}] {name}", flush=True)


def make_line_meta(lines, gain=2.0, t0=1_600_000_000_000_000):
    out = []
    for i in range(lines):
        t = t0 + i * 4016
        before = InsSample(t - 1000, 35.0, -90.0, 40.0, 0.0, 0.0, 0.0)
        after = InsSample(t + 4000, 35.0, -90.0, 40.0, 0.0, 0.0, 0.0)
        out.append(LineMeta(t, gain, before, after))
    return tuple(out)


def make_radiance(values, wavelengths=None, gain=2.0):
    values = np.asarray(values, dtype=np.float32)
    if wavelengths is None:
        wavelengths = np.linspace(400.0, 1000.0, values.shape[2])
    return RadianceCube(values, wavelengths, make_line_meta(values.shape[0], gain=gain))


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
