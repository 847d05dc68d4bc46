import numpy as np
import pytest

from pmsci import imgcore

from acceptance_log import RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def write_png(tmp_path):
    def _write(name, img):
        path = tmp_path / name
        imgcore.save_image(img, path)
        return path
    return _write
