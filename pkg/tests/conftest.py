import numpy as np
import pytest


def disk_image(size=128, radius=30.0, fg=200.0, bg=50.0, noise=0.0, seed=0, center=None):
    """Bright disk on a flat background plus its analytic mask."""
    cy, cx = center if center is not None else ((size - 1) / 2.0, (size - 1) / 2.0)
    y, x = np.mgrid[0:size, 0:size]
    gold = (x - cx) ** 2 + (y - cy) ** 2 <= radius**2
    img = np.where(gold, fg, bg).astype(np.float64)
    if noise:
        img = np.clip(img + np.random.default_rng(seed).normal(0, noise, img.shape), 0, 255)
    return img, gold


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    CRITERIA[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
