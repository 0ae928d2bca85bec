import numpy as np
import pytest

from prbm.model import PRBM, ModelShape


def random_model(seed, n=2, m=2, p=1, alpha=0.5, scale=1.0, bias_scale=None):
    """Seeded model with every block drawn from N(0, scale**2)."""
    rng = np.random.default_rng(seed)
    L = p + 1
    bias_scale = scale if bias_scale is None else bias_scale
    return PRBM(
        ModelShape(n, m, p, alpha),
        rng.normal(0, scale, (L, L, n, m)),
        rng.normal(0, bias_scale, (L, n)),
        rng.normal(0, bias_scale, (L, m)),
    )


def random_units(rng, lags, width, batch=()):
    return rng.integers(0, 2, size=(*batch, lags, width)).astype(float)


def loop_energy(model, v, h):
    """Plain double sum over lag pairs, no block assembly."""
    s = model.shape
    total = 0.0
    for i in range(s.p + 1):
        for j in range(s.p + 1):
            a = s.alpha ** abs(i - j) if i != j else 1.0
            for x in range(s.n):
                for y in range(s.m):
                    total -= a * v[i][x] * model.vh[i, j, x, y] * h[j][y]
    for i in range(s.p + 1):
        for x in range(s.n):
            total -= v[i][x] * model.vbias[i, x]
    for j in range(s.p + 1):
        for y in range(s.m):
            total -= h[j][y] * model.hbias[j, y]
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def dyadic_model(seed, n, m, p, alpha=0.5):
    """Weights on a 2**-10 grid in [-8, 8]: every partial sum is exact in float64."""
    rng = np.random.default_rng(seed)
    L = p + 1
    draw = lambda shape: rng.integers(-8 * 1024, 8 * 1024, size=shape) / 1024.0
    return PRBM(ModelShape(n, m, p, alpha), draw((L, L, n, m)), draw((L, n)), draw((L, m)))


# acceptance results, printed once at the end of the run
ACCEPTANCE: dict[int, str] = {}


def record_acceptance(number: int, ok: bool, title: str, detail: str, seconds: float) -> str:
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail} ({seconds:.2f}s)"
    ACCEPTANCE[number] = line
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
