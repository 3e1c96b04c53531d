import numpy as np
import pytest

from sarratio.simulate import Scene, SpeckleParams, gamma_speckle, simulate_scene


@pytest.fixture(scope="session")
def blocks200():
    """Blocks phantom 200x200 with single-look speckle, seed 3."""
    return simulate_scene(Scene("blocks_points", 200, {}, 1.0, 3))


@pytest.fixture(scope="session")
def blocks500():
    return simulate_scene(Scene("blocks_points", 500, {}, 1.0, 0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def speckle(side, looks, seed):
    return gamma_speckle(side, side, SpeckleParams(looks, seed))


# ------------------------------------------------ acceptance summary lines

ACCEPTANCE: dict[int, tuple[bool, str, str]] = {}
ACCEPTANCE_TITLES = {
    1: "speckle statistics",
    2: "blocks phantom ROI statistics",
    3: "ideal-filter null and minimum M",
    4: "oversmoothing ordering on strips",
    5: "oversmoothing variance inflation",
    6: "GLCM and homogeneity exactness",
    7: "permutation-null calibration",
    8: "first-order residual arithmetic",
    9: "reference metrics",
    10: "tuner oracle and thread determinism",
    11: "CLI replay reproducibility",
    12: "additive-mode null",
}


def record(n: int, ok: bool, detail: str = "") -> None:
    line = f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {ACCEPTANCE_TITLES[n]}: {detail}"
    ACCEPTANCE[n] = (ok, ACCEPTANCE_TITLES[n], detail)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in ACCEPTANCE_TITLES.items():
        if n in ACCEPTANCE:
            ok, _, detail = ACCEPTANCE[n]
            terminalreporter.write_line(f"{n:2d}. {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        else:
            terminalreporter.write_line(f"{n:2d}. FAIL  {title}: not run or errored")
