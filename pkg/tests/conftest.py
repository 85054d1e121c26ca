import time

import numpy as np
import pytest

from twophoton.cli import main
from twophoton.geometry import reference_paper_config
from twophoton.output import read_csv
from twophoton.scan import CorrelationCurve, Engine


@pytest.fixture(scope="session")
def figures(tmp_path_factory):
    """Full-size (n = 2e5) reproduce-figures run, shared by every test that needs MC curves."""
    out = tmp_path_factory.mktemp("figures")
    started = time.perf_counter()
    code = main(["--workers", "2", "reproduce-figures", str(out)])
    assert code == 0
    return {"dir": out, "wall_time": time.perf_counter() - started}


def curve_from_csv(path, mode, polarization):
    data = read_csv(path)
    cfg = reference_paper_config(polarization=polarization)
    return CorrelationCurve(
        data["x_m"], data["g2_normalized"], data["stderr"], Engine.MONTE_CARLO, mode, polarization,
        cfg, n_realizations=int(data["n_realizations"][0]),
        partner=-data["x_m"] if mode == "opposite" else np.zeros_like(data["x_m"]),
    )


@pytest.fixture(scope="session")
def figure_curves(figures):
    scans = {
        "fig3a": ("fixed_d2", "parallel"),
        "fig3b": ("opposite", "parallel"),
        "fig4a": ("fixed_d2", "orthogonal"),
        "fig4b": ("opposite", "orthogonal"),
    }
    return {name: curve_from_csv(figures["dir"] / f"{name}.csv", *args) for name, args in scans.items()}


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label, passed, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
