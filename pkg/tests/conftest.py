import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gwdrought.chrono_grid import MonthIndex, MonthlySeries, TimeAxis

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_series(values, start=(2000, 1), units=""):
    values = np.asarray(values, dtype=float)
    return MonthlySeries(TimeAxis(MonthIndex(*start), values.size), values, units)


@pytest.fixture(scope="session")
def scenario():
    from gwdrought.synth import build_scenario

    return build_scenario(42)


PIPELINE = ("anomaly", "optimal-period", "drought", "ndvi-prep", "attribute", "report")


def run_pipeline(config, out, *extra, commands=PIPELINE):
    """Run CLI commands in order in-process; returns the exit codes."""
    from gwdrought.cli import main

    return [main([cmd, "--config", str(config), "--out", str(out), *extra]) for cmd in commands]


def tree_bytes(root):
    """Relative path -> file bytes for every file below `root`."""
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    from gwdrought.cli import main

    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--out", str(d), "--seed", "42"]) == 0
    return d


@pytest.fixture(scope="session")
def pipeline_out(synth_dir, tmp_path_factory):
    """Full pipeline over the bundled scenario with a reduced bootstrap count."""
    out = tmp_path_factory.mktemp("results")
    codes = run_pipeline(synth_dir / "config.txt", out, "--set", "runs=100", "--set", "per_cell=true")
    assert codes == [0] * len(PIPELINE)
    return out


# one summary line per acceptance criterion, shown at the end of the run
ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail=""):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
