import numpy as np
import pytest

from eulersparse.graph import DirectedMultigraph, generate_random_eulerian


@pytest.fixture
def triangle():
    return DirectedMultigraph.from_edges(3, [(0, 1, 1), (1, 2, 1), (2, 0, 1)])


@pytest.fixture
def two_cycle():
    return DirectedMultigraph.from_edges(2, [(0, 1, 1), (1, 0, 1)])


@pytest.fixture
def medium_graph():
    return generate_random_eulerian(40, 300, max_len=6, max_weight_exp=2, seed=11, ensure_connected=True)


def random_graphs(count, n_range=(8, 30), k_range=(5, 60), max_weight_exp=2, seed=0, connected=True):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(*n_range))
        k = int(rng.integers(*k_range))
        if connected:
            k = max(k, n)
        yield generate_random_eulerian(
            n, k, max_len=min(6, n), max_weight_exp=max_weight_exp, seed=int(rng.integers(2**31)),
            ensure_connected=connected,
        )


# -- acceptance reporting ----------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report(capsys):
    """Record one ``CRITERION k: PASS|FAIL`` line; echoed live and in the terminal summary."""

    def report(number: int, passed: bool, detail: str) -> None:
        line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print(f"\n{line}")

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
