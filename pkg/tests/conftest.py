import hashlib
import re

import pytest

from labloop.gateway import Gateway, MockProvider, ProviderConfig
from labloop.gateway.mock import hashed_utility
from labloop.ideas import make_seed

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


def pytest_runtest_makereport(item, call):
    if call.when == "call" and item.get_closest_marker("acceptance"):
        outcome = "PASS" if call.excinfo is None else "FAIL"
        _ACCEPTANCE_RESULTS.append((item.name, outcome))


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_RESULTS:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in _ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"[{outcome}] {name}")

UTILITY_MARKER = re.compile(r"u=([0-9.]+)")


def marker_utility(text: str) -> float:
    """Hidden utility: an explicit u=<x> marker wins, else a stable hash."""
    match = UTILITY_MARKER.search(text)
    if match:
        return float(match.group(1))
    return hashed_utility(text)


def child_synthesizer(messages, hint):
    """Deterministic child ideas whose hidden utility derives from the prompt."""
    blob = "|".join(m.content for m in messages)
    digest = hashlib.sha256(blob.encode("utf-8")).digest()
    utility = int.from_bytes(digest[:6], "big") / 2**48
    return (
        f"Hypothesis: child u={utility:.12f}\n"
        f"Experiment outline: derived protocol\n"
        f"Prior work: derived comparison"
    )


def eis_gateway(concurrency: int = 1) -> Gateway:
    provider = MockProvider(utilities=marker_utility, synthesizer=child_synthesizer)
    return Gateway(provider, ProviderConfig(concurrency=concurrency))


def make_seeds(utilities):
    return [
        make_seed(f"seed-{i}", f"direction {i} u={u}", f"outline {i}", f"prior {i}")
        for i, u in enumerate(utilities, start=1)
    ]


@pytest.fixture
def tiny_csv_dataset(tmp_path):
    """Small two-file dataset with a shared key column."""
    root = tmp_path / "dataset"
    root.mkdir()
    (root / "sales.csv").write_text(
        "order_id,price,region,sold_at\n"
        "1,10.5,east,2024-01-01\n"
        "2,11.0,west,2024-01-02\n"
        "3,9.75,east,2024-01-03\n"
        "4,12.25,NA,2024-01-04\n"
    )
    (root / "orders.csv").write_text(
        "order_id,customer\n"
        "1,alice\n"
        "2,bob\n"
        "3,carol\n"
        "4,dave\n"
    )
    return root
