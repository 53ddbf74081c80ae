import json
from pathlib import Path

import pytest

from parksent.config import bundled

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def mini_paths():
    return {k: bundled(f) for k, f in (("reviews", "reviews.jsonl"), ("pois", "pois.csv"),
                                      ("regions", "regions.csv"), ("covariates", "covariates.csv"))}


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_jsonl(path, records):
    return write_lines(path, [json.dumps(r) for r in records])


PLANTED_SWEEP_SEED = 314159


def planted_noise_sweep(seed=PLANTED_SWEEP_SEED):
    """CBGs with many sentences track a factor; CBGs with 1-3 sentences are pure noise.

    Returns ``(scored, assignments, covariates)`` for ``sensitivity_sweep``.
    """
    import numpy as np

    from parksent.classify import AttitudeLabel
    from parksent.corpus import RegionAssignment
    from parksent.sentiment import ScoredSentence

    rng = np.random.default_rng(seed)
    scored, assignments, covariates = [], {}, {}
    for g in range(60):
        cbg = f"G{g:03d}"
        poi = f"P{g:03d}"
        assignments[poi] = RegionAssignment(poi, cbg, f"C{g % 4}", bool(g % 2))
        x = float(rng.uniform(-1, 1))
        covariates[cbg] = {"signal": x}
        if g < 30:
            n, p_pos = 25, 0.5 + 0.45 * x
        else:
            n, p_pos = int(rng.integers(1, 4)), 0.5
        for i in range(n):
            pos = rng.random() < p_pos
            scored.append(ScoredSentence(poi, f"{poi}:{i}", AttitudeLabel.POSITIVE if pos else
                                         AttitudeLabel.NEGATIVE, 1.0 if pos else -1.0))
    return scored, assignments, covariates


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, in criterion order."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call" or "test_acceptance.py::" not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in sorted(lines):
        number, _, label = name[len("test_criterion_"):].partition("_")
        terminalreporter.write_line(f"{status}  criterion {int(number):>2}  {label.replace('_', ' ')}")
