"""Pass/fail bookkeeping for the acceptance criteria, printed at the end of the run."""

import time
from contextlib import contextmanager

RESULTS: list[str] = []


@contextmanager
def criterion(number: int, title: str, budget_s: float):
    start = time.perf_counter()
    notes: list[str] = []
    try:
        yield notes
        elapsed = time.perf_counter() - start
        assert elapsed < budget_s, f"took {elapsed:.1f}s, budget {budget_s:g}s"
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        RESULTS.append(f"FAIL  [{number:2d}] {title} ({elapsed:.2f}s): {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}")
        raise
    extra = f" -- {'; '.join(notes)}" if notes else ""
    RESULTS.append(f"PASS  [{number:2d}] {title} ({elapsed:.2f}s){extra}")
