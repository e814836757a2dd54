import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def faq_small():
    from faqkit.datasets import make_faq
    return make_faq(n_questions=60, n_topics=10, seed=3)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance_log(request):
    """Per-criterion record of ``(part, passed, detail, seconds)`` tuples."""
    return request.config.stash.setdefault(ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        parts = log[number]
        status = "PASS" if all(ok for _, ok, _, _ in parts) else "FAIL"
        detail = "; ".join(f"{name}: {'ok' if ok else 'FAILED'} ({info}, {secs:.1f}s)"
                           for name, ok, info, secs in parts)
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
