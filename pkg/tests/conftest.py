import numpy as np
import pytest

from mmder.synthetic import gen_synthetic

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = getattr(item, "criterion_detail", "")
    _CRITERIA.setdefault(number, []).append((title, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        results = _CRITERIA[number]
        ok = all(passed for _, passed, _ in results)
        title = results[0][0]
        details = "; ".join(d for _, _, d in results if d)
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{details}]" if details else ""))


@pytest.fixture
def detail(request):
    """Attach a one-line measurement to the acceptance summary."""

    def record(text):
        request.node.criterion_detail = text

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def redundant_corpus(tmp_path_factory):
    """64 clips, 4 classes, tone and motion both identify the class."""
    root = tmp_path_factory.mktemp("redundant")
    gen_synthetic(root, classes=4, clips_per_class=16, seed=0, cue="redundant")
    return root


@pytest.fixture(scope="session")
def complementary_corpus(tmp_path_factory):
    """64 clips, 4 classes, tone and motion each carry half of the label."""
    root = tmp_path_factory.mktemp("complementary")
    gen_synthetic(root, classes=4, clips_per_class=16, seed=0, cue="complementary")
    return root


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """8 short clips over 4 subjects for quick end-to-end plumbing tests."""
    root = tmp_path_factory.mktemp("tiny")
    gen_synthetic(root, classes=2, clips_per_class=4, seed=1, subjects=4, n_frames=96, frame_size=32)
    return root
