import random

import pytest

from tsshunt.classify.naive_bayes import featurize, fit
from tsshunt.synthetic import BENIGN_TOPICS, THEMES, benign_page, toll_free_number, tss_page
from tsshunt.text import Tokenizer, visible_text


def _page_model(seed=0, n=120):
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        rows.append((f"t{i}", tss_page(rng, rng.choice(list(THEMES)), toll_free_number(rng), rng.random() < 0.5), "TSS"))
        rows.append((f"b{i}", benign_page(rng, rng.choice(list(BENIGN_TOPICS)), with_phone=i % 2 == 0), "NonTSS"))
    tok = Tokenizer()
    return fit([(featurize(visible_text(h), tok, d), c) for d, h, c in rows])


@pytest.fixture(scope="session")
def page_model():
    """Classifier trained on synthetic scam and benign pages."""
    return _page_model()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
