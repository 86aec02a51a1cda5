import random
from importlib import resources

import pytest

WORDS = (
    "the a model data learning system context token phrase sentence large small new "
    "language paper results method we propose show that is are was to of in on for "
    "with by and or but information content filter compress score value high low "
    "Smith London GPT ChatGPT 2023 3.5 fast quickly running trained evaluate datasets"
).split()


def random_document(rng: random.Random, n_words: int) -> str:
    out, since_stop = [], 0
    for i in range(n_words):
        word = rng.choice(WORDS)
        if since_stop == 0:
            word = word[:1].upper() + word[1:]
        out.append(word)
        since_stop += 1
        if i == n_words - 1:
            out[-1] += "."
        elif since_stop > 3 and rng.random() < 0.12:
            out[-1] += rng.choice([".", ".", ".", "?", "!"])
            since_stop = 0
        elif rng.random() < 0.05:
            out[-1] += ","
    return " ".join(out)


@pytest.fixture
def sample_text() -> str:
    return resources.files("ctxpress.data").joinpath("sample_paragraph.txt").read_text(encoding="utf-8").strip()


@pytest.fixture
def make_document():
    return random_document


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, label = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number}: {label}")
