from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def toy_faqs_path() -> Path:
    return DATA / "toy_faqs.jsonl"


@pytest.fixture(scope="session")
def toy_user_questions_path() -> Path:
    return DATA / "toy_user_questions.jsonl"


@pytest.fixture(scope="session")
def toy_topics_path() -> Path:
    return DATA / "toy_topics.jsonl"
