import json
from pathlib import Path

import pytest

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
TRANSCRIPTS = FIXTURES / "transcripts"
SCRIPTS = FIXTURES / "scripts"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def transcripts_dir():
    return TRANSCRIPTS


@pytest.fixture
def scripts_dir():
    return SCRIPTS


def write_transcript(path, responses):
    """Build a replay fixture file from (text, prompt_toks, completion_toks, latency) tuples."""
    records = [{"request_digest": "", "response_text": text,
                "prompt_tokens": pt, "completion_tokens": ct, "latency_s": lat}
               for text, pt, ct, lat in responses]
    Path(path).write_text(json.dumps(records))
    return path
