"""The two fixed prompt texts are byte-pinned against the fixture files."""

import hashlib

from aor.prompts import INDEXING_SUB_PROMPT, INFO_SUMMARY

from conftest import FIXTURES

# frozen once; any drift in the prompt bytes is a contract break
INFO_SHA256 = "1d9878eeffe93a4045056a5f51488b5b8d6eda50315e6c355a5efdab56b2e447"
INDEX_SHA256 = "81657500f1a5ef6a8dcb9af5efcacbad0829ea41565445cff29693bc9b02b8c7"


def test_info_prompt_matches_fixture_bytes():
    pinned = (FIXTURES / "prompts" / "info_summary.txt").read_bytes()
    assert INFO_SUMMARY.render().encode("utf-8") == pinned


def test_indexing_prompt_matches_fixture_bytes():
    pinned = (FIXTURES / "prompts" / "indexing_subprompt.txt").read_bytes()
    assert INDEXING_SUB_PROMPT.render().encode("utf-8") == pinned


def test_fixture_hashes_frozen():
    info = (FIXTURES / "prompts" / "info_summary.txt").read_bytes()
    index = (FIXTURES / "prompts" / "indexing_subprompt.txt").read_bytes()
    assert (len(info), hashlib.sha256(info).hexdigest()) == (553, INFO_SHA256)
    assert (len(index), hashlib.sha256(index).hexdigest()) == (148, INDEX_SHA256)


def test_info_prompt_shape():
    text = INFO_SUMMARY.render()
    assert text.endswith("Limit to 30 words.")
    assert not text.endswith("\n")
    assert text.count("*") >= 3  # the bullet separators the parser relies on


def test_indexing_prompt_shape():
    text = INDEXING_SUB_PROMPT.render()
    assert text.startswith("Considering that the items are ordered from left to right")
    assert text.endswith("written as numbers.")
    assert "index 0" in text
