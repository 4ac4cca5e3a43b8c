"""Fixed prompt texts sent to the MLLM.

Both templates are pinned byte-for-byte by fixture files under
``fixtures/prompts/`` and a test guards the equality; edit the fixture and
this module together or not at all.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    template: str

    def render(self, **placeholders: str) -> str:
        return self.template.format(**placeholders) if placeholders else self.template


INFO_SUMMARY = PromptTemplate(
    name="info_summary",
    template=(
        "Provide the information from the following list that makes sense for this object. "
        "Fill in the missing “…” using info from the Internet. "
        "Exclude the one that are irrelevant. "
        "Divide the relevant ones with a “*”. "
        "* Price: … (give price+vendor+score/ rating) "
        "* Cheaper alternatives: name - price "
        "* Main ingredients: … (top 2) "
        "* Calories: … "
        "* Allergens: … "
        "* Instructions: … (short) "
        "* Care: …(if fashion/tool/plant). "
        "Use extremely short answers and exclude answers that are ‘None’ or ‘n/a’ or ‘irrelevant’. "
        "Limit to 30 words."
    ),
)

INDEXING_SUB_PROMPT = PromptTemplate(
    name="indexing_subprompt",
    template=(
        "Considering that the items are ordered from left to right with the first object "
        "being index 0, tell me ONLY the correct indices, written as numbers."
    ),
)
