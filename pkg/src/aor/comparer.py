"""Multi-object queries: stitch crops, query, and resolve "which" questions.

The comparer runs one job at a time on a fresh conversation.  Crops are
concatenated left-to-right in on-screen order (index 0 = leftmost), so the
model's index answers map straight back onto proxies.  A "which" question
triggers a second query that appends the fixed indexing sub-prompt and
parses bare indices out of the reply.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .anchoring import ObjectProxy
from .errors import AorError, IndexParseError, IndexRangeError, ValidationError
from .mllm import ImageAttachment, MllmClient, MllmRequest
from .prompts import INDEXING_SUB_PROMPT
from .scene import CropImage, Rect

SEPARATOR_PX = 8

_WHICH = re.compile(r"\bwhich\b", re.IGNORECASE)
# integer tokens; a decimal like "2.5" is one token and gets skipped
_NUMBER = re.compile(r"-?\d+(?:\.\d+)?")


def stitch(crops: Sequence[CropImage]) -> CropImage:
    """Concatenate crops horizontally with black separators.

    Output height is the tallest input; shorter crops are bottom-padded with
    black.  Width is the sum of widths plus an 8 px separator between
    neighbors; the visible boundary helps the model keep items apart.
    """
    if len(crops) < 2:
        raise ValidationError(f"stitch needs at least 2 crops, got {len(crops)}")
    height = max(c.height for c in crops)
    width = sum(c.width for c in crops) + SEPARATOR_PX * (len(crops) - 1)
    canvas = np.zeros((height, width, 3), dtype=np.uint8)
    x = 0
    for i, c in enumerate(crops):
        if i > 0:
            x += SEPARATOR_PX
        canvas[0 : c.height, x : x + c.width] = c.pixels
        x += c.width
    return CropImage(frame_index=crops[0].frame_index, bbox=Rect(0, 0, width, height), pixels=canvas)


def is_which_question(prompt: str) -> bool:
    """True iff "which" appears as a standalone word, case-insensitive."""
    if not prompt:
        raise ValidationError("prompt must be non-empty")
    return _WHICH.search(prompt) is not None


def extract_indices(reply: str, n: int) -> list[int]:
    """All integer tokens in the reply, deduplicated and sorted.

    Models decorate their answers, so every bare integer counts; decimals are
    skipped.  Any token outside [0, n) aborts with no partial result.
    """
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    values: set[int] = set()
    for m in _NUMBER.finditer(reply):
        token = m.group()
        if "." in token:
            continue
        value = int(token)
        if value < 0 or value >= n:
            raise IndexRangeError(f"index {value} outside [0, {n}) in reply {reply!r}")
        values.add(value)
    if not values:
        raise IndexParseError(f"no integer tokens in reply {reply!r}")
    return sorted(values)


@dataclass
class ComparerJob:
    """One finished comparison; ``proxy_ids`` are in on-screen x order."""

    id: str
    proxy_ids: list[str]
    stitched: CropImage
    user_prompt: str
    answer: str = ""
    indices: Optional[list[int]] = None
    error: Optional[str] = None
    requests: int = 0
    # one record per MLLM round trip, for event emission by the session
    exchanges: list[dict] = field(default_factory=list)


def order_by_screen_x(proxies: Sequence[ObjectProxy], screen_x: dict[str, float]) -> list[ObjectProxy]:
    """Left-to-right ordering by projected anchor x; ties break on proxy id."""
    return sorted(proxies, key=lambda p: (screen_x[p.id], p.id))


def run_compare(
    client: MllmClient,
    proxies: Sequence[ObjectProxy],
    prompt: str,
    denylist: frozenset[str],
    job_id: str,
) -> ComparerJob:
    """Execute a comparison over proxies already sorted left-to-right.

    One query for a plain prompt; a second indexing query for a "which"
    question.  MLLM failures complete the job in an error state with no
    indices, so no marks change.
    """
    if len(proxies) < 2:
        raise ValidationError(f"compare needs at least 2 proxies, got {len(proxies)}")
    if not prompt or not prompt.strip():
        raise ValidationError("prompt must be non-empty")

    stitched = stitch([p.crop for p in proxies])
    labels = tuple(p.label for p in proxies)
    job = ComparerJob(
        id=job_id,
        proxy_ids=[p.id for p in proxies],
        stitched=stitched,
        user_prompt=prompt,
    )

    def query(text: str, purpose: str) -> str:
        req = MllmRequest(
            conversation_id=job_id,
            prompt=text,
            turns=(),
            images=(ImageAttachment(crop=stitched, labels=labels),),
            denylist=denylist,
        )
        job.requests += 1
        record = {
            "purpose": purpose,
            "prompt": text,
            "fingerprint": req.fingerprint(),
            "labels": list(labels),
            "text": None,
            "error": None,
        }
        job.exchanges.append(record)
        try:
            reply = client.query(req).text
        except AorError as e:
            record["error"] = str(e)
            raise
        record["text"] = reply
        return reply

    try:
        job.answer = query(prompt, "compare")
    except AorError as e:
        job.error = str(e)
        return job

    if is_which_question(prompt):
        reprompt = f"{prompt} {INDEXING_SUB_PROMPT.render()}"
        try:
            job.indices = extract_indices(query(reprompt, "compare_index"), n=len(proxies))
        except AorError as e:
            job.error = str(e)
    return job


def marked_proxy_ids(job: ComparerJob) -> list[str]:
    """Proxy ids matched by the job's indices (empty when none)."""
    if job.indices is None:
        return []
    return [job.proxy_ids[i] for i in job.indices]
