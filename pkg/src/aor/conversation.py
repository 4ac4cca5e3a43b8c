"""One MLLM conversation per proxy: history, info summaries, free questions.

Each proxy owns exactly one conversation; its crop is re-attached on every
query so stateless backends keep working.  Turn lists are append-only and
strictly alternate user/assistant; a failed query still appends the user
turn plus an error-marked assistant turn so the history stays honest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .anchoring import ObjectProxy
from .errors import AorError, ValidationError
from .mllm import ImageAttachment, MllmClient, MllmRequest, Turn
from .prompts import INFO_SUMMARY

DISPLAY_WORD_LIMIT = 60
ELLIPSIS = "…"


@dataclass
class ConversationState:
    """Dialogue history for one proxy."""

    id: str
    proxy_id: str
    turns: list[Turn] = field(default_factory=list)

    def append(self, turn: Turn) -> None:
        expected = "user" if len(self.turns) % 2 == 0 else "assistant"
        if turn.role != expected:
            raise ValueError(f"turn {len(self.turns)} must be {expected}, got {turn.role}")
        self.turns.append(turn)


class ActionFailed(AorError):
    """An MLLM-backed action failed; the caller may retry."""


class ConversationStore:
    """All conversations of a session, keyed by conversation id."""

    def __init__(self, denylist: frozenset[str]):
        self.denylist = denylist
        self._by_id: dict[str, ConversationState] = {}
        self._by_proxy: dict[str, str] = {}

    def __len__(self) -> int:
        return len(self._by_id)

    def get(self, conversation_id: str) -> ConversationState:
        return self._by_id[conversation_id]

    def for_proxy(self, proxy_id: str) -> Optional[ConversationState]:
        cid = self._by_proxy.get(proxy_id)
        return self._by_id[cid] if cid else None

    def all(self) -> list[ConversationState]:
        return sorted(self._by_id.values(), key=lambda c: c.id)

    def ensure_session(self, proxy: ObjectProxy) -> tuple[str, bool]:
        """Create the proxy's conversation or return the existing id.

        Returns ``(conversation id, created)``; ids are stable across a
        session and derived from the proxy id so replayed logs agree.
        """
        existing = self._by_proxy.get(proxy.id)
        if existing is not None:
            return existing, False
        cid = f"conv-{proxy.id}"
        self._by_id[cid] = ConversationState(id=cid, proxy_id=proxy.id)
        self._by_proxy[proxy.id] = cid
        return cid, True

    def _crop_ref(self, proxy: ObjectProxy) -> str:
        return f"crops/{proxy.id}.png"

    def build_request(self, proxy: ObjectProxy, prompt: str) -> MllmRequest:
        conv = self.for_proxy(proxy.id)
        if conv is None:
            raise ValidationError(f"proxy {proxy.id} has no conversation")
        return MllmRequest(
            conversation_id=conv.id,
            prompt=prompt,
            turns=tuple(conv.turns),
            images=(ImageAttachment(crop=proxy.crop, labels=(proxy.label,)),),
            denylist=self.denylist,
        )

    def _run_query(self, client: MllmClient, proxy: ObjectProxy, prompt: str) -> str:
        conv = self.for_proxy(proxy.id)
        req = self.build_request(proxy, prompt)
        conv.append(Turn(role="user", text=prompt, image_refs=(self._crop_ref(proxy),)))
        try:
            reply = client.query(req)
        except AorError as e:
            msg = f"{proxy.id}: query failed ({e})"
            conv.append(Turn(role="assistant", text="", error=msg))
            raise ActionFailed(msg) from e
        conv.append(Turn(role="assistant", text=reply.text))
        return reply.text

    def summarize(self, client: MllmClient, proxy: ObjectProxy) -> str:
        """Send the fixed info prompt with the proxy's crop; return the reply."""
        self.ensure_session(proxy)
        return self._run_query(client, proxy, INFO_SUMMARY.render())

    def ask(self, client: MllmClient, proxy: ObjectProxy, question: str) -> str:
        """Send a free-form question with the crop and full prior history."""
        if not question or not question.strip():
            raise ValidationError("question must be non-empty")
        self.ensure_session(proxy)
        return self._run_query(client, proxy, question)


def refined_label_from_summary(summary: str) -> Optional[str]:
    """Product name heuristically pulled from an info summary.

    Summaries following the info prompt lead with the recognized name before
    the first "*" separator; anything over a phrase long is not a name.
    """
    head = summary.split("*", 1)[0].strip().strip(".:")
    if not head or len(head.split()) > 8:
        return None
    return head


def truncate_words(text: str, limit: int = DISPLAY_WORD_LIMIT) -> str:
    """Display-layer truncation with an ellipsis marker.

    The info prompt asks the model for 30 words but compliance is not
    guaranteed; the display allows 2x slack before clipping.
    """
    words = text.split()
    if len(words) <= limit:
        return text
    return " ".join(words[:limit]) + ELLIPSIS
