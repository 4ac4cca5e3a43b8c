"""Per-proxy conversations: session creation, turn history, error handling."""

import pytest

from aor.anchoring import ObjectProxy
from aor.conversation import (
    ActionFailed,
    ConversationStore,
    refined_label_from_summary,
    truncate_words,
)
from aor.errors import ValidationError
from aor.geometry import WorldPoint
from aor.mllm import MllmClient, MockBackend, Turn
from aor.prompts import INFO_SUMMARY

from conftest import make_crop


def proxy(pid="p001", label="cup"):
    return ObjectProxy(
        id=pid,
        label=label,
        world_pos=WorldPoint(0.0, 0.0, 1.0),
        crop=make_crop(),
        bbox_area=48,
        first_seen=0,
        last_seen=0,
    )


def client(backend=None):
    return MllmClient(backend or MockBackend(mode="fixed", text="an answer"))


class TestSessions:
    def test_one_conversation_per_proxy(self):
        store = ConversationStore(frozenset())
        p = proxy()
        cid, created = store.ensure_session(p)
        assert cid == "conv-p001" and created
        cid2, created2 = store.ensure_session(p)
        assert cid2 == cid and not created2
        assert len(store) == 1

    def test_distinct_proxies_distinct_conversations(self):
        store = ConversationStore(frozenset())
        store.ensure_session(proxy("p001"))
        store.ensure_session(proxy("p002"))
        assert len(store) == 2
        assert store.for_proxy("p002").id == "conv-p002"


class TestQueries:
    def test_summarize_sends_info_prompt_and_crop(self):
        calls = []

        def spy(req):
            calls.append(req)
            return "A mug * Ceramic mug for drinks * Holds coffee * ‘None’"

        store = ConversationStore(frozenset())
        text = store.summarize(client(MockBackend(rules=[spy])), proxy())
        assert text.startswith("A mug")
        assert len(calls) == 1
        assert calls[0].prompt == INFO_SUMMARY.render()
        assert len(calls[0].images) == 1

    def test_ask_appends_alternating_turns(self):
        store = ConversationStore(frozenset())
        p = proxy()
        store.ask(client(), p, "does it hold tea?")
        store.ask(client(), p, "and coffee?")
        conv = store.for_proxy(p.id)
        assert [t.role for t in conv.turns] == ["user", "assistant", "user", "assistant"]
        assert conv.turns[2].text == "and coffee?"

    def test_crop_reattached_on_every_query(self):
        counts = []
        store = ConversationStore(frozenset())
        p = proxy()
        backend = MockBackend(rules=[lambda r: (counts.append(len(r.images)), "ok")[1]])
        store.ask(client(backend), p, "one?")
        store.ask(client(backend), p, "two?")
        assert counts == [1, 1]

    def test_history_travels_with_request(self):
        histories = []
        store = ConversationStore(frozenset())
        p = proxy()
        backend = MockBackend(rules=[lambda r: (histories.append([t.text for t in r.turns]), "ok")[1]])
        store.ask(client(backend), p, "first?")
        store.ask(client(backend), p, "second?")
        assert histories == [[], ["first?", "ok"]]

    def test_empty_question_rejected(self):
        store = ConversationStore(frozenset())
        with pytest.raises(ValidationError):
            store.ask(client(), proxy(), "   ")

    def test_failed_query_appends_error_turn(self):
        store = ConversationStore(frozenset())
        p = proxy()
        with pytest.raises(ActionFailed):
            store.ask(client(MockBackend(mode="fail")), p, "hello?")
        conv = store.for_proxy(p.id)
        assert [t.role for t in conv.turns] == ["user", "assistant"]
        assert conv.turns[1].error is not None
        assert conv.turns[1].text == ""
        # history stays alternating, so the next query still works
        store.ask(client(), p, "again?")
        assert len(conv.turns) == 4

    def test_alternation_enforced(self):
        store = ConversationStore(frozenset())
        p = proxy()
        store.ensure_session(p)
        conv = store.for_proxy(p.id)
        with pytest.raises(ValueError):
            conv.append(Turn(role="assistant", text="i go first"))


class TestRefinedLabel:
    def test_takes_head_before_first_separator(self):
        s = "Superior Dark Soy Sauce * Naturally brewed * Rich color * Keep cool."
        assert refined_label_from_summary(s) == "Superior Dark Soy Sauce"

    def test_strips_trailing_punctuation(self):
        assert refined_label_from_summary("Oat Drink. * plant based") == "Oat Drink"

    def test_long_head_is_not_a_name(self):
        s = "This is a very long sentence that cannot possibly be a product name at all * x"
        assert refined_label_from_summary(s) is None

    def test_empty_head(self):
        assert refined_label_from_summary("* no name here") is None
        assert refined_label_from_summary("") is None


class TestTruncate:
    def test_short_text_unchanged(self):
        assert truncate_words("a b c", limit=5) == "a b c"

    def test_long_text_clipped_with_ellipsis(self):
        text = " ".join(str(i) for i in range(100))
        out = truncate_words(text, limit=10)
        assert out == "0 1 2 3 4 5 6 7 8 9…"
