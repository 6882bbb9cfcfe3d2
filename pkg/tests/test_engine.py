import pytest

from flowdial.engine import (
    SessionDoneError,
    SessionStore,
    UnknownSessionError,
    UnknownStateError,
    oracle_next_state,
    reset,
    start_session,
    step,
)
from flowdial.graph import build_graph, enumerate_paths, extract_transitions
from flowdial.matching import (
    DEFAULT_LEXICON,
    GuardLexicon,
    UnmatchedGuardError,
    match_guard,
)
from flowdial.parser import parse
from flowdial.synth import template_user_input

CASE_DEC_LEXICON = DEFAULT_LEXICON.extended(
    affirmative=["needs to be adjusted"],
    negative=["printing is completed"],
)


class TestMatchGuard:
    def test_exact_containment(self):
        assert match_guard(["yes", "no"], "yes, adjust it") == "yes"

    def test_lexicon_phrase_maps_to_affirmative_guard(self):
        lexicon = DEFAULT_LEXICON.extended(affirmative=["needs to be adjusted"])
        answer = match_guard(
            ["yes", "no"],
            "The position of the lighting fixture needs to be adjusted.",
            lexicon,
        )
        assert answer == "yes"

    def test_unmatched_input_raises_with_options(self):
        with pytest.raises(UnmatchedGuardError) as err:
            match_guard(["yes", "no"], "maybe")
        assert err.value.options == ["yes", "no"]

    def test_no_does_not_fire_inside_now(self):
        with pytest.raises(UnmatchedGuardError):
            match_guard(["yes", "no"], "right now maybe")

    def test_rightmost_answer_beats_quoted_condition(self):
        text = "Answer to 'should we say no to this?': yes."
        assert match_guard(["no", "yes"], text) == "yes"

    def test_chinese_defaults(self):
        assert match_guard(["是", "否"], "是的，继续吧") == "是"
        assert match_guard(["需要", "不需要"], "我们不需要调整") == "不需要"

    def test_negative_keyword_longest_match_wins(self):
        # 不需要 contains 需要; the longer (negative) phrase must win.
        assert match_guard(["yes", "no"], "不需要") == "no"

    def test_capitalized_guards_match_casefolded(self):
        assert match_guard(["Yes", "No"], "Answer: yes.") == "Yes"


class TestOracle:
    def test_case_seq_gold_answer(self, graphs):
        result = oracle_next_state(
            graphs["photo_shop"],
            "Repeatedly check if printing is complete",
            "Printing is completed.",
        )
        assert result.next_state == "Customer leaves the photo shop"
        assert result.kind == "sequential"

    def test_case_dec_gold_answer(self, graphs):
        result = oracle_next_state(
            graphs["lighting_install"],
            "Need to adjust fixture position?",
            "The position of the lighting fixture needs to be adjusted.",
            lexicon=CASE_DEC_LEXICON,
        )
        assert result.next_state == "Negotiate adjustment plan"
        assert result.kind == "decision"

    def test_sequential_state_ignores_input(self, graphs):
        result = oracle_next_state(
            graphs["college_application"],
            "System closes the application entry",
            "whatever the user says",
        )
        assert result.next_state == "Wait for the admission results to be announced"

    def test_unknown_state_raises(self, graphs):
        with pytest.raises(UnknownStateError):
            oracle_next_state(graphs["photo_shop"], "Nonexistent state", "x")

    def test_decision_unmatched_raises(self, graphs):
        with pytest.raises(UnmatchedGuardError):
            oracle_next_state(graphs["mini_decision"], "D", "maybe")

    def test_ambiguous_label_resolves_decision_on_guard_match(self, graphs):
        graph = graphs["photo_shop"]
        result = oracle_next_state(
            graph, "Customer satisfied?", "Answer to 'Customer satisfied?': yes."
        )
        assert result.next_state == "Complete transaction"
        assert result.kind == "decision"

    def test_ambiguous_label_falls_back_to_state(self, graphs):
        graph = graphs["photo_shop"]
        result = oracle_next_state(
            graph, "Customer satisfied?", "Customer satisfied? has been completed."
        )
        assert result.next_state == "Customer satisfied?"
        assert result.kind == "sequential"

    def test_terminal_step_is_done(self, graphs):
        result = oracle_next_state(
            graphs["college_application"], "Enroll in the school", "done"
        )
        assert result.done is True
        assert result.next_state == "stop"

    def test_oracle_agrees_with_template_corpus(self, graphs):
        for name in ("college_application", "photo_shop", "power_supply"):
            graph = graphs[name]
            for t in extract_transitions(graph):
                result = oracle_next_state(graph, t.current, template_user_input(t))
                assert result.next_state == t.next, (name, t)

    def test_determinism(self, graphs):
        args = (
            graphs["photo_shop"],
            "Confirm print order and price",
            "Confirm print order and price has been completed.",
        )
        assert oracle_next_state(*args) == oracle_next_state(*args)

    def test_backward_flag_on_loop_edge(self, graphs):
        result = oracle_next_state(
            graphs["lighting_install"],
            "Installation and debugging unsuccessful",
            "Answer to 'Installation and debugging unsuccessful': yes.",
        )
        assert result.backward is True
        assert result.next_state == "Confirm fixture layout and installation position"


class TestSessions:
    def test_start_positions_at_first_state(self, graphs):
        session = start_session(graphs["photo_shop"], "photo_shop")
        assert session.current_label == "Customer arrives at photo shop"
        assert session.done is False

    def test_all_yes_walk_reaches_stop(self, graphs):
        graph = graphs["photo_shop"]
        session = start_session(graph, "photo_shop")
        visited = [session.current_label]
        while not session.done:
            label = session.current_label
            if session.current_kind == "decision":
                result = step(session, "yes")
            else:
                result = step(session, f"{label} has been completed.")
            if not result.done:
                visited.append(result.next_state)
        assert visited[-1] == "Customer leaves the photo shop"
        assert session.done is True

    def test_session_walk_is_prefix_of_some_path(self, graphs):
        graph = graphs["college_application"]
        paths = enumerate_paths(graph)
        session = start_session(graph, "college")
        walked = ["start", session.current_label]
        while not session.done:
            result = step(
                session,
                "Yes" if session.current_kind == "decision" else "continue please",
            )
            walked.append(result.next_state if not result.done else "stop")
        assert walked in paths

    def test_step_after_done_raises(self, graphs):
        session = start_session(graphs["mini_decision"], "mini")
        step(session, "C1")
        step(session, "S1 has been completed.")
        assert session.done
        with pytest.raises(SessionDoneError):
            step(session, "more")

    def test_reset_restores_start_and_archives_history(self, graphs):
        session = start_session(graphs["photo_shop"], "photo_shop")
        step(session, "Customer arrives at photo shop has been completed.")
        assert len(session.history) == 1
        reset(session)
        assert session.current_label == "Customer arrives at photo shop"
        assert session.history == []
        assert len(session.archived_histories) == 1

    def test_backward_step_cap_finishes_session(self, graphs):
        graph = graphs["lighting_install"]
        session = start_session(graph, "lighting")
        # march to the loop condition
        while session.current_label != "Installation and debugging unsuccessful":
            step(session, f"{session.current_label} has been completed.")
        for _ in range(10):
            step(session, "yes")  # take the backward edge
            while session.current_label != "Installation and debugging unsuccessful":
                step(session, f"{session.current_label} has been completed.")
        with pytest.raises(SessionDoneError):
            step(session, "yes")
        assert session.done


class TestSessionStore:
    def test_create_get_remove(self, graphs):
        store = SessionStore()
        session = store.create(graphs["photo_shop"], "photo_shop")
        assert store.get(session.session_id) is session
        store.remove(session.session_id)
        with pytest.raises(UnknownSessionError):
            store.get(session.session_id)

    def test_session_isolation(self, graphs):
        store = SessionStore()
        s1 = store.create(graphs["photo_shop"], "photo_shop")
        s2 = store.create(graphs["photo_shop"], "photo_shop")
        store.step(s1.session_id, "Customer arrives at photo shop has been completed.")
        assert len(store.get(s1.session_id).history) == 1
        assert len(store.get(s2.session_id).history) == 0

    def test_idle_purge(self, graphs):
        store = SessionStore(idle_timeout=0.0)
        session = store.create(graphs["photo_shop"], "photo_shop")
        session.last_access -= 1.0
        with pytest.raises(UnknownSessionError):
            store.get(session.session_id)
