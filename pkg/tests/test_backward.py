import pytest

from flowdial.backward import (
    AugmentPolicy,
    LoopInsertionError,
    LoopSite,
    augment_corpus_h,
    insert_backward_loop,
    llm_backward_loop,
    propose_loop_sites,
)
from flowdial.graph import backward_distance, build_graph
from flowdial.parser import Repeat, iter_actions, iter_conditions, parse, validate_syntax
from flowdial.render import render

from support import read_fixture, sequential_ast

MINIMAL = "@startuml\nstart\nstop\n@enduml"


class TestProposeLoopSites:
    def test_case_seq_includes_pay_fee_span(self, asts):
        sites = propose_loop_sites(asts["photo_shop"], max_span=2)
        ast = asts["photo_shop"]

        def span_labels(site):
            block = ast.root
            for i, j in site.block_path:
                block = block[i].branches[j].block
            return [n.label for n in block[site.target_index : site.target_index + site.span]]

        assert any(
            span_labels(s) == ["Pay fee", "Photo printing in progress"] for s in sites
        )

    def test_minimal_document_no_sites(self):
        assert propose_loop_sites(parse(MINIMAL)) == []

    def test_deterministic_under_seed(self, asts):
        a = propose_loop_sites(asts["college_application"], rng_seed=42)
        b = propose_loop_sites(asts["college_application"], rng_seed=42)
        assert a == b
        c = propose_loop_sites(asts["college_application"], rng_seed=43)
        assert sorted(map(repr, c)) == sorted(map(repr, a))

    def test_conditions_follow_pattern_and_are_fresh(self, asts):
        ast = asts["college_application"]
        existing = set(iter_conditions(ast.root))
        for site in propose_loop_sites(ast):
            assert site.condition.endswith(" unsuccessful?")
            assert site.condition not in existing
            assert site.loop_guard != site.exit_guard

    def test_span_bounds_respected(self, asts):
        sites = propose_loop_sites(asts["college_application"], min_span=2, max_span=3)
        assert sites
        assert all(2 <= s.span <= 3 for s in sites)

    def test_duplicate_label_runs_excluded(self, asts):
        # photo_shop repeats several labels; those runs must not be wrapped.
        ast = asts["photo_shop"]
        duplicated = {"Complete transaction", "Reselect photos", "Reprint"}

        def span_labels(site):
            block = ast.root
            for i, j in site.block_path:
                block = block[i].branches[j].block
            return [n.label for n in block[site.target_index : site.target_index + site.span]]

        for site in propose_loop_sites(ast):
            assert not duplicated & set(span_labels(site))


class TestInsertBackwardLoop:
    def test_wrap_two_nodes_renders_repeat(self):
        ast = sequential_ast(4)
        site = LoopSite(target_index=2, span=2, condition="steps unsuccessful?")
        augmented = insert_backward_loop(ast, site)
        text = render(augmented)
        assert "repeat" in text
        assert "repeat while (steps unsuccessful?) is (yes) not (no)" in text
        assert validate_syntax(text) == []

    def test_all_original_labels_preserved_in_order(self):
        ast = sequential_ast(5)
        site = LoopSite(target_index=1, span=3, condition="loop?")
        augmented = insert_backward_loop(ast, site)
        assert [a.label for a in iter_actions(augmented.root)] == [
            a.label for a in iter_actions(ast.root)
        ]

    def test_duplicate_condition_rejected(self, asts):
        ast = asts["lighting_install"]
        site = LoopSite(
            target_index=1, span=1,
            condition="Installation and debugging unsuccessful",
        )
        with pytest.raises(LoopInsertionError):
            insert_backward_loop(ast, site)

    def test_out_of_range_rejected(self):
        ast = sequential_ast(3)
        with pytest.raises(LoopInsertionError):
            insert_backward_loop(
                ast, LoopSite(target_index=3, span=2, condition="x?")
            )

    def test_equal_guards_rejected(self):
        ast = sequential_ast(3)
        with pytest.raises(LoopInsertionError):
            insert_backward_loop(
                ast,
                LoopSite(
                    target_index=1, span=1, condition="x?",
                    loop_guard="yes", exit_guard="yes",
                ),
            )

    @pytest.mark.parametrize("span", [1, 2, 4, 6])
    def test_backward_distance_equals_span(self, span):
        ast = sequential_ast(8)
        site = LoopSite(target_index=1, span=span, condition="redo?")
        graph = build_graph(insert_backward_loop(ast, site))
        backwards = [e for e in graph.edges if e.backward]
        assert len(backwards) == 1
        assert backward_distance(graph, backwards[0]) == span

    def test_insert_into_branch_block(self, asts):
        ast = asts["college_application"]
        sites = [s for s in propose_loop_sites(ast) if s.block_path]
        assert sites
        augmented = insert_backward_loop(ast, sites[0])
        assert parse(render(augmented)) == augmented


class TestAugmentCorpusH:
    def _corpus(self):
        return [
            ("college", read_fixture("college_application")),
            ("power", read_fixture("power_supply")),
        ]

    def test_small_spans_bucket_lt5(self):
        samples, rendered, report = augment_corpus_h(
            self._corpus(), AugmentPolicy(min_span=1, max_span=4, seed=1)
        )
        backward = [s for s in samples if s.backward]
        assert backward
        assert all(s.backward_distance < 5 for s in backward)
        assert report.backward_lt == len(backward)
        assert report.backward_ge == 0

    def test_large_spans_bucket_ge5(self):
        flowcharts = [("long", render(sequential_ast(9)))]
        samples, rendered, report = augment_corpus_h(
            flowcharts, AugmentPolicy(min_span=5, max_span=7, seed=2)
        )
        backward = [s for s in samples if s.backward]
        assert backward
        assert all(s.backward_distance >= 5 for s in backward)
        assert report.backward_ge == len(backward)
        assert report.backward_lt == 0

    def test_augmented_flowcharts_reparse(self):
        samples, rendered, report = augment_corpus_h(
            self._corpus(), AugmentPolicy(seed=3)
        )
        assert len(rendered) == 2
        for text in rendered:
            assert validate_syntax(text) == []
            graph = build_graph(parse(text))
            assert sum(1 for e in graph.edges if e.backward) == 1

    def test_exactly_one_repeat_added(self):
        def count_repeats(block):
            total = 0
            for node in block:
                if isinstance(node, Repeat):
                    total += 1 + count_repeats(node.body)
                elif hasattr(node, "branches"):
                    total += sum(count_repeats(b.block) for b in node.branches)
            return total

        samples, rendered, report = augment_corpus_h(
            self._corpus(), AugmentPolicy(seed=5)
        )
        for (fid, source), text in zip(self._corpus(), rendered):
            before = count_repeats(parse(source).root)
            after = count_repeats(parse(text).root)
            assert after == before + 1

    def test_unaugmentable_flowchart_skipped_with_warning(self):
        flowcharts = [("empty", MINIMAL), ("power", read_fixture("power_supply"))]
        samples, rendered, report = augment_corpus_h(flowcharts, AugmentPolicy(seed=1))
        assert report.skipped == ("empty",)
        assert len(rendered) == 1

    def test_report_schema_fields(self):
        _, _, report = augment_corpus_h(self._corpus(), AugmentPolicy(seed=7))
        row = report.table_row()
        assert set(row.keys()) == {
            "Backward Distance < 5",
            "Backward Distance >= 5",
            "Dialogue Samples",
            "Avg. Length",
        }
        assert row["Dialogue Samples"] == report.dialogue_samples

    def test_seeded_determinism(self):
        run1 = augment_corpus_h(self._corpus(), AugmentPolicy(seed=11))
        run2 = augment_corpus_h(self._corpus(), AugmentPolicy(seed=11))
        assert [s.to_dict() for s in run1[0]] == [s.to_dict() for s in run2[0]]
        assert run1[1] == run2[1]


class FakeClient:
    """Minimal stand-in for ChatCompletionClient."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def complete(self, bundle, use_cache=True):
        response = self.responses[min(self.calls, len(self.responses) - 1)]
        self.calls += 1
        return response


class TestLlmBackwardLoop:
    EXEMPLAR = (
        "@startuml\nstart\n:A;\nstop\n@enduml",
        "@startuml\nstart\nrepeat\n:A;\nrepeat while (A unsuccessful?) is (yes) not (no)\nstop\n@enduml",
    )

    def test_valid_response_accepted(self):
        source = render(sequential_ast(3))
        good = render(
            insert_backward_loop(
                parse(source), LoopSite(target_index=1, span=2, condition="redo?")
            )
        )
        client = FakeClient([f"Here you go:\n```\n{good}\n```"])
        revised = llm_backward_loop(source, client, self.EXEMPLAR)
        assert parse(good) == revised

    def test_invalid_then_valid_regenerates(self):
        source = render(sequential_ast(3))
        good = render(
            insert_backward_loop(
                parse(source), LoopSite(target_index=1, span=1, condition="redo?")
            )
        )
        client = FakeClient(["no uml at all", good])
        revised = llm_backward_loop(source, client, self.EXEMPLAR)
        assert client.calls == 2
        assert revised == parse(good)

    def test_unchanged_flowchart_rejected(self):
        source = render(sequential_ast(3))
        client = FakeClient([source])
        with pytest.raises(LoopInsertionError):
            llm_backward_loop(source, client, self.EXEMPLAR, max_attempts=2)
        assert client.calls == 2

    def test_condition_collision_rejected(self):
        source = read_fixture("lighting_install")
        bad = source.replace(
            "repeat\n",
            "repeat\n:Extra step;\n",
            1,
        )  # still one loop; same condition count -> simulate no new condition
        client = FakeClient([bad])
        with pytest.raises(LoopInsertionError):
            llm_backward_loop(source, client, self.EXEMPLAR, max_attempts=1)
