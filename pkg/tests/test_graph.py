import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgddi.exceptions import IntegrationError, ParseError
from kgddi.graph import (
    DDI_PREDICATES,
    build_graph,
    close_mapping,
    entities_with_prefix,
    extract_ddi_pairs,
    graph_stats,
    parse_ntriples,
    read_mapping,
    relation_set,
    strip_relations,
    write_ntriples,
)

DDI = "http://bio2rdf.org/drugbank_vocabulary:ddi-interactor-in"


class TestParse:
    def test_single_statement(self):
        parsed = parse_ntriples(b"<s> <p> <o> .\n")
        assert list(parsed) == [("s", "p", "o")]
        assert parsed.dropped_literals == 0

    def test_literal_object_is_dropped_and_counted(self):
        parsed = parse_ntriples(b'<s> <p> "42" .\n')
        assert list(parsed) == []
        assert parsed.dropped_literals == 1

    def test_typed_and_tagged_literals(self):
        data = b'<s> <p> "4"^^<http://www.w3.org/2001/XMLSchema#int> .\n<s> <p> "x"@en .\n'
        parsed = parse_ntriples(data)
        assert len(parsed) == 0 and parsed.dropped_literals == 2

    def test_empty_stream(self):
        assert list(parse_ntriples(b"")) == []

    def test_comments_and_blank_lines_skipped(self):
        parsed = parse_ntriples(b"# header\n\n<a> <p> <b> .\n   \n")
        assert list(parsed) == [("a", "p", "b")]

    def test_file_order_kept(self):
        parsed = parse_ntriples(b"<c> <p> <d> .\n<a> <p> <b> .\n")
        assert list(parsed) == [("c", "p", "d"), ("a", "p", "b")]

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(ParseError) as err:
            parse_ntriples(b"<a> <p> <b> .\n<a> <p> .\n")
        assert err.value.line == 2

    def test_truncated_final_line(self):
        with pytest.raises(ParseError) as err:
            parse_ntriples(b"<a> <p> <b> .\n<a> <p> <b")
        assert err.value.line == 2

    def test_text_stream_and_path(self, tmp_path):
        path = tmp_path / "g.nt"
        path.write_text("<a> <p> <b> .\n")
        assert list(parse_ntriples(str(path))) == [("a", "p", "b")]
        assert list(parse_ntriples(io.StringIO("<a> <p> <b> .\n"))) == [("a", "p", "b")]

    def test_write_then_parse_roundtrip(self, tmp_path):
        triples = [("http://x/a", "http://x/p", "http://x/b"), ("http://x/b", "http://x/q", "http://x/c")]
        write_ntriples(triples, tmp_path / "out.nt")
        assert list(parse_ntriples(tmp_path / "out.nt")) == triples


class TestMapping:
    def test_read_mapping_strips_brackets(self):
        assert read_mapping(b"<b>\t<a>\nc\ta\n") == [("b", "a"), ("c", "a")]

    def test_read_mapping_bad_row(self):
        with pytest.raises(ParseError):
            read_mapping(b"a b\n")

    def test_closure_picks_smallest_label(self):
        closed = close_mapping([("z", "m"), ("m", "b")])
        assert closed == {"z": "b", "m": "b", "b": "b"}

    def test_closure_order_independent(self):
        pairs = [("k", "d"), ("d", "q"), ("x", "q")]
        assert close_mapping(pairs) == close_mapping(list(reversed(pairs)))

    def test_cycle_is_an_integration_error(self):
        with pytest.raises(IntegrationError):
            close_mapping([("a", "b"), ("b", "a")])


class TestBuildGraph:
    def test_mapping_merges_duplicate(self):
        triples = [("b", "p", "c"), ("a", "p", "c")]
        kg = build_graph({"s": triples}, [("b", "a")])
        assert list(kg.labelled_triples()) == [("a", "p", "c")]
        assert kg.n_entities <= 3
        assert kg.duplicates_dropped == 1

    def test_five_triples_one_mapping(self):
        triples = [("b", "p", "c"), ("a", "p", "c"), ("c", "q", "d"), ("d", "q", "e"), ("a", "r", "e")]
        kg = build_graph({"s": triples}, [("b", "a")])
        assert kg.n_triples == 4
        assert "b" not in kg.entity_index

    def test_empty_mapping_is_identity_merge(self):
        triples = [("a", "p", "b"), ("a", "p", "b"), ("b", "p", "c")]
        kg = build_graph({"s": triples})
        assert kg.n_triples == 2

    def test_cross_source_dedup_and_counts(self):
        kg = build_graph({"one": [("a", "p", "b"), ("b", "p", "c")], "two": [("a", "p", "b")]})
        assert kg.n_triples == 2
        assert dict(kg.source_counts) == {"one": 2, "two": 1}
        assert kg.sources == ("one", "one")

    def test_same_input_twice_is_identical(self, small_graph):
        again = build_graph({"t": list(small_graph.labelled_triples())})
        assert again.entity_labels == small_graph.entity_labels
        assert np.array_equal(again.triples, small_graph.triples)

    def test_adjacency_lists_every_triple_once(self, small_graph):
        indptr, rel, tail = small_graph.out_adjacency
        edges = sorted((h, r, t) for h in range(small_graph.n_entities)
                       for r, t in zip(rel[indptr[h]:indptr[h + 1]], tail[indptr[h]:indptr[h + 1]]))
        assert edges == sorted(map(tuple, small_graph.triples.tolist()))

    def test_contains(self, small_graph):
        E, R = small_graph.entity_index, small_graph.relation_index
        assert small_graph.contains(E["a"], R["p"], E["b"])
        assert not small_graph.contains(E["b"], R["p"], E["a"])

    def test_graph_is_read_only(self, small_graph):
        with pytest.raises(ValueError):
            small_graph.heads[0] = 3


class TestStrip:
    def test_removes_ddi_triple(self):
        kg = build_graph({"s": [("a", "p", "b"), ("a", DDI, "c"), ("b", "q", "c")]})
        out = strip_relations(kg, DDI_PREDICATES)
        assert out.n_triples == 2
        assert not relation_set(out) & DDI_PREDICATES

    def test_empty_set_unchanged(self, small_graph):
        assert strip_relations(small_graph, set()) is small_graph

    def test_all_predicates_removed(self, small_graph):
        out = strip_relations(small_graph, relation_set(small_graph))
        assert out.n_triples == 0
        assert out.n_entities == small_graph.n_entities

    def test_unknown_predicate_is_noop(self, small_graph):
        assert strip_relations(small_graph, {"nope"}).n_triples == small_graph.n_triples


def _ddi_file(tmp_path, name, rows):
    path = tmp_path / name
    path.write_text("".join(f"{a}\t{b}\t{s}\n" for a, b, s in rows))
    return path


class TestDdiPairs:
    def test_orientation_dedup(self, tmp_path):
        f = _ddi_file(tmp_path, "d.tsv", [("a", "b", "x"), ("b", "a", "y")])
        ds = extract_ddi_pairs(f, ["a", "b"])
        assert ds.pairs.tolist() == [[0, 1]]
        assert ds.sources == ("x,y",)
        assert ds.labels.tolist() == [1]

    def test_self_pair_skipped(self, tmp_path):
        ds = extract_ddi_pairs(_ddi_file(tmp_path, "d.tsv", [("a", "a", "x")]), ["a", "b"])
        assert len(ds) == 0 and ds.skipped_self == 1

    def test_three_files_one_duplicate(self, tmp_path):
        files = [
            _ddi_file(tmp_path, "1.tsv", [("a", "b", "s1"), ("a", "c", "s1")]),
            _ddi_file(tmp_path, "2.tsv", [("b", "c", "s2"), ("c", "a", "s2")]),
            _ddi_file(tmp_path, "3.tsv", [("a", "d", "s3"), ("b", "d", "s3")]),
        ]
        ds = extract_ddi_pairs(files, list("abcd"))
        assert len(ds) == 5

    def test_unknown_drug_skipped_with_warning(self, tmp_path, caplog):
        ds = extract_ddi_pairs(_ddi_file(tmp_path, "d.tsv", [("a", "zz", "x"), ("a", "b", "x")]), ["a", "b"])
        assert len(ds) == 1 and ds.skipped_unknown == 1
        assert "unknown drug" in caplog.text

    def test_malformed_row(self, tmp_path):
        path = tmp_path / "d.tsv"
        path.write_text("a\tb\n")
        with pytest.raises(ParseError):
            extract_ddi_pairs(path, ["a", "b"])

    def test_mapping_applies_to_drugs(self, tmp_path):
        ds = extract_ddi_pairs(_ddi_file(tmp_path, "d.tsv", [("k1", "b", "x")]), ["a", "b"], [("k1", "a")])
        assert ds.pairs.tolist() == [[0, 1]]

    def test_universe_mapping_keeps_graph_ids(self, tmp_path):
        kg = build_graph({"s": [("x", "p", "drug:a"), ("drug:b", "p", "x")]})
        drugs = entities_with_prefix(kg, "drug:")
        ds = extract_ddi_pairs(_ddi_file(tmp_path, "d.tsv", [("drug:b", "drug:a", "s")]), drugs)
        assert ds.pairs.tolist() == [sorted([kg.entity_index["drug:a"], kg.entity_index["drug:b"]])]
        assert ds.N == 2


class TestStats:
    def test_empty_graph(self):
        s = graph_stats(build_graph({}))
        assert (s["triples"], s["entities"], s["relation_types"], s["dropped_literals"]) == (0, 0, 0, 0)

    def test_shared_entity_count(self):
        s = graph_stats(build_graph({"s": [("a", "p", "b"), ("a", "q", "c")]}))
        assert s["entities"] == 3 and s["triples"] == 2 and s["relation_types"] == 2
        assert s["per_source"] == {"s": 2}

    def test_deterministic(self, small_graph):
        assert graph_stats(small_graph) == graph_stats(small_graph)

    def test_json_keys(self, small_graph):
        assert set(graph_stats(small_graph)) == {
            "triples", "entities", "relation_types", "per_source", "dropped_literals", "skipped_pairs"}


labels = st.sampled_from(list("abcdefg"))
triple_lists = st.lists(st.tuples(labels, st.sampled_from(["p", "q", "r"]), labels), max_size=30)


@given(triple_lists, st.lists(st.tuples(labels, labels), max_size=4))
def test_dictionaries_are_bijections(triples, mapping):
    try:
        kg = build_graph({"s": triples}, mapping)
    except IntegrationError:
        return
    assert all(kg.entity_labels[kg.entity_index[l]] == l for l in kg.entity_labels)
    assert all(kg.relation_labels[kg.relation_index[l]] == l for l in kg.relation_labels)
    assert len(set(kg.entity_labels)) == kg.n_entities


@given(triple_lists)
def test_triple_conservation(triples):
    kg = build_graph({"s": triples})
    assert kg.n_triples + kg.duplicates_dropped == len(triples)


@given(triple_lists)
def test_merge_idempotence(triples):
    kg = build_graph({"s": triples})
    again = build_graph({"s": list(kg.labelled_triples())})
    assert list(again.labelled_triples()) == list(kg.labelled_triples())


@given(triple_lists)
def test_strip_leaves_no_stripped_relation(triples):
    kg = build_graph({"s": [(h, DDI if r == "p" else r, t) for h, r, t in triples]})
    out = strip_relations(kg, DDI_PREDICATES)
    assert not relation_set(out) & DDI_PREDICATES
    assert out.n_triples == sum(1 for _, r, _ in kg.labelled_triples() if r != DDI)


@given(st.lists(st.tuples(labels, labels), max_size=40))
def test_ddi_canonical_form(rows):
    text = "".join(f"{a}\t{b}\tsrc\n" for a, b in rows).encode()
    ds = extract_ddi_pairs(io.BytesIO(text), list("abcdefg"))
    assert all(u < v for u, v in ds.pairs.tolist())
    assert len({tuple(p) for p in ds.pairs.tolist()}) == len(ds)
    expected = {tuple(sorted((a, b))) for a, b in rows if a != b}
    assert len(ds) == len(expected)
