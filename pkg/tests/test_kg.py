"""Graph loading, indexing, mention scanning, and persistence."""

import numpy as np
import pytest

from kgfuse.errors import FormatError, UnknownIdError
from kgfuse.kg import (
    BACKWARD,
    FORWARD,
    UNTYPED,
    FrequencyTable,
    count_mention_frequencies,
    load_kg,
    load_saved_kg,
    neighbor_set,
    read_corpus_jsonl,
    save_kg,
    scan_mentions,
)

from conftest import TINY_TRIPLES, TINY_TYPES


class TestLoading:
    def test_counts(self, tiny_kg):
        assert tiny_kg.num_entities == 5
        assert tiny_kg.num_relations == 2
        assert tiny_kg.triples.shape == (5, 3)

    def test_entity_ids_follow_types_file_order(self, tiny_kg):
        assert tiny_kg.entities == [
            "aspirin", "ibuprofen", "headache", "fever", "flu",
        ]
        assert tiny_kg.entity_id("flu") == 4

    def test_type_table(self, tiny_kg):
        """Type id 0 is reserved for entities the types file never lists."""
        assert tiny_kg.type_names[UNTYPED] == "untyped"
        assert tiny_kg.type_names[1:] == ["drug", "symptom", "disease"]
        np.testing.assert_array_equal(tiny_kg.entity_types, [1, 1, 2, 2, 3])

    def test_triples_only_entity_is_untyped(self):
        kg = load_kg(["a\trel\tb"], ["a\tdrug"])
        assert kg.entities == ["a", "b"]
        assert int(kg.entity_types[1]) == UNTYPED

    def test_duplicate_triples_collapse(self):
        kg = load_kg(
            ["a\trel\tb", "a\trel\tb", "b\trel\ta"],
            ["a\tdrug", "b\tdrug"],
        )
        assert kg.triples.shape[0] == 2

    def test_blank_lines_skipped(self):
        kg = load_kg(
            ["", "a\trel\tb", "   "],
            ["a\tdrug", "", "b\tdrug"],
        )
        assert kg.num_entities == 2

    def test_duplicate_surface_reports_both_ids(self):
        with pytest.raises(FormatError, match="0 and 1"):
            load_kg([], ["a\tdrug", "a\tsymptom"])

    def test_malformed_triple_row_carries_line_number(self):
        with pytest.raises(FormatError, match="line 2"):
            load_kg(["a\trel\tb", "broken row"], ["a\tdrug"])

    def test_malformed_type_row(self):
        with pytest.raises(FormatError, match="line 1"):
            load_kg([], ["only_one_field"])

    def test_unknown_lookups_raise(self, tiny_kg):
        with pytest.raises(UnknownIdError):
            tiny_kg.entity_id("nope")
        with pytest.raises(UnknownIdError):
            tiny_kg.relation_id("nope")
        with pytest.raises(UnknownIdError):
            tiny_kg.check_entity(99)


class TestAdjacency:
    def test_both_directions_present(self, tiny_kg):
        aspirin = tiny_kg.entity_id("aspirin")
        headache = tiny_kg.entity_id("headache")
        directions = {
            d for _, nbr, d in tiny_kg.adjacency[aspirin] if nbr == headache
        }
        assert directions == {FORWARD}
        directions = {
            d for _, nbr, d in tiny_kg.adjacency[headache] if nbr == aspirin
        }
        assert directions == {BACKWARD}

    def test_neighbor_ids_sorted_distinct(self, tiny_kg):
        headache = tiny_kg.entity_id("headache")
        assert tiny_kg.neighbor_ids(headache) == [0, 1, 4]

    def test_neighbor_set_ordering(self, tiny_kg):
        fever = tiny_kg.entity_id("fever")
        pairs = neighbor_set(tiny_kg, fever)
        assert pairs == sorted(pairs, key=lambda p: (p[1], p[0]))
        assert {nbr for _, nbr in pairs} == {0, 4}

    def test_type_index_partitions_entities(self, tiny_kg):
        seen = sorted(
            eid for members in tiny_kg.type_index.values() for eid in members
        )
        assert seen == list(range(tiny_kg.num_entities))


class TestMentionScanning:
    def test_longest_match_wins(self):
        table = {"flu": 0, "flu shot": 1}
        assert scan_mentions("get a flu shot now", table) == [(6, 1)]

    def test_non_overlapping_left_to_right(self):
        table = {"ab": 0, "bc": 1}
        assert scan_mentions("abc", table) == [(0, 0)]

    def test_multiple_hits(self, tiny_kg):
        hits = scan_mentions("aspirin or ibuprofen for headache", tiny_kg.surface_to_id)
        assert [eid for _, eid in hits] == [0, 1, 2]

    def test_frequency_counts(self, tiny_kg):
        corpus = ["aspirin aspirin", "fever", "nothing here"]
        freq = count_mention_frequencies(corpus, tiny_kg)
        assert freq.sample_count == 3
        assert freq.total == 3
        assert freq.counts[tiny_kg.entity_id("aspirin")] == 2
        assert freq.counts[tiny_kg.entity_id("fever")] == 1

    def test_frequency_table_shape_check(self, tiny_kg):
        with pytest.raises(ValueError):
            FrequencyTable.from_counts(tiny_kg, np.zeros(3, dtype=np.int64), 1)


class TestCorpusReading:
    def test_reads_text_fields(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"text": "one"}\n\n{"text": "two"}\n')
        assert list(read_corpus_jsonl(path)) == ["one", "two"]

    def test_bad_json_carries_line_number(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"text": "one"}\nnot json\n')
        with pytest.raises(FormatError, match="line 2"):
            list(read_corpus_jsonl(path))

    def test_missing_text_field(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"body": "one"}\n')
        with pytest.raises(FormatError, match="text"):
            list(read_corpus_jsonl(path))


class TestPersistence:
    def test_round_trip(self, tiny_kg, tmp_path):
        save_kg(tiny_kg, tmp_path / "kg")
        loaded = load_saved_kg(tmp_path / "kg")
        assert loaded.entities == tiny_kg.entities
        assert loaded.relations == tiny_kg.relations
        assert loaded.type_names == tiny_kg.type_names
        np.testing.assert_array_equal(loaded.entity_types, tiny_kg.entity_types)
        np.testing.assert_array_equal(loaded.triples, tiny_kg.triples)
        assert loaded.triple_set == tiny_kg.triple_set

    def test_round_trip_toy_world(self, world, tmp_path):
        save_kg(world.kg, tmp_path / "kg")
        loaded = load_saved_kg(tmp_path / "kg")
        np.testing.assert_array_equal(loaded.triples, world.kg.triples)
        assert loaded.entities == world.kg.entities
