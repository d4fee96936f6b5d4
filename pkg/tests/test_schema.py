import pytest

from hierlabel.errors import FormatError, SchemaError
from hierlabel.schema import CATEGORIES_14, CATEGORIES_23, DEFAULT_SCHEMA, LabelSchema

# golden merge table: every merged pair, child -> parent
GOLDEN_MERGES = {
    "Menstruation-related discrimination": "Motherhood and menstruation related discrimination",
    "Motherhood-related discrimination": "Motherhood and menstruation related discrimination",
    "Mansplaining": "Other",
    "Gaslighting": "Other",
    "Religion-based sexism": "Other",
    "Physical violence (excluding sexual violence)": "Other",
    "Other": "Other",
    "Pay gap": "Hostile work environment",
    "Hostile work environment (excluding pay gap)": "Hostile work environment",
    "Tone policing": "Moral policing and victim blaming",
    "Moral policing (excluding tone policing)": "Moral policing and victim blaming",
    "Victim blaming": "Moral policing and victim blaming",
    "Rape": "Sexual assault",
    "Sexual assault (excluding rape)": "Sexual assault",
}


class TestSchema:
    def test_counts(self):
        assert len(CATEGORIES_23) == 23
        assert len(CATEGORIES_14) == 14

    def test_golden_merge_pairs(self):
        for child, parent in GOLDEN_MERGES.items():
            assert DEFAULT_SCHEMA.merge_labels({child}) == {parent}

    def test_unmerged_categories_map_to_themselves(self):
        merged_children = set(GOLDEN_MERGES)
        for name in CATEGORIES_23:
            if name not in merged_children:
                assert DEFAULT_SCHEMA.merge_labels({name}) == {name}

    def test_surjective_onto_14(self):
        images = {DEFAULT_SCHEMA.merge_map[c] for c in CATEGORIES_23}
        assert images == set(CATEGORIES_14)

    def test_example_pay_gap(self):
        assert DEFAULT_SCHEMA.merge_labels({"Pay gap"}) == {"Hostile work environment"}

    def test_example_two_labels(self):
        assert DEFAULT_SCHEMA.merge_labels({"Rape", "Tone policing"}) == {
            "Sexual assault",
            "Moral policing and victim blaming",
        }

    def test_identity_on_body_shaming(self):
        assert DEFAULT_SCHEMA.merge_labels({"Body shaming"}) == {"Body shaming"}

    def test_merge_never_empties_and_never_grows(self):
        import itertools

        for combo in itertools.combinations(CATEGORIES_23, 2):
            out = DEFAULT_SCHEMA.merge_labels(set(combo))
            assert 1 <= len(out) <= 2

    def test_unknown_label_raises(self):
        with pytest.raises(SchemaError):
            DEFAULT_SCHEMA.merge_labels({"Not a category"})

    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "schema.txt"
        DEFAULT_SCHEMA.save(path)
        loaded = LabelSchema.load(path)
        assert loaded.categories_23 == CATEGORIES_23
        assert loaded.categories_14 == CATEGORIES_14
        assert loaded.merge_map == DEFAULT_SCHEMA.merge_map

    def test_malformed_schema_file(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("no arrow here\n")
        with pytest.raises(FormatError):
            LabelSchema.load(path)

    def test_incomplete_merge_map_rejected(self):
        with pytest.raises(SchemaError):
            LabelSchema(("A", "B"), {"A": "A"})
