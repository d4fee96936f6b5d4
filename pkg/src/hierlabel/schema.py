"""The category schema: 23 annotation categories, the merge onto the 14
categories used for classification, and the line-oriented schema file.
"""

from __future__ import annotations

from .errors import FormatError, SchemaError

CATEGORIES_23 = (
    "Role stereotyping",
    "Attribute stereotyping",
    "Body shaming",
    "Hyper-sexualization (excluding body shaming)",
    "Internalized sexism",
    "Pay gap",
    "Hostile work environment (excluding pay gap)",
    "Denial or trivialization of sexist misconduct",
    "Threats",
    "Rape",
    "Sexual assault (excluding rape)",
    "Sexual harassment (excluding assault)",
    "Tone policing",
    "Moral policing (excluding tone policing)",
    "Victim blaming",
    "Slut shaming",
    "Motherhood-related discrimination",
    "Menstruation-related discrimination",
    "Religion-based sexism",
    "Physical violence (excluding sexual violence)",
    "Mansplaining",
    "Gaslighting",
    "Other",
)

MERGE_MAP = {
    "Role stereotyping": "Role stereotyping",
    "Attribute stereotyping": "Attribute stereotyping",
    "Body shaming": "Body shaming",
    "Hyper-sexualization (excluding body shaming)": "Hyper-sexualization (excluding body shaming)",
    "Internalized sexism": "Internalized sexism",
    "Pay gap": "Hostile work environment",
    "Hostile work environment (excluding pay gap)": "Hostile work environment",
    "Denial or trivialization of sexist misconduct": "Denial or trivialization of sexist misconduct",
    "Threats": "Threats",
    "Rape": "Sexual assault",
    "Sexual assault (excluding rape)": "Sexual assault",
    "Sexual harassment (excluding assault)": "Sexual harassment (excluding assault)",
    "Tone policing": "Moral policing and victim blaming",
    "Moral policing (excluding tone policing)": "Moral policing and victim blaming",
    "Victim blaming": "Moral policing and victim blaming",
    "Slut shaming": "Slut shaming",
    "Motherhood-related discrimination": "Motherhood and menstruation related discrimination",
    "Menstruation-related discrimination": "Motherhood and menstruation related discrimination",
    "Religion-based sexism": "Other",
    "Physical violence (excluding sexual violence)": "Other",
    "Mansplaining": "Other",
    "Gaslighting": "Other",
    "Other": "Other",
}


def _merged_order(categories, merge_map):
    seen = []
    for name in categories:
        target = merge_map[name]
        if target not in seen:
            seen.append(target)
    return tuple(seen)


CATEGORIES_14 = _merged_order(CATEGORIES_23, MERGE_MAP)


class LabelSchema:
    """Ordered 23-category list plus a total, surjective merge onto the
    merged category list."""

    def __init__(self, categories_23=CATEGORIES_23, merge_map=MERGE_MAP):
        self.categories_23 = tuple(categories_23)
        self.merge_map = dict(merge_map)
        missing = [c for c in self.categories_23 if c not in self.merge_map]
        if missing:
            raise SchemaError(f"merge map misses categories: {missing}")
        extra = [c for c in self.merge_map if c not in self.categories_23]
        if extra:
            raise SchemaError(f"merge map names unknown categories: {extra}")
        self.categories_14 = _merged_order(self.categories_23, self.merge_map)

    def merge_labels(self, labels) -> set[str]:
        """Image of a 23-space label set under the merge map."""
        out = set()
        for label in labels:
            if label not in self.merge_map:
                raise SchemaError(f"unknown category: {label!r}")
            out.add(self.merge_map[label])
        return out

    def validate_labels(self, labels, space: int):
        universe = self.categories_23 if space == 23 else self.categories_14
        for label in labels:
            if label not in universe:
                raise SchemaError(f"unknown category in {space}-label space: {label!r}")

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for child in self.categories_23:
                fh.write(f"{child} -> {self.merge_map[child]}\n")

    @classmethod
    def load(cls, path) -> "LabelSchema":
        categories = []
        merge_map = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if " -> " not in line:
                    raise FormatError(f"{path}:{lineno}: expected 'child -> parent'")
                child, parent = (part.strip() for part in line.split(" -> ", 1))
                if child in merge_map:
                    raise FormatError(f"{path}:{lineno}: duplicate category {child!r}")
                categories.append(child)
                merge_map[child] = parent
        if not categories:
            raise FormatError(f"{path}: empty schema file")
        return cls(tuple(categories), merge_map)


DEFAULT_SCHEMA = LabelSchema()
