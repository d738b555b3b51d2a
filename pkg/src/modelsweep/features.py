"""Contextual feature variables: morphology, collocations, POS windows.

The schema is fixed in shape: an optional morphological variable for the
target word, up to three collocation presence variables, and the coarse POS
tags of the two words on either side of the target. Coarse POS tags are the
first character of the corpus tag; positions beyond the sentence boundary
take the null value ``∅``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import FeatureVector, Instance
from .stats import independence_test

NULL_POS = "∅"
POS_OFFSETS = (-2, -1, 1, 2)
MORPH_RULES = ("none", "noun-plural", "verb-tense-suffix")

# Longest-suffix match, in this order.
_VERB_SUFFIXES = (("ing", "-ing"), ("ed", "-ed"), ("s", "-s"))


@dataclass(frozen=True)
class FeatureSchema:
    """Which variables to extract for one target word."""

    morphology: str
    collocations: tuple[str, ...]
    case_sensitive: bool = False

    def __post_init__(self):
        if self.morphology not in MORPH_RULES:
            raise ValueError(f"unknown morphology rule {self.morphology!r}")
        if len(set(self.collocations)) != len(self.collocations):
            raise ValueError("duplicate collocation forms")
        object.__setattr__(self, "collocations", tuple(self.collocations))

    @property
    def variable_names(self) -> tuple[str, ...]:
        names = []
        if self.morphology != "none":
            names.append("morph")
        names.extend(f"C{i + 1}" for i in range(len(self.collocations)))
        names.extend(f"P_{o:+d}" for o in POS_OFFSETS)
        return tuple(names)


def map_pos(pos: str | None) -> str:
    """Coarse POS value: first character of the tag, ``∅`` at boundaries."""
    if not pos:
        return NULL_POS
    return pos[0]


def morph_value(instance: Instance, rule: str) -> str:
    """Morphological value of the target word under the given rule."""
    word = instance.target_word.casefold()
    if rule == "none":
        return "-"
    if rule == "noun-plural":
        return "plural" if word.endswith("s") else "singular"
    if rule == "verb-tense-suffix":
        for suffix, value in _VERB_SUFFIXES:
            if word.endswith(suffix):
                return value
        return "base"
    raise ValueError(f"unknown morphology rule {rule!r}")


def _fold(case_sensitive: bool) -> Callable[[str], str]:
    return (lambda s: s) if case_sensitive else str.casefold


def select_collocations(train: Sequence[Instance], pool_size: int = 400,
                        k: int = 3, tester: Callable[[np.ndarray], float] | None = None,
                        case_sensitive: bool = False) -> list[str]:
    """Pick the k spelling forms whose presence depends most on the tag.

    Candidates are the ``pool_size`` most frequent spelling forms in the
    training sentences, excluding the target word's own surface forms. Each
    candidate's sentence-level presence is crossed with the tag and scored
    by ``tester`` (a callable from a 2-by-T count table to a p-value;
    defaults to the asymptotic G-squared independence test). Smaller
    p-values rank first; ties break by higher frequency, then by form.
    """
    if not train:
        raise ValueError("empty training corpus")
    fold = _fold(case_sensitive)
    if tester is None:
        tester = lambda table: independence_test(table).p_asymptotic

    target_forms = {fold(inst.target_word) for inst in train}
    sentence_forms = [
        {fold(word) for word, _ in inst.tokens} for inst in train]
    frequency: Counter[str] = Counter()
    for inst in train:
        for word, _ in inst.tokens:
            form = fold(word)
            if form not in target_forms:
                frequency[form] += 1
    candidates = sorted(frequency, key=lambda f: (-frequency[f], f))[:pool_size]

    tag_levels = sorted({inst.sense for inst in train})
    tag_index = {t: i for i, t in enumerate(tag_levels)}
    ranked = []
    for form in candidates:
        table = np.zeros((2, len(tag_levels)), dtype=np.int64)
        for forms, inst in zip(sentence_forms, train):
            row = 0 if form in forms else 1
            table[row, tag_index[inst.sense]] += 1
        ranked.append((tester(table), -frequency[form], form))
    ranked.sort()
    return [form for _, _, form in ranked[:k]]


def extract(instance: Instance, schema: FeatureSchema) -> FeatureVector:
    """Deterministic feature vector for one instance under a schema."""
    fold = _fold(schema.case_sensitive)
    values = []
    if schema.morphology != "none":
        values.append(morph_value(instance, schema.morphology))
    present = {fold(word) for word, _ in instance.tokens}
    for form in schema.collocations:
        values.append("yes" if fold(form) in present else "no")
    for offset in POS_OFFSETS:
        j = instance.target_index + offset
        pos = instance.tokens[j][1] if 0 <= j < len(instance.tokens) else None
        values.append(map_pos(pos))
    return FeatureVector(tag=instance.sense, values=tuple(values))


def extract_corpus(instances: Sequence[Instance],
                   schema: FeatureSchema) -> list[FeatureVector]:
    return [extract(inst, schema) for inst in instances]


def format_schema(schema: FeatureSchema) -> str:
    lines = [f"morphology\t{schema.morphology}",
             f"case_sensitive\t{'true' if schema.case_sensitive else 'false'}"]
    lines.extend(f"collocation\t{form}" for form in schema.collocations)
    return "\n".join(lines) + "\n"


def parse_schema(lines) -> FeatureSchema:
    morphology = None
    case_sensitive = False
    collocations: list[str] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition("\t")
        if not sep:
            raise ValueError(f"schema line {line_no}: expected key<TAB>value")
        if key == "morphology":
            morphology = value
        elif key == "case_sensitive":
            if value not in ("true", "false"):
                raise ValueError(f"schema line {line_no}: bad boolean {value!r}")
            case_sensitive = value == "true"
        elif key == "collocation":
            collocations.append(value)
        else:
            raise ValueError(f"schema line {line_no}: unknown key {key!r}")
    if morphology is None:
        raise ValueError("schema is missing the morphology line")
    return FeatureSchema(morphology=morphology, collocations=tuple(collocations),
                         case_sensitive=case_sensitive)


def load_schema(path) -> FeatureSchema:
    with open(path, encoding="utf-8") as fh:
        return parse_schema(fh)
