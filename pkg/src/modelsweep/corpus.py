"""Sense-tagged text corpora and pre-extracted feature tables.

Two on-disk formats are supported, both UTF-8 and tab-separated:

* text corpus -- one instance per line, one sentence per instance::

      sense<TAB>target_index<TAB>word/POS word/POS ...

  The *last* ``/`` inside a token separates word from POS, so words that
  themselves contain slashes survive a round trip.

* feature corpus -- a header line naming the tag column first
  (``tag<TAB>name1<TAB>...``) followed by one value row per instance.
  The literal ``∅`` (U+2205) denotes the null POS value; it needs no
  special treatment here, it is a value like any other.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class CorpusFormatError(ValueError):
    """A malformed corpus line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Instance:
    """One occurrence of an ambiguous word inside a POS-tagged sentence."""

    sense: str
    tokens: tuple[tuple[str, str], ...]
    target_index: int

    def __post_init__(self):
        if not self.sense:
            raise ValueError("sense tag must be non-empty")
        if not self.tokens:
            raise ValueError("token list must be non-empty")
        if not 0 <= self.target_index < len(self.tokens):
            raise ValueError(
                f"target_index {self.target_index} out of range for "
                f"{len(self.tokens)} tokens")

    @property
    def target_word(self) -> str:
        return self.tokens[self.target_index][0]


@dataclass(frozen=True)
class FeatureVector:
    """Values of the contextual variables, plus the tag when it is known."""

    tag: str | None
    values: tuple[str, ...]


@dataclass(frozen=True)
class SplitCorpus:
    """A train/test partition; membership depends only on size and seed."""

    train: tuple
    test: tuple
    seed: int


def _parse_token(token: str, line_no: int) -> tuple[str, str]:
    word, sep, pos = token.rpartition("/")
    if not sep or not word or not pos:
        raise CorpusFormatError(line_no, f"token {token!r} is not word/POS")
    return word, pos


def parse_text_corpus(lines: Iterable[str]) -> list[Instance]:
    """Parse a text corpus; blank lines are skipped, order is preserved."""
    instances = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise CorpusFormatError(
                line_no, f"expected 3 tab-separated fields, got {len(fields)}")
        sense, index_text, token_text = fields
        if not sense:
            raise CorpusFormatError(line_no, "empty sense tag")
        try:
            target_index = int(index_text)
        except ValueError:
            raise CorpusFormatError(
                line_no, f"target index {index_text!r} is not an integer") from None
        tokens = tuple(_parse_token(t, line_no) for t in token_text.split())
        if not tokens:
            raise CorpusFormatError(line_no, "no tokens")
        if not 0 <= target_index < len(tokens):
            raise CorpusFormatError(
                line_no,
                f"target index {target_index} out of range for {len(tokens)} tokens")
        instances.append(Instance(sense, tokens, target_index))
    return instances


def format_instance(instance: Instance) -> str:
    """Render one instance as a corpus line (inverse of parsing)."""
    for word, pos in instance.tokens:
        if any(ch.isspace() for ch in word) or not word:
            raise ValueError(f"word {word!r} cannot be serialized")
        if "/" in pos or any(ch.isspace() for ch in pos) or not pos:
            raise ValueError(f"POS {pos!r} cannot be serialized")
    if "\t" in instance.sense or "\n" in instance.sense:
        raise ValueError(f"sense {instance.sense!r} cannot be serialized")
    tokens = " ".join(f"{w}/{p}" for w, p in instance.tokens)
    return f"{instance.sense}\t{instance.target_index}\t{tokens}"


def write_text_corpus(instances: Iterable[Instance], fh) -> None:
    for instance in instances:
        fh.write(format_instance(instance) + "\n")


def load_text_corpus(path) -> list[Instance]:
    with open(path, encoding="utf-8") as fh:
        return parse_text_corpus(fh)


def split(instances: Sequence, test_fraction: float, seed: int) -> SplitCorpus:
    """Deterministic random train/test split.

    The test size is round(test_fraction * N) with round-half-to-even,
    clamped so that neither side is empty whenever N >= 2.
    """
    n = len(instances)
    if n == 0:
        raise ValueError("cannot split an empty corpus")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction {test_fraction} not in (0, 1)")
    n_test = round(test_fraction * n)
    if n >= 2:
        n_test = min(max(n_test, 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(order[:n_test])
    train_idx = np.sort(order[n_test:])
    return SplitCorpus(
        train=tuple(instances[i] for i in train_idx),
        test=tuple(instances[i] for i in test_idx),
        seed=seed,
    )


def parse_feature_corpus(lines: Iterable[str]) -> tuple[list[str], list[FeatureVector]]:
    """Parse a feature corpus into (feature variable names, rows)."""
    it = iter(lines)
    try:
        header_line = next(it).rstrip("\n")
    except StopIteration:
        raise CorpusFormatError(1, "missing header line") from None
    header = header_line.split("\t")
    if header[0] != "tag":
        raise CorpusFormatError(1, "header must name the tag column first")
    names = header[1:]
    if len(set(names)) != len(names):
        raise CorpusFormatError(1, "duplicate variable names in header")
    rows = []
    for line_no, raw in enumerate(it, start=2):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise CorpusFormatError(
                line_no,
                f"row has {len(fields)} fields, header has {len(header)}")
        if not fields[0]:
            raise CorpusFormatError(line_no, "empty tag value")
        rows.append(FeatureVector(tag=fields[0], values=tuple(fields[1:])))
    return names, rows


def write_feature_corpus(names: Sequence[str], rows: Iterable[FeatureVector], fh) -> None:
    for name in names:
        if "\t" in name or "\n" in name or not name:
            raise ValueError(f"variable name {name!r} cannot be serialized")
    fh.write("tag\t" + "\t".join(names) + "\n")
    for row in rows:
        if row.tag is None:
            raise ValueError("feature corpus rows must carry a tag")
        fields = (row.tag,) + row.values
        if len(row.values) != len(names):
            raise ValueError(
                f"row arity {len(row.values)} does not match {len(names)} variables")
        for value in fields:
            if "\t" in value or "\n" in value or not value:
                raise ValueError(f"value {value!r} cannot be serialized")
        fh.write("\t".join(fields) + "\n")


def load_feature_corpus(path) -> tuple[list[str], list[FeatureVector]]:
    with open(path, encoding="utf-8") as fh:
        return parse_feature_corpus(fh)
