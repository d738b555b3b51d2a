"""Decomposable graphical models over a tag variable and categorical features.

A model form is an undirected graph over the variables. Only chordal
(decomposable) forms are supported: for those, maximum-likelihood fitting is
closed form, with the joint factorizing into clique marginals divided by
separator marginals, all observed relative frequencies. No smoothing is
applied anywhere; value combinations never observed in training carry
probability zero, which is exactly what drives the recall behaviour of the
classifiers built on top.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import FeatureVector
from .tables import CountTable, Levels, encode_feature_rows, encode_rows, flat_strides


class NotDecomposableError(ValueError):
    """Raised when an operation requires a chordal model form."""


def edge_key(a: str, b: str) -> tuple[str, str]:
    """Canonical (sorted) representation of an undirected edge."""
    if a == b:
        raise ValueError(f"self loop on {a!r}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class ModelForm:
    """An undirected dependency graph with one distinguished tag variable."""

    variables: tuple[str, ...]
    tag: str
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable names")
        if self.tag not in self.variables:
            raise ValueError(f"tag {self.tag!r} is not a declared variable")
        declared = set(self.variables)
        canonical = frozenset(edge_key(a, b) for a, b in self.edges)
        for a, b in canonical:
            if a not in declared or b not in declared:
                raise ValueError(f"edge ({a!r}, {b!r}) uses undeclared variables")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "edges", canonical)

    @property
    def feature_variables(self) -> tuple[str, ...]:
        return tuple(v for v in self.variables if v != self.tag)

    def has_edge(self, a: str, b: str) -> bool:
        return edge_key(a, b) in self.edges


def saturated_form(variables: Sequence[str], tag: str) -> ModelForm:
    """All variables pairwise interdependent."""
    edges = frozenset(edge_key(a, b) for a, b in itertools.combinations(variables, 2))
    return ModelForm(tuple(variables), tag, edges)


def naive_bayes_form(variables: Sequence[str], tag: str) -> ModelForm:
    """Features conditionally independent given the tag."""
    edges = frozenset(edge_key(tag, v) for v in variables if v != tag)
    return ModelForm(tuple(variables), tag, edges)


def independence_form(variables: Sequence[str], tag: str) -> ModelForm:
    """All variables mutually independent."""
    return ModelForm(tuple(variables), tag, frozenset())


def remove_edge(form: ModelForm, edge: tuple[str, str]) -> ModelForm:
    edge = edge_key(*edge)
    if edge not in form.edges:
        raise ValueError(f"edge {edge} is not in the form")
    return ModelForm(form.variables, form.tag, form.edges - {edge})


def complexity(form: ModelForm) -> int:
    """Number of pairwise interdependencies in the form."""
    return len(form.edges)


def _neighbors(form: ModelForm) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {v: set() for v in form.variables}
    for a, b in form.edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _mcs_visit_order(form: ModelForm, adj) -> list[str]:
    """Maximum-cardinality search; ties broken by declaration order."""
    weight = dict.fromkeys(form.variables, 0)
    unvisited = dict.fromkeys(form.variables)
    order = []
    while unvisited:
        v = max(unvisited, key=weight.__getitem__)
        del unvisited[v]
        order.append(v)
        for u in adj[v]:
            if u in unvisited:
                weight[u] += 1
    return order


def is_decomposable(form: ModelForm) -> bool:
    """True iff the graph is chordal."""
    try:
        junction_structure(form)
    except NotDecomposableError:
        return False
    return True


@functools.lru_cache(maxsize=None)
def junction_structure(form: ModelForm):
    """Maximal cliques in running-intersection order, with separators.

    Returns ``(cliques, separators)``: aligned tuples of variable-name
    tuples. ``separators[0]`` is always empty; an empty separator later in
    the sequence starts a new connected component. Raises
    :class:`NotDecomposableError` when the graph is not chordal.
    """
    adj = _neighbors(form)
    order = _mcs_visit_order(form, adj)
    rank = {v: i for i, v in enumerate(order)}
    position = {v: i for i, v in enumerate(form.variables)}

    candidates: list[frozenset[str]] = []
    for i, v in enumerate(order):
        earlier = {u for u in adj[v] if rank[u] < i}
        for a, b in itertools.combinations(sorted(earlier), 2):
            if b not in adj[a]:
                raise NotDecomposableError(
                    f"graph is not chordal: {a!r}, {b!r} both precede {v!r} "
                    "but are not adjacent")
        candidates.append(frozenset(earlier | {v}))

    maximal: list[frozenset[str]] = []
    for i, cand in enumerate(candidates):
        if not any(cand < other for other in candidates):
            maximal.append(cand)

    cliques = tuple(tuple(sorted(c, key=position.__getitem__)) for c in maximal)
    separators = []
    seen: set[str] = set()
    for i, clique in enumerate(cliques):
        sep = tuple(v for v in clique if v in seen)
        if sep and not any(set(sep) <= set(cliques[k]) for k in range(i)):
            raise AssertionError("running intersection property violated")
        separators.append(sep)
        seen.update(clique)
    return cliques, tuple(separators)


def maximal_cliques(form: ModelForm) -> tuple[tuple[str, ...], ...]:
    return junction_structure(form)[0]


def model_dimension(form: ModelForm, levels: Levels) -> int:
    """Free parameters of the decomposable family over the given domains."""
    cliques, separators = junction_structure(form)
    dim = 0
    for clique in cliques:
        size = 1
        for v in clique:
            size *= len(levels[v])
        dim += size - 1
    for sep in separators:
        size = 1
        for v in sep:
            size *= len(levels[v])
        dim -= size - 1
    return dim


@dataclass(eq=False)
class _CliquePlan:
    """Precomputed lookup structure for forward sampling one clique."""

    cols: np.ndarray
    cells: np.ndarray
    probs: np.ndarray
    sep_cols: np.ndarray
    sep_strides: np.ndarray
    order: np.ndarray
    keys: np.ndarray
    starts: np.ndarray
    stops: np.ndarray


def _make_clique_plan(cols, shape, cells, probs, sep_positions, sep_cols,
                      sep_shape) -> _CliquePlan:
    probs = probs / probs.sum()
    if len(sep_cols) == 0:
        empty = np.empty(0, dtype=np.int64)
        return _CliquePlan(cols, cells, probs, np.empty(0, dtype=np.int64),
                           empty, empty, empty, empty, empty)
    sep_strides = flat_strides(sep_shape)
    entry_sep = cells[:, sep_positions] @ sep_strides
    order = np.argsort(entry_sep, kind="stable")
    keys, starts = np.unique(entry_sep[order], return_index=True)
    stops = np.append(starts[1:], len(order))
    return _CliquePlan(cols, cells, probs, sep_cols, sep_strides,
                       order, keys, starts.astype(np.int64), stops.astype(np.int64))


def _forward_sample(plans: Sequence[_CliquePlan], n_vars: int, n: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Sample n assignments clique by clique, conditioning on separators."""
    out = np.zeros((n, n_vars), dtype=np.int64)
    for plan in plans:
        if plan.sep_cols.size == 0:
            idx = rng.choice(len(plan.probs), size=n, p=plan.probs)
            out[:, plan.cols] = plan.cells[idx]
            continue
        row_sep = out[:, plan.sep_cols] @ plan.sep_strides
        for sep_value in np.unique(row_sep):
            rows = np.flatnonzero(row_sep == sep_value)
            g = np.searchsorted(plan.keys, sep_value)
            if g >= len(plan.keys) or plan.keys[g] != sep_value:
                raise AssertionError("sampled an unsupported separator configuration")
            entries = plan.order[plan.starts[g]:plan.stops[g]]
            weights = plan.probs[entries]
            weights = weights / weights.sum()
            pick = entries[rng.choice(len(entries), size=len(rows), p=weights)]
            out[rows[:, None], plan.cols] = plan.cells[pick]
    return out


@dataclass(eq=False)
class FittedModel:
    """A model form with maximum-likelihood clique and separator marginals.

    The implied joint probability of a full assignment x is the product of
    clique relative frequencies divided by separator relative frequencies;
    it is zero as soon as any clique configuration was never observed.
    """

    form: ModelForm
    levels: Levels
    cliques: tuple[tuple[str, ...], ...]
    separators: tuple[tuple[str, ...], ...]
    clique_tables: tuple[CountTable, ...]
    separator_tables: tuple[CountTable, ...]
    n: int
    tag_counts: np.ndarray
    _columns: dict[str, int] = field(init=False, repr=False)
    _plans: list | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self._columns = {name: j for j, name in enumerate(self.levels)}

    @property
    def variable_order(self) -> tuple[str, ...]:
        """Column order used by all encoded-matrix methods."""
        return tuple(self.levels)

    @property
    def tag_levels(self) -> list[str]:
        return self.levels[self.form.tag]

    @property
    def dimension(self) -> int:
        return model_dimension(self.form, self.levels)

    def log_likelihood(self) -> float:
        """Log-likelihood of the training data under the fitted joint."""
        total = 0.0
        for table in self.clique_tables:
            c = table.counts.astype(np.float64)
            total += float(np.sum(c * np.log(c / self.n)))
        for table in self.separator_tables:
            c = table.counts.astype(np.float64)
            total -= float(np.sum(c * np.log(c / self.n)))
        return total

    def _flat(self, codes: np.ndarray, variables: tuple[str, ...],
              shape: tuple[int, ...]) -> np.ndarray:
        cols = [self._columns[v] for v in variables]
        return codes[:, cols] @ flat_strides(shape)

    def joint_rows(self, full_codes: np.ndarray) -> np.ndarray:
        """Vectorized joint probabilities for encoded full assignments."""
        n_rows = full_codes.shape[0]
        values = np.ones(n_rows, dtype=np.float64)
        supported = np.ones(n_rows, dtype=bool)
        for clique, table in zip(self.cliques, self.clique_tables):
            counts = table.lookup(self._flat(full_codes, clique, table.shape))
            supported &= counts > 0
            values *= counts / self.n
        for sep, table in zip(self.separators, self.separator_tables):
            if not sep:
                continue
            counts = table.lookup(self._flat(full_codes, sep, table.shape))
            values *= self.n / np.where(counts > 0, counts, 1)
        return np.where(supported, values, 0.0)

    def _encode_assignment(self, assignment) -> np.ndarray:
        names = self.variable_order
        if isinstance(assignment, Mapping):
            missing = [v for v in names if v not in assignment]
            if missing:
                raise ValueError(f"assignment misses variables {missing}")
            values = [assignment[v] for v in names]
        else:
            values = list(assignment)
            if len(values) != len(names):
                raise ValueError(
                    f"assignment has {len(values)} values for {len(names)} variables")
        codes = np.empty((1, len(names)), dtype=np.int64)
        for j, (name, value) in enumerate(zip(names, values)):
            try:
                codes[0, j] = self.levels[name].index(value)
            except ValueError:
                raise ValueError(
                    f"value {value!r} not in the domain of {name!r}") from None
        return codes

    def joint_prob(self, assignment) -> float:
        """Joint probability of one full assignment (mapping or sequence)."""
        return float(self.joint_rows(self._encode_assignment(assignment))[0])

    def posterior_rows(self, feature_codes: np.ndarray) -> np.ndarray:
        """Unnormalized per-tag joint scores, shape (N, num_tags)."""
        names = self.variable_order
        tag_col = self._columns[self.form.tag]
        feature_cols = [j for j in range(len(names)) if j != tag_col]
        n_rows = feature_codes.shape[0]
        full = np.empty((n_rows, len(names)), dtype=np.int64)
        full[:, feature_cols] = feature_codes
        scores = np.empty((n_rows, len(self.tag_levels)), dtype=np.float64)
        for t in range(len(self.tag_levels)):
            full[:, tag_col] = t
            scores[:, t] = self.joint_rows(full)
        return scores

    def _tag_priority(self) -> np.ndarray:
        # Highest training frequency first, then tag level order.
        t = len(self.tag_levels)
        return np.lexsort((np.arange(t), -self.tag_counts))

    def classify_codes(self, feature_codes: np.ndarray) -> np.ndarray:
        """Vectorized classification; -1 marks unassignable contexts."""
        scores = self.posterior_rows(feature_codes)
        priority = self._tag_priority()
        ordered = scores[:, priority]
        best = np.argmax(ordered, axis=1)  # first max respects the priority
        rows = np.arange(scores.shape[0])
        assigned = ordered[rows, best] > 0
        return np.where(assigned, priority[best], -1)

    def _encode_features(self, features) -> np.ndarray:
        if isinstance(features, FeatureVector):
            values = features.values
        else:
            values = tuple(features)
        names = [v for v in self.variable_order if v != self.form.tag]
        if len(values) != len(names):
            raise ValueError(
                f"expected {len(names)} feature values, got {len(values)}")
        codes = np.empty((1, len(names)), dtype=np.int64)
        for j, (name, value) in enumerate(zip(names, values)):
            try:
                codes[0, j] = self.levels[name].index(value)
            except ValueError:
                raise ValueError(
                    f"value {value!r} not in the domain of {name!r}") from None
        return codes

    def posterior(self, features) -> dict[str, float] | None:
        """Tag distribution given the context, or None when unassignable."""
        scores = self.posterior_rows(self._encode_features(features))[0]
        total = scores.sum()
        if total <= 0:
            return None
        return {tag: float(s / total) for tag, s in zip(self.tag_levels, scores)}

    def classify(self, features) -> str | None:
        code = int(self.classify_codes(self._encode_features(features))[0])
        return None if code < 0 else self.tag_levels[code]

    def _sampling_plans(self):
        if self._plans is None:
            plans = []
            for clique, sep, table in zip(self.cliques, self.separators,
                                          self.clique_tables):
                cols = np.asarray([self._columns[v] for v in clique], dtype=np.int64)
                sep_positions = np.asarray(
                    [clique.index(v) for v in sep], dtype=np.int64)
                sep_cols = np.asarray([self._columns[v] for v in sep], dtype=np.int64)
                sep_shape = tuple(len(self.levels[v]) for v in sep)
                plans.append(_make_clique_plan(
                    cols, table.shape, table.decode_cells(),
                    table.counts.astype(np.float64), sep_positions, sep_cols,
                    sep_shape))
            self._plans = plans
        return self._plans

    def sample_codes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw n assignments from the fitted joint (junction-tree order)."""
        return _forward_sample(self._sampling_plans(), len(self.levels), n, rng)

    def sample_rows(self, n: int, rng: np.random.Generator) -> list[FeatureVector]:
        codes = self.sample_codes(n, rng)
        names = self.variable_order
        tag_col = self._columns[self.form.tag]
        feature_names = [v for v in names if v != self.form.tag]
        feature_cols = [self._columns[v] for v in feature_names]
        rows = []
        for i in range(n):
            tag = self.tag_levels[codes[i, tag_col]]
            values = tuple(self.levels[v][codes[i, c]]
                           for v, c in zip(feature_names, feature_cols))
            rows.append(FeatureVector(tag=tag, values=values))
        return rows


def fit_ml_encoded(form: ModelForm, codes: np.ndarray, levels: Levels) -> FittedModel:
    """Fit from an already-encoded (N, V) matrix in ``levels`` column order."""
    if codes.shape[0] == 0:
        raise ValueError("cannot fit on empty data")
    if set(form.variables) != set(levels):
        raise ValueError("form variables do not match the declared domains")
    cliques, separators = junction_structure(form)
    columns = {name: j for j, name in enumerate(levels)}
    clique_tables = []
    for clique in cliques:
        cols = [columns[v] for v in clique]
        shape = tuple(len(levels[v]) for v in clique)
        clique_tables.append(CountTable.from_code_matrix(clique, shape, codes[:, cols]))
    separator_tables = []
    for sep in separators:
        cols = [columns[v] for v in sep]
        shape = tuple(len(levels[v]) for v in sep)
        separator_tables.append(CountTable.from_code_matrix(sep, shape, codes[:, cols]))
    tag_counts = np.bincount(codes[:, columns[form.tag]],
                             minlength=len(levels[form.tag])).astype(np.int64)
    return FittedModel(
        form=form,
        levels=levels,
        cliques=cliques,
        separators=separators,
        clique_tables=tuple(clique_tables),
        separator_tables=tuple(separator_tables),
        n=int(codes.shape[0]),
        tag_counts=tag_counts,
    )


def fit_ml(form: ModelForm, data: Sequence[FeatureVector], levels: Levels) -> FittedModel:
    """Maximum-likelihood fit of a decomposable form.

    Clique and separator tables are plain observed counts; the implied joint
    assigns zero probability to any assignment whose clique configuration
    never occurred in ``data``.
    """
    if not data:
        raise ValueError("cannot fit on empty data")
    codes = encode_rows(data, levels, form.tag)
    return fit_ml_encoded(form, codes, levels)
