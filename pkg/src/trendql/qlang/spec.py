"""Validated comparison-query model: constraints, grouping/measure pairs,
scorers, and the full CompareSpec consumed by the planner and executor."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import AnalysisError

AGGREGATES = ("AVG", "SUM", "MIN", "MAX", "COUNT")
SCORER_AGGREGATES = ("SUM", "AVG", "MIN", "MAX")

ALL = object()  # sentinel: enumerate every distinct value of the attribute


@dataclass(frozen=True)
class ConstraintItem:
    """One conjunct: ``attribute = value`` or ``attribute`` (all values)."""

    attribute: str
    value: object = ALL
    alias: str = ""

    @property
    def enumerates(self) -> bool:
        return self.value is ALL


@dataclass(frozen=True)
class ConstraintSpec:
    items: tuple[ConstraintItem, ...]

    def __post_init__(self):
        attrs = [i.attribute for i in self.items]
        if len(set(attrs)) != len(attrs):
            raise AnalysisError("constraint attributes must be distinct within one side")
        if not self.items:
            raise AnalysisError("a trendset needs at least one constraint item")

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(i.attribute for i in self.items)

    @property
    def fixed_items(self) -> tuple[ConstraintItem, ...]:
        return tuple(i for i in self.items if not i.enumerates)

    def shape_key(self):
        """Structural identity ignoring aliases, for unordered-pair detection."""
        return tuple(sorted((i.attribute, None if i.enumerates else i.value)
                            for i in self.items))


@dataclass(frozen=True)
class Measure:
    agg: str
    attribute: str

    def __post_init__(self):
        if self.agg not in AGGREGATES:
            raise AnalysisError(f"unknown aggregate {self.agg!r}")


@dataclass(frozen=True)
class GMPair:
    """Grouping column + aggregated measure, with output flag-column aliases."""

    grouping: str
    measure: Measure
    grouping_alias: str = ""
    measure_alias: str = ""

    def __post_init__(self):
        if self.grouping == self.measure.attribute:
            raise AnalysisError(
                f"grouping and measure attribute must differ ({self.grouping!r})")

    def key(self):
        return (self.grouping, self.measure.agg, self.measure.attribute)


@dataclass(frozen=True)
class TrendsetSpec:
    constraint: ConstraintSpec
    gm_pairs: tuple[GMPair, ...]

    def __post_init__(self):
        if not self.gm_pairs:
            raise AnalysisError("trendset needs at least one (grouping, measure) pair")
        keys = [gm.key() for gm in self.gm_pairs]
        if len(set(keys)) != len(keys):
            raise AnalysisError("duplicate (grouping, measure) pair in trendset")


@dataclass(frozen=True)
class ScorerSpec:
    """``AGG OVER DIFF(p)`` aggregated-distance scorer."""

    agg: str
    p: int
    alias: str = "score"

    def __post_init__(self):
        if self.agg not in SCORER_AGGREGATES:
            raise AnalysisError(f"unknown scorer aggregate {self.agg!r}")
        if self.p < 1:
            raise AnalysisError("p must be >= 1")


@dataclass(frozen=True)
class Predicate:
    """Conjunction of simple comparisons against literals."""

    conjuncts: tuple[tuple[str, str, object], ...]  # (attribute, op, literal)

    def attributes(self) -> set[str]:
        return {a for a, _, _ in self.conjuncts}


@dataclass(frozen=True)
class CompareSpec:
    source: str
    left: TrendsetSpec
    right: TrendsetSpec
    scorer: ScorerSpec
    direction: str = "DESC"
    k: int | None = None
    prefilter: Predicate | None = None
    select: tuple[str, ...] = ()

    def __post_init__(self):
        if self.direction not in ("ASC", "DESC"):
            raise AnalysisError(f"direction must be ASC or DESC, not {self.direction!r}")
        if self.k is not None and self.k < 1:
            raise AnalysisError("k must be a positive integer")
        check_comparability(self.left, self.right)

    @property
    def gm_pairs(self) -> tuple[GMPair, ...]:
        return self.left.gm_pairs

    @property
    def symmetric(self) -> bool:
        """Both sides describe the same trendset; unordered pairs are emitted once."""
        return self.left.constraint.shape_key() == self.right.constraint.shape_key()

    def constraint_attributes(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for item in self.left.constraint.items + self.right.constraint.items:
            seen.setdefault(item.attribute)
        return tuple(seen)

    def output_columns(self) -> "OutputSchema":
        return OutputSchema.for_spec(self)


def check_comparability(left: TrendsetSpec, right: TrendsetSpec) -> None:
    """Both sides must carry identical (grouping, measure) sets."""
    lk = {gm.key() for gm in left.gm_pairs}
    rk = {gm.key() for gm in right.gm_pairs}
    if lk != rk:
        raise AnalysisError(
            "non-comparable trendsets: (grouping, measure) pairs differ "
            f"({sorted(lk - rk)} vs {sorted(rk - lk)})")


@dataclass(frozen=True)
class OutputSchema:
    """Score-relation shape: constraint columns, flag columns, score.

    Constraint aliases shared between the two sides appear once.  Flag
    aliases are deduplicated in order of first appearance, so a measure
    alias reused across pairs yields a single flag column.
    """

    constraint_aliases: tuple[tuple[str, str, str], ...]  # (alias, side, attribute)
    grouping_aliases: tuple[str, ...]
    measure_aliases: tuple[str, ...]
    score_alias: str

    @classmethod
    def for_spec(cls, spec: CompareSpec) -> "OutputSchema":
        constraint: list[tuple[str, str, str]] = []
        seen = set()
        for side, cs in (("left", spec.left.constraint), ("right", spec.right.constraint)):
            for item in cs.items:
                alias = item.alias or item.attribute
                if alias not in seen:
                    seen.add(alias)
                    constraint.append((alias, side, item.attribute))
        groupings: dict[str, None] = {}
        measures: dict[str, None] = {}
        for gm in spec.gm_pairs:
            groupings.setdefault(gm.grouping_alias or gm.grouping)
            measures.setdefault(gm.measure_alias or f"{gm.measure.agg}({gm.measure.attribute})")
        return cls(tuple(constraint), tuple(groupings), tuple(measures), spec.scorer.alias)

    @property
    def names(self) -> tuple[str, ...]:
        return (tuple(a for a, _, _ in self.constraint_aliases)
                + self.grouping_aliases + self.measure_aliases + (self.score_alias,))
