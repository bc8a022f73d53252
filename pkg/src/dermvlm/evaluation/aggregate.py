"""Likert aggregation with exact decimal arithmetic.

Percentages are computed from integer counts with half-up rounding to two
decimals. The positive rate is reported three ways: as the exact fraction,
as that fraction rounded, and as the sum of the two already-rounded
components (the convention some published tallies use), so either figure
can be reproduced.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from math import ceil

from ..errors import InvalidInputError
from .forms import LIKERT_LEVELS, N_ITEMS, EvalRecord, validate_record

TWO_PLACES = Decimal("0.01")


def pct_half_up(numerator: int, denominator: int) -> Decimal:
    """Exact percentage numerator/denominator, rounded half-up to 2 decimals."""
    if denominator <= 0:
        raise InvalidInputError("denominator must be positive")
    return (Decimal(numerator) * 100 / Decimal(denominator)).quantize(
        TWO_PLACES, rounding=ROUND_HALF_UP
    )


def nearest_rank(samples: list[float], q: float) -> float:
    """Order-statistic percentile: the ceil(q*n)-th smallest sample."""
    if not samples:
        raise InvalidInputError("no samples")
    if not 0 < q <= 1:
        raise InvalidInputError("q must be in (0, 1]")
    ordered = sorted(samples)
    return ordered[ceil(q * len(ordered)) - 1]


@dataclass
class ItemSummary:
    item: int
    text: str
    counts: dict[str, int]
    level_pct: dict[str, Decimal]
    positive_exact: Fraction
    positive_pct: Decimal  # rounded from the exact fraction
    positive_pct_from_rounded: Decimal  # sum of the two rounded components

    def as_dict(self) -> dict:
        return {
            "item": self.item,
            "text": self.text,
            "counts": dict(self.counts),
            "level_pct": {k: str(v) for k, v in self.level_pct.items()},
            "positive_exact": f"{self.positive_exact.numerator}/{self.positive_exact.denominator}",
            "positive_pct": str(self.positive_pct),
            "positive_pct_from_rounded": str(self.positive_pct_from_rounded),
        }


@dataclass
class AggregateReport:
    items: list[ItemSummary]
    rating_count: int
    case_count: int
    latency_percentiles: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "items": [item.as_dict() for item in self.items],
            "rating_count": self.rating_count,
            "case_count": self.case_count,
            "latency_percentiles": dict(self.latency_percentiles),
        }


def aggregate(records: list[EvalRecord], form_items: tuple[str, ...] | None = None) -> AggregateReport:
    from .forms import EVAL_FORM_ITEMS

    form_items = form_items or EVAL_FORM_ITEMS
    if not records:
        raise InvalidInputError("no records to aggregate")
    for record in records:
        validate_record(record)
    n = len(records)
    items = []
    for i in range(1, N_ITEMS + 1):
        counts = {level: 0 for level in LIKERT_LEVELS}
        for record in records:
            counts[record.ratings[i]] += 1
        level_pct = {level: pct_half_up(counts[level], n) for level in LIKERT_LEVELS}
        positive_count = counts["strongly agree"] + counts["agree"]
        items.append(
            ItemSummary(
                item=i,
                text=form_items[i - 1],
                counts=counts,
                level_pct=level_pct,
                positive_exact=Fraction(positive_count, n),
                positive_pct=pct_half_up(positive_count, n),
                positive_pct_from_rounded=level_pct["strongly agree"] + level_pct["agree"],
            )
        )
    latencies = [r.latency_s for r in records]
    percentiles = {
        "p50": nearest_rank(latencies, 0.50),
        "p90": nearest_rank(latencies, 0.90),
        "p99": nearest_rank(latencies, 0.99),
    }
    return AggregateReport(
        items=items,
        rating_count=n,
        case_count=len({r.case_id for r in records}),
        latency_percentiles=percentiles,
    )
