"""Event-log ingestion into monthly treatment/control records.

Inputs are three CSV files:

* events: ``customer_id,event,time,offer_id,amount``. ``time`` is in days
  since the start of the log. Only ``offer received`` and ``transaction``
  events are used; other event kinds are accepted and ignored.
* profiles: ``customer_id,age,gender,income,became_member_on``.
* portfolio: ``id,type,channels,difficulty,duration,reward`` with the offer
  duration in days and the reward paid by the company.

Months are 30-day blocks numbered from 1. For every offer a customer
receives, a transaction belongs to the offer's promotional window iff its
timestamp lies in ``[received, received + duration]`` (both ends
inclusive). The treatment row sums the window's transactions and rescales to
a 30-day rate by ``30 / duration``. The control row for the same
customer-month sums the month's transactions outside every window and
rescales by ``30 / non_promotional_days``. A record is profitable when its
30-day purchase exceeds the offer reward (zero for control rows).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from uplift_sgt.errors import MalformedRow, MissingColumn

MONTH_DAYS = 30.0
NO_CAMPAIGN = "none"

EVENT_COLUMNS = ("customer_id", "event", "time", "offer_id", "amount")
PROFILE_COLUMNS = ("customer_id", "age", "gender", "income", "became_member_on")
PORTFOLIO_COLUMNS = ("id", "type", "channels", "difficulty", "duration", "reward")
RECORD_COLUMNS = (
    "customer_id",
    "month",
    "campaign_id",
    "purchase",
    "profitable",
    "split",
    "age",
    "gender",
    "income",
)

OFFER_RECEIVED = "offer received"
TRANSACTION = "transaction"


@dataclass(frozen=True)
class EventRecord:
    """One monthly observation of a customer under one arm.

    ``campaign_id`` is ``None`` for non-promotional (control) behaviour.
    """

    customer_id: str
    month: int
    campaign_id: str | None
    purchase: float
    profitable: int = 0
    split: str = "train"

    def __post_init__(self):
        if not math.isfinite(self.purchase) or self.purchase < 0:
            raise ValueError(f"purchase must be finite and non-negative, got {self.purchase}")


@dataclass(frozen=True)
class Offer:
    offer_id: str
    duration: float
    reward: float


@dataclass(frozen=True)
class Profile:
    customer_id: str
    age: float
    gender: str
    income: float
    became_member_on: str


@dataclass(frozen=True)
class IngestConfig:
    """Binarisation thresholds and split sizes.

    ``None`` thresholds default to the median over the (imputed) profiles.
    """

    age_threshold: float | None = None
    income_threshold: float | None = None
    female_code: str = "F"
    test_months: int = 1
    validation_months: int = 1


@dataclass
class IngestResult:
    records: list[EventRecord]
    protected: dict[str, dict[str, int]]
    malformed: list[MalformedRow] = field(default_factory=list)
    duplicates_dropped: int = 0
    age_threshold: float = 0.0
    income_threshold: float = 0.0

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        blank = {"age": 0, "gender": 0, "income": 0}
        for rec in self.records:
            attrs = self.protected.get(rec.customer_id, blank)
            writer.writerow(
                [
                    rec.customer_id,
                    rec.month,
                    NO_CAMPAIGN if rec.campaign_id is None else rec.campaign_id,
                    repr(rec.purchase),
                    rec.profitable,
                    rec.split,
                    attrs["age"],
                    attrs["gender"],
                    attrs["income"],
                ]
            )
        return buf.getvalue()


def _read_table(text: str, required: tuple[str, ...], what: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MissingColumn(f"{what} file is empty") from None
    missing = [c for c in required if c not in header]
    if missing:
        raise MissingColumn(f"{what} file lacks column(s): {', '.join(missing)}")
    index = {c: header.index(c) for c in required}
    return header, index, reader


def _number(text: str, line: int, column: str, default: float | None = None) -> float:
    text = text.strip()
    if text == "" and default is not None:
        return default
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(line, f"column {column!r}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(line, f"column {column!r}: not finite: {text!r}")
    return value


def parse_portfolio(text: str) -> dict[str, Offer]:
    """Parse the offer portfolio. Any malformed row is fatal here."""
    header, idx, reader = _read_table(text, PORTFOLIO_COLUMNS, "portfolio")
    offers = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
        duration = _number(row[idx["duration"]], line, "duration")
        if duration <= 0:
            raise MalformedRow(line, "duration must be positive")
        offer_id = row[idx["id"]].strip()
        offers[offer_id] = Offer(offer_id, duration, _number(row[idx["reward"]], line, "reward"))
    return offers


def parse_profiles(text: str, malformed: list | None = None) -> tuple[dict[str, Profile], int]:
    """Parse profiles, imputing missing values with zeros.

    Returns the profiles keyed by customer id and the number of duplicate
    rows dropped. A repeated customer id keeps its first row.
    """
    header, idx, reader = _read_table(text, PROFILE_COLUMNS, "profiles")
    malformed = [] if malformed is None else malformed
    seen = set()
    profiles = {}
    dropped = 0
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        key = tuple(row)
        if key in seen:
            dropped += 1
            continue
        seen.add(key)
        try:
            if len(row) != len(header):
                raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
            cid = row[idx["customer_id"]].strip()
            if not cid:
                raise MalformedRow(line, "empty customer_id")
            prof = Profile(
                customer_id=cid,
                age=_number(row[idx["age"]], line, "age", default=0.0),
                gender=row[idx["gender"]].strip() or "0",
                income=_number(row[idx["income"]], line, "income", default=0.0),
                became_member_on=row[idx["became_member_on"]].strip() or "0",
            )
        except MalformedRow as exc:
            malformed.append(exc)
            continue
        if cid in profiles:
            dropped += 1
            continue
        profiles[cid] = prof
    return profiles, dropped


def binarize_profiles(
    profiles: dict[str, Profile], cfg: IngestConfig = IngestConfig()
) -> tuple[dict[str, dict[str, int]], float, float]:
    """Map each profile to binary ``age``, ``gender`` and ``income`` attributes.

    Age and income are 1 at or above their threshold; gender is 1 for
    ``cfg.female_code``.
    """
    ages = np.array([p.age for p in profiles.values()], dtype=float)
    incomes = np.array([p.income for p in profiles.values()], dtype=float)
    age_t = cfg.age_threshold
    if age_t is None:
        age_t = float(np.median(ages)) if ages.size else 0.0
    income_t = cfg.income_threshold
    if income_t is None:
        income_t = float(np.median(incomes)) if incomes.size else 0.0
    out = {
        cid: {
            "age": int(p.age >= age_t),
            "gender": int(p.gender == cfg.female_code),
            "income": int(p.income >= income_t),
        }
        for cid, p in profiles.items()
    }
    return out, age_t, income_t


def month_of(time_days: float) -> int:
    return int(time_days // MONTH_DAYS) + 1


def _overlap_days(lo: float, hi: float, windows: list[tuple[float, float]]) -> float:
    """Length of the union of ``windows`` clipped to ``[lo, hi)``."""
    spans = sorted((max(a, lo), min(b, hi)) for a, b in windows if b > lo and a < hi)
    total = 0.0
    cur_a = cur_b = None
    for a, b in spans:
        if cur_b is None or a > cur_b:
            if cur_b is not None:
                total += cur_b - cur_a
            cur_a, cur_b = a, b
        else:
            cur_b = max(cur_b, b)
    if cur_b is not None:
        total += cur_b - cur_a
    return total


def assign_splits(months, test_months: int = 1, validation_months: int = 1) -> dict[int, str]:
    """Latest active months go to test, the ones before to validation."""
    ordered = sorted(set(months), reverse=True)
    split = {}
    for rank, m in enumerate(ordered):
        if rank < test_months:
            split[m] = "test"
        elif rank < test_months + validation_months:
            split[m] = "validation"
        else:
            split[m] = "train"
    return split


def ingest_events(
    events_text: str,
    profiles_text: str,
    portfolio_text: str,
    cfg: IngestConfig = IngestConfig(),
) -> IngestResult:
    """Build per customer-month treatment and control records.

    Malformed event rows (bad numbers, unknown offers, wrong field counts,
    negative amounts) are skipped and returned in ``malformed`` with their
    line numbers. A missing required column raises :class:`MissingColumn`.
    """
    offers = parse_portfolio(portfolio_text)
    malformed: list[MalformedRow] = []
    profiles, dropped = parse_profiles(profiles_text, malformed)
    protected, age_t, income_t = binarize_profiles(profiles, cfg)

    header, idx, reader = _read_table(events_text, EVENT_COLUMNS, "events")
    seen = set()
    received: dict[str, list[tuple[float, Offer]]] = {}
    spends: dict[str, list[tuple[float, float]]] = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        key = tuple(row)
        if key in seen:
            dropped += 1
            continue
        seen.add(key)
        try:
            if len(row) != len(header):
                raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
            cid = row[idx["customer_id"]].strip()
            if not cid:
                raise MalformedRow(line, "empty customer_id")
            kind = row[idx["event"]].strip().lower()
            t = _number(row[idx["time"]], line, "time")
            if t < 0:
                raise MalformedRow(line, "negative time")
            if kind == OFFER_RECEIVED:
                offer_id = row[idx["offer_id"]].strip()
                if offer_id not in offers:
                    raise MalformedRow(line, f"unknown offer {offer_id!r}")
                received.setdefault(cid, []).append((t, offers[offer_id]))
            elif kind == TRANSACTION:
                amount = _number(row[idx["amount"]], line, "amount")
                if amount < 0:
                    raise MalformedRow(line, "negative amount")
                spends.setdefault(cid, []).append((t, amount))
        except MalformedRow as exc:
            malformed.append(exc)

    records = []
    for cid in sorted(received):
        tx = spends.get(cid, [])
        by_month: dict[int, list[tuple[float, Offer]]] = {}
        for t, offer in sorted(received[cid], key=lambda item: (item[0], item[1].offer_id)):
            by_month.setdefault(month_of(t), []).append((t, offer))
        for month in sorted(by_month):
            windows = []
            for t, offer in by_month[month]:
                end = t + offer.duration
                windows.append((t, end))
                spent = sum(a for s, a in tx if t <= s <= end)
                rate = spent * MONTH_DAYS / offer.duration
                records.append(
                    EventRecord(cid, month, offer.offer_id, rate, int(rate - offer.reward > 0))
                )
            lo = (month - 1) * MONTH_DAYS
            hi = month * MONTH_DAYS
            free_days = MONTH_DAYS - _overlap_days(lo, hi, windows)
            if free_days <= 0:
                continue
            outside = sum(
                a for s, a in tx if lo <= s < hi and not any(w0 <= s <= w1 for w0, w1 in windows)
            )
            rate = outside * MONTH_DAYS / free_days
            records.append(EventRecord(cid, month, None, rate, int(rate > 0)))

    split = assign_splits((r.month for r in records), cfg.test_months, cfg.validation_months)
    records = [
        EventRecord(r.customer_id, r.month, r.campaign_id, r.purchase, r.profitable, split[r.month])
        for r in records
    ]
    return IngestResult(
        records=records,
        protected=protected,
        malformed=malformed,
        duplicates_dropped=dropped,
        age_threshold=age_t,
        income_threshold=income_t,
    )


def ingest_files(events, profiles, portfolio, cfg: IngestConfig = IngestConfig()) -> IngestResult:
    texts = [Path(p).read_text(encoding="utf-8") for p in (events, profiles, portfolio)]
    return ingest_events(*texts, cfg)
