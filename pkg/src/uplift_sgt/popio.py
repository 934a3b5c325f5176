"""Population CSV format.

Header::

    id,treated,kpi,<protected...>,f0_start..f{d-1}_start,f0_end..f{d-1}_end[,y_treated,y_control]

UTF-8, comma separated, dot decimal. ``treated`` and ``kpi`` are empty before
the campaign launches. The optional trailing ``y_treated``/``y_control``
columns hold both realised outcomes; they exist only for simulated
populations and make Oracle evaluation possible after a round trip. Floats
are written with ``repr`` so values survive the round trip exactly.
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Sequence

from uplift_sgt.campaign import Individual
from uplift_sgt.errors import MalformedRow, MissingColumn
from uplift_sgt.simulate import SyntheticCampaign

_FEATURE = re.compile(r"^f(\d+)_(start|end)$")
_FIXED = ("id", "treated", "kpi")
_OUTCOMES = ("y_treated", "y_control")


def population_csv(
    individuals: Sequence[Individual],
    outcomes: dict[int, tuple[int, int]] | None = None,
) -> str:
    individuals = list(individuals)
    protected = list(individuals[0].protected) if individuals else []
    d = individuals[0].features_start.size if individuals else 0
    header = list(_FIXED) + protected
    header += [f"f{j}_start" for j in range(d)] + [f"f{j}_end" for j in range(d)]
    if outcomes:
        header += list(_OUTCOMES)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for ind in individuals:
        end = ind.features_end if ind.features_end is not None else [None] * d
        row = [
            ind.id,
            "" if ind.treated is None else int(ind.treated),
            "" if ind.kpi_observed is None else repr(float(ind.kpi_observed)),
        ]
        row += [ind.protected[name] for name in protected]
        row += [repr(float(v)) for v in ind.features_start]
        row += ["" if v is None else repr(float(v)) for v in end]
        if outcomes:
            row += list(outcomes[ind.id])
        writer.writerow(row)
    return buf.getvalue()


def campaign_csv(campaign: SyntheticCampaign) -> str:
    return population_csv(campaign.individuals, dict(campaign.outcomes))


def _parse_float(text: str, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(line, f"column {column!r}: not a number: {text!r}") from None


def _parse_binary(text: str, line: int, column: str) -> int:
    if text not in ("0", "1"):
        raise MalformedRow(line, f"column {column!r}: expected 0 or 1, got {text!r}")
    return int(text)


def parse_population(text: str) -> SyntheticCampaign:
    """Parse population CSV text into a campaign (outcomes may be empty)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingColumn("empty population file") from None
    for col in _FIXED:
        if col not in header:
            raise MissingColumn(f"population file lacks column {col!r}")
    feats = {}
    for idx, col in enumerate(header):
        m = _FEATURE.match(col)
        if m:
            feats[(int(m.group(1)), m.group(2))] = idx
    d = len({j for j, _ in feats})
    for j in range(d):
        for part in ("start", "end"):
            if (j, part) not in feats:
                raise MissingColumn(f"population file lacks column f{j}_{part}")
    has_outcomes = all(c in header for c in _OUTCOMES)
    known = set(_FIXED) | set(_OUTCOMES)
    protected = [
        (idx, col) for idx, col in enumerate(header) if col not in known and not _FEATURE.match(col)
    ]
    pos = {col: header.index(col) for col in header if col in known}

    individuals = []
    outcomes = {}
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
        try:
            ind_id = int(row[pos["id"]])
        except ValueError:
            raise MalformedRow(line, f"bad id {row[pos['id']]!r}") from None
        treated_txt = row[pos["treated"]]
        kpi_txt = row[pos["kpi"]]
        start = [_parse_float(row[feats[(j, "start")]], line, f"f{j}_start") for j in range(d)]
        end_txt = [row[feats[(j, "end")]] for j in range(d)]
        end = None
        if any(t != "" for t in end_txt):
            end = [_parse_float(t, line, f"f{j}_end") for j, t in enumerate(end_txt)]
        individuals.append(
            Individual(
                id=ind_id,
                features_start=start,
                features_end=end,
                protected={col: _parse_binary(row[idx], line, col) for idx, col in protected},
                kpi_observed=None if kpi_txt == "" else _parse_float(kpi_txt, line, "kpi"),
                treated=None if treated_txt == "" else bool(_parse_binary(treated_txt, line, "treated")),
            )
        )
        if has_outcomes:
            outcomes[ind_id] = (
                _parse_binary(row[pos["y_treated"]], line, "y_treated"),
                _parse_binary(row[pos["y_control"]], line, "y_control"),
            )
    return SyntheticCampaign(individuals=tuple(individuals), outcomes=outcomes)


def read_population(path) -> SyntheticCampaign:
    return parse_population(Path(path).read_text(encoding="utf-8"))
