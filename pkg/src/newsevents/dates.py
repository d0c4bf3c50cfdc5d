"""Explicit date expressions in article text.

The temporal post-filter keeps an out-of-span document only if its opening
sentences explicitly mention a date inside the event window. This module
recognises a small deterministic grammar:

* ISO dates            2019-08-12
* Month-day            August 12 / Aug. 12 / August 12, 2019
* Day-month            12 August / 3rd of August / 12 August 2019
* Weekday mentions     Tuesday (resolved to the most recent such weekday
                       on or before the publication date)

Expressions without a year are resolved to the candidate year (previous,
same, or next relative to publication) whose date lies closest to the
publication date.
"""

from __future__ import annotations

import datetime as dt
import re

_MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5,
    "june": 6, "july": 7, "august": 8, "september": 9, "october": 10,
    "november": 11, "december": 12,
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6, "jul": 7,
    "aug": 8, "sep": 9, "sept": 9, "oct": 10, "nov": 11, "dec": 12,
}

_WEEKDAYS = {
    "monday": 0, "tuesday": 1, "wednesday": 2, "thursday": 3,
    "friday": 4, "saturday": 5, "sunday": 6,
}

_MONTH_RE = "|".join(sorted(_MONTHS, key=len, reverse=True))
_DAY_RE = r"([0-3]?\d)(?:st|nd|rd|th)?"
_YEAR_RE = r"((?:1[6-9]|2[0-9])\d{2})"

_ISO = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")
_MONTH_DAY = re.compile(
    rf"\b({_MONTH_RE})\.?\s+{_DAY_RE}(?:\s*,\s*{_YEAR_RE})?\b", re.IGNORECASE
)
_DAY_MONTH = re.compile(
    rf"\b{_DAY_RE}\s+(?:of\s+)?({_MONTH_RE})\b\.?(?:\s*,?\s+{_YEAR_RE})?",
    re.IGNORECASE,
)
_WEEKDAY = re.compile(rf"\b({'|'.join(_WEEKDAYS)})\b", re.IGNORECASE)


def _make_date(year: int, month: int, day: int) -> dt.date | None:
    try:
        return dt.date(year, month, day)
    except ValueError:
        return None


def _resolve_yearless(month: int, day: int, pub_date: dt.date) -> dt.date | None:
    """Pick the year (pub ± 1) that puts the date closest to publication."""
    best = None
    for year in (pub_date.year - 1, pub_date.year, pub_date.year + 1):
        cand = _make_date(year, month, day)
        if cand is None:
            continue
        dist = abs((cand - pub_date).days)
        if best is None or dist < best[0]:
            best = (dist, cand)
    return None if best is None else best[1]


def extract_dates(text: str, pub_date: dt.date) -> list[dt.date]:
    """All explicit date mentions in text, resolved to calendar dates.

    Duplicates are preserved; order follows the pattern families above and
    is deterministic for a given input.
    """
    found: list[dt.date] = []

    for m in _ISO.finditer(text):
        d = _make_date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
        if d is not None:
            found.append(d)

    for m in _MONTH_DAY.finditer(text):
        month = _MONTHS[m.group(1).lower()]
        day = int(m.group(2))
        year = m.group(3)
        if year is not None:
            d = _make_date(int(year), month, day)
        else:
            d = _resolve_yearless(month, day, pub_date)
        if d is not None:
            found.append(d)

    for m in _DAY_MONTH.finditer(text):
        day = int(m.group(1))
        month = _MONTHS[m.group(2).lower()]
        year = m.group(3)
        if year is not None:
            d = _make_date(int(year), month, day)
        else:
            d = _resolve_yearless(month, day, pub_date)
        if d is not None:
            found.append(d)

    for m in _WEEKDAY.finditer(text):
        target = _WEEKDAYS[m.group(1).lower()]
        offset = (pub_date.weekday() - target) % 7
        found.append(pub_date - dt.timedelta(days=offset))

    return found


def mentions_date_in(
    text: str, pub_date: dt.date, window: tuple[dt.date, dt.date]
) -> bool:
    """True iff any extracted date falls inside the inclusive window."""
    lo, hi = window
    return any(lo <= d <= hi for d in extract_dates(text, pub_date))
