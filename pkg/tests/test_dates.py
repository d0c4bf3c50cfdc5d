"""Explicit-date extraction from article text."""

import datetime as dt

import pytest

from newsevents.dates import extract_dates, mentions_date_in

_PUB = dt.date(2019, 8, 20)


def _one(text, pub=_PUB):
    found = extract_dates(text, pub)
    assert len(found) == 1, found
    return found[0]


def test_iso_dates():
    assert _one("Officials confirmed it happened on 2019-08-12 downtown.") \
        == dt.date(2019, 8, 12)


def test_month_day():
    assert _one("Crowds gathered on August 12 near the station.") \
        == dt.date(2019, 8, 12)


def test_abbreviated_month_with_period():
    assert _one("Police said the Aug. 12 clash was isolated.") \
        == dt.date(2019, 8, 12)


def test_month_day_year():
    assert _one("It began on August 12, 2018, officials said.") \
        == dt.date(2018, 8, 12)


def test_day_month():
    assert _one("The rally of 12 August drew thousands.") \
        == dt.date(2019, 8, 12)


def test_ordinal_day_of_month():
    assert _one("By the 3rd of August the camp had grown.") \
        == dt.date(2019, 8, 3)


def test_weekday_resolves_to_most_recent():
    # publication Tuesday 2019-08-20; "Friday" -> 2019-08-16
    assert _one("The march ended Friday without arrests.") \
        == dt.date(2019, 8, 16)


def test_same_weekday_resolves_to_publication_day():
    assert _one("Protesters regrouped Tuesday at noon.") == _PUB


def test_yearless_mention_resolves_to_nearest_year():
    # December 30 read from a January 2 publication is last year's
    assert _one("The fire of December 30 still smoldered.",
                pub=dt.date(2020, 1, 2)) == dt.date(2019, 12, 30)


def test_invalid_calendar_dates_are_skipped():
    assert extract_dates("A February 30 deadline was blown.", _PUB) == []


def test_multiple_mentions_all_returned():
    found = extract_dates(
        "Between 2019-08-12 and 2019-08-14 the airport stayed shut.", _PUB)
    assert set(found) == {dt.date(2019, 8, 12), dt.date(2019, 8, 14)}


def test_plain_numbers_are_not_dates():
    assert extract_dates("About 12 000 people joined in 2 groups.", _PUB) == []


def test_window_membership_inclusive():
    window = (dt.date(2019, 8, 12), dt.date(2019, 8, 13))
    assert mentions_date_in(
        "Witnesses described the events on August 12 in detail.",
        _PUB, window)
    assert mentions_date_in(
        "Witnesses described the events on August 13 in detail.",
        _PUB, window)
    assert not mentions_date_in(
        "Witnesses described the events on August 14 in detail.",
        _PUB, window)
    assert not mentions_date_in(
        "Witnesses described the events in detail.", _PUB, window)
