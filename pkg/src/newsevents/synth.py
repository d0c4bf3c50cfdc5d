"""Synthetic benchmark corpora with planted events.

The generator writes a dated corpus, ground truth, a candidate phrase
list, and phrase/document vectors, so the full pipeline can run offline
and be scored against a known answer.

Construction (recorded in metadata.json):

* Each planted event owns a short day window (window_widths bounds the
  roll, at most 1-3 days), a set of signature phrases mentioned
  repeatedly by its documents, and a basis axis in vector space.
  Signature-phrase vectors sit on the event axis (plus a small angular
  offset); event-document vectors likewise, so same-event documents
  cluster and classifiers can separate events. Several signatures per
  event give each window day a dense co-mention clique, which keeps a
  whole event together under community detection even when the
  consecutive-day edge constant grows.
* Background vocabulary is shared by noise documents. One "daily
  roundup" noise document per calendar day mentions every background
  word, pinning their presence to every day of the span: their rarity
  factor is exactly 1 and they can never score as peaks. This requires
  noise_docs >= span_days.
* Every calendar day also gets its own light "local topic" phrase,
  mentioned twice in that day's roundup and nowhere else. These produce
  many small, mutually unrelated peak chains that add bulk to the
  co-occurrence graph (keeping genuine events cohesive under modularity
  optimisation), yet each backs onto a single document, so the selection
  loop retires the resulting candidates for lack of pseudo-labels.
* Every document's first sentence names its true event date (month-day
  form), which the temporal post-filter can recognise.
* Perturbation knobs for ablations: redate_fraction moves that share of
  event documents to days outside their event window (text unchanged, so
  the true date stays named in the lead); reword_fraction rewrites that
  share to use a document-unique alternate phrase instead of the
  signatures (vectors unchanged), mentioned only twice so the alternates
  stay far down the peak ranking.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .seeds import derive_seed

_BACKGROUND = [
    "city", "council", "residents", "report", "officials", "street",
    "traffic", "weather", "market", "local", "school", "meeting",
    "budget", "plan", "service", "public", "community", "project",
    "update", "morning", "evening", "library", "museum", "festival",
    "season", "review", "study", "survey", "garden", "harbor",
    "station", "route", "repair", "notice", "board", "committee",
    "program", "volunteer", "center", "district", "region", "office",
    "mayor", "citizens", "response", "statement", "announcement",
    "schedule", "transport", "bridge", "road", "park", "river",
    "business", "shop", "cafe", "theater", "concert", "exhibition",
    "workshop", "housing", "permit", "ballot", "audit", "census",
    "charter", "clinic", "campus", "courier", "depot", "editor",
    "farmers", "fleet", "forum", "gallery", "grant", "harvest",
    "inspection", "journal", "lecture", "lighting", "maintenance",
    "neighborhood", "orchestra", "parade", "pavilion", "petition",
    "playground", "plaza", "precinct", "quarterly", "radio", "recycling",
    "renovation", "reservoir", "runway", "seminar", "shelter", "signage",
    "stadium", "subway", "terminal", "tourism", "tunnel", "utility",
    "vendor", "village", "warehouse", "waterfront", "wellness", "zoning",
    "archive", "bakery", "ceramics", "drainage", "easement", "facade",
    "greenway", "hydrant", "inventory", "jetty",
]

_SIG_FIRST = [
    "amber", "quartz", "cobalt", "crimson", "velvet", "granite",
    "silver", "copper", "indigo", "marble", "cedar", "willow",
    "falcon", "heron", "badger", "otter", "lynx", "raven",
]

_SIG_SECOND = [
    "blockade", "vigil", "walkout", "summit", "verdict", "recall",
    "outage", "rescue", "takeover", "embargo", "eviction", "tribunal",
    "landslide", "breakthrough", "standoff", "derailment", "flotilla",
    "amnesty",
]

_TOPIC_FIRST = [
    "sourdough", "mosaic", "kayak", "lantern", "orchid", "pottery",
    "quilt", "saxophone", "telescope", "unicycle", "violin", "waffle",
    "yarn", "zeppelin", "accordion", "bonsai", "carousel", "dulcimer",
]

_TOPIC_SECOND = [
    "bazaar", "contest", "derby", "expo", "fair", "gala",
    "jamboree", "marathon", "pageant", "raffle", "regatta", "rally",
]

_FILLER = [
    "the", "after", "during", "while", "officials said", "witnesses said",
    "according to reports", "later that day", "sources added",
]


@dataclass
class SynthSpec:
    num_events: int = 3
    docs_per_event: int = 30
    noise_docs: int = 100
    span_days: int = 60
    signatures_per_event: int = 6
    mentions_per_signature: int = 2
    window_widths: tuple = (2, 3)
    redate_fraction: float = 0.0
    reword_fraction: float = 0.0
    base_date: str = "2019-06-01"
    seed: int = 0

    def validate(self) -> "SynthSpec":
        if min(self.num_events, self.docs_per_event, self.span_days) < 1:
            raise DataError("synth: counts must be >= 1")
        if self.noise_docs < self.span_days:
            raise DataError(
                "synth: need noise_docs >= span_days so every calendar day "
                "holds a background document"
            )
        lo, hi = self.window_widths
        if not 1 <= lo <= hi <= 3:
            raise DataError("synth: window widths must lie within 1..3 days")
        if not 0.0 <= self.redate_fraction < 1.0:
            raise DataError("synth: redate_fraction must be in [0, 1)")
        if not 0.0 <= self.reword_fraction < 1.0:
            raise DataError("synth: reword_fraction must be in [0, 1)")
        if self.num_events * self.signatures_per_event > len(_SIG_FIRST) * len(
            _SIG_SECOND
        ):
            raise DataError("synth: signature pool exhausted")
        if self.span_days > len(_TOPIC_FIRST) * len(_TOPIC_SECOND):
            raise DataError("synth: daily topic pool exhausted")
        return self


def _month_day(date: dt.date) -> str:
    return f"{date.strftime('%B')} {date.day}"


def _event_windows(spec: SynthSpec, rng: random.Random) -> list[tuple[int, int]]:
    """Non-adjacent windows, at least 4 days apart, inside the span."""
    windows = []
    attempts = 0
    while len(windows) < spec.num_events:
        attempts += 1
        if attempts > 10000:
            raise DataError("synth: could not place event windows; widen the span")
        width = rng.randint(spec.window_widths[0], spec.window_widths[1])
        start = rng.randint(3, spec.span_days - width - 3)
        window = (start, start + width - 1)
        if all(
            not (window[0] - 4 <= w[1] and w[0] - 4 <= window[1]) for w in windows
        ):
            windows.append(window)
    return sorted(windows)


def _signatures(spec: SynthSpec, rng: random.Random) -> list[list[str]]:
    pairs = [(a, b) for a in _SIG_FIRST for b in _SIG_SECOND]
    rng.shuffle(pairs)
    out = []
    k = spec.signatures_per_event
    for e in range(spec.num_events):
        out.append([f"{a} {b}" for a, b in pairs[e * k : (e + 1) * k]])
    return out


def _daily_topics(spec: SynthSpec, rng: random.Random) -> list[str]:
    pairs = [(a, b) for a in _TOPIC_FIRST for b in _TOPIC_SECOND]
    rng.shuffle(pairs)
    return [f"{a} {b}" for a, b in pairs[: spec.span_days]]


def _sentence(words: list[str]) -> str:
    text = " ".join(words)
    return text[0].upper() + text[1:] + "."


def _event_doc_text(
    signatures: list[str],
    mentions: int,
    true_date: dt.date,
    rng: random.Random,
    alternate: str | None,
) -> str:
    """A few sentences mentioning each signature `mentions` times; the
    opening sentence carries the event date. Reworded documents drop the
    signatures entirely and name their own alternate phrase twice, which
    keeps the alternate well below the peak-score cut."""
    if alternate is not None:
        phrase_pool = [alternate, alternate]
    else:
        phrase_pool = []
        for sig in signatures:
            phrase_pool.extend([sig] * mentions)
    rng.shuffle(phrase_pool)
    lead_phrase = phrase_pool.pop()
    sentences = [
        _sentence(
            [
                "crowds gathered as the",
                lead_phrase,
                "unfolded on",
                _month_day(true_date),
            ]
        )
    ]
    while phrase_pool:
        chunk = [phrase_pool.pop() for _ in range(min(2, len(phrase_pool)))]
        filler = rng.choice(_FILLER)
        body = [rng.choice(_BACKGROUND), filler, chunk[0]]
        if len(chunk) > 1:
            body += ["and the", chunk[1], rng.choice(_BACKGROUND)]
        sentences.append(_sentence(body))
    sentences.append(
        _sentence(
            [rng.choice(_BACKGROUND), "observers tracked the", rng.choice(_BACKGROUND)]
        )
    )
    return " ".join(sentences)


def _roundup_text(date: dt.date, topic: str, rng: random.Random) -> str:
    """Mentions every background word at least once, plus the day's local
    topic twice."""
    words = list(_BACKGROUND)
    rng.shuffle(words)
    sentences = [
        _sentence(["daily briefing for", _month_day(date)]),
        _sentence(["organisers promoted the", topic, "once more"]),
    ]
    for i in range(0, len(words), 8):
        sentences.append(_sentence(words[i : i + 8]))
    sentences.append(_sentence(["crowds drifted toward the", topic, "by dusk"]))
    return " ".join(sentences)


def _noise_text(date: dt.date, rng: random.Random) -> str:
    sentences = [_sentence(["notes from around town on", _month_day(date)])]
    for _ in range(rng.randint(2, 4)):
        sentences.append(
            _sentence([rng.choice(_BACKGROUND) for _ in range(rng.randint(5, 9))])
        )
    return " ".join(sentences)


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise DataError("synth: zero vector produced")
    return vec / norm


def generate_corpus(spec: SynthSpec, out_dir) -> dict:
    """Write corpus.jsonl, truth.jsonl, phrases.txt, phrase_vectors.tsv,
    doc_vectors.tsv, and metadata.json into out_dir. Returns the metadata
    dict. Deterministic for a fixed spec."""
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = dt.date.fromisoformat(spec.base_date)

    layout_rng = random.Random(derive_seed(spec.seed, "layout"))
    text_rng = random.Random(derive_seed(spec.seed, "text"))
    vec_rng = np.random.default_rng(derive_seed(spec.seed, "vectors"))

    windows = _event_windows(spec, layout_rng)
    signatures = _signatures(spec, layout_rng)
    topics = _daily_topics(spec, layout_rng)

    # vector geometry: one basis axis per event; everything unrelated gets
    # its own random direction in the complementary subspace
    dim = spec.num_events + 61

    def axis(i: int) -> np.ndarray:
        v = np.zeros(dim)
        v[i] = 1.0
        return v

    def jitter(scale: float) -> np.ndarray:
        direction = vec_rng.standard_normal(dim)
        return scale * direction / np.linalg.norm(direction)

    def off_axis_unit() -> np.ndarray:
        v = np.zeros(dim)
        v[spec.num_events :] = vec_rng.standard_normal(dim - spec.num_events)
        return _unit(v)

    docs = []
    doc_vectors: dict[str, np.ndarray] = {}
    truth: list[list[str]] = [[] for _ in range(spec.num_events)]

    for e in range(spec.num_events):
        lo, hi = windows[e]
        ids = [f"e{e}d{i:03d}" for i in range(spec.docs_per_event)]
        n = spec.docs_per_event
        n_redate = math.floor(spec.redate_fraction * n)
        n_reword = math.floor(spec.reword_fraction * n)
        redated = set(layout_rng.sample(range(n), n_redate))
        reworded = set(layout_rng.sample(range(n), n_reword))
        for i, doc_id in enumerate(ids):
            true_day = layout_rng.randint(lo, hi)
            day = true_day
            if i in redated:
                off_days = [
                    d for d in range(spec.span_days) if d < lo - 2 or d > hi + 2
                ]
                day = layout_rng.choice(off_days)
            alternate = None
            if i in reworded:
                alternate = f"{text_rng.choice(_SIG_FIRST)} account alt{e}{i:03d}"
            text = _event_doc_text(
                signatures[e],
                spec.mentions_per_signature,
                base + dt.timedelta(days=true_day),
                text_rng,
                alternate,
            )
            docs.append(
                {
                    "id": doc_id,
                    "date": (base + dt.timedelta(days=day)).isoformat(),
                    "title": f"Dispatch {doc_id}",
                    "text": text,
                }
            )
            doc_vectors[doc_id] = _unit(axis(e) + jitter(0.25))
            truth[e].append(doc_id)

    # noise: one roundup per day (background vocabulary + the day's local
    # topic), remainder on random days with a lighter topic mention
    for day in range(spec.span_days):
        doc_id = f"n{day:03d}r"
        date = base + dt.timedelta(days=day)
        docs.append(
            {
                "id": doc_id,
                "date": date.isoformat(),
                "title": f"Roundup {date.isoformat()}",
                "text": _roundup_text(date, topics[day], text_rng),
            }
        )
        doc_vectors[doc_id] = off_axis_unit()
    for j in range(spec.noise_docs - spec.span_days):
        doc_id = f"n{j:03d}x"
        day = layout_rng.randrange(spec.span_days)
        date = base + dt.timedelta(days=day)
        docs.append(
            {
                "id": doc_id,
                "date": date.isoformat(),
                "title": f"Notebook {j}",
                "text": _noise_text(date, text_rng),
            }
        )
        doc_vectors[doc_id] = off_axis_unit()

    # phrase list and vectors: signatures on their event axis, everything
    # else on random off-event directions
    phrase_vectors: dict[str, np.ndarray] = {}
    phrases: list[str] = []
    for e in range(spec.num_events):
        for sig in signatures[e]:
            phrases.append(sig)
            phrase_vectors[sig] = _unit(axis(e) + jitter(0.05))
    for topic in topics:
        phrases.append(topic)
        phrase_vectors[topic] = off_axis_unit()
    for word in _BACKGROUND:
        phrases.append(word)
        phrase_vectors[word] = off_axis_unit()

    corpus_path = out / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for rec in docs:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    truth_path = out / "truth.jsonl"
    with open(truth_path, "w", encoding="utf-8") as fh:
        for e, ids in enumerate(truth):
            fh.write(
                json.dumps({"event_id": f"planted-{e}", "doc_ids": ids}) + "\n"
            )
    phrases_path = out / "phrases.txt"
    with open(phrases_path, "w", encoding="utf-8") as fh:
        for p in phrases:
            fh.write(p + "\n")

    from .embeddings import EmbeddingTable, save_embeddings

    ptable = EmbeddingTable(dim)
    for key, vec in phrase_vectors.items():
        ptable.add(key, vec)
    save_embeddings(out / "phrase_vectors.tsv", ptable)
    dtable = EmbeddingTable(dim)
    for key, vec in doc_vectors.items():
        dtable.add(key, vec)
    save_embeddings(out / "doc_vectors.tsv", dtable)

    metadata = {
        "spec": asdict(spec),
        "windows": [[lo, hi] for lo, hi in windows],
        "signatures": signatures,
        "daily_topics": topics,
        "vector_scheme": {
            "dim": dim,
            "event_axes": list(range(spec.num_events)),
            "doc_noise_scale": 0.25,
            "signature_noise_scale": 0.05,
            "note": (
                "documents and signature phrases of one event share a basis "
                "axis with a small angular offset; noise documents, daily "
                "topics, and background words each get an independent random "
                "direction orthogonal to every event axis, so no classifier "
                "can generalise across them; background words appear every "
                "day, so their day-rarity factor is 1 and they never become "
                "peaks"
            ),
        },
        "files": {
            "corpus": corpus_path.name,
            "truth": truth_path.name,
            "phrases": phrases_path.name,
            "phrase_vectors": "phrase_vectors.tsv",
            "doc_vectors": "doc_vectors.tsv",
        },
    }
    with open(out / "metadata.json", "w", encoding="utf-8") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return metadata
