"""Corpus ingestion: tokenization, slang lexicon, vocabulary, region documents.

Input records are JSON Lines with fields ``id``, ``text``, ``region``
(nullable) and ``ts`` (ISO-8601). Tokenization lowercases, strips URLs and
@-mentions, drops tokens shorter than 2 characters and stopwords. Records are
grouped into one bag-of-words document per region.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from ._stopwords import DEFAULT_STOPWORDS

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"[a-z0-9']+")


class CorpusError(ValueError):
    """Malformed input data (records, lexicon, vocabulary)."""


@dataclass(frozen=True)
class RawRecord:
    """One geotagged short-text record as read from JSONL."""

    record_id: str
    text: str
    region: Optional[str]
    timestamp: datetime


@dataclass(frozen=True)
class TokenizedRecord:
    """A record reduced to its filtered tokens plus slang bookkeeping."""

    record_id: str
    region: Optional[str]
    tokens: tuple[str, ...]
    slang_count: int
    token_count: int
    timestamp: Optional[datetime] = None

    @property
    def year(self) -> Optional[int]:
        return self.timestamp.year if self.timestamp is not None else None


@dataclass(frozen=True)
class SlangLexicon:
    """Set of slang terms, normalized the same way as tokenizer output."""

    terms: frozenset[str]
    source: str = ""

    def __contains__(self, token: str) -> bool:
        return token in self.terms

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class RegionDocument:
    """Bag-of-words (vocab index -> count) for all records of one region."""

    region_id: str
    counts: dict[int, int] = field(default_factory=dict)
    record_count: int = 0

    @property
    def token_total(self) -> int:
        return sum(self.counts.values())


def tokenize(text: str, stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[str]:
    """Lowercase, drop URLs/@-mentions/punctuation, short tokens and stopwords."""
    text = text.lower()
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    out = []
    for tok in _TOKEN_RE.findall(text):
        tok = tok.strip("'")
        if len(tok) < 2 or tok in stopwords:
            continue
        out.append(tok)
    return out


def load_stopwords(path: str) -> frozenset[str]:
    """One lowercase term per line; '#' lines are comments."""
    terms = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            term = line.strip().lower()
            if term and not term.startswith("#"):
                terms.add(term)
    return frozenset(terms)


def load_slang_lexicon(path: str) -> SlangLexicon:
    """Load a slang lexicon, one term per line, '#' comments skipped.

    Terms are normalized exactly like tokenizer output (lowercased); an empty
    or missing file is an error.
    """
    terms = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            terms.add(line.lower())
    if not terms:
        raise CorpusError(f"slang lexicon {path!r} contains no terms")
    return SlangLexicon(frozenset(terms), source=path)


def tokenize_record(
    record: RawRecord,
    lexicon: Optional[SlangLexicon] = None,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> TokenizedRecord:
    tokens = tuple(tokenize(record.text, stopwords))
    slang = sum(1 for t in tokens if lexicon is not None and t in lexicon)
    return TokenizedRecord(
        record_id=record.record_id,
        region=record.region,
        tokens=tokens,
        slang_count=slang,
        token_count=len(tokens),
        timestamp=record.timestamp,
    )


def strip_to_slang(record: TokenizedRecord, lexicon: SlangLexicon) -> list[str]:
    """Keep only lexicon tokens, order preserved."""
    return [t for t in record.tokens if t in lexicon]


def slang_ratio(record: TokenizedRecord) -> float:
    """Fraction of the record's tokens found in the lexicon; 0 for empty records."""
    if record.token_count == 0:
        return 0.0
    return record.slang_count / record.token_count


def _parse_timestamp(value: str) -> datetime:
    # Python 3.10 fromisoformat rejects a trailing 'Z'.
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    ts = datetime.fromisoformat(value)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def read_records_jsonl(path: str) -> Iterator[RawRecord]:
    """Stream records from a JSON Lines file; unknown fields are ignored."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            rid = obj.get("id")
            if not rid or not isinstance(rid, str):
                raise CorpusError(f"{path}:{lineno}: missing or empty 'id'")
            text = obj.get("text", "")
            if not isinstance(text, str):
                raise CorpusError(f"{path}:{lineno}: 'text' must be a string")
            region = obj.get("region")
            if region is not None and not isinstance(region, str):
                raise CorpusError(f"{path}:{lineno}: 'region' must be string or null")
            ts_raw = obj.get("ts")
            if not isinstance(ts_raw, str):
                raise CorpusError(f"{path}:{lineno}: missing 'ts'")
            try:
                ts = _parse_timestamp(ts_raw)
            except ValueError as exc:
                raise CorpusError(f"{path}:{lineno}: bad timestamp {ts_raw!r}") from exc
            yield RawRecord(record_id=rid, text=text, region=region, timestamp=ts)


def write_records_jsonl(records: Iterable[RawRecord], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            obj = {
                "id": rec.record_id,
                "text": rec.text,
                "region": rec.region,
                "ts": rec.timestamp.isoformat(),
            }
            fh.write(json.dumps(obj) + "\n")


class Vocabulary:
    """Dense token <-> index map with per-token document frequencies.

    Indices are assigned in lexicographic token order so vocabulary
    construction is deterministic regardless of input order.
    """

    def __init__(self, tokens: Sequence[str], doc_freq: Sequence[int]):
        if len(tokens) != len(doc_freq):
            raise CorpusError("tokens and doc_freq length mismatch")
        self.tokens: list[str] = list(tokens)
        self.doc_freq: np.ndarray = np.asarray(doc_freq, dtype=np.int64)
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise CorpusError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @classmethod
    def build(
        cls,
        token_lists: Iterable[Sequence[str]],
        min_df: int = 2,
        max_df_fraction: float = 0.5,
    ) -> "Vocabulary":
        """Count document frequencies and prune rare/ubiquitous tokens.

        A token is kept when df >= min_df and df / n_docs <= max_df_fraction.
        """
        df: dict[str, int] = {}
        n_docs = 0
        for tokens in token_lists:
            n_docs += 1
            for tok in set(tokens):
                df[tok] = df.get(tok, 0) + 1
        kept = sorted(
            t
            for t, f in df.items()
            if f >= min_df and (n_docs == 0 or f / n_docs <= max_df_fraction)
        )
        return cls(kept, [df[t] for t in kept])

    def map_tokens(self, tokens: Iterable[str]) -> list[int]:
        """Token strings to indices, dropping out-of-vocabulary tokens."""
        idx = self.index
        return [idx[t] for t in tokens if t in idx]

    def content_hash(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for i, tok in enumerate(self.tokens):
            h.update(f"{tok}\t{i}\t{int(self.doc_freq[i])}\n".encode())
        return h.hexdigest()

    def save_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["token", "index", "df"])
            for i, tok in enumerate(self.tokens):
                writer.writerow([tok, i, int(self.doc_freq[i])])

    @classmethod
    def load_csv(cls, path: str) -> "Vocabulary":
        tokens: list[str] = []
        dfs: list[int] = []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            rows = sorted(reader, key=lambda r: int(r["index"]))
        for expect, row in enumerate(rows):
            if int(row["index"]) != expect:
                raise CorpusError(f"vocabulary indices not dense in {path}")
            tokens.append(row["token"])
            dfs.append(int(row["df"]))
        return cls(tokens, dfs)


def assemble_region_documents(
    records: Iterable[TokenizedRecord], vocab: Vocabulary
) -> dict[str, RegionDocument]:
    """One bag-of-words document per region id.

    Every record must carry a region id; unlocated records are routed through
    topic-similarity assignment before they reach this point.
    """
    docs: dict[str, RegionDocument] = {}
    for rec in records:
        if rec.region is None:
            raise CorpusError(f"record {rec.record_id!r} has no region id")
        doc = docs.get(rec.region)
        if doc is None:
            doc = docs[rec.region] = RegionDocument(region_id=rec.region)
        doc.record_count += 1
        for idx in vocab.map_tokens(rec.tokens):
            doc.counts[idx] = doc.counts.get(idx, 0) + 1
    return docs


def split_located(
    records: Iterable[TokenizedRecord], known_regions: Optional[set[str]] = None
) -> tuple[list[TokenizedRecord], list[TokenizedRecord]]:
    """Quarantine records without a usable region id into an unlocated pool."""
    located, unlocated = [], []
    for rec in records:
        if rec.region is None or (
            known_regions is not None and rec.region not in known_regions
        ):
            unlocated.append(rec)
        else:
            located.append(rec)
    return located, unlocated


def tfidf(
    docs: Mapping[str, RegionDocument], vocab: Vocabulary
) -> tuple[list[str], np.ndarray]:
    """tf-idf weights, weight(d, t) = tf(d, t) * ln(N / df(t)).

    Document frequencies are recounted over ``docs`` so the weights match the
    exact document set being transformed. Returns (sorted region ids, matrix).
    """
    region_ids = sorted(docs)
    n_docs = len(region_ids)
    weights = np.zeros((n_docs, len(vocab)), dtype=np.float64)
    df = np.zeros(len(vocab), dtype=np.int64)
    for doc in docs.values():
        for idx in doc.counts:
            df[idx] += 1
    idf = np.zeros(len(vocab), dtype=np.float64)
    present = df > 0
    idf[present] = np.log(n_docs / df[present])
    for row, rid in enumerate(region_ids):
        for idx, count in docs[rid].counts.items():
            weights[row, idx] = count * idf[idx]
    return region_ids, weights
