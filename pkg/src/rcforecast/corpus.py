"""Bibliographic corpus: paper records, journal ranks, yearly totals and publication shares.

Input formats: papers as JSON-lines (one object per paper), journal ranks as CSV
with header ``journal_id,citescore_rank,eigenfactor_rank``.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DOC_TYPES = ("article", "review", "other")

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


class CorpusError(Exception):
    """A corpus file failed validation.

    Carries enough structure for a machine-readable error report.
    """

    def __init__(self, message, line=None, paper_id=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.paper_id = paper_id

    def report(self) -> dict:
        out = {"error": self.message}
        if self.line is not None:
            out["line"] = self.line
        if self.paper_id is not None:
            out["paper_id"] = self.paper_id
        return out


def normalize_terms(raw) -> tuple[str, ...]:
    """Tokenize: lowercase, split on non-alphanumerics, drop tokens shorter than 2 chars.

    Accepts a single string or an iterable of strings.
    """
    pieces = [raw] if isinstance(raw, str) else [str(t) for t in raw]
    out = []
    for piece in pieces:
        for tok in _TOKEN_SPLIT.split(piece.lower()):
            if len(tok) >= 2:
                out.append(tok)
    return tuple(out)


@dataclass(frozen=True)
class PaperRecord:
    """One document. ``references`` may point at corpus papers or external items."""

    paper_id: int
    year: int
    doc_type: str
    journal_id: int | None
    references: tuple[int, ...]
    terms: tuple[str, ...]


@dataclass(frozen=True)
class JournalRank:
    journal_id: int
    citescore_rank: int | None = None
    eigenfactor_rank: int | None = None


@dataclass(frozen=True)
class CorpusMeta:
    first_year: int
    last_year: int
    paper_count: int
    yearly_totals: dict[int, int]


class Corpus:
    """Immutable after load; safe for concurrent reads."""

    def __init__(self, papers: dict[int, PaperRecord], ranks: dict[int, JournalRank]):
        self.papers = papers
        self.ranks = ranks
        years = [p.year for p in papers.values()]
        totals: dict[int, int] = {}
        for y in years:
            totals[y] = totals.get(y, 0) + 1
        self.meta = CorpusMeta(
            first_year=min(years) if years else 0,
            last_year=max(years) if years else 0,
            paper_count=len(papers),
            yearly_totals=totals,
        )
        # ids cited but absent from the corpus (external items)
        ext = set()
        for p in papers.values():
            for r in p.references:
                if r not in papers:
                    ext.add(r)
        self.external_ids = frozenset(ext)
        by_year: dict[int, list[int]] = {}
        for pid in sorted(papers):
            by_year.setdefault(papers[pid].year, []).append(pid)
        self.by_year = by_year

    def papers_in_year(self, year: int) -> list[int]:
        return self.by_year.get(year, [])

    def is_external(self, ref_id: int) -> bool:
        return ref_id not in self.papers


def _parse_paper(obj: dict, line: int) -> PaperRecord:
    try:
        pid = int(obj["paper_id"])
    except (KeyError, TypeError, ValueError):
        raise CorpusError("missing or non-integer paper_id", line=line)
    year = obj.get("year")
    if not isinstance(year, int):
        # papers with missing publication year are rejected rather than guessed
        raise CorpusError(f"paper {pid}: missing or non-integer year", line=line, paper_id=pid)
    doc_type = obj.get("doc_type", "article")
    if doc_type not in DOC_TYPES:
        raise CorpusError(f"paper {pid}: unknown doc_type {doc_type!r}", line=line, paper_id=pid)
    jid = obj.get("journal_id")
    if jid is not None:
        jid = int(jid)
    refs = obj.get("references", [])
    if not isinstance(refs, list):
        raise CorpusError(f"paper {pid}: references must be a list", line=line, paper_id=pid)
    refs = [int(r) for r in refs]
    if len(set(refs)) != len(refs):
        raise CorpusError(f"paper {pid}: duplicate references", line=line, paper_id=pid)
    if pid in refs:
        raise CorpusError(f"paper {pid}: cites itself", line=line, paper_id=pid)
    terms = normalize_terms(obj.get("terms", []))
    return PaperRecord(pid, year, doc_type, jid, tuple(refs), terms)


def _parse_rank(val: str, line: int) -> int | None:
    if val is None or val.strip() == "":
        return None
    rank = int(val)
    if rank < 1:
        raise CorpusError(f"journal rank must be >= 1, got {rank}", line=line)
    return rank


def load_journal_ranks(path) -> dict[int, JournalRank]:
    ranks: dict[int, JournalRank] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"journal_id", "citescore_rank", "eigenfactor_rank"}
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            raise CorpusError(f"journal file must have header {sorted(expected)}")
        for i, row in enumerate(reader, start=2):
            jid = int(row["journal_id"])
            if jid in ranks:
                raise CorpusError(f"duplicate journal_id {jid}", line=i)
            ranks[jid] = JournalRank(
                journal_id=jid,
                citescore_rank=_parse_rank(row["citescore_rank"], i),
                eigenfactor_rank=_parse_rank(row["eigenfactor_rank"], i),
            )
    return ranks


def load_corpus(papers_path, journals_path=None) -> Corpus:
    """Load and validate a corpus.

    Duplicate paper ids and malformed lines are fatal. References to ids absent
    from the corpus are kept and flagged external. A missing journals file
    yields an empty rank table.
    """
    papers: dict[int, PaperRecord] = {}
    with open(papers_path) as fh:
        for i, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise CorpusError(f"malformed JSON: {e.msg}", line=i) from e
            rec = _parse_paper(obj, i)
            if rec.paper_id in papers:
                raise CorpusError(
                    f"duplicate paper_id {rec.paper_id}", line=i, paper_id=rec.paper_id
                )
            papers[rec.paper_id] = rec
    if not papers:
        raise CorpusError("corpus is empty")

    ranks: dict[int, JournalRank] = {}
    if journals_path is not None and Path(journals_path).exists():
        ranks = load_journal_ranks(journals_path)
    return Corpus(papers, ranks)


def save_corpus(corpus: Corpus, papers_path, journals_path=None) -> None:
    """Persist a corpus in the load formats; reload is content-identical."""
    with open(papers_path, "w") as fh:
        for pid in sorted(corpus.papers):
            p = corpus.papers[pid]
            obj = {
                "paper_id": p.paper_id,
                "year": p.year,
                "doc_type": p.doc_type,
                "journal_id": p.journal_id,
                "references": list(p.references),
                "terms": list(p.terms),
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
    if journals_path is not None:
        with open(journals_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["journal_id", "citescore_rank", "eigenfactor_rank"])
            for jid in sorted(corpus.ranks):
                r = corpus.ranks[jid]
                writer.writerow(
                    [
                        jid,
                        "" if r.citescore_rank is None else r.citescore_rank,
                        "" if r.eigenfactor_rank is None else r.eigenfactor_rank,
                    ]
                )


def _assignment_of(partition) -> dict[int, int]:
    return partition.assignment if hasattr(partition, "assignment") else partition


class ShareTable:
    """Per-RC yearly paper counts and publication shares for one partition.

    Shares use the corpus-wide yearly totals as denominator: the share of an RC
    in a year is its paper count divided by all papers published that year.
    """

    def __init__(self, corpus: Corpus, partition):
        assignment = _assignment_of(partition)
        y0, y1 = corpus.meta.first_year, corpus.meta.last_year
        self.first_year = y0
        self.last_year = y1
        self.totals = np.array(
            [corpus.meta.yearly_totals.get(y, 0) for y in range(y0, y1 + 1)], dtype=np.int64
        )
        rc_ids = sorted(set(assignment.values()))
        self.rc_ids = rc_ids
        self._row = {rc: i for i, rc in enumerate(rc_ids)}
        counts = np.zeros((len(rc_ids), y1 - y0 + 1), dtype=np.int64)
        for pid, rc in assignment.items():
            try:
                year = corpus.papers[pid].year
            except KeyError:
                raise CorpusError(f"partition references unknown paper {pid}", paper_id=pid)
            counts[self._row[rc], year - y0] += 1
        self.counts = counts

    def papers_in(self, rc_id: int, year: int) -> int:
        row = self._row.get(rc_id)
        if row is None or not (self.first_year <= year <= self.last_year):
            return 0
        return int(self.counts[row, year - self.first_year])

    def share(self, rc_id: int, year: int) -> float:
        if not (self.first_year <= year <= self.last_year):
            raise CorpusError(f"year {year} outside corpus span")
        total = int(self.totals[year - self.first_year])
        if total == 0:
            raise CorpusError(f"empty year {year}")
        return self.papers_in(rc_id, year) / total

    def shares(self, rc_id: int) -> dict[int, float]:
        """Year -> share over the corpus span, zeros included (empty years skipped)."""
        out = {}
        for y in range(self.first_year, self.last_year + 1):
            total = int(self.totals[y - self.first_year])
            if total > 0:
                out[y] = self.papers_in(rc_id, y) / total
        return out


def publication_share(corpus: Corpus, partition, rc_id: int, year: int) -> float:
    """Share of ``rc_id`` in ``year``: its papers divided by all papers that year."""
    if not (corpus.meta.first_year <= year <= corpus.meta.last_year):
        raise CorpusError(f"year {year} outside corpus span")
    total = corpus.meta.yearly_totals.get(year, 0)
    if total == 0:
        raise CorpusError(f"empty year {year}")
    assignment = _assignment_of(partition)
    n = 0
    for pid in corpus.papers_in_year(year):
        if assignment.get(pid) == rc_id:
            n += 1
    return n / total
