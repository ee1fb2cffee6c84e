"""Year-by-year model extension without re-clustering.

New papers join existing research communities in two passes mirroring how the
global models grow: papers with references into already-assigned papers take
the RC holding the plurality of those references; papers without usable
references but with terms take the RC whose aggregate document is most related
under BM25. Assignments are computed against the partition frozen at the
previous year, so same-year papers never see each other and the result is
independent of processing order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace

from .cluster import ClusterError, Partition
from .corpus import Corpus

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


class RcDocumentStats:
    """Per-RC aggregate documents (concatenated member-paper terms) for BM25.

    ``n_docs`` is the number of RC documents, ``df`` counts RCs containing each
    term, and postings map term -> [(rc_id, tf), ...] for sparse scoring.
    """

    def __init__(self, doc_tf: dict[int, Counter]):
        self.doc_tf = doc_tf
        self.doc_len = {rc: sum(tf.values()) for rc, tf in doc_tf.items()}
        self.n_docs = len(doc_tf)
        self.avgdl = (sum(self.doc_len.values()) / self.n_docs) if self.n_docs else 0.0
        df: Counter = Counter()
        postings: dict[str, list[tuple[int, int]]] = {}
        for rc in sorted(doc_tf):
            for term, tf in doc_tf[rc].items():
                df[term] += 1
                postings.setdefault(term, []).append((rc, tf))
        self.df = dict(df)
        self.postings = postings

    @classmethod
    def from_partition(cls, corpus: Corpus, partition) -> "RcDocumentStats":
        assignment = partition.assignment if hasattr(partition, "assignment") else partition
        doc_tf: dict[int, Counter] = {}
        for pid in sorted(assignment):
            rc = assignment[pid]
            terms = corpus.papers[pid].terms
            if rc not in doc_tf:
                doc_tf[rc] = Counter()
            doc_tf[rc].update(terms)
        return cls(doc_tf)

    def idf(self, term: str) -> float:
        # non-negative IDF variant
        df = self.df.get(term, 0)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))


def bm25_relatedness(query_terms, stats: RcDocumentStats, rc_id: int,
                     k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> float:
    """Okapi BM25 score of one RC aggregate document against a query term bag."""
    tf_doc = stats.doc_tf.get(rc_id)
    if tf_doc is None:
        raise KeyError(f"rc {rc_id} has no aggregate document")
    dl = stats.doc_len[rc_id]
    norm = k1 * (1.0 - b + b * dl / stats.avgdl) if stats.avgdl > 0 else k1
    score = 0.0
    for term, qtf in Counter(query_terms).items():
        tf = tf_doc.get(term, 0)
        if tf == 0:
            continue
        score += qtf * stats.idf(term) * tf * (k1 + 1.0) / (tf + norm)
    return score


def bm25_best_rc(query_terms, stats: RcDocumentStats,
                 k1: float = DEFAULT_K1, b: float = DEFAULT_B):
    """(rc_id, score) with the highest positive BM25 score, or None.

    Ties break toward the smaller rc_id.
    """
    scores: dict[int, float] = {}
    for term, qtf in Counter(query_terms).items():
        posting = stats.postings.get(term)
        if not posting:
            continue
        idf = stats.idf(term)
        for rc, tf in posting:
            dl = stats.doc_len[rc]
            norm = k1 * (1.0 - b + b * dl / stats.avgdl) if stats.avgdl > 0 else k1
            scores[rc] = scores.get(rc, 0.0) + qtf * idf * tf * (k1 + 1.0) / (tf + norm)
    best = None
    for rc in sorted(scores):
        if scores[rc] > 0.0 and (best is None or scores[rc] > scores[best] + 1e-15):
            best = rc
    if best is None:
        return None
    return best, scores[best]


@dataclass
class AssignmentReport:
    year: int
    n_papers: int = 0
    by_references: int = 0
    by_bm25: int = 0
    unassigned: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "year": self.year,
            "n_papers": self.n_papers,
            "by_references": self.by_references,
            "by_bm25": self.by_bm25,
            "unassigned": sorted(self.unassigned),
        }


def assign_new_papers(partition: Partition, corpus: Corpus, new_year: int,
                      k1: float = DEFAULT_K1, b: float = DEFAULT_B
                      ) -> tuple[Partition, AssignmentReport]:
    """Extend a partition by one year. Existing assignments never change.

    References are counted against the frozen prior partition; the plurality RC
    wins, ties toward the smaller rc_id. Papers with no usable references but
    nonempty terms take the best-BM25 RC; a zero best score leaves the paper
    unassigned (no relatedness signal), as do papers with neither references
    nor terms.
    """
    if partition.extended_through is None:
        raise ClusterError("partition has no extended_through year")
    if new_year != partition.extended_through + 1:
        raise ClusterError(
            f"new_year must be {partition.extended_through + 1}, got {new_year}"
        )
    base = partition.assignment
    stats = None  # built lazily; most corpora assign nearly everything by references
    report = AssignmentReport(year=new_year)
    added: dict[int, int] = {}
    for pid in corpus.papers_in_year(new_year):
        report.n_papers += 1
        paper = corpus.papers[pid]
        votes: Counter = Counter()
        for ref in paper.references:
            rc = base.get(ref)
            if rc is not None:
                votes[rc] += 1
        if votes:
            top = max(votes.values())
            added[pid] = min(rc for rc, v in votes.items() if v == top)
            report.by_references += 1
            continue
        if paper.terms:
            if stats is None:
                stats = RcDocumentStats.from_partition(corpus, partition)
            hit = bm25_best_rc(paper.terms, stats, k1=k1, b=b)
            if hit is not None:
                added[pid] = hit[0]
                report.by_bm25 += 1
                continue
        report.unassigned.append(pid)

    new_assignment = dict(partition.assignment)
    new_assignment.update(added)
    updated = replace(partition, assignment=new_assignment, extended_through=new_year)
    return updated, report
