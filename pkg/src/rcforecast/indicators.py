"""Per-(RC, forecast-year) indicators: raw values, transforms, yearly standardization.

Ten indicators per row. Life cycle: stage (reciprocal time since the peak
publication-share year), cvit (mean reciprocal paper age over a ten-year
window), rvit (mean reciprocal reference age of the forecast-year papers,
fourth-root transformed and clipped at three standard deviations) and
delta_rvit (Z-score of rvit against its own ten-year history, bounded at five).
Academic importance: ntopj / ctopj / eigen count forecast-year papers in, or
references to, top-250 journals. Size: nart, nrev, nref.

Reciprocal age is 1/(age+1) throughout, which gives cvit its 1/11..1 range and
keeps same-year references finite.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, JournalRank, ShareTable

INDICATOR_NAMES = ("stage", "cvit", "rvit", "delta_rvit",
                   "ntopj", "ctopj", "eigen", "nart", "nrev", "nref")

TOP_RANK = 250
DEFAULT_WINDOW = 10

#: transform applied before yearly standardization, keyed by indicator
_TRANSFORMS = {
    "stage": "identity",
    "cvit": "log",
    "rvit": "fourth_root",
    "delta_rvit": "identity",
    "ntopj": "log1p",
    "ctopj": "log1p",
    "eigen": "log1p",
    "nart": "log1p",
    "nrev": "log1p",
    "nref": "log1p",
}


@dataclass(frozen=True)
class RawIndicators:
    rc_id: int
    fy: int
    pk: int
    stage: float
    cvit: float
    rvit: float | None          # None when the RC has no datable references in FY
    delta_rvit: float
    ntopj: int
    ctopj: int
    eigen: int
    nart: int
    nrev: int
    nref: int
    papers_in_fy: int

    def value(self, name: str):
        return getattr(self, name)


@dataclass(frozen=True)
class StandardizedIndicators:
    rc_id: int
    fy: int
    stage_s: float
    cvit_s: float
    rvit_s: float
    delta_rvit_s: float
    ntopj_s: float
    ctopj_s: float
    eigen_s: float
    nart_s: float
    nrev_s: float
    nref_s: float

    def value(self, name: str) -> float:
        return getattr(self, name + "_s")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name + "_s") for name in INDICATOR_NAMES}


def peak_year(shares: dict[int, float], fy: int) -> int:
    """Latest year through ``fy`` at which the share attains its maximum."""
    candidates = {y: s for y, s in shares.items() if y <= fy}
    if not candidates or max(candidates.values()) <= 0.0:
        raise ValueError(f"RC has no papers through {fy}")
    peak = max(candidates.values())
    return max(y for y, s in candidates.items() if s == peak)


class IndicatorEngine:
    """Bulk indicator computation for one (corpus, partition) pair.

    Caches per-RC yearly membership and per-year rvit values so the ten-year
    delta_rvit history costs each year once.
    """

    def __init__(self, corpus: Corpus, partition, ranks: dict[int, JournalRank] | None = None,
                 window: int = DEFAULT_WINDOW, top_rank: int = TOP_RANK):
        self.corpus = corpus
        self.partition = partition
        self.ranks = corpus.ranks if ranks is None else ranks
        self.window = window
        self.top_rank = top_rank
        self.shares = ShareTable(corpus, partition)
        assignment = partition.assignment if hasattr(partition, "assignment") else partition
        members: dict[int, dict[int, list[int]]] = {}
        for pid in sorted(assignment):
            rc = assignment[pid]
            year = corpus.papers[pid].year
            members.setdefault(rc, {}).setdefault(year, []).append(pid)
        self._members = members
        self._rvit_cache: dict[tuple[int, int], float | None] = {}

    def rc_ids(self) -> list[int]:
        return sorted(self._members)

    def _papers(self, rc_id: int, year: int) -> list[int]:
        return self._members.get(rc_id, {}).get(year, [])

    def _in_top(self, journal_id, which: str) -> bool:
        if journal_id is None:
            return False
        rank = self.ranks.get(journal_id)
        if rank is None:
            return False
        value = rank.citescore_rank if which == "citescore" else rank.eigenfactor_rank
        return value is not None and value <= self.top_rank

    def _rvit(self, rc_id: int, year: int) -> float | None:
        """Mean reciprocal reference age for papers published in ``year``.

        References with unknown year (external items) are excluded; negative
        ages clamp to zero.
        """
        key = (rc_id, year)
        if key in self._rvit_cache:
            return self._rvit_cache[key]
        total = 0.0
        n = 0
        for pid in self._papers(rc_id, year):
            for ref in self.corpus.papers[pid].references:
                target = self.corpus.papers.get(ref)
                if target is None:
                    continue
                age = max(year - target.year, 0)
                total += 1.0 / (age + 1)
                n += 1
        out = (total / n) if n else None
        self._rvit_cache[key] = out
        return out

    def raw(self, rc_id: int, fy: int) -> RawIndicators | None:
        """Raw indicators for one (RC, forecast year); None if the RC has no
        papers in the window [fy-window, fy]."""
        window_papers = []
        for y in range(fy - self.window, fy + 1):
            window_papers.extend(self._papers(rc_id, y))
        if not window_papers:
            return None

        pk = peak_year(self.shares.shares(rc_id), fy)
        stage = 1.0 / (fy - pk + 1)

        cvit = sum(
            1.0 / (fy - self.corpus.papers[pid].year + 1) for pid in window_papers
        ) / len(window_papers)

        rvit = self._rvit(rc_id, fy)
        history = [self._rvit(rc_id, y) for y in range(fy - self.window, fy)]
        history = [h for h in history if h is not None]
        if rvit is None or len(history) < 3:
            delta_rvit = 0.0
        else:
            mean = float(np.mean(history))
            std = float(np.std(history))
            delta_rvit = 0.0 if std < 1e-12 else (rvit - mean) / std
            delta_rvit = min(max(delta_rvit, -5.0), 5.0)

        fy_papers = self._papers(rc_id, fy)
        ntopj = eigen = ctopj = nart = nrev = nref = 0
        for pid in fy_papers:
            paper = self.corpus.papers[pid]
            if self._in_top(paper.journal_id, "citescore"):
                ntopj += 1
            if self._in_top(paper.journal_id, "eigenfactor"):
                eigen += 1
            if paper.doc_type == "article":
                nart += 1
            elif paper.doc_type == "review":
                nrev += 1
            nref += len(paper.references)
            for ref in paper.references:
                target = self.corpus.papers.get(ref)
                if target is not None and self._in_top(target.journal_id, "citescore"):
                    ctopj += 1

        return RawIndicators(
            rc_id=rc_id, fy=fy, pk=pk, stage=stage, cvit=cvit, rvit=rvit,
            delta_rvit=delta_rvit, ntopj=ntopj, ctopj=ctopj, eigen=eigen,
            nart=nart, nrev=nrev, nref=nref, papers_in_fy=len(fy_papers),
        )

    def rows(self, fy: int) -> list[RawIndicators]:
        out = []
        for rc in self.rc_ids():
            row = self.raw(rc, fy)
            if row is not None:
                out.append(row)
        return out


def compute_raw(partition, corpus: Corpus, journal_ranks, rc_id: int, fy: int,
                window: int = DEFAULT_WINDOW) -> RawIndicators | None:
    """One-shot convenience; bulk callers should reuse an IndicatorEngine."""
    engine = IndicatorEngine(corpus, partition, journal_ranks, window=window)
    return engine.raw(rc_id, fy)


def _transform(name: str, values: np.ndarray) -> np.ndarray:
    kind = _TRANSFORMS[name]
    if kind == "identity":
        return values
    if kind == "log":
        return np.log(values)
    if kind == "log1p":
        return np.log1p(values)
    if kind == "fourth_root":
        return values ** 0.25
    raise ValueError(kind)


def transform_and_standardize(rows: list[RawIndicators]) -> list[StandardizedIndicators]:
    """Transform each indicator and standardize by the forecast-year population.

    All rows must share one forecast year. Uses population mean/stdev; a
    constant column standardizes to all zeros with a warning. Undefined rvit
    values standardize to 0 (the population mean) and rvit is clipped to
    +/- 3 after standardization.
    """
    if len(rows) < 2:
        raise ValueError("standardization needs at least 2 rows")
    fys = {r.fy for r in rows}
    if len(fys) != 1:
        raise ValueError(f"rows span multiple forecast years: {sorted(fys)}")

    columns: dict[str, np.ndarray] = {}
    for name in INDICATOR_NAMES:
        vals = np.array(
            [math.nan if r.value(name) is None else float(r.value(name)) for r in rows]
        )
        defined = ~np.isnan(vals)
        t = np.full(len(rows), math.nan)
        t[defined] = _transform(name, vals[defined])
        mean = float(np.mean(t[defined]))
        std = float(np.std(t[defined]))
        if std < 1e-12:
            warnings.warn(f"indicator {name} is constant in fy={rows[0].fy}; "
                          "standardized values set to 0")
            z = np.zeros(len(rows))
        else:
            z = (t - mean) / std
            z[~defined] = 0.0
        if name == "rvit":
            z = np.clip(z, -3.0, 3.0)
        columns[name] = z

    out = []
    for i, r in enumerate(rows):
        out.append(StandardizedIndicators(
            rc_id=r.rc_id, fy=r.fy,
            **{name + "_s": float(columns[name][i]) for name in INDICATOR_NAMES},
        ))
    return out


# --- persistence -------------------------------------------------------------

_TSV_COLUMNS = (["rc_id", "fy", "pk", "papers_in_fy"]
                + list(INDICATOR_NAMES)
                + [name + "_s" for name in INDICATOR_NAMES])


def write_indicator_tsv(path, raw_rows: list[RawIndicators],
                        std_rows: list[StandardizedIndicators]) -> None:
    """Raw and standardized columns side by side, one row per (rc_id, fy)."""
    if len(raw_rows) != len(std_rows):
        raise ValueError("raw and standardized row counts differ")
    with open(path, "w") as fh:
        fh.write("\t".join(_TSV_COLUMNS) + "\n")
        for raw, std in zip(raw_rows, std_rows):
            if (raw.rc_id, raw.fy) != (std.rc_id, std.fy):
                raise ValueError("raw and standardized rows misaligned")
            cells = [str(raw.rc_id), str(raw.fy), str(raw.pk), str(raw.papers_in_fy)]
            for name in INDICATOR_NAMES:
                v = raw.value(name)
                cells.append("nan" if v is None else repr(v) if isinstance(v, float) else str(v))
            cells += [repr(std.value(name)) for name in INDICATOR_NAMES]
            fh.write("\t".join(cells) + "\n")


def read_indicator_tsv(path) -> tuple[list[RawIndicators], list[StandardizedIndicators]]:
    raw_rows: list[RawIndicators] = []
    std_rows: list[StandardizedIndicators] = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != _TSV_COLUMNS:
            raise ValueError(f"unexpected indicator header: {header}")
        for line in fh:
            cells = line.rstrip("\n").split("\t")
            rc_id, fy, pk, papers_in_fy = (int(c) for c in cells[:4])
            raw_vals = cells[4:4 + len(INDICATOR_NAMES)]
            std_vals = cells[4 + len(INDICATOR_NAMES):]
            kwargs = {}
            for name, cell in zip(INDICATOR_NAMES, raw_vals):
                if name in ("ntopj", "ctopj", "eigen", "nart", "nrev", "nref"):
                    kwargs[name] = int(cell)
                elif name == "rvit" and cell == "nan":
                    kwargs[name] = None
                else:
                    kwargs[name] = float(cell)
            raw_rows.append(RawIndicators(rc_id=rc_id, fy=fy, pk=pk,
                                          papers_in_fy=papers_in_fy, **kwargs))
            std_rows.append(StandardizedIndicators(
                rc_id=rc_id, fy=fy,
                **{n + "_s": float(c) for n, c in zip(INDICATOR_NAMES, std_vals)},
            ))
    return raw_rows, std_rows
