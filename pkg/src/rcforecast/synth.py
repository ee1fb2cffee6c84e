"""Synthetic corpora with planted research-community lifecycles.

Every paper belongs to a known community; every community follows a lifecycle
trajectory (emerging, growing, mature, declining, with optional dip-and-recover
segments). A configured fraction of communities receives a growth episode: a
multi-year rise in publication share steep enough to register as exceptional
growth for the forecast years the rise covers. Ground-truth exceptional-growth
labels are computed from the realized publication shares with the same
peak-to-target arithmetic the pipeline uses, so the generator's bookkeeping is
an oracle for every downstream stage.

Signals are planted structurally, not painted onto indicator values:

* rising communities concentrate their papers near the forecast year (stage,
  cvit),
* papers in a rise cite younger work (rvit, delta_rvit), with strength set by
  ``signal_strengths["rvit"]``,
* papers in a rise land in top-ranked journals more often (ntopj, and through
  the shared journal choice also eigen/ctopj), scaled by
  ``signal_strengths["ntopj"]``.

Communities experiencing a growth episode draw their sizes from a boosted
distribution so that growth events remain observable above the usual
20-papers-in-FY size filter; a small "large mature" slice anchors the filtered
population. This is not a model of science, it is a test oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXTERNAL_ID_BASE = 10 ** 8

LIFECYCLE_CLASSES = ("emerging", "growing", "mature", "declining")

_DEFAULT_MIX = {"emerging": 0.15, "growing": 0.15, "mature": 0.45, "declining": 0.25}
_DEFAULT_SIGNALS = {"rvit": 1.0, "ntopj": 1.0}

# geometric youth parameter for reference ages, by lifecycle class
_AGE_P = {"emerging": 0.40, "growing": 0.30, "mature": 0.18, "declining": 0.15}


class SynthError(Exception):
    pass


@dataclass
class SynthConfig:
    rng_seed: int = 0
    n_communities: int = 1000
    first_year: int = 2000
    last_year: int = 2014
    # community total-size distributions (log-normal; medians in papers)
    size_median: float = 3.0
    size_sigma: float = 1.2
    lifecycle_mix: dict = field(default_factory=lambda: dict(_DEFAULT_MIX))
    planted_xg_fraction: float = 0.015
    signal_strengths: dict = field(default_factory=lambda: dict(_DEFAULT_SIGNALS))
    # per-reference routing probabilities; the remainder goes to external items
    intra_p: float = 0.75
    inter_p: float = 0.10
    top_journal_count: int = 20
    top_journal_propensity: float = 3.0
    n_journals: int = 80
    base_top_journal_p: float = 0.10
    refs_mean: float = 6.0
    p_no_refs: float = 0.04
    p_no_terms: float = 0.02
    # a thin slice of persistently large mature communities
    large_mature_fraction: float = 0.015
    large_size_median: float = 320.0
    large_size_sigma: float = 0.4
    # growth-episode communities: a small tier carries the per-fy label base
    # rate; a heavy tier is large enough to stay above the 20-papers-in-FY
    # filter while still rising, so filtered slices keep observable events
    xg_size_median: float = 25.0
    xg_size_sigma: float = 1.0
    xg_large_fraction: float = 0.18
    xg_large_median: float = 350.0
    xg_large_sigma: float = 0.5
    dip_fraction: float = 0.10
    noise_sigma: float = 0.05
    external_pool_size: int = 5

    def __post_init__(self):
        if self.n_communities < 10:
            raise SynthError("need at least 10 communities")
        if self.last_year - self.first_year + 1 < 10:
            raise SynthError("need a span of at least 10 years")
        if abs(sum(self.lifecycle_mix.values()) - 1.0) > 1e-9:
            raise SynthError("lifecycle mix fractions must sum to 1")
        if set(self.lifecycle_mix) - set(LIFECYCLE_CLASSES):
            raise SynthError(f"unknown lifecycle classes: "
                             f"{set(self.lifecycle_mix) - set(LIFECYCLE_CLASSES)}")
        if not (0.0 <= self.inter_p < self.intra_p):
            raise SynthError("need intra_p > inter_p >= 0 (communities must be detectable)")
        if self.intra_p + self.inter_p > 1.0:
            raise SynthError("intra_p + inter_p cannot exceed 1")
        if not (0.0 <= self.planted_xg_fraction <= 0.2):
            raise SynthError("planted_xg_fraction must be in [0, 0.2]")
        if self.top_journal_count >= self.n_journals:
            raise SynthError("top_journal_count must be below n_journals")


@dataclass
class CommunitySpec:
    cid: int
    lifecycle: str
    total: int
    planted: bool
    rise_start: int | None = None     # year index
    rise_len: int = 0
    growth: float = 0.0


@dataclass
class SynthResult:
    papers_path: Path
    ranks_path: Path
    truth_path: Path
    n_papers: int
    n_communities: int
    paper_community: dict[int, int]
    community_class: dict[int, str]
    xg_truth: dict[tuple[int, int], int]   # (community, fy) -> label
    summary: dict


def _apportion(total: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder apportionment of ``total`` across weights (zeros stay zero)."""
    w = np.maximum(weights, 0.0)
    s = w.sum()
    if s <= 0 or total <= 0:
        return np.zeros(len(w), dtype=np.int64)
    quota = total * w / s
    counts = np.floor(quota).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        rema = quota - counts
        order = np.lexsort((np.arange(len(w)), -rema))
        counts[order[:short]] += 1
    return counts


def _community_specs(config: SynthConfig, rng) -> list[CommunitySpec]:
    n = config.n_communities
    y0, y1 = config.first_year, config.last_year
    classes = list(config.lifecycle_mix)
    probs = np.array([config.lifecycle_mix[c] for c in classes])
    drawn = rng.choice(len(classes), size=n, p=probs)

    n_large = round(config.large_mature_fraction * n)
    large_ids = set(rng.choice(n, size=n_large, replace=False).tolist())

    # growth episodes: a rise of R years at rate g registers as exceptional
    # growth for about R forecast years (one pre-rise, the rise itself, one
    # post-peak); sized so the mean per-fy rate hits the configured fraction
    coverable = (y1 - 3) - (y0 + 2) + 1
    mean_cover = 3.2  # empirical per-episode label coverage, edge taper included
    n_xg = round(config.planted_xg_fraction * n * coverable / mean_cover)
    candidates = np.array(sorted(set(range(n)) - large_ids))
    planted_ids = set(rng.choice(candidates, size=min(n_xg, len(candidates)),
                                 replace=False).tolist()) if n_xg else set()

    specs = []
    for cid in range(n):
        planted = cid in planted_ids
        if cid in large_ids:
            lifecycle = "mature"
            total = config.large_size_median * math.exp(
                rng.normal(0.0, config.large_size_sigma))
        elif planted:
            lifecycle = "growing"
            if rng.random() < config.xg_large_fraction:
                total = config.xg_large_median * math.exp(
                    rng.normal(0.0, config.xg_large_sigma))
            else:
                total = config.xg_size_median * math.exp(
                    rng.normal(0.0, config.xg_size_sigma))
        else:
            lifecycle = classes[drawn[cid]]
            total = config.size_median * math.exp(rng.normal(0.0, config.size_sigma))
        spec = CommunitySpec(cid=cid, lifecycle=lifecycle, total=max(3, round(total)),
                             planted=planted)
        if planted:
            spec.rise_len = int(rng.integers(4, 7))                 # 4..6 rise years
            lo = 1
            hi = (y1 - y0) - spec.rise_len
            spec.rise_start = int(rng.integers(lo, hi + 1))
            spec.growth = float(rng.uniform(1.28, 1.45))
        specs.append(spec)
    return specs


def _trajectory(spec: CommunitySpec, n_years: int, config: SynthConfig, rng) -> np.ndarray:
    y = np.arange(n_years)
    if spec.planted:
        base = 0.3
        w = np.full(n_years, base)
        t0, r = spec.rise_start, spec.rise_len
        w[t0:t0 + r + 1] = base * spec.growth ** np.arange(0, min(r + 1, n_years - t0))
        peak = w[min(t0 + r, n_years - 1)]
        tail = np.arange(1, n_years - (t0 + r))
        if len(tail):
            w[t0 + r + 1:] = peak * 0.92 ** tail
    elif spec.lifecycle == "emerging":
        onset = int(rng.integers(3, n_years - 1))
        g = rng.uniform(1.00, 1.05)
        w = np.zeros(n_years)
        w[onset:] = g ** np.arange(n_years - onset)
    elif spec.lifecycle == "growing":
        g = rng.uniform(1.01, 1.05)
        w = g ** y.astype(float)
    elif spec.lifecycle == "declining":
        d = rng.uniform(0.85, 0.95)
        w = d ** y.astype(float)
    else:  # mature
        w = np.ones(n_years)

    if not spec.planted and spec.lifecycle in ("mature", "declining") \
            and rng.random() < config.dip_fraction:
        # dip and recover, the volatile pattern
        ds = int(rng.integers(2, n_years - 2))
        w[ds:ds + 2] *= 0.55
    w = w * np.exp(rng.normal(0.0, config.noise_sigma, size=n_years))
    return w


def _in_rise(spec: CommunitySpec, year_idx: int) -> bool:
    return (spec.planted and spec.rise_start is not None
            and spec.rise_start <= year_idx <= spec.rise_start + spec.rise_len)


def _geometric_ages(u: np.ndarray, p: float) -> np.ndarray:
    # inverse-transform geometric on {1, 2, ...}
    return 1 + np.floor(np.log(np.maximum(u, 1e-12)) / math.log(1.0 - p)).astype(np.int64)


def _nearest_year_with_papers(wanted: int, years_with: list[int]) -> int | None:
    """Closest year (preferring the older side) from a sorted list."""
    if not years_with:
        return None
    best = None
    best_d = None
    for yy in years_with:
        d = abs(yy - wanted) + (0.25 if yy > wanted else 0.0)
        if best_d is None or d < best_d:
            best, best_d = yy, d
    return best


def _sample_intra(k: int, pool: list[int], by_year: list[list[int]],
                  years_with: list[int], yi: int, p_age: float, rng) -> list[int]:
    """k distinct earlier papers of one community, reference ages geometric.

    Small pools fall back to a uniform draw without replacement; the age
    structure is negligible there anyway.
    """
    if k == 0:
        return []
    if len(pool) <= 3 * k:
        idx = rng.permutation(len(pool))[:k]
        return [pool[int(j)] for j in idx]
    out: list[int] = []
    seen: set[int] = set()
    guard = 0
    while len(out) < k and guard < 8 * k:
        guard += 1
        age = int(_geometric_ages(rng.random(1), p_age)[0])
        ty = _nearest_year_with_papers(yi - age, years_with)
        group = by_year[ty]
        cand = group[int(rng.random() * len(group))]
        if cand not in seen:
            seen.add(cand)
            out.append(cand)
    while len(out) < k and guard < 16 * k:
        guard += 1
        cand = pool[int(rng.random() * len(pool))]
        if cand not in seen:
            seen.add(cand)
            out.append(cand)
    return out


def _sample_inter(global_by_year: list[list[int]], yi: int, own: int,
                  paper_community: dict[int, int], taken: set[int], rng
                  ) -> int | None:
    """One earlier paper outside the citing community, or None."""
    for _ in range(4):
        age = int(_geometric_ages(rng.random(1), 0.20)[0])
        ty = max(0, min(yi - age, yi - 1))
        cand = None
        for back in range(ty + 1):
            pool = global_by_year[ty - back]
            if pool:
                cand = pool[int(rng.random() * len(pool))]
                break
        if cand is not None and paper_community[cand] != own and cand not in taken:
            return cand
    return None


def generate(config: SynthConfig, out_dir) -> SynthResult:
    """Write papers.jsonl, ranks.csv and truth.tsv under ``out_dir``.

    Deterministic per rng_seed: same seed, byte-identical outputs.
    """
    rng = np.random.default_rng(config.rng_seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    y0, y1 = config.first_year, config.last_year
    n_years = y1 - y0 + 1
    p_ext = 1.0 - config.intra_p - config.inter_p

    specs = _community_specs(config, rng)
    counts = np.zeros((config.n_communities, n_years), dtype=np.int64)
    for spec in specs:
        counts[spec.cid] = _apportion(spec.total, _trajectory(spec, n_years, config, rng))

    # journals: the top slice ranks 1..top_count, everything else lands above
    # the fixed 250 cutoff; the eigenfactor ordering is an independent shuffle
    eigen_positions = rng.permutation(config.n_journals) + 1
    strengths = {**_DEFAULT_SIGNALS, **config.signal_strengths}
    p_young_rise = min(0.8, max(0.2, 0.45 + 0.12 * strengths.get("rvit", 1.0)))
    p_top_rise = min(0.85, config.base_top_journal_p * config.top_journal_propensity
                     * strengths.get("ntopj", 1.0))

    papers_path = out_dir / "papers.jsonl"
    ranks_path = out_dir / "ranks.csv"
    truth_path = out_dir / "truth.tsv"

    members: list[list[list[int]]] = [[[] for _ in range(n_years)]
                                      for _ in range(config.n_communities)]
    years_with: list[list[int]] = [[] for _ in range(config.n_communities)]
    earlier: list[list[int]] = [[] for _ in range(config.n_communities)]
    global_by_year: list[list[int]] = [[] for _ in range(n_years)]
    paper_community: dict[int, int] = {}
    ref_events = {"intra": 0, "inter": 0, "external": 0}

    next_id = 1
    with open(papers_path, "w") as fh:
        for yi in range(n_years):
            year = y0 + yi
            for spec in specs:
                k = int(counts[spec.cid, yi])
                if k == 0:
                    continue
                c = spec.cid
                rise = _in_rise(spec, yi)
                p_top = p_top_rise if rise else config.base_top_journal_p
                p_age = p_young_rise if rise else _AGE_P[spec.lifecycle]

                u_doc = rng.random(k)
                u_top = rng.random(k)
                j_top = rng.integers(1, config.top_journal_count + 1, size=k)
                j_rest = rng.integers(config.top_journal_count + 1,
                                      config.n_journals + 1, size=k)
                u_refs = rng.random(k)
                n_refs = 1 + rng.poisson(max(config.refs_mean - 1.0, 0.0), size=k)
                u_terms = rng.random(k)

                for i in range(k):
                    pid = next_id
                    next_id += 1
                    doc_type = ("article" if u_doc[i] < 0.85
                                else "review" if u_doc[i] < 0.92 else "other")
                    journal = int(j_top[i] if u_top[i] < p_top else j_rest[i])

                    refs: list[int] = []
                    if u_refs[i] >= config.p_no_refs:
                        nr = int(n_refs[i])
                        kinds = rng.random(nr)
                        n_ext = int((kinds < p_ext).sum())
                        n_intra = int((kinds < p_ext + config.intra_p).sum()) - n_ext
                        n_inter = nr - n_ext - n_intra
                        if yi == 0:  # nothing to cite yet; route all backward
                            n_ext, n_intra, n_inter = nr, 0, 0
                        pool_c = earlier[c]
                        k_intra = min(n_intra, len(pool_c))
                        if k_intra < n_intra:
                            # thin history: the community is young, so both its
                            # in-community and cross-community citations give
                            # way to outside literature in equal proportion,
                            # keeping the configured intra/inter ratio intact
                            keep = k_intra / n_intra
                            k_inter = int(round(n_inter * keep))
                            n_ext += (n_intra - k_intra) + (n_inter - k_inter)
                            n_inter = k_inter

                        targets = _sample_intra(k_intra, pool_c, members[c],
                                                years_with[c], yi, p_age, rng)
                        ref_events["intra"] += len(targets)
                        refs.extend(targets)
                        taken = set(targets)

                        for _ in range(n_inter):
                            ref = _sample_inter(global_by_year, yi, c,
                                                paper_community, taken, rng)
                            if ref is None:
                                n_ext += 1
                            else:
                                taken.add(ref)
                                refs.append(ref)
                                ref_events["inter"] += 1

                        if n_ext:
                            k_e = min(n_ext, config.external_pool_size)
                            base = EXTERNAL_ID_BASE + c * config.external_pool_size
                            idx = rng.permutation(config.external_pool_size)[:k_e]
                            refs.extend(base + int(j) for j in idx)
                            ref_events["external"] += k_e

                    if u_terms[i] < config.p_no_terms:
                        terms: list[str] = []
                    else:
                        own = rng.choice(12, size=4, replace=False)
                        shared = np.floor(200 * rng.random(3) ** 2).astype(int)
                        terms = sorted([f"c{c}k{j}" for j in own.tolist()]
                                       + [f"w{j}" for j in shared.tolist()])

                    obj = {
                        "paper_id": pid,
                        "year": year,
                        "doc_type": doc_type,
                        "journal_id": journal,
                        "references": sorted(refs),
                        "terms": terms,
                    }
                    fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
                    paper_community[pid] = c
                    members[c][yi].append(pid)
                    global_by_year[yi].append(pid)
                if k:
                    years_with[c].append(yi)
                    earlier[c].extend(members[c][yi])

    with open(ranks_path, "w") as fh:
        fh.write("journal_id,citescore_rank,eigenfactor_rank\n")
        for j in range(1, config.n_journals + 1):
            cs = j if j <= config.top_journal_count else 250 + j
            ep = int(eigen_positions[j - 1])
            eig = ep if ep <= config.top_journal_count else 250 + ep
            fh.write(f"{j},{cs},{eig}\n")

    # ground-truth labels from realized shares, peak-to-target arithmetic
    totals = counts.sum(axis=0)
    xg_truth: dict[tuple[int, int], int] = {}
    xg_per_fy: dict[int, int] = {}
    with np.errstate(invalid="ignore", divide="ignore"):
        shares = np.where(totals > 0, counts / np.maximum(totals, 1), 0.0)
    for spec in specs:
        row = shares[spec.cid]
        for fy_idx in range(0, n_years - 3):
            upto = row[:fy_idx + 1]
            top = upto.max()
            if top <= 0.0:
                continue
            pk_idx = int(np.flatnonzero(upto == top)[-1])
            ty_idx = fy_idx + 3
            gr = (row[ty_idx] / top) ** (1.0 / (ty_idx - pk_idx))
            label = 1 if gr > 1.08 else 0
            fy = y0 + fy_idx
            xg_truth[(spec.cid, fy)] = label
            if label:
                xg_per_fy[fy] = xg_per_fy.get(fy, 0) + 1

    # the "+xg" suffix marks communities carrying a planted growth episode
    community_class = {spec.cid: spec.lifecycle + ("+xg" if spec.planted else "")
                       for spec in specs}
    with open(truth_path, "w") as fh:
        fh.write("kind\tid\tfy\tvalue\n")
        for pid in sorted(paper_community):
            fh.write(f"paper\t{pid}\t\t{paper_community[pid]}\n")
        for spec in specs:
            fh.write(f"class\t{spec.cid}\t\t{community_class[spec.cid]}\n")
        for (cid, fy) in sorted(xg_truth):
            fh.write(f"xg\t{cid}\t{fy}\t{xg_truth[(cid, fy)]}\n")

    summary = {
        "n_papers": next_id - 1,
        "n_planted": sum(1 for s in specs if s.planted),
        "ref_events": ref_events,
        "xg_per_fy": xg_per_fy,
        "yearly_totals": {y0 + i: int(totals[i]) for i in range(n_years)},
    }
    return SynthResult(
        papers_path=papers_path, ranks_path=ranks_path, truth_path=truth_path,
        n_papers=next_id - 1, n_communities=config.n_communities,
        paper_community=paper_community, community_class=community_class,
        xg_truth=xg_truth, summary=summary,
    )


def load_truth(path):
    """Parse truth.tsv back into (paper_community, community_class, xg_truth)."""
    paper_community: dict[int, int] = {}
    community_class: dict[int, str] = {}
    xg_truth: dict[tuple[int, int], int] = {}
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != "kind\tid\tfy\tvalue":
            raise SynthError(f"unexpected truth header: {header!r}")
        for line in fh:
            kind, key, fy, value = line.rstrip("\n").split("\t")
            if kind == "paper":
                paper_community[int(key)] = int(value)
            elif kind == "class":
                community_class[int(key)] = value
            elif kind == "xg":
                xg_truth[(int(key), int(fy))] = int(value)
            else:
                raise SynthError(f"unknown truth row kind {kind!r}")
    return paper_community, community_class, xg_truth


def config_from_json(path) -> SynthConfig:
    with open(path) as fh:
        obj = json.load(fh)
    return SynthConfig(**obj)
