"""Generate a synthetic corpus with planted community lifecycles.

Every downstream capability is demonstrated against corpora like this one:
papers belong to known communities, communities follow lifecycle trajectories
(emerging, growing, mature, declining, some with a dip-and-recover pattern),
and a configured fraction carries a multi-year growth episode steep enough to
register as exceptional growth. The generator writes three files:

  papers.jsonl  one JSON object per paper
  ranks.csv     journal_id,citescore_rank,eigenfactor_rank
  truth.tsv     true community of every paper, lifecycle class per community,
                and the realized exceptional-growth label per (community, fy)
"""

import json
from pathlib import Path

from rcforecast import SynthConfig, generate, load_corpus

OUT = Path("demo_output/synth")

config = SynthConfig(rng_seed=42, n_communities=800)
result = generate(config, OUT)

print(f"wrote {result.n_papers} papers across {result.n_communities} communities")
print(f"planted growth episodes: {result.summary['n_planted']}")
print(f"reference events by kind: {result.summary['ref_events']}")

# the corpus loads through the ordinary validator
corpus = load_corpus(result.papers_path, result.ranks_path)
print(f"\ncorpus spans {corpus.meta.first_year}-{corpus.meta.last_year}, "
      f"{len(corpus.external_ids)} external cited items")

print("\nyearly totals:")
for year, total in sorted(corpus.meta.yearly_totals.items()):
    print(f"  {year}: {total:5d} " + "#" * (total // 40))

# realized exceptional-growth labels per forecast year
per_fy = {}
for (cid, fy), label in result.xg_truth.items():
    per_fy[fy] = per_fy.get(fy, 0) + label
print("\nexceptional-growth communities per forecast year (truth):")
for fy in sorted(per_fy):
    print(f"  {fy}: {per_fy[fy]}")

print("\nfirst paper record:")
with open(result.papers_path) as fh:
    print("  " + json.dumps(json.loads(fh.readline()), indent=2).replace("\n", "\n  "))
