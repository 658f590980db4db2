"""
Robustness against content-preserving edits
===========================================

Run the mild attack grid over the synthetic desk corpus and print, per kind
of edit, how well attacked copies keep their hash. The closest pair of
different images is printed for comparison.
"""

import itertools

from fdnshash import attacks, desk, evaluation, fdns

corpus = desk.desk_corpus()
print("desk corpus:", ", ".join(sorted(corpus)))

# every image is hashed once clean and once per attack
report = evaluation.robustness_bench(corpus, attacks.MILD_GRID, corpus_id="desk")
print("\n%-11s %4s %8s %8s" % ("kind", "n", "mean", "min"))
for kind, (n, mean, lo, _) in report.by_kind().items():
    print("%-11s %4d %8.4f %8.4f" % (kind, n, mean, lo))

# the worst single attacked copy
worst = min((v, ident, r.spec) for r in report.rows for ident, v in r.correlations)
print("\nworst attacked copy: %.4f (%s under %s)" % worst)

# impostors: distinct images compared with each other
hashes = {k: fdns.hash_image(v) for k, v in corpus.items()}
pairs = sorted(((fdns.correlation(hashes[a], hashes[b]), a, b) for a, b in itertools.combinations(sorted(hashes), 2)), reverse=True)
print("closest distinct pair: %.4f (%s vs %s)" % pairs[0])

# the CSV form written by the bench command
print()
print("\n".join(report.to_csv().splitlines()[:6]))
