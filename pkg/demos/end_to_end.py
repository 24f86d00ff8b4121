"""Generate a labeled corpus, build a voids profile from it, and replay.

    python demos/end_to_end.py [workdir]

Prints the amendment count against the planted Soft-404 labels, the status
fluctuation table, the frequency buckets and the threshold sweep.
"""

import sys
import tempfile
from pathlib import Path

from archvoids.config import PipelineConfig
from archvoids.fixtures import default_spec, generate
from archvoids.pipeline import run_pipeline


def main(workdir: Path) -> None:
    corpus = generate(default_spec(seed=7), workdir / "corpus")
    print(f"corpus: {corpus.lines:,} lines in {len(corpus.files)} files "
          f"({len(corpus.labels.soft404)} planted Soft-404s)")

    cfg = PipelineConfig(profiling_min_count=10, profiling_archive="example.org")
    result = run_pipeline(cfg, corpus.log_dir, workdir / "out")
    rep = result.reports

    print(f"amended:  {rep['amend']['amended']} records rewritten from 200 to 404")

    print("\nstatus fluctuations")
    for pattern, n in sorted(rep["histories"]["fluctuations"].items(), key=lambda kv: -kv[1]):
        print(f"  {pattern:<24} {n:>6}")

    print("\n404-only URI-Rs by repetition")
    for label, n in rep["buckets"].items():
        print(f"  {label:<8} {n:>6}")

    print("\nthreshold sweep (replay over the same log)")
    print(f"  {'min':>5} {'keys':>6} {'saved %':>8} {'FN':>4}")
    for r in rep["sweep"]:
        print(f"  {r['threshold']:>5} {r['profile_size']:>6} {r['savings_pct']:>8.2f} "
              f"{r['false_negatives']:>4}")

    print(f"\nprofile: {result.profile_path} ({len(result.profile.entries)} keys)")
    print(result.profile_path.read_text().splitlines()[0], "...")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        main(Path(sys.argv[1]))
    else:
        with tempfile.TemporaryDirectory() as tmp:
            main(Path(tmp))
