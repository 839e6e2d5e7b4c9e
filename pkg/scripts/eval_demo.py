"""Compare prompted generation against the context-only baseline on the
bundled five-sentence story, mirroring the evaluation loop at desk scale.

Usage: python3 scripts/eval_demo.py [--seed N] [--out report.json]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fabula.metrics import BaselineSystem, CorpusItem, PromptedSystem, run_comparison
from fabula.mock import MARY_OPENING, MARY_PROMPTED, MockModelBackends


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", default=None, help="write the report JSON here")
    args = parser.parse_args()

    story = [MARY_OPENING, *MARY_PROMPTED]
    corpus = [CorpusItem(tuple(story[:i]), story[i]) for i in range(1, len(story))]

    backends = MockModelBackends(seed=args.seed)
    result = run_comparison(corpus, PromptedSystem(backends), BaselineSystem(backends))

    print(f"{result.name_a} vs {result.name_b} on {result.total} items")
    for metric in sorted(result.report_a.per_metric):
        mean_a = result.report_a.per_metric[metric].mean
        mean_b = result.report_b.per_metric[metric].mean
        delta = result.improvement[metric]
        delta_text = "n/a" if delta is None else f"{delta:+.1%}"
        print(f"  {metric:10s} a={mean_a:.4f} b={mean_b:.4f} improvement {delta_text}")
    print(f"  corpus_bleu a={result.corpus_bleu_a:.4f} b={result.corpus_bleu_b:.4f}")

    if args.out:
        Path(args.out).write_text(
            json.dumps(result.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"report written to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
