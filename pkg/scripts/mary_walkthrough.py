"""Drive one full co-creation session against the mock backends and save
the resulting artifacts.

Usage: python3 scripts/mary_walkthrough.py [--out DIR] [--seed N]
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fabula.mock import MARY_OPENING, MockModelBackends
from fabula.session import SessionStore, StoryEngine, replay_actions

ACTION_LOG = Path(__file__).resolve().parent.parent / "tests" / "data" / "mary_actions.json"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="walkthrough_out", help="artifact directory")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    script = json.loads(ACTION_LOG.read_text(encoding="utf-8"))
    script["seed"] = args.seed
    assert script["first_sentence"] == MARY_OPENING

    engine = StoryEngine(MockModelBackends(seed=args.seed))
    session = replay_actions(engine, script)

    store = SessionStore(args.out)
    path = store.save(session)

    print(f"session {session.id} ({session.phase.value})")
    for index, sentence in enumerate(session.story, start=1):
        print(f"  {index}. {sentence}")
    print()
    for turn in session.turns:
        chosen = turn.image_batch[turn.selected_image]
        print(f"turn {turn.index}: picked {chosen.id}")
        for row in turn.detection_summary.rows:
            print(f"    {row.item}: count {row.count}, confidence {row.confidence:.3f}")
    print()
    print(f"wrote {path} and {sum(len(t.image_batch) for t in session.turns)} images")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
