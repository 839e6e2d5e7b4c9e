"""Command-line front door: serve the HTTP API, drive a story session from
the shell, run evaluations, extract keywords.

Exit codes: 0 success, 1 user error, 2 backend failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .backends import (
    ENV_DETECT_URL,
    ENV_EMOTION_URL,
    ENV_IMAGE_URL,
    ENV_TEXT_URL,
    HttpModelBackends,
    ModelBackends,
)
from .emotion import EmotionLabelSet
from .errors import BackendError, BackendUnavailable, FabulaError
from .imageflow import StylePrefs
from .keywords import KeywordSet, extract_keywords
from .metrics import (
    BaselineSystem,
    PromptedSystem,
    load_corpus,
    run_comparison,
    write_scores_csv,
)
from .mock import MockModelBackends
from .server import ServiceConfig, serve
from .session import SessionStore, StoryEngine, session_to_dict

USER_ERROR = 1
BACKEND_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USER_ERROR)


def _env_backends_configured() -> bool:
    return any(
        os.environ.get(var)
        for var in (ENV_TEXT_URL, ENV_EMOTION_URL, ENV_IMAGE_URL, ENV_DETECT_URL)
    )


def _backends(mock: bool, seed: int) -> ModelBackends:
    if mock or not _env_backends_configured():
        return MockModelBackends(seed=seed)
    return HttpModelBackends.from_env()


def _split_csv(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _print_suggestions(session) -> None:
    turn = session.current_turn
    print(f"suggested emotions: {turn.suggested_emotions.to_fragment() or '(none)'}")
    print(f"suggested keywords: {turn.suggested_keywords.to_fragment() or '(none)'}")
    print(f"current emotions:   {turn.user_emotions.to_fragment() or '(none)'}")
    print(f"current keywords:   {turn.user_keywords.to_fragment() or '(none)'}")


def _print_session(session) -> None:
    print(f"session {session.id}")
    print(f"phase {session.phase.value}")
    for i, sentence in enumerate(session.story, start=1):
        print(f"  {i}. {sentence}")


def build_parser() -> _Parser:
    parser = _Parser(prog="fabula", description="Interactive visual story co-creation")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--sessions-dir", default="sessions")
    p_serve.add_argument("--mock", action="store_true", help="use deterministic mock backends")
    p_serve.add_argument("--seed", type=int, default=0)

    p_story = sub.add_parser("story", help="drive a story session")
    story_sub = p_story.add_subparsers(dest="story_command", metavar="action")

    def story_common(p, with_id=True):
        p.add_argument("--sessions-dir", default="sessions")
        p.add_argument("--mock", action="store_true")
        if with_id:
            p.add_argument("--id", required=True, help="session id")

    p_new = story_sub.add_parser("new", help="start a session from a first sentence")
    story_common(p_new, with_id=False)
    p_new.add_argument("--first", required=True, help="the opening sentence")
    p_new.add_argument("--seed", type=int, default=0)
    p_new.add_argument("--artist", default=None)
    p_new.add_argument("--background", default=None)

    for name, help_text in (
        ("suggest", "show the current suggestions"),
        ("next", "generate the next sentence"),
        ("show", "print the session"),
    ):
        p = story_sub.add_parser(name, help=help_text)
        story_common(p)

    p_override = story_sub.add_parser("override", help="replace suggested emotions/keywords")
    story_common(p_override)
    p_override.add_argument("--keywords", default=None, help='comma-separated, e.g. "a dog, the park"')
    p_override.add_argument("--emotions", default=None, help='comma-separated label names')

    p_images = story_sub.add_parser("images", help="render the image batch for the latest sentence")
    story_common(p_images)
    p_images.add_argument("--artist", default=None)
    p_images.add_argument("--background", default=None)

    p_select = story_sub.add_parser("select", help="pick an image and close the turn")
    story_common(p_select)
    p_select.add_argument("--index", type=int, required=True)

    p_eval = sub.add_parser("eval", help="compare two generation systems")
    eval_sub = p_eval.add_subparsers(dest="eval_command", metavar="action")
    p_run = eval_sub.add_parser("run", help="score a corpus under two systems")
    p_run.add_argument("--corpus", required=True, help="JSONL of {context, reference}")
    p_run.add_argument("--a", dest="system_a", default="mock:prompted")
    p_run.add_argument("--b", dest="system_b", default="mock:baseline")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", default=None, help="write the report JSON here")
    p_run.add_argument("--csv", default=None, help="write per-item scores here")
    p_report = eval_sub.add_parser("report", help="pretty-print a report")
    p_report.add_argument("--path", required=True)

    sub.add_parser("extract", help="print keywords for each stdin line")
    return parser


def _eval_system(spec: str, seed: int):
    backend_name, _, mode = spec.partition(":")
    if backend_name == "mock":
        backend = MockModelBackends(seed=seed)
    elif backend_name == "env":
        backend = HttpModelBackends.from_env()
    else:
        raise FabulaError(f"unknown backend {backend_name!r} (use mock: or env:)")
    if mode == "prompted":
        return PromptedSystem(backend)
    if mode == "baseline":
        return BaselineSystem(backend)
    raise FabulaError(f"unknown system mode {mode!r} (use prompted or baseline)")


def _cmd_serve(args) -> int:
    serve(
        ServiceConfig(
            port=args.port,
            host=args.host,
            sessions_dir=args.sessions_dir,
            mock=args.mock,
            seed=args.seed,
        )
    )
    return 0


def _cmd_story(args, parser: _Parser) -> int:
    command = args.story_command
    if command is None:
        parser.error("story needs an action")
    store = SessionStore(args.sessions_dir)
    if command == "new":
        engine = StoryEngine(_backends(args.mock, args.seed))
        session = engine.start_session(
            args.first,
            seed=args.seed,
            style=StylePrefs(artist=args.artist, background=args.background),
        )
        with store.lock(session.id):
            store.save(session)
        _print_session(session)
        _print_suggestions(session)
        return 0

    with store.lock(args.id):
        session = store.load(args.id)
        engine = StoryEngine(_backends(args.mock, session.seed))
        if command == "suggest":
            _print_suggestions(session)
            return 0
        if command == "show":
            print(json.dumps(session_to_dict(session), indent=2, sort_keys=True))
            return 0
        if command == "override":
            emotions = (
                EmotionLabelSet.from_names(_split_csv(args.emotions))
                if args.emotions is not None
                else None
            )
            keywords = (
                KeywordSet(_split_csv(args.keywords)) if args.keywords is not None else None
            )
            engine.override_suggestions(session, emotions=emotions, keywords=keywords)
            store.save(session)
            _print_suggestions(session)
            return 0
        if command == "next":
            engine.generate_next_sentence(session)
            store.save(session)
            _print_session(session)
            return 0
        if command == "images":
            prefs = None
            if args.artist is not None or args.background is not None:
                prefs = StylePrefs(artist=args.artist, background=args.background)
            engine.generate_turn_images(session, prefs)
            store.save(session)
            turn = session.current_turn
            print(f"phase {session.phase.value}")
            for i, image in enumerate(turn.image_batch):
                print(f"  [{i}] {image.id} ({image.content_hash[:12]}…)")
            return 0
        if command == "select":
            engine.select_image(session, args.index)
            store.save(session)
            print(f"phase {session.phase.value}")
            closed = next(
                (t for t in reversed(session.turns) if t.detection_summary is not None), None
            )
            if closed is not None:
                for row in closed.detection_summary.rows:
                    print(f"  {row.item}: count {row.count}, confidence {row.confidence:.3f}")
            if session.phase.value == "SuggestionsReady":
                _print_suggestions(session)
            return 0
    parser.error(f"unknown story action {command!r}")


def _cmd_eval(args, parser: _Parser) -> int:
    command = args.eval_command
    if command is None:
        parser.error("eval needs an action")
    if command == "run":
        corpus = load_corpus(args.corpus)
        result = run_comparison(
            corpus,
            _eval_system(args.system_a, args.seed),
            _eval_system(args.system_b, args.seed),
        )
        payload = json.dumps(result.as_dict(), indent=2, sort_keys=True)
        if args.out:
            Path(args.out).write_text(payload + "\n", encoding="utf-8")
            print(f"report written to {args.out}")
        else:
            print(payload)
        if args.csv:
            write_scores_csv(result, args.csv)
            print(f"per-item scores written to {args.csv}")
        return 0
    if command == "report":
        data = json.loads(Path(args.path).read_text(encoding="utf-8"))
        systems = data.get("systems", {})
        print(f"{systems.get('a', 'a')} vs {systems.get('b', 'b')}")
        reports = data.get("reports", {})
        improvement = data.get("improvement", {})
        for metric in sorted(reports.get("a", {})):
            mean_a = reports["a"][metric]["mean"]
            mean_b = reports.get("b", {}).get(metric, {}).get("mean")
            delta = improvement.get(metric)
            delta_text = "n/a" if delta is None else f"{delta:+.1%}"
            print(f"  {metric:10s} a={mean_a:.4f} b={mean_b:.4f} improvement {delta_text}")
        corpus_scores = data.get("corpus_bleu", {})
        if corpus_scores:
            print(f"  corpus_bleu a={corpus_scores.get('a', 0):.4f} b={corpus_scores.get('b', 0):.4f}")
        print(f"  items {data.get('total')} skipped {data.get('skipped')}")
        return 0
    parser.error(f"unknown eval action {command!r}")


def _cmd_extract() -> int:
    for line in sys.stdin:
        line = line.strip()
        print(extract_keywords(line).to_fragment() if line else "")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return USER_ERROR
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "story":
            return _cmd_story(args, parser)
        if args.command == "eval":
            return _cmd_eval(args, parser)
        if args.command == "extract":
            return _cmd_extract()
    except (BackendError, BackendUnavailable) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return BACKEND_ERROR
    except FabulaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    parser.error(f"unknown command {args.command!r}")
    return USER_ERROR


if __name__ == "__main__":
    sys.exit(main())
