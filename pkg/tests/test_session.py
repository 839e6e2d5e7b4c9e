import json
import random
import threading

import pytest

from fabula.emotion import EmotionLabelSet
from fabula.errors import (
    Conflict,
    InvalidArgument,
    InvalidState,
    NotFound,
    SessionParseError,
    UnsupportedVersion,
)
from fabula.imageflow import StylePrefs
from fabula.keywords import KeywordSet
from fabula.mock import MARY_OPENING, MARY_PROMPTED, MockModelBackends
from fabula.session import (
    LEGAL_TRANSITIONS,
    SessionOptions,
    SessionPhase,
    SessionStore,
    StoryEngine,
    deterministic_session_id,
    load_session,
    replay_actions,
    sanitize_sentence,
    save_session,
    session_from_dict,
    session_to_dict,
)


def canonical(session) -> str:
    return json.dumps(
        session_to_dict(session, include_timestamps=False), sort_keys=True
    )


# -- small pieces ------------------------------------------------------------


def test_sanitize_sentence():
    assert sanitize_sentence("  a [b]   c\nd  ") == "a (b) c d"


def test_deterministic_session_id_stable():
    a = deterministic_session_id(42, MARY_OPENING)
    b = deterministic_session_id(42, MARY_OPENING)
    assert a == b
    assert deterministic_session_id(43, MARY_OPENING) != a


def test_session_options_roundtrip():
    options = SessionOptions(max_sentences=7, images_enabled=False)
    assert SessionOptions.from_dict(options.as_dict()) == options
    assert SessionOptions.from_dict(None) == SessionOptions()


def test_session_options_defaults():
    options = SessionOptions()
    assert options.max_sentences == 5
    assert options.suggestion_limit == 5
    assert options.emotion_tau == 0.5
    assert options.emotion_top_k == 3
    assert options.detection_threshold == 0.4
    assert options.detect_all_images is True
    assert options.images_enabled is True


# -- engine flow -------------------------------------------------------------


def test_start_session_opens_first_turn(engine):
    session = engine.start_session(MARY_OPENING, seed=42)
    assert session.phase is SessionPhase.SUGGESTIONS_READY
    assert session.story == [MARY_OPENING]
    assert len(session.turns) == 1
    turn = session.current_turn
    assert turn.suggested_keywords.phrases == ("Mary",)
    assert "sadness" in turn.suggested_emotions.names()


def test_start_session_validation(engine):
    for bad in ["", "   ", "has\nnewline", "has [bracket]"]:
        with pytest.raises(InvalidArgument):
            engine.start_session(bad)


def test_override_replaces_only_given_fields(engine):
    session = engine.start_session(MARY_OPENING, seed=42)
    before_emotions = session.current_turn.user_emotions
    engine.override_suggestions(session, keywords=KeywordSet(["Mary", "a doctor"]))
    assert session.current_turn.user_keywords.phrases == ("Mary", "a doctor")
    assert session.current_turn.user_emotions == before_emotions
    engine.override_suggestions(session, emotions=EmotionLabelSet.from_names(["joy"]))
    assert session.current_turn.user_emotions.names() == ("joy",)
    assert session.current_turn.user_keywords.phrases == ("Mary", "a doctor")


def test_generate_appends_sentence_and_advances(engine):
    session = engine.start_session(MARY_OPENING, seed=42)
    engine.override_suggestions(
        session,
        emotions=EmotionLabelSet.from_names(["sadness"]),
        keywords=KeywordSet(["Mary"]),
    )
    engine.generate_next_sentence(session)
    assert session.phase is SessionPhase.SENTENCE_GENERATED
    assert session.story[1] == MARY_PROMPTED[0]
    assert session.current_turn.prompt.startswith("Generate next sentence")


def test_phase_guards(engine):
    session = engine.start_session(MARY_OPENING, seed=42)
    with pytest.raises(InvalidState):
        engine.generate_turn_images(session)
    with pytest.raises(InvalidState):
        engine.select_image(session, 0)
    engine.generate_next_sentence(session)
    with pytest.raises(InvalidState):
        engine.generate_next_sentence(session)


def test_images_and_select_flow(engine):
    session = engine.start_session(MARY_OPENING, seed=42)
    engine.generate_next_sentence(session)
    engine.generate_turn_images(session)
    assert session.phase is SessionPhase.IMAGES_READY
    turn = session.current_turn
    assert len(turn.image_batch) == 3
    with pytest.raises(InvalidArgument):
        engine.select_image(session, 3)
    engine.select_image(session, 1)
    assert turn.selected_image == 1
    assert turn.detection_summary is not None
    # next turn opened with merged keyword suggestions
    assert session.phase is SessionPhase.SUGGESTIONS_READY
    assert len(session.turns) == 2


def test_select_detects_only_chosen_image_when_configured(mock_backends):
    options = SessionOptions(detect_all_images=False)
    engine = StoryEngine(mock_backends, options)
    session = engine.start_session("A boy stood on the beach.", seed=1)
    engine.generate_next_sentence(session)
    engine.generate_turn_images(session)
    engine.select_image(session, 0)
    summary = session.turns[0].detection_summary
    # single image: per-label counts can't exceed the one batch's hits
    assert all(row.count <= 2 for row in summary.rows)


def test_style_prefs_flow_into_prompt(engine):
    style = StylePrefs(artist="Carl Spitzweg", background="country view")
    session = engine.start_session(MARY_OPENING, seed=42, style=style)
    engine.generate_next_sentence(session)
    engine.generate_turn_images(session)
    image = session.current_turn.image_batch[0]
    assert image.prompt.endswith(", country view, by Carl Spitzweg")


def test_images_disabled_skips_image_phases(mock_backends):
    engine = StoryEngine(mock_backends, SessionOptions(images_enabled=False))
    session = engine.start_session(MARY_OPENING, seed=42)
    for _ in range(4):
        engine.generate_next_sentence(session)
    assert session.phase is SessionPhase.COMPLETED
    assert len(session.story) == 5
    assert all(turn.image_batch == [] for turn in session.turns)


def test_full_story_completes(engine, mary_script):
    session = replay_actions(engine, mary_script)
    assert session.phase is SessionPhase.COMPLETED
    assert session.story == [MARY_OPENING, *MARY_PROMPTED]
    with pytest.raises(InvalidState):
        engine.generate_next_sentence(session)


def test_replay_is_deterministic(mary_script):
    a = replay_actions(StoryEngine(MockModelBackends(seed=42)), mary_script)
    b = replay_actions(StoryEngine(MockModelBackends(seed=42)), mary_script)
    assert canonical(a) == canonical(b)
    assert a.id == b.id


def test_replay_rejects_unknown_action(engine):
    with pytest.raises(InvalidArgument):
        replay_actions(
            engine,
            {"first_sentence": "A boy ran.", "actions": [{"action": "dance"}]},
        )


# -- persistence -------------------------------------------------------------


def test_session_dict_roundtrip(engine, mary_script):
    session = replay_actions(engine, mary_script)
    data = session_to_dict(session)
    again = session_from_dict(data)
    assert canonical(again) == canonical(session)
    assert again.phase is session.phase
    assert again.story == session.story


def test_session_dict_version_guard(engine):
    session = engine.start_session("A boy ran.", seed=1)
    data = session_to_dict(session)
    data["schema_version"] = 99
    with pytest.raises(UnsupportedVersion):
        session_from_dict(data)


def test_session_dict_malformed(engine):
    with pytest.raises(InvalidArgument):
        session_from_dict({"schema_version": 1})


def test_save_load_roundtrip_with_images(tmp_path, engine, mary_script):
    session = replay_actions(engine, mary_script)
    path = tmp_path / f"{session.id}.json"
    save_session(session, path)
    pngs = list(tmp_path.glob("*.png"))
    hashes = {
        image.content_hash for turn in session.turns for image in turn.image_batch
    }
    assert {p.stem for p in pngs} == hashes
    loaded = load_session(path)
    assert canonical(loaded) == canonical(session)
    reloaded_pngs = {
        image.content_hash: image.png
        for turn in loaded.turns
        for image in turn.image_batch
    }
    for content_hash, png in reloaded_pngs.items():
        assert (tmp_path / f"{content_hash}.png").read_bytes() == png


def test_save_is_stable_json(tmp_path, engine, mary_script):
    session = replay_actions(engine, mary_script)
    path = tmp_path / "session.json"
    save_session(session, path)
    first = path.read_bytes()
    save_session(session, path)
    assert path.read_bytes() == first
    assert first.endswith(b"\n")


def test_load_missing_file_raises_not_found(tmp_path):
    with pytest.raises(NotFound):
        load_session(tmp_path / "absent.json")


def test_load_bad_json_reports_offset(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema_version": 1,,}')
    with pytest.raises(SessionParseError) as info:
        load_session(path)
    assert info.value.offset == 21


# -- store -------------------------------------------------------------------


def test_store_save_load_list(tmp_path, engine):
    store = SessionStore(tmp_path / "sessions")
    a = engine.start_session("A boy ran.", seed=1)
    b = engine.start_session("A girl sang.", seed=2)
    store.save(a)
    store.save(b)
    assert store.list_ids() == sorted([a.id, b.id])
    assert store.exists(a.id)
    assert canonical(store.load(a.id)) == canonical(a)


def test_store_rejects_path_tricks(tmp_path):
    store = SessionStore(tmp_path)
    for bad in ["../x", "a/b", "a\\b", ""]:
        with pytest.raises(InvalidArgument):
            store.load(bad)
    with pytest.raises(InvalidArgument):
        store.image_path("NOTHEX")


def test_store_lock_times_out(tmp_path):
    store = SessionStore(tmp_path)
    entered = threading.Event()
    release = threading.Event()

    def hold():
        with store.lock("sid"):
            entered.set()
            release.wait(5)

    thread = threading.Thread(target=hold)
    thread.start()
    entered.wait(5)
    with pytest.raises(Conflict):
        with store.lock("sid", timeout=0.05):
            pass
    release.set()
    thread.join()
    # and the lock is usable again afterwards
    with store.lock("sid", timeout=1):
        pass


# -- transition fuzz ---------------------------------------------------------

ACTIONS = ("override", "generate", "images", "select")


def _apply(engine, session, action, rng):
    if action == "override":
        engine.override_suggestions(session, keywords=KeywordSet(["a dog"]))
    elif action == "generate":
        engine.generate_next_sentence(session)
    elif action == "images":
        engine.generate_turn_images(session)
    elif action == "select":
        engine.select_image(session, rng.randrange(0, 3))


def test_random_action_sequences_never_break_transitions():
    rng = random.Random(20260822)
    backends = MockModelBackends(seed=3)
    engine = StoryEngine(backends)
    for _ in range(300):
        session = engine.start_session("A boy found a map.", seed=rng.randrange(1000))
        history = [session.phase]
        for _ in range(rng.randrange(1, 12)):
            action = rng.choice(ACTIONS)
            before = session.phase
            try:
                _apply(engine, session, action, rng)
            except (InvalidState, InvalidArgument):
                assert session.phase is before
                continue
            if session.phase is not before:
                assert (before, session.phase) in LEGAL_TRANSITIONS
                history.append(session.phase)
        assert history[0] is SessionPhase.SUGGESTIONS_READY
