use proptest::prelude::*;
use serde_json::{json, Value};
use workbench_core::eval::{bundled_tasks, camera_scenario, DriverStep, LoadedTask, Replay, ReplayOptions, ScriptedUser};
use workbench_core::extract::css_select;
use workbench_core::guidance::{GuidanceConfig, RuleId};
use workbench_core::llm::{Fixture, Gateway, LlmConfig, ScriptedProvider};
use workbench_core::session::persist::{persist, restore, session_text, PersistError};
use workbench_core::session::ui::{shelf_drag, CaptureOverlay, ClientMirror, EditorView, Key};
use workbench_core::session::*;
use workbench_core::transform::{execute, ExecEnv};
use workbench_core::viz::Channel;
use workbench_core::ToolCall;

fn task(id: &str) -> LoadedTask {
    bundled_tasks().into_iter().map(|(t, _)| t).find(|t| t.task.id == id).unwrap()
}

fn gateway(fixtures: Vec<Fixture>) -> Gateway {
    Gateway::new(Box::new(ScriptedProvider::new(fixtures)), LlmConfig::default())
}

fn session_for(t: &LoadedTask, fixtures: Vec<Fixture>) -> Session {
    let mut s = Session::new(gateway(fixtures), GuidanceConfig::default());
    s.store = t.snapshots().unwrap().0;
    s
}

/// Replays the first `n` driver steps of a bundled task.
fn replay_prefix(t: &LoadedTask, n: usize) -> Replay {
    let mut r = Replay::start(session_for(t, t.task.fixtures.clone())).unwrap();
    let mut user = ScriptedUser::new(t.task.driver[..n].to_vec());
    r.run(&t.task.statement, &mut user, ReplayOptions::default()).unwrap();
    r
}

fn frame(kind: FrameKind, seq: u64, body: Value) -> Frame {
    Frame::new(kind, seq, body)
}

fn hello(seq: u64) -> Frame {
    frame(FrameKind::Hello, seq, json!({"protocolVersion": PROTOCOL_VERSION}))
}

fn error_code(f: &Frame) -> String {
    assert_eq!(f.kind, FrameKind::Error, "{f:?}");
    f.body_as::<ErrorBody>().unwrap().code
}

#[test]
fn hello_comes_first_and_answers_with_a_full_sync() {
    let mut s = Session::new(gateway(vec![]), GuidanceConfig::default());
    let early = s.handle(frame(FrameKind::StateSync, 1, json!({})));
    assert_eq!(error_code(&early[0]), "no-hello");
    let out = s.handle(hello(2));
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].kind, FrameKind::StateSync);
    assert_eq!(out[0].re, Some(2));
    let sync: StateSyncBody = out[0].body_as().unwrap();
    assert!(sync.full);
    assert!(!s.is_closed());
}

#[test]
fn version_mismatch_closes_the_session() {
    let mut s = Session::new(gateway(vec![]), GuidanceConfig::default());
    let out = s.handle(frame(FrameKind::Hello, 1, json!({"protocolVersion": PROTOCOL_VERSION + 1})));
    assert_eq!(error_code(&out[0]), "version-mismatch");
    assert!(s.is_closed());
}

#[test]
fn unknown_kinds_and_malformed_payloads_get_error_frames() {
    let mut s = Session::new(gateway(vec![]), GuidanceConfig::default());
    s.handle(hello(1));
    let out = s.handle_payload(r#"{"kind": "teleport", "seq": 7, "body": {}}"#);
    assert_eq!(error_code(&out[0]), "unknown-kind");
    assert_eq!(out[0].re, Some(7));
    let out = s.handle_payload("{not json");
    assert_eq!(error_code(&out[0]), "malformed-frame");
    let out = s.handle(frame(FrameKind::ChatResponse, 8, json!({})));
    assert_eq!(error_code(&out[0]), "not-a-request");
    let out = s.handle(frame(FrameKind::ApplySuggestion, 9, json!({"nope": 1})));
    assert_eq!(error_code(&out[0]), "bad-body");
}

#[test]
fn sequence_numbers_must_increase() {
    let mut s = Session::new(gateway(vec![]), GuidanceConfig::default());
    s.handle(hello(5));
    let out = s.handle(frame(FrameKind::StateSync, 5, json!({})));
    assert_eq!(error_code(&out[0]), "seq-out-of-order");
    let out = s.handle(frame(FrameKind::StateSync, 3, json!({})));
    assert_eq!(error_code(&out[0]), "seq-out-of-order");
    let out = s.handle(frame(FrameKind::StateSync, 6, json!({})));
    assert_eq!(out[0].kind, FrameKind::StateSync);
}

#[test]
fn applying_a_suggestion_twice_changes_nothing_the_second_time() {
    let t = task("extract-20-cameras");
    let mut r = replay_prefix(&t, t.task.driver.len() - 1);
    let id = r.offered().find(|s| s.trigger_rule == RuleId::BatchExtraction).unwrap().id.clone();
    let body = ApplyBody { suggestion_id: id.clone(), permit: false, timestamp: Some(r.clock() + 1) };
    r.send(FrameKind::ApplySuggestion, body.clone()).unwrap();
    let (version, hash) = (r.session.ws.current_id(), r.session.hash());
    r.send(FrameKind::ApplySuggestion, body).unwrap();
    assert_eq!(r.session.ws.current_id(), version);
    assert_eq!(r.session.hash(), hash);
    assert_eq!(r.session.applied()[&id], version);
    assert_eq!(r.session.ws.state().table("Items").unwrap().row_count(), 20);
}

#[test]
fn a_failing_chat_plan_leaves_the_workspace_alone() {
    let t = task("extract-20-cameras");
    let text = "Chart @Items by weight";
    let fixture = Fixture::with_plan(
        "chat:chart @items by weight",
        "Charting weight.",
        vec![json!({"tool": "createVisualization", "args": {"sourceInstanceId": "Items", "chartType": "bar", "xAxis": "Weight"}})],
    );
    let mut r = Replay::start(session_for(&t, vec![fixture])).unwrap();
    let mut user = ScriptedUser::new(t.task.driver.clone());
    r.run(&t.task.statement, &mut user, ReplayOptions::default()).unwrap();
    let (version, hash) = (r.session.ws.current_id(), r.session.hash());
    let (frames, _) = r.send(FrameKind::ChatSend, ChatSendBody { text: text.into(), timestamp: None }).unwrap();
    assert_eq!(frames[0].kind, FrameKind::ChatResponse);
    assert_eq!(frames[1].kind, FrameKind::StateSync);
    let resp: ChatResponseBody = frames[0].body_as().unwrap();
    assert!(resp.error.is_some());
    assert_eq!(resp.message.version, None);
    assert_eq!((r.session.ws.current_id(), r.session.hash()), (version, hash));
}

#[test]
fn chat_plans_run_and_report_their_version() {
    let t = task("vlogging-price-chart");
    let r = replay_prefix(&t, t.task.driver.len());
    let last = r.session.chat.last().unwrap();
    assert_eq!(last.version, Some(r.session.ws.current_id()));
    assert_eq!(r.session.ws.state().visualizations().count(), 1);
}

#[test]
fn unresolved_mentions_come_back_with_candidates() {
    let t = task("extract-20-cameras");
    let mut r = replay_prefix(&t, t.task.driver.len());
    let err = r.send(FrameKind::ChatSend, ChatSendBody { text: "sort @Ite please".into(), timestamp: None }).unwrap_err();
    assert_eq!(err.code, "unresolved-mention");
    assert_eq!(err.candidates, vec!["Items".to_string()]);
}

#[test]
fn delta_syncs_keep_the_mirror_equal_to_a_full_sync() {
    let (t, _) = camera_scenario();
    let mut r = replay_prefix(&t, t.task.driver.len());
    let mut fresh = ClientMirror::default();
    fresh.apply(&r.session.state_sync(true));
    assert_eq!(r.mirror, fresh);
    assert_eq!(r.mirror.hash, r.session.hash());
}

#[test]
fn a_session_survives_persist_and_restore() {
    let (t, _) = camera_scenario();
    let r = replay_prefix(&t, t.task.driver.len());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("camera.session");
    persist(&r.session, &path).unwrap();
    let back = restore(&path, gateway(vec![])).unwrap();
    assert_eq!(session_text(&back), session_text(&r.session));
    assert_eq!(back.hash(), r.session.hash());
    assert_eq!(back.ws.version_count(), r.session.ws.version_count());
}

#[test]
fn damaged_session_files_are_rejected_whole() {
    let t = task("extract-20-cameras");
    let r = replay_prefix(&t, t.task.driver.len());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.session");
    persist(&r.session, &path).unwrap();
    let good = std::fs::read_to_string(&path).unwrap();
    let load = |text: &str| {
        std::fs::write(&path, text).unwrap();
        restore(&path, gateway(vec![])).map(|_| ()).unwrap_err()
    };
    assert_eq!(load(&good.replacen(SESSION_MAGIC, "#something-else", 1)), PersistError::BadMagic);
    assert!(matches!(load(&good[..good.len() / 2]), PersistError::Corrupt(_)));
    let v2 = good.replacen("\"schemaVersion\": 1", "\"schemaVersion\": 2", 1);
    assert_eq!(load(&v2), PersistError::SchemaVersion { got: 2 });

    std::fs::write(&path, &good).unwrap();
    let pages = dir.path().join("s.session.pages");
    let page = std::fs::read_dir(&pages).unwrap().next().unwrap().unwrap().path();
    let html = std::fs::read_to_string(&page).unwrap();
    std::fs::write(&page, html.replace("</body>", "<p>changed</p></body>")).unwrap();
    assert!(matches!(restore(&path, gateway(vec![])).map(|_| ()).unwrap_err(), PersistError::SnapshotMismatch(_)));
    std::fs::remove_file(&page).unwrap();
    assert!(matches!(restore(&path, gateway(vec![])).map(|_| ()).unwrap_err(), PersistError::MissingSnapshot(_)));
}

/// The brands task up to the autocomplete offer.
fn ghost_ready() -> Replay {
    let t = task("mirrorless-brands");
    let n = t.task.driver.iter().position(|s| matches!(s, DriverStep::Apply { rule: RuleId::Autocomplete, .. })).unwrap();
    replay_prefix(&t, n)
}

#[test]
fn tab_on_a_ghost_sends_one_apply_and_nothing_mutates_before() {
    let mut r = ghost_ready();
    let s = r.offered().find(|s| s.trigger_rule == RuleId::Autocomplete).unwrap().clone();
    let before = (r.session.ws.current_id(), r.mirror.hash.clone());
    let mut editor = EditorView::open("Models");
    assert!(editor.offer(&s));
    let ghost = editor.ghost.clone().unwrap();
    assert!(!ghost.added.is_empty() || !ghost.modified.is_empty());
    assert_eq!(editor.key(Key::Char { row: 0, column: "Title".into(), ch: 'x' }, r.clock()), None);
    assert_eq!((r.session.ws.current_id(), r.mirror.hash.clone()), before);

    let sent: Vec<_> = [Key::Tab, Key::Tab, Key::Escape].into_iter().filter_map(|k| editor.key(k, r.clock() + 1)).collect();
    assert_eq!(sent.len(), 1);
    assert_eq!(sent[0].kind, FrameKind::ApplySuggestion);
    r.send(sent[0].kind, sent[0].body.clone()).unwrap();
    assert!(r.session.ws.current_id() > before.0);
    assert_eq!(r.session.applied().get(&s.id), Some(&r.session.ws.current_id()));
}

#[test]
fn typing_into_a_ghost_cell_dismisses_it() {
    let mut r = ghost_ready();
    let s = r.offered().find(|s| s.trigger_rule == RuleId::Autocomplete).unwrap().clone();
    let before = r.session.ws.current_id();
    let mut editor = EditorView::open("Models");
    editor.offer(&s);
    let cell = editor.ghost.as_ref().unwrap().added.first().or(editor.ghost.as_ref().unwrap().modified.first()).unwrap().clone();
    let out = editor.key(Key::Char { row: cell.row, column: cell.column.clone(), ch: 'S' }, r.clock() + 1).unwrap();
    assert_eq!(out.kind, FrameKind::Event);
    assert_eq!(out.body["event"]["kind"], "suggestion-dismissed");
    assert!(editor.ghost.is_none());
    r.send(out.kind, out.body).unwrap();
    assert_eq!(r.session.ws.current_id(), before);
    assert!(r.offered().all(|o| o.id != s.id));
}

#[test]
fn shelf_drags_reach_the_mirror_as_a_full_sync_would() {
    let (t, _) = camera_scenario();
    let mut r = replay_prefix(&t, t.task.driver.len());
    let viz = r.session.ws.state().visualizations().next().unwrap().clone();
    for (column, channel) in [("Title", Channel::Color), ("Resolution", Channel::Size), ("Price", Channel::Y)] {
        let out = shelf_drag(&viz, column, channel, r.clock() + 1);
        r.send(out.kind, out.body).unwrap();
        let viz_now = r.session.ws.state().viz(&viz.id).unwrap().clone();
        let mut forced = ClientMirror::default();
        forced.apply(&r.session.state_sync(true));
        assert_eq!(r.mirror.encodings(&viz.id), forced.encodings(&viz.id));
        assert_eq!(r.mirror.encodings(&viz.id)[channel.as_str()], column);
        assert_eq!(viz_now.encodings[&channel], column);
    }
}

#[test]
fn capture_overlay_highlights_what_extraction_matches() {
    for (t, _) in bundled_tasks() {
        let (store, snaps) = t.snapshots().unwrap();
        for snap in snaps {
            // Two listed (not sponsored) titles: the first pair that generalizes.
            let titles = css_select(&snap.html, "h2.title", None).unwrap();
            let pair = titles.windows(2).find(|w| CaptureOverlay::for_exemplars(&snap, w).is_ok()).unwrap();
            let overlay = CaptureOverlay::for_exemplars(&snap, pair).unwrap();
            let call = ToolCall::parse("c1", "extractBatch", json!({"pageUrl": snap.url, "pattern": {"exemplars": pair}})).unwrap();
            let out = execute(&Default::default(), &call, &ExecEnv { snapshots: &store }).unwrap();
            assert_eq!(overlay.highlights.len() as u64, out.report["matchCount"].as_u64().unwrap(), "{}", snap.url);
        }
    }
}

fn frame_json() -> impl Strategy<Value = String> {
    let kind = prop_oneof![
        Just("hello".to_string()),
        Just("event".to_string()),
        Just("apply-suggestion".to_string()),
        Just("chat-send".to_string()),
        Just("capture-request".to_string()),
        Just("trace-request".to_string()),
        Just("state-sync".to_string()),
        Just("error".to_string()),
        "[a-z-]{1,12}",
    ];
    let body = prop_oneof![
        Just(json!({})),
        Just(json!({"protocolVersion": 1})),
        Just(json!({"suggestionId": "s1"})),
        Just(json!({"text": "@Table1 hi"})),
        Just(json!({"url": "https://nowhere.example", "nodeId": 3})),
        Just(json!({"instanceId": "T", "row": 0, "column": "A"})),
        Just(json!({"event": {"timestamp": 5, "kind": "workspace-created", "title": "x"}})),
        any::<i64>().prop_map(|n| json!(n)),
    ];
    (kind, any::<u64>(), body).prop_map(|(k, seq, b)| json!({"kind": k, "seq": seq, "body": b}).to_string())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arbitrary_payloads_never_break_the_session(payloads in prop::collection::vec(prop_oneof![frame_json(), ".{0,40}"], 1..12)) {
        let mut s = Session::new(gateway(vec![]), GuidanceConfig::default());
        for p in payloads {
            if s.is_closed() {
                break;
            }
            let out = s.handle_payload(&p);
            prop_assert!(!out.is_empty());
            let first = out[0].kind;
            prop_assert!(first == FrameKind::Error || FrameKind::ALL.iter().any(|k| k.response() == Some(first)));
        }
    }
}
