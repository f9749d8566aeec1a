use std::collections::HashMap;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use phrasal::eval::{annotation_accuracy, AnnotationRecord, Condition, Label, Scope, Sublabel};
use phrasal::extractor::extract_corpus;
use phrasal::io::read_jsonl_from;
use phrasal::{synth, ExtractorConfig, HighlightSet, LexicalScorer};
use phrasal_service::{router, InstancePayload, ServiceConfig, SessionInfo, Study, StudyService};
use serde_json::{json, Value};
use tower::ServiceExt;

const SPAN_KEYS: [&str; 3] = ["phrases", "src_mask", "tgt_mask"];

fn study(n: usize) -> (Study, Vec<HighlightSet>, HashMap<String, Label>) {
    let corpus = synth::planted_corpus(n, 42);
    let inputs: Vec<_> = corpus
        .iter()
        .map(|c| (c.pair.clone(), c.alignment.clone().unwrap()))
        .collect();
    let hs = extract_corpus(
        &inputs,
        &LexicalScorer::new(synth::lexicon()),
        &ExtractorConfig::default(),
    )
    .unwrap();
    let gold = corpus
        .iter()
        .map(|c| (c.id().to_string(), c.gold_label.unwrap()))
        .collect();
    (Study::new("s1", corpus, hs.clone()).unwrap(), hs, gold)
}

fn app(
    seed: u64,
) -> (
    Router,
    Arc<StudyService>,
    Vec<HighlightSet>,
    HashMap<String, Label>,
) {
    let (st, hs, gold) = study(25);
    let cfg = ServiceConfig {
        seed,
        ..Default::default()
    };
    let svc = Arc::new(StudyService::in_memory(vec![st], cfg).unwrap());
    (router(svc.clone()), svc, hs, gold)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (
        status,
        to_bytes(resp.into_body(), usize::MAX)
            .await
            .unwrap()
            .to_vec(),
    )
}

async fn json_call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
}

fn assert_no_spans(v: &Value) {
    match v {
        Value::Object(m) => {
            for k in SPAN_KEYS {
                assert!(!m.contains_key(k), "span field {k} in {v}");
            }
            m.values().for_each(assert_no_spans);
        }
        Value::Array(a) => a.iter().for_each(assert_no_spans),
        _ => {}
    }
}

fn record(p: &InstancePayload, label: Label) -> Value {
    let sublabel = (label == Label::Divergent).then_some(Sublabel::Added);
    let mut r = AnnotationRecord::new(&p.instance_id, &p.session_id, p.condition, label, sublabel);
    r.elapsed_ms = 1200;
    serde_json::to_value(r).unwrap()
}

/// Answers every item of a session with `answer`, checking the payloads
/// along the way. Returns every raw response seen.
async fn drive(
    app: &Router,
    hs: &[HighlightSet],
    answer: impl Fn(&InstancePayload, Option<Label>) -> Label,
) -> (SessionInfo, Vec<Value>) {
    let (st, v) = json_call(app, "POST", "/api/session", Some(json!({"study_id": "s1"}))).await;
    assert_eq!(st, StatusCode::OK);
    let info: SessionInfo = serde_json::from_value(v.clone()).unwrap();
    let mut seen = vec![v];
    let mut last = None;
    for pos in 0..info.total {
        let (st, v) = json_call(
            app,
            "GET",
            &format!("/api/next?session={}", info.session_id),
            None,
        )
        .await;
        assert_eq!(st, StatusCode::OK, "{v}");
        let p: InstancePayload = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(p.position, pos);
        assert!(!v.to_string().contains("gold"));
        if info.condition == Condition::WithHighlights {
            let h = hs.iter().find(|h| h.id == p.instance_id).unwrap();
            assert_eq!(p.phrases.as_ref().unwrap(), &h.phrases);
            assert_eq!(p.src_mask.as_ref().unwrap(), &h.src_mask);
        }
        seen.push(v);
        let label = answer(&p, last);
        last = Some(label);
        let (st, v) = json_call(app, "POST", "/api/annotation", Some(record(&p, label))).await;
        assert_eq!(st, StatusCode::OK, "{v}");
        seen.push(v);
    }
    let (st, v) = json_call(
        app,
        "GET",
        &format!("/api/next?session={}", info.session_id),
        None,
    )
    .await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(v["code"], "session_complete");
    seen.push(v);
    (info, seen)
}

#[tokio::test]
async fn conditions_alternate_and_balance() {
    let (app, ..) = app(1);
    let mut counts = HashMap::new();
    let mut prev = None;
    for _ in 0..40 {
        let (_, v) = json_call(
            &app,
            "POST",
            "/api/session",
            Some(json!({"study_id": "s1"})),
        )
        .await;
        let info: SessionInfo = serde_json::from_value(v).unwrap();
        assert_eq!(info.total, 27);
        assert_ne!(Some(info.condition), prev);
        prev = Some(info.condition);
        *counts.entry(info.condition).or_insert(0) += 1;
    }
    assert_eq!(counts[&Condition::WithHighlights], 20);
    assert_eq!(counts[&Condition::WithoutHighlights], 20);
}

#[tokio::test]
async fn permutations_follow_the_seed() {
    async fn orders(seed: u64) -> Vec<Vec<String>> {
        let (app, ..) = app(seed);
        let mut out = Vec::new();
        for _ in 0..3 {
            let (_, v) = json_call(
                &app,
                "POST",
                "/api/session",
                Some(json!({"study_id": "s1"})),
            )
            .await;
            let sid = v["session_id"].as_str().unwrap().to_string();
            let mut ids = Vec::new();
            for _ in 0..5 {
                let (_, v) =
                    json_call(&app, "GET", &format!("/api/next?session={sid}"), None).await;
                let p: InstancePayload = serde_json::from_value(v).unwrap();
                ids.push(p.instance_id.clone());
                call(
                    &app,
                    "POST",
                    "/api/annotation",
                    Some(record(&p, Label::Equivalent)),
                )
                .await;
            }
            out.push(ids);
        }
        out
    }
    let a = orders(5).await;
    assert_eq!(a, orders(5).await);
    assert_ne!(a, orders(6).await);
    assert_ne!(a[0], a[1]);
}

#[tokio::test]
async fn without_highlights_never_sends_spans() {
    let (app, _, hs, gold) = app(2);
    let (with, seen_with) = drive(&app, &hs, |p, _| gold[&p.instance_id]).await;
    assert_eq!(with.condition, Condition::WithHighlights);
    assert!(seen_with.iter().any(|v| v.get("phrases").is_some()));

    let (without, seen) = drive(&app, &hs, |p, _| gold[&p.instance_id]).await;
    assert_eq!(without.condition, Condition::WithoutHighlights);
    seen.iter().for_each(assert_no_spans);

    let (st, body) = call(&app, "GET", "/api/export?study=s1", None).await;
    assert_eq!(st, StatusCode::OK);
    for line in String::from_utf8(body).unwrap().lines() {
        assert_no_spans(&serde_json::from_str(line).unwrap());
    }
}

#[tokio::test]
async fn attention_checks_pass_on_repeat_and_fail_otherwise() {
    let (app, svc, hs, _) = app(3);
    // session 0 repeats its previous answer, session 1 flips it on checks
    drive(&app, &hs, |_, _| Label::Divergent).await;
    drive(&app, &hs, |_, last| match last {
        Some(Label::Divergent) => Label::Equivalent,
        _ => Label::Divergent,
    })
    .await;
    let records = svc.export_annotations("s1").unwrap();
    let checks: Vec<_> = records.iter().filter(|r| r.is_attention_check()).collect();
    assert_eq!(checks.len(), 4);
    for c in checks {
        let passed = c.annotator_id == "session-00000";
        assert_eq!(c.attention_check, Some(passed), "{c:?}");
    }
}

#[tokio::test]
async fn export_feeds_accuracy_unchanged() {
    let (app, _, hs, gold) = app(4);
    let (st, body) = call(&app, "GET", "/api/export?study=s1", None).await;
    assert_eq!((st, body.len()), (StatusCode::OK, 0));

    drive(&app, &hs, |p, _| gold[&p.instance_id]).await;
    drive(&app, &hs, |_, _| Label::Divergent).await;
    let (_, body) = call(&app, "GET", "/api/export?study=s1", None).await;
    let records: Vec<AnnotationRecord> = read_jsonl_from(&body[..])
        .unwrap()
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    assert_eq!(records.len(), 2 * 27);
    let group = annotation_accuracy(&records, &gold, Scope::Group).unwrap();
    assert_eq!(group.recall, 1.0);
    assert!(group.precision < 1.0);
    let exact: Vec<_> = records
        .iter()
        .filter(|r| r.annotator_id == "session-00000")
        .cloned()
        .collect();
    let p = annotation_accuracy(&exact, &gold, Scope::Group).unwrap();
    assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
}

#[tokio::test]
async fn submissions_are_validated() {
    let (app, ..) = app(5);
    let (_, v) = json_call(
        &app,
        "POST",
        "/api/session",
        Some(json!({"study_id": "s1"})),
    )
    .await;
    let sid = v["session_id"].as_str().unwrap().to_string();
    let (_, v) = json_call(&app, "GET", &format!("/api/next?session={sid}"), None).await;
    let p: InstancePayload = serde_json::from_value(v).unwrap();

    let mut bad = record(&p, Label::Equivalent);
    bad["sublabel"] = json!("added");
    let (st, v) = json_call(&app, "POST", "/api/annotation", Some(bad)).await;
    assert_eq!(
        (st, v["code"].as_str()),
        (StatusCode::UNPROCESSABLE_ENTITY, Some("validation_error"))
    );

    let mut wrong = record(&p, Label::Equivalent);
    wrong["condition"] = json!("without_highlights");
    let (st, _) = json_call(&app, "POST", "/api/annotation", Some(wrong)).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let (st, _) = json_call(
        &app,
        "POST",
        "/api/annotation",
        Some(record(&p, Label::Divergent)),
    )
    .await;
    assert_eq!(st, StatusCode::OK);
    // retry of the acknowledged record
    let (st, v) = json_call(
        &app,
        "POST",
        "/api/annotation",
        Some(record(&p, Label::Divergent)),
    )
    .await;
    assert_eq!(
        (st, v["code"].as_str()),
        (StatusCode::CONFLICT, Some("duplicate_submission"))
    );

    let (st, v) = json_call(&app, "POST", "/api/annotation", Some(json!({"label": 3}))).await;
    assert_eq!(
        (st, v["code"].as_str()),
        (StatusCode::UNPROCESSABLE_ENTITY, Some("validation_error"))
    );
}

#[tokio::test]
async fn unknown_things_are_not_found() {
    let (app, ..) = app(6);
    let (st, v) = json_call(
        &app,
        "POST",
        "/api/session",
        Some(json!({"study_id": "nope"})),
    )
    .await;
    assert_eq!(
        (st, v["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("study_not_found"))
    );
    let (st, v) = json_call(&app, "GET", "/api/next?session=ghost", None).await;
    assert_eq!(
        (st, v["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("session_not_found"))
    );
    let (st, v) = json_call(&app, "GET", "/api/export?study=nope", None).await;
    assert_eq!(
        (st, v["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("study_not_found"))
    );
    let (st, v) = json_call(&app, "GET", "/api/nothing", None).await;
    assert_eq!(
        (st, v["code"].as_str()),
        (StatusCode::NOT_FOUND, Some("not_found"))
    );
    let (st, v) = json_call(&app, "GET", "/api/health", None).await;
    assert_eq!((st, v["status"].as_str()), (StatusCode::OK, Some("ok")));
}

#[tokio::test]
async fn survey_after_completion_only_once() {
    let (app, _, hs, _) = app(7);
    let (_, v) = json_call(
        &app,
        "POST",
        "/api/session",
        Some(json!({"study_id": "s1"})),
    )
    .await;
    let early = v["session_id"].as_str().unwrap().to_string();
    let (st, _) = json_call(
        &app,
        "POST",
        "/api/survey",
        Some(json!({"session_id": early, "usefulness": 4})),
    )
    .await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let (info, _) = drive(&app, &hs, |_, _| Label::Equivalent).await;
    let survey = json!({"session_id": info.session_id, "usefulness": 6});
    let (st, _) = json_call(&app, "POST", "/api/survey", Some(survey)).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    let survey = json!({"session_id": info.session_id, "usefulness": 4, "adoption": 5, "feedback": "helpful"});
    let (st, v) = json_call(&app, "POST", "/api/survey", Some(survey.clone())).await;
    assert_eq!(st, StatusCode::OK, "{v}");
    let (st, _) = json_call(&app, "POST", "/api/survey", Some(survey)).await;
    assert_eq!(st, StatusCode::CONFLICT);
    let (_, body) = call(&app, "GET", "/api/export?study=s1&kind=surveys", None).await;
    assert_eq!(String::from_utf8(body).unwrap().lines().count(), 1);
}

#[test]
fn store_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (st, ..) = study(6);
    let open = || {
        StudyService::open(vec![st.clone()], ServiceConfig::default(), Some(dir.path())).unwrap()
    };

    let svc = open();
    let info = svc.create_session("s1").unwrap();
    for _ in 0..3 {
        let p = svc.next_instance(&info.session_id).unwrap();
        let r = AnnotationRecord::new(
            &p.instance_id,
            &p.session_id,
            p.condition,
            Label::Equivalent,
            None,
        );
        svc.submit_annotation(r).unwrap();
    }
    let before = svc.export_annotations("s1").unwrap();
    drop(svc);

    // a torn append that was never acknowledged
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .append(true)
        .open(dir.path().join("annotations.jsonl"))
        .unwrap();
    f.write_all(b"{\"instance_id\":\"planted-00").unwrap();
    drop(f);

    let svc = open();
    assert_eq!(svc.session(&info.session_id).unwrap().position, 3);
    assert_eq!(svc.export_annotations("s1").unwrap(), before);
    // numbering and balance continue where they left off
    let next = svc.create_session("s1").unwrap();
    assert_eq!(next.session_id, "session-00001");
    assert_eq!(next.condition, Condition::WithoutHighlights);
    let p = svc.next_instance(&info.session_id).unwrap();
    assert_eq!(p.position, 3);
    let r = AnnotationRecord::new(
        &p.instance_id,
        &p.session_id,
        p.condition,
        Label::Equivalent,
        None,
    );
    svc.submit_annotation(r).unwrap();
    drop(svc);
    assert_eq!(open().export_annotations("s1").unwrap().len(), 4);
}
