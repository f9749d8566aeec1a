use phrasal::scorer::{ExternalScorer, ExternalScorerConfig, Scorer};
use phrasal::testkit::HttpStub;
use phrasal::{synth, Error, LexicalScorer, SentencePair};

fn stub_argv() -> Vec<String> {
    vec![env!("CARGO_BIN_EXE_phrasal-stub-scorer").to_string()]
}

fn sh(script: &str) -> ExternalScorerConfig {
    ExternalScorerConfig::subprocess(["sh", "-c", script])
}

fn batch() -> Vec<SentencePair> {
    vec![
        SentencePair::from_text("a", "s1 s2", "t1 t2").unwrap(),
        SentencePair::from_text("b", "s1 xs0", "t1 xt0 xt1").unwrap(),
        SentencePair::from_text("c", "s3", "t4").unwrap(),
        SentencePair::from_text("d", "s1 s2", "t1 t2").unwrap(),
    ]
}

fn expected() -> Vec<f64> {
    LexicalScorer::new(synth::lexicon())
        .score_batch(&batch())
        .unwrap()
}

#[test]
fn stdio_preserves_order_and_caches() {
    let sc = ExternalScorer::connect(&ExternalScorerConfig::subprocess(stub_argv())).unwrap();
    assert_eq!(sc.score_batch(&batch()).unwrap(), expected());
    assert_eq!((sc.wire_calls(), sc.wire_pairs()), (1, 3));
    // second pass is served from the cache
    assert_eq!(sc.score_batch(&batch()).unwrap(), expected());
    assert_eq!(sc.wire_calls(), 1);
    let extra = SentencePair::from_text("e", "s9", "t9").unwrap();
    assert_eq!(sc.score(&extra).unwrap(), 1.0);
    assert_eq!((sc.wire_calls(), sc.wire_pairs()), (2, 4));
}

#[test]
fn http_preserves_order_and_caches() {
    let stub = HttpStub::start(synth::lexicon());
    let sc = ExternalScorer::connect(&ExternalScorerConfig::http(stub.url())).unwrap();
    assert_eq!(sc.score_batch(&batch()).unwrap(), expected());
    assert_eq!(sc.score_batch(&batch()).unwrap(), expected());
    assert_eq!(stub.calls(), 1);
    assert_eq!(sc.wire_pairs(), 3);
}

#[test]
fn reversed_responses_are_matched_by_id() {
    // answers the batch in reverse order with the id as the score
    let script = r#"ids=""; while IFS= read -r l; do
        if [ -z "$l" ]; then for i in $ids; do echo "{\"id\":\"$i\",\"score\":$i}"; done; echo; ids="";
        else i=$(echo "$l" | sed 's/.*"id":"\([0-9]*\)".*/\1/'); ids="$i $ids"; fi; done"#;
    let sc = ExternalScorer::connect(&sh(script)).unwrap();
    assert_eq!(sc.score_batch(&batch()).unwrap(), vec![0.0, 1.0, 2.0, 0.0]);
}

#[test]
fn malformed_line_is_a_protocol_error() {
    let script = r#"while IFS= read -r l; do [ -z "$l" ] && { echo "not json"; echo; }; done"#;
    let sc = ExternalScorer::connect(&sh(script)).unwrap();
    let err = sc.score_batch(&batch()).unwrap_err();
    assert!(
        matches!(err, Error::Protocol(ref m) if m.contains("malformed")),
        "{err}"
    );
}

#[test]
fn short_answer_is_a_length_mismatch() {
    let script =
        r#"while IFS= read -r l; do [ -z "$l" ] && { echo '{"id":"0","score":1}'; echo; }; done"#;
    let sc = ExternalScorer::connect(&sh(script)).unwrap();
    let err = sc.score_batch(&batch()).unwrap_err();
    assert!(
        matches!(
            err,
            Error::LengthMismatch {
                expected: 3,
                got: 1
            }
        ),
        "{err}"
    );
}

#[test]
fn silent_server_times_out() {
    let sc = ExternalScorer::connect(&sh("sleep 5").with_timeout_ms(200)).unwrap();
    let t = std::time::Instant::now();
    let err = sc.score_batch(&batch()).unwrap_err();
    assert!(matches!(err, Error::Timeout(200)), "{err}");
    assert!(t.elapsed().as_secs() < 3);
}

#[test]
fn dead_http_endpoint_fails_cleanly() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let sc = ExternalScorer::connect(&ExternalScorerConfig::http(format!(
        "http://127.0.0.1:{port}/score"
    )))
    .unwrap();
    assert!(sc.score_batch(&batch()).is_err());
}
