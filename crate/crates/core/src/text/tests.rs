use super::*;
use crate::ir::fixtures::*;
use crate::ir::tokenize;
use proptest::prelude::*;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

fn cfg() -> TextOpConfig {
    TextOpConfig::default()
}

fn texts(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| t.text.clone()).collect()
}

#[test]
fn synonym_replacement_turns_count_into_amount() {
    let tokens = tokenize("count = count0 + 1;", Lang::JavaLite).unwrap();
    let table = BTreeMap::from([("count".to_string(), vec!["amount".to_string()])]);
    let out = apply_text_op(TextOpKind::SynonymReplacement, &tokens, &TextOpConfig { synonym_table: table, ..cfg() })
        .unwrap();
    assert_eq!(render_tokens(&out), "amount = count0 + 1;");
}

#[test]
fn synonym_replacement_leaves_non_identifiers() {
    let tokens = tokenize("int main(int n) { return n; }", Lang::JavaLite).unwrap();
    let table = BTreeMap::from([("n".to_string(), vec!["size".to_string()])]);
    let c = TextOpConfig { synonym_table: table, rate: 1.0, ..cfg() };
    let out = apply_text_op(TextOpKind::SynonymReplacement, &tokens, &c).unwrap();
    assert_eq!(render_tokens(&out), "int main(int size) { return size; }");
    for (a, b) in tokens.iter().zip(&out) {
        if a.kind != TokenKind::Identifier {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn random_swap_reproduces_the_line_exchange() {
    let src = "\
int main(int n) {
    int count = 0;
    int i = 1;
    int j = 2;
    return count;
}
";
    let tokens = tokenize(src, Lang::JavaLite).unwrap();
    let lines: Vec<String> = src.lines().map(str::to_string).collect();
    let mut swapped = lines.clone();
    swapped.swap(2, 3);
    let expected = swapped.join("\n") + "\n";
    let seed = (0..500)
        .find(|s| render_tokens(&apply_text_op(TextOpKind::RandomSwap, &tokens, &cfg().with_seed(*s)).unwrap()) == expected)
        .expect("some seed picks lines 3 and 4");
    let again = apply_text_op(TextOpKind::RandomSwap, &tokens, &cfg().with_seed(seed)).unwrap();
    assert_eq!(render_tokens(&again), expected);
}

#[test]
fn deletion_floor_and_rate() {
    let tokens = tokenize("a b c d e f g h i j", Lang::JavaLite).unwrap();
    assert_eq!(tokens.len(), 10);
    let out = apply_text_op(TextOpKind::RandomDeletion, &tokens, &TextOpConfig { rate: 1.0, ..cfg() }).unwrap();
    assert_eq!(out.len(), 1);
    let out = apply_text_op(TextOpKind::RandomDeletion, &tokens, &cfg()).unwrap();
    assert_eq!(out.len(), 9);
    let out = apply_text_op(TextOpKind::RandomDeletion, &tokens, &TextOpConfig { rate: 0.25, ..cfg() }).unwrap();
    assert_eq!(out.len(), 8);
}

#[test]
fn insertion_copies_existing_tokens() {
    let tokens = tokenize(FACTORIAL_PY, Lang::PyLite).unwrap();
    let out = apply_text_op(TextOpKind::RandomInsertion, &tokens, &cfg().with_seed(5)).unwrap();
    let content = tokens.iter().filter(|t| !t.kind.is_layout()).count();
    assert_eq!(out.len(), tokens.len() + (content as f64 * 0.1).ceil() as usize);
    let known: std::collections::BTreeSet<_> = texts(&tokens).into_iter().collect();
    assert!(out.iter().all(|t| known.contains(&t.text)));
}

#[test]
fn empty_input_is_an_error() {
    for kind in TextOpKind::ALL {
        assert_eq!(apply_text_op(kind, &[], &cfg()), Err(TextOpError::EmptyInput));
    }
}

#[test]
fn config_validation() {
    let tokens = tokenize("x", Lang::JavaLite).unwrap();
    for rate in [0.0, -0.5, 1.5, f64::NAN] {
        let c = TextOpConfig { rate, ..cfg() };
        assert!(matches!(apply_text_op(TextOpKind::RandomSwap, &tokens, &c), Err(TextOpError::InvalidConfig(_))));
    }
    let bad = TextOpConfig { synonym_table: BTreeMap::from([("x".into(), vec!["if".into()])]), ..cfg() };
    assert!(bad.validate().is_err());
    assert!(cfg().validate().is_ok());
}

#[test]
fn bundled_dictionary_collapses_count_and_counter() {
    let dict = StubDictionary::bundled();
    assert!(dict.len() >= 200, "{}", dict.len());
    assert_eq!(dict.round_trip("count"), Some("counter"));
    assert_eq!(dict.round_trip("counter"), Some("counter"));
    assert_eq!(stub_translate("int count = 0;", Lang::JavaLite, dict), "int counter = 0;");
    assert_eq!(dict.translate_identifier("maxValue"), "maxValue");
    assert_eq!(dict.translate_identifier("total_cnt"), "sum_counter");
    assert_eq!(dict.translate_identifier("curIdx"), "currentIndex");
    assert_eq!(dict.translate_identifier("TMP"), "TEMP");
}

#[test]
fn stub_is_identity_without_hits() {
    let src = "int zzz(int qq) {\n    return qq + 1;\n}\n";
    assert_eq!(back_translate(src, &cfg()).unwrap(), src);
    let printing = "void f() { System.out.println(\"x\"); }";
    assert_eq!(back_translate(printing, &cfg()).unwrap(), printing);
}

#[test]
fn stub_disabled_without_endpoint_fails() {
    let c = TextOpConfig { bt_stub: false, ..cfg() };
    assert!(matches!(back_translate("int x;", &c), Err(TextOpError::BtUnreachable(_))));
}

/// Minimal HTTP/1.1 server: one request per connection, answered by
/// `handler(body) -> (status, body)`.
fn serve(handler: impl Fn(&str) -> (u16, String) + Send + Sync + 'static) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/translate", listener.local_addr().unwrap());
    let handler = Arc::new(handler);
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let handler = handler.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    if line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                let (status, reply) = handler(std::str::from_utf8(&body).unwrap());
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    url
}

fn online(url: &str) -> TextOpConfig {
    TextOpConfig { bt_endpoint: Some(url.to_string()), bt_stub: false, bt_timeout_ms: 2_000, ..cfg() }
}

#[test]
fn online_mode_uses_the_endpoint() {
    let url = serve(|body| {
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        assert_eq!(v["pivot"], "de");
        (200, serde_json::json!({ "text": v["text"].as_str().unwrap().to_uppercase() }).to_string())
    });
    assert_eq!(back_translate("int count = 0;", &online(&url)).unwrap(), "INT COUNT = 0;");
    let tokens = tokenize("int count = 0;", Lang::JavaLite).unwrap();
    let out = apply_text_op(TextOpKind::BackTranslation, &tokens, &online(&url)).unwrap();
    assert_eq!(render_tokens(&out), "INT COUNT = 0;");
}

#[test]
fn malformed_responses() {
    let missing = serve(|_| (200, "{\"other\": 1}".into()));
    assert!(matches!(back_translate("x", &online(&missing)), Err(TextOpError::MalformedResponse(_))));
    let failing = serve(|_| (500, "{\"text\": \"x\"}".into()));
    assert!(matches!(back_translate("x", &online(&failing)), Err(TextOpError::MalformedResponse(_))));
    let garbage = serve(|_| (200, "not json".into()));
    assert!(matches!(back_translate("x", &online(&garbage)), Err(TextOpError::MalformedResponse(_))));
}

#[test]
fn unreachable_endpoint_and_fallback() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/translate");
    assert!(matches!(back_translate("int count;", &online(&url)), Err(TextOpError::BtUnreachable(_))));
    let fallback = TextOpConfig { bt_stub: true, ..online(&url) };
    assert_eq!(back_translate("int count;", &fallback).unwrap(), "int counter;");
}

#[test]
fn client_caps_concurrency() {
    let active = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (a, p) = (active.clone(), peak.clone());
    let url = serve(move |body| {
        let now = a.fetch_add(1, Ordering::SeqCst) + 1;
        p.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(40));
        a.fetch_sub(1, Ordering::SeqCst);
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        (200, serde_json::json!({ "text": v["text"] }).to_string())
    });
    let client = BtClient::new(&url, "de", Duration::from_secs(5), 2);
    let inputs: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
    let out = client.translate_many(&inputs);
    assert_eq!(out.into_iter().map(Result::unwrap).collect::<Vec<_>>(), inputs);
    assert!(peak.load(Ordering::SeqCst) <= 2);
    assert!(peak.load(Ordering::SeqCst) >= 1);
}

#[test]
fn request_timeout_is_enforced() {
    let url = serve(|_| {
        std::thread::sleep(Duration::from_millis(1_500));
        (200, "{\"text\": \"late\"}".into())
    });
    let client = BtClient::new(&url, "de", Duration::from_millis(200), 1);
    assert!(matches!(client.translate("x"), Err(TextOpError::BtUnreachable(_))));
}

fn program_tokens() -> Vec<Vec<Token>> {
    vec![
        tokenize(EVEN_JAVA, Lang::JavaLite).unwrap(),
        tokenize(FACTORIAL_JAVA, Lang::JavaLite).unwrap(),
        tokenize(FACTORIAL_PY, Lang::PyLite).unwrap(),
    ]
}

fn sorted(tokens: &[Token]) -> Vec<Token> {
    let mut v = tokens.to_vec();
    v.sort_by(|a, b| (a.kind, &a.text, &a.leading, a.span.offset).cmp(&(b.kind, &b.text, &b.leading, b.span.offset)));
    v.iter_mut().for_each(|t| t.trailing.clear());
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn swap_is_a_permutation(idx in 0usize..3, seed in any::<u64>(), rate in 0.01f64..=1.0) {
        let tokens = &program_tokens()[idx];
        let out = apply_text_op(TextOpKind::RandomSwap, tokens, &TextOpConfig { rate, seed, ..cfg() }).unwrap();
        prop_assert_eq!(sorted(&out), sorted(tokens));
    }

    #[test]
    fn swap_of_arbitrary_words_is_a_permutation(words in proptest::collection::vec("[a-z]{1,3}|\n|;", 1..40), seed in any::<u64>()) {
        let src = words.join(" ");
        let tokens = tokenize(&src, Lang::JavaLite).unwrap();
        prop_assume!(!tokens.is_empty());
        let out = apply_text_op(TextOpKind::RandomSwap, &tokens, &cfg().with_seed(seed)).unwrap();
        prop_assert_eq!(sorted(&out), sorted(&tokens));
    }

    #[test]
    fn deletion_length_and_nonempty(n in 1usize..60, seed in any::<u64>(), rate in 0.01f64..=1.0) {
        let src: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
        let tokens = tokenize(&src.join(" "), Lang::JavaLite).unwrap();
        let out = apply_text_op(TextOpKind::RandomDeletion, &tokens, &TextOpConfig { rate, seed, ..cfg() }).unwrap();
        let expected = (((1.0 - rate) * n as f64) - 1e-9).ceil().max(1.0) as usize;
        prop_assert_eq!(out.len(), expected.min(n));
        prop_assert!(!out.is_empty());
    }

    #[test]
    fn all_ops_are_reproducible(idx in 0usize..3, k in 0usize..5, seed in any::<u64>()) {
        let tokens = &program_tokens()[idx];
        let c = cfg().with_seed(seed);
        let a = apply_text_op(TextOpKind::ALL[k], tokens, &c).unwrap();
        let b = apply_text_op(TextOpKind::ALL[k], tokens, &c).unwrap();
        prop_assert_eq!(render_tokens(&a), render_tokens(&b));
    }

    #[test]
    fn synonyms_touch_only_identifiers(idx in 0usize..3, seed in any::<u64>(), rate in 0.01f64..=1.0) {
        let tokens = &program_tokens()[idx];
        let c = TextOpConfig { rate, seed, ..cfg() };
        let out = apply_text_op(TextOpKind::SynonymReplacement, tokens, &c).unwrap();
        prop_assert_eq!(out.len(), tokens.len());
        for (a, b) in tokens.iter().zip(&out) {
            if a.text != b.text {
                prop_assert_eq!(a.kind, TokenKind::Identifier);
                prop_assert!(c.synonym_table[&a.text].contains(&b.text));
            }
        }
    }
}
