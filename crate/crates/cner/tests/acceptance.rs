//! Acceptance run: one PASS/FAIL line per criterion, each with its runtime
//! budget. Exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use cner::corpus::{parse_ner_corpus, parse_re_corpus, write_ner_corpus, write_re_corpus};
use cner::formats::{parse_relex_model, parse_tagger_model, write_tagger_model};
use cner::ingest::{ingest_file, IngestOptions};
use cner::wire::AnalysisResult;
use cner_core::ner::{
    decode_bio, encode_bio, evaluate_mentions, mention_from_tokens, tag_sentence, train_tagger, BioTag, EntityMention,
    EntityType,
};
use cner_core::relex::{
    classify_pair, evaluate_relex, instance_objective, instance_subgradient, train_relex, FeatureSet, RelationLabel,
    RelexHyperparameters, RelexMetadata, RelexModel, RELEX_FORMAT_VERSION,
};
use cner_core::text::{segment, Abbreviations, Sentence, Source};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

/// Number, name, runtime budget and check of one criterion.
type Criterion = (u32, &'static str, Duration, fn() -> Check);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

// Segmentation fidelity over generated Spanish-like text.

fn spanish_text(rng: &mut ChaCha8Rng) -> String {
    const WORDS: &[&str] = &[
        "el",
        "la",
        "niño",
        "canción",
        "está",
        "jamás",
        "Bogotá",
        "Medellín",
        "Ñuñoa",
        "pingüino",
        "acción",
        "María",
        "Juan",
        "vive",
        "en",
        "Cali",
        "según",
        "año",
        "él",
        "también",
    ];
    const ABBREVIATIONS: &[&str] = &["Sr.", "Sra.", "Dr.", "EE.UU.", "etc.", "pág.", "núm.", "S.A.", "Av."];
    const DECIMALS: &[&str] = &["3,14", "2.500", "0,5", "1.000.000", "12:30", "1.5"];
    let mut text = String::new();
    for _ in 0..rng.random_range(1..6) {
        let opener = ["", "", "¿", "¡", "«", "\""][rng.random_range(0..6)];
        text.push_str(opener);
        for w in 0..rng.random_range(1..14) {
            if w > 0 {
                text.push_str([" ", " ", " ", "  ", "\t", "\n"][rng.random_range(0..6)]);
            }
            let word = match rng.random_range(0..10) {
                0 => ABBREVIATIONS[rng.random_range(0..ABBREVIATIONS.len())].to_string(),
                1 => DECIMALS[rng.random_range(0..DECIMALS.len())].to_string(),
                2 => format!("({})", WORDS[rng.random_range(0..WORDS.len())]),
                3 => "e\u{301}xito".to_string(),
                _ => WORDS[rng.random_range(0..WORDS.len())].to_string(),
            };
            text.push_str(&word);
            if rng.random_bool(0.15) {
                text.push_str([",", ";", ":"][rng.random_range(0..3)]);
            }
        }
        text.push_str([".", "?", "!", "...", "…", "?!", "»."][rng.random_range(0..7)]);
        text.push_str([" ", "\n\n", "\r\n", " \t "][rng.random_range(0..4)]);
    }
    text
}

fn segmentation_fidelity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let abbr = Abbreviations::default();
    let (mut violations, mut tokens) = (0usize, 0usize);
    for i in 0..1000 {
        let raw = spanish_text(&mut rng);
        let doc = segment(&raw, format!("t{i}"), Source::Manual, &abbr);
        let chars: Vec<char> = doc.text.chars().collect();
        let mut covered = vec![0u32; chars.len()];
        for t in doc.sentences.iter().flat_map(|s| &s.tokens) {
            tokens += 1;
            let slice: String = chars[t.span.start..t.span.end].iter().collect();
            violations += usize::from(slice != t.surface);
            covered[t.span.start..t.span.end].iter_mut().for_each(|c| *c += 1);
        }
        violations += chars
            .iter()
            .zip(&covered)
            .filter(|(c, n)| **n != u32::from(!c.is_whitespace()))
            .count();
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("1000 texts, {tokens} tokens, 0 violations"))
}

// BIO round trip.

fn bio_roundtrip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    let mut mentions_seen = 0;
    for _ in 0..10_000 {
        let len = rng.random_range(1..40);
        let words: Vec<String> = (0..len).map(|i| format!("t{i}")).collect();
        let sentence = Sentence::from_surfaces(&words, 0);
        let mut mentions: Vec<EntityMention> = Vec::new();
        let mut i = 0;
        while i < len {
            if rng.random_bool(0.3) {
                let last = (i + rng.random_range(0..4)).min(len - 1);
                let ty = EntityType::ALL[rng.random_range(0..7)];
                mentions.push(mention_from_tokens(&sentence, i, last, ty, "x", 1.0));
                i = last + 1;
            } else {
                i += 1;
            }
        }
        mentions_seen += mentions.len();
        let tags = encode_bio(&sentence, &mentions).map_err(|e| e.to_string())?;
        let decoded = decode_bio(&tags, &sentence, "x", 1.0).map_err(|e| e.to_string())?;
        violations += usize::from(decoded != mentions);
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("10000 cases, {mentions_seen} mentions, 0 violations"))
}

// Parser and decoder totality.

fn mutate(seed: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    const SNIPPETS: &[&[u8]] = &[
        b"\t", b"\n", b"{", b"}", b"\"", b"[", b"I-PER", b"B-", b"-1", b"1e309", b"\xFF", b"#",
    ];
    let mut bytes = seed.to_vec();
    for _ in 0..rng.random_range(1..8) {
        let at = rng.random_range(0..=bytes.len());
        match rng.random_range(0..4) {
            0 if at < bytes.len() => bytes[at] = rng.random(),
            1 => bytes.truncate(at),
            2 => {
                let s = SNIPPETS[rng.random_range(0..SNIPPETS.len())];
                bytes.splice(at..at, s.iter().copied());
            }
            _ if at < bytes.len() => {
                bytes.remove(at);
            }
            _ => {}
        }
    }
    bytes
}

fn random_bytes(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let len = rng.random_range(0..160);
    (0..len).map(|_| rng.random()).collect()
}

fn fuzz_totality() -> Check {
    let ner_seed = write_ner_corpus(&gazetteer_corpus(4, 3)).into_bytes();
    let re_seed = write_re_corpus(&separable_records(1, 3)).into_bytes();
    let tagger = train_tagger(&gazetteer_corpus(2, 3).training_pairs(), 1, 1, 0).map_err(|e| e.to_string())?;
    let tagger_seed = write_tagger_model(&tagger).into_bytes();
    let relex_seed = std::fs::read(fixture("relex.model")).map_err(|e| e.to_string())?;
    let abbr = Abbreviations::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let previous_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut crashes = 0;
    let mut rejected = 0;
    for i in 0..100_000 {
        let fresh = rng.random_bool(0.3);
        let outcome = match i % 5 {
            0 => {
                let input = if fresh {
                    random_bytes(&mut rng)
                } else {
                    mutate(&ner_seed, &mut rng)
                };
                catch_unwind(|| parse_ner_corpus(&input).is_err())
            }
            1 => {
                let input = if fresh {
                    random_bytes(&mut rng)
                } else {
                    mutate(&re_seed, &mut rng)
                };
                catch_unwind(AssertUnwindSafe(|| parse_re_corpus(&input, &abbr).is_err()))
            }
            2 => {
                let len = rng.random_range(0..20);
                let tags: Vec<BioTag> = (0..len)
                    .map(|_| BioTag::from_index(rng.random_range(0..15)).unwrap())
                    .collect();
                let sentence_len = if rng.random_bool(0.8) {
                    len
                } else {
                    rng.random_range(0..20)
                };
                let words: Vec<String> = (0..sentence_len).map(|k| format!("w{k}")).collect();
                let sentence = Sentence::from_surfaces(&words, 0);
                catch_unwind(|| decode_bio(&tags, &sentence, "x", 1.0).is_err())
            }
            3 => {
                let input = mutate(&tagger_seed, &mut rng);
                catch_unwind(|| parse_tagger_model(&String::from_utf8_lossy(&input)).is_err())
            }
            _ => {
                let input = mutate(&relex_seed, &mut rng);
                catch_unwind(|| parse_relex_model(&String::from_utf8_lossy(&input)).is_err())
            }
        };
        match outcome {
            Ok(err) => rejected += usize::from(err),
            Err(_) => crashes += 1,
        }
    }
    std::panic::set_hook(previous_hook);
    ensure(crashes == 0, || format!("{crashes} crashes"))?;
    Ok(format!("100000 inputs, {rejected} rejected with errors, 0 crashes"))
}

// Learned tagger fit.

fn tagger_fit() -> Check {
    let corpus = gazetteer_corpus(50, 42);
    let pairs = corpus.training_pairs();
    let first = train_tagger(&pairs, 10, 42, 0).map_err(|e| e.to_string())?;
    let second = train_tagger(&pairs, 10, 42, 0).map_err(|e| e.to_string())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a.model"), dir.path().join("b.model"));
    std::fs::write(&a, write_tagger_model(&first)).map_err(|e| e.to_string())?;
    std::fs::write(&b, write_tagger_model(&second)).map_err(|e| e.to_string())?;
    let identical = std::fs::read(&a).map_err(|e| e.to_string())? == std::fs::read(&b).map_err(|e| e.to_string())?;
    ensure(identical, || "model files differ between runs".into())?;

    let mut gold_all = Vec::new();
    let mut pred_all = Vec::new();
    let (mut gold_set, mut pred_set) = (BTreeSet::new(), BTreeSet::new());
    for (sentence, tags) in &pairs {
        let gold = decode_bio(tags, sentence, "gold", 1.0).map_err(|e| e.to_string())?;
        let pred = tag_sentence(&first, sentence, "learned-tagger");
        let key = |m: &EntityMention| (m.sentence_index, m.token_range, m.entity_type);
        gold_set.extend(gold.iter().map(key));
        pred_set.extend(pred.iter().map(key));
        gold_all.push(gold);
        pred_all.push(pred);
    }
    let metrics = evaluate_mentions(
        gold_all
            .iter()
            .map(Vec::as_slice)
            .zip(pred_all.iter().map(Vec::as_slice)),
    );
    let f1 = metrics.micro.f1();

    // Independent recount of the same quantity from plain sets.
    let tp = gold_set.intersection(&pred_set).count() as f64;
    let oracle = 2.0 * tp / (gold_set.len() + pred_set.len()) as f64;
    ensure((f1 - oracle).abs() < 1e-12, || {
        format!("F1 {f1} disagrees with recount {oracle}")
    })?;
    ensure(f1 >= 0.95, || format!("entity F1 {f1:.4} < 0.95"))?;
    Ok(format!(
        "entity F1 {f1:.4} over {} gold mentions, model files identical",
        gold_set.len()
    ))
}

// Relation classifier separability.

fn relex_separability() -> Check {
    let records = separable_records(20, 42);
    let corpus =
        parse_re_corpus(write_re_corpus(&records).as_bytes(), &Abbreviations::default()).map_err(|e| e.to_string())?;
    let instances = corpus.instances(50);
    for label in RelationLabel::ALL {
        let n = instances.iter().filter(|(_, l)| *l == label).count();
        ensure(n >= 20, || format!("{label:?} has only {n} instances"))?;
    }
    let hp = RelexHyperparameters {
        lambda: 0.01,
        epochs: 100,
        seed: 42,
    };
    let (model, report) = train_relex(&instances, hp, 0).map_err(|e| e.to_string())?;
    let correct = instances
        .iter()
        .filter(|(x, y)| classify_pair(&model, x).label == *y)
        .count();
    let accuracy = correct as f64 / instances.len() as f64;
    let first = report.epoch_objectives[0];
    let last = *report.epoch_objectives.last().unwrap();
    ensure(accuracy == 1.0, || format!("training accuracy {accuracy}"))?;
    ensure(last <= first, || format!("objective rose from {first} to {last}"))?;
    Ok(format!(
        "{} instances, accuracy 1.000, objective {first:.4} -> {last:.4} over {} epochs",
        instances.len(),
        report.epoch_objectives.len()
    ))
}

// Hinge subgradient against central differences.

fn subgradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = 1e-5;
    let lambda = 0.01;
    let mut worst: f64 = 0.0;
    let mut points = 0;
    while points < 10 {
        let d = 6;
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);
        let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let margin = y * (w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + b);
        if (1.0 - margin).abs() < 1e-2 {
            continue;
        }
        points += 1;
        let (gw, gb) = instance_subgradient(&w, b, &x, y, lambda);
        let mut analytic = gw;
        analytic.push(gb);
        let mut numeric = Vec::with_capacity(d + 1);
        for j in 0..=d {
            let f = |delta: f64| {
                let mut w2 = w.clone();
                let mut b2 = b;
                if j < d {
                    w2[j] += delta;
                } else {
                    b2 += delta;
                }
                instance_objective(&w2, b2, &x, y, lambda)
            };
            numeric.push((f(h) - f(-h)) / (2.0 * h));
        }
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let scale = norm(&analytic).max(norm(&numeric)).max(1e-12);
        worst = worst.max(norm(&diff) / scale);
    }
    ensure(worst <= 1e-4, || format!("worst relative error {worst:.3e}"))?;
    Ok(format!("10 points, worst relative error {worst:.2e}"))
}

// Metrics on a hand-counted fixture.

fn metrics_oracle() -> Check {
    let features = vec!["f=phys".to_string(), "f=gpe".to_string()];
    let model = RelexModel::from_parts(
        features,
        [
            (RelationLabel::Phys.index(), 0, 1.0),
            (RelationLabel::GpeAff.index(), 1, 1.0),
        ],
        [0.0; 6],
        RelexHyperparameters {
            lambda: 0.01,
            epochs: 1,
            seed: 0,
        },
        RelexMetadata {
            fingerprint: String::new(),
            created_at: 0,
            format_version: RELEX_FORMAT_VERSION,
        },
    )
    .map_err(|e| e.to_string())?;
    let set = |f: &str| FeatureSet::from_iter([f]);
    // PHYS: correct, spurious and missed once each.
    let corpus = vec![
        (set("f=phys"), RelationLabel::Phys),
        (set("f=phys"), RelationLabel::NonRel),
        (set("f=none"), RelationLabel::Phys),
        (set("f=gpe"), RelationLabel::GpeAff),
        (set("f=none"), RelationLabel::NonRel),
    ];
    let m = evaluate_relex(&model, &corpus).map_err(|e| e.to_string())?;
    let phys = m.for_label(RelationLabel::Phys);
    ensure((phys.tp, phys.fp, phys.fn_) == (1, 1, 1), || format!("counts {phys:?}"))?;
    ensure(
        phys.precision() == 0.5 && phys.recall() == 0.5 && phys.f1() == 0.5,
        || format!("P={} R={} F1={}", phys.precision(), phys.recall(), phys.f1()),
    )?;
    for label in RelationLabel::ALL {
        let gold = corpus.iter().filter(|(_, g)| *g == label).count();
        let predicted = corpus
            .iter()
            .filter(|(x, _)| classify_pair(&model, x).label == label)
            .count();
        let row: usize = m.confusion[label.index()].iter().sum();
        let column: usize = m.confusion.iter().map(|r| r[label.index()]).sum();
        ensure(row == gold && column == predicted, || {
            format!("{label:?} row {row}/{gold} column {column}/{predicted}")
        })?;
    }
    Ok("PHYS P=0.500 R=0.500 F1=0.500, confusion rows and columns match recount".into())
}

// End-to-end golden through service and CLI.

fn end_to_end_golden() -> Check {
    let golden = std::fs::read_to_string(fixture("analyze_golden.json")).map_err(|e| e.to_string())?;
    let base = spawn_service(&fixture_config());
    let body = serde_json::json!({"text": FIXTURE_SENTENCE, "extractor_id": "rule-gazetteer"}).to_string();
    let (status, served) = post_json(&format!("{base}/analyze"), &body);
    ensure(status == 200, || format!("service status {status}"))?;
    ensure(zero_timing(&served) == golden, || {
        format!("service body differs: {served}")
    })?;

    let r: AnalysisResult = serde_json::from_str(&served).map_err(|e| e.to_string())?;
    let found: Vec<(&str, &str)> = r
        .mentions
        .iter()
        .map(|m| (&r.document.text[m.span.start..m.span.end], m.entity_type.as_str()))
        .collect();
    ensure(found == [("Juan", "PER"), ("Cali", "GPE")], || {
        format!("mentions {found:?}")
    })?;
    ensure(r.relations.len() == 1 && r.relations[0].label == "GPE-AFF", || {
        "relations differ".into()
    })?;

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cner"));
    for (key, _) in std::env::vars().filter(|(k, _)| k.starts_with("CNER_")) {
        cmd.env_remove(key);
    }
    let out = cmd
        .args([
            "--config",
            fixture("service.conf").to_str().unwrap(),
            "analyze",
            FIXTURE_SENTENCE,
        ])
        .output()
        .map_err(|e| e.to_string())?;
    let printed = String::from_utf8_lossy(&out.stdout);
    ensure(zero_timing(&printed) == golden, || {
        format!("CLI output differs: {printed}")
    })?;
    Ok("service and CLI bodies equal the golden payload".into())
}

// File ingestion.

fn ingestion() -> Check {
    let options = IngestOptions {
        max_bytes: 5_242_880,
        doc_converter: None,
    };
    let archive = odt(&["Hola.", "Adiós."]);
    let direct = ingest_file("fixture.odt", &archive, &options).map_err(|e| e.to_string())?;
    ensure(direct.text == "Hola.\nAdiós.", || {
        format!("extracted {:?}", direct.text)
    })?;

    let base = spawn_service(&fixture_config());
    let opts = r#"{"extractor_id":"rule-gazetteer"}"#;
    let (status, body) = upload(&base, "fixture.odt", &archive, opts);
    ensure(status == 200, || format!("odt upload status {status}: {body}"))?;
    let r: AnalysisResult = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    ensure(r.document.text == "Hola.\nAdiós.", || {
        format!("served text {:?}", r.document.text)
    })?;

    let (status, body) = upload(&base, "a.doc", b"\xD0\xCF\x11\xE0", opts);
    ensure(status == 415 && error_code(&body) == "UnsupportedFormat", || {
        format!(".doc gave {status} {body}")
    })?;
    let (status, body) = upload(&base, "big.txt", &vec![b'a'; 5_242_881], opts);
    ensure(status == 413 && error_code(&body) == "PayloadTooLarge", || {
        format!("oversize gave {status} {body}")
    })?;
    Ok("odt paragraphs exact, .doc -> 415 UnsupportedFormat, oversize -> 413".into())
}

// Remote adapter conformance.

fn adapter_conformance() -> Check {
    let stub = remote_stub();
    let service = |path: &str, timeout_ms: u64| {
        let mut config = fixture_config();
        config.remotes[0].endpoint = Some(format!("{stub}/{path}"));
        config.remotes[0].timeout = Duration::from_millis(timeout_ms);
        spawn_service(&config)
    };
    let request = serde_json::json!({"text": FIXTURE_SENTENCE, "extractor_id": "remote-adapter"}).to_string();

    let (status, body) = post_json(&format!("{}/analyze", service("echo", 1000)), &request);
    ensure(status == 200, || format!("echo status {status}: {body}"))?;
    let r: AnalysisResult = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    let ranges: Vec<[usize; 2]> = r.mentions.iter().map(|m| m.token_range).collect();
    ensure(ranges == [[0, 0], [3, 3]], || format!("echo ranges {ranges:?}"))?;

    let (_, body) = post_json(&format!("{}/analyze", service("bad-type", 1000)), &request);
    let r: AnalysisResult = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    let dropped = r.warnings.iter().filter(|w| w.contains("XYZ")).count();
    ensure(r.mentions.len() == 1 && dropped == 1, || {
        format!("bad-type: {} mentions, {dropped} warnings", r.mentions.len())
    })?;

    let (status, body) = post_json(&format!("{}/analyze", service("slow", 200)), &request);
    ensure(status == 502 && error_code(&body) == "RemoteUnavailable", || {
        format!("timeout gave {status} {body}")
    })?;
    Ok("mentions round-trip, unknown type dropped with 1 warning, timeout -> 502 RemoteUnavailable".into())
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "segmentation fidelity",
            Duration::from_secs(5),
            segmentation_fidelity,
        ),
        (2, "BIO round trip", Duration::from_secs(5), bio_roundtrip),
        (3, "parser and decoder totality", Duration::from_secs(60), fuzz_totality),
        (4, "learned tagger fit", Duration::from_secs(10), tagger_fit),
        (
            5,
            "relation classifier separability",
            Duration::from_secs(10),
            relex_separability,
        ),
        (6, "hinge subgradient check", Duration::from_secs(1), subgradient_check),
        (7, "relation metrics oracle", Duration::from_secs(1), metrics_oracle),
        (
            8,
            "end-to-end golden payload",
            Duration::from_secs(1),
            end_to_end_golden,
        ),
        (9, "file ingestion", Duration::from_secs(1), ingestion),
        (
            10,
            "remote adapter conformance",
            Duration::from_secs(2),
            adapter_conformance,
        ),
    ];
    let mut failed = 0;
    for (n, name, budget, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        let (pass, detail) = match outcome {
            Ok(detail) if elapsed <= budget => (true, detail),
            Ok(detail) => (false, format!("{detail}; over the {budget:?} budget")),
            Err(detail) => (false, detail),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n:>2} {} {name}: {detail} [{:.3}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 10 criteria passed");
}
