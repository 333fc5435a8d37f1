mod common;

use cner::corpus::{parse_ner_corpus, parse_re_corpus, write_ner_corpus, write_re_corpus, CorpusError};
use cner_core::relex::RelationLabel;
use cner_core::text::Abbreviations;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_re_corpus_round_trips() {
    let records = separable_records(5, 1);
    let written = write_re_corpus(&records);
    let parsed = parse_re_corpus(written.as_bytes(), &Abbreviations::default()).unwrap();
    let raw: Vec<_> = parsed.records.iter().map(|r| r.raw.clone()).collect();
    assert_eq!(raw, records);
    assert_eq!(write_re_corpus(&raw), written);
}

#[test]
fn generated_ner_corpus_round_trips() {
    let corpus = gazetteer_corpus(30, 2);
    let written = write_ner_corpus(&corpus);
    let parsed = parse_ner_corpus(written.as_bytes()).unwrap();
    let pairs: Vec<_> = parsed.sentences.iter().map(|s| (&s.tokens, &s.tags)).collect();
    let expected: Vec<_> = corpus.sentences.iter().map(|s| (&s.tokens, &s.tags)).collect();
    assert_eq!(pairs, expected);
}

#[test]
fn implicit_negatives_fill_unlisted_pairs() {
    let corpus = parse_re_corpus(
        write_re_corpus(&separable_records(3, 4)).as_bytes(),
        &Abbreviations::default(),
    )
    .unwrap();
    let instances = corpus.instances(50);
    assert_eq!(instances.len(), 18);
    let negatives = instances.iter().filter(|(_, l)| *l == RelationLabel::NonRel).count();
    assert_eq!(negatives, 3);
}

#[test]
fn arg2_out_of_range_is_a_validation_error() {
    let line = r#"{"text":"Juan vive en Cali.","mentions":[{"start":0,"end":4,"type":"PER"}],"relations":[{"arg1":0,"arg2":3,"label":"PHYS"}]}"#;
    let err = parse_re_corpus(format!("\n{line}\n").as_bytes(), &Abbreviations::default()).unwrap_err();
    assert!(matches!(err, CorpusError::Validation { line: 2, .. }), "{err}");
}

fn mutate(seed: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut bytes = seed.to_vec();
    for _ in 0..rng.random_range(1..6) {
        match rng.random_range(0..4) {
            0 if !bytes.is_empty() => {
                let i = rng.random_range(0..bytes.len());
                bytes[i] = rng.random();
            }
            1 if !bytes.is_empty() => {
                let i = rng.random_range(0..bytes.len());
                bytes.truncate(i);
            }
            2 => {
                let i = rng.random_range(0..=bytes.len());
                let snippet: &[u8] = [
                    &b"\t"[..],
                    b"\n",
                    b"{",
                    b"}",
                    b"\"",
                    b"B-",
                    b"I-PER",
                    b"-1",
                    b"99999999999",
                ][rng.random_range(0..9)];
                bytes.splice(i..i, snippet.iter().copied());
            }
            _ if !bytes.is_empty() => {
                let i = rng.random_range(0..bytes.len());
                bytes.remove(i);
            }
            _ => {}
        }
    }
    bytes
}

#[test]
fn parsers_reject_mutations_without_panicking() {
    let ner_seed = write_ner_corpus(&gazetteer_corpus(3, 5)).into_bytes();
    let re_seed = write_re_corpus(&separable_records(1, 5)).into_bytes();
    let abbr = Abbreviations::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let _ = parse_ner_corpus(&mutate(&ner_seed, &mut rng));
        let _ = parse_re_corpus(&mutate(&re_seed, &mut rng), &abbr);
    }
}
